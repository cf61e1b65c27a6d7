"""Small JSON-over-HTTP helper with bounded retries, shared by the remote clients."""

import logging
import os
import threading
import time
from typing import Any

import httpx

from .errors import RetryableError, SageError

logger = logging.getLogger(__name__)

RETRYABLE_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


class JsonService:
    """POSTs JSON to one endpoint, capping in-flight requests and retrying transient failures."""

    def __init__(
        self,
        url: str,
        api_key_env: str | None = None,
        *,
        max_attempts: int = 3,
        backoff: float = 0.5,
        timeout: float = 60.0,
        max_in_flight: int = 4,
        transport: httpx.BaseTransport | None = None,
    ):
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.url = url
        self.api_key_env = api_key_env
        self.max_attempts = max_attempts
        self.backoff = backoff
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self.attempts_made = 0

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env) if self.api_key_env else None
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def post(self, payload: dict[str, Any]) -> Any:
        last: RetryableError | None = None
        for attempt in range(1, self.max_attempts + 1):
            with self._slots:
                self.attempts_made += 1
                try:
                    resp = self._client.post(self.url, json=payload, headers=self._headers())
                except httpx.TransportError as exc:
                    last = RetryableError(f"transport failure: {exc}", self.url)
                else:
                    if resp.status_code in RETRYABLE_STATUS:
                        last = RetryableError(f"HTTP {resp.status_code}", self.url)
                    elif resp.status_code >= 400:
                        raise SageError(f"HTTP {resp.status_code} from {self.url}: {resp.text[:200]}")
                    else:
                        return resp.json()
            logger.warning("attempt %d/%d to %s failed: %s", attempt, self.max_attempts, self.url, last)
            if attempt < self.max_attempts and self.backoff > 0:
                time.sleep(self.backoff * 2 ** (attempt - 1))
        assert last is not None
        raise last

    def close(self) -> None:
        self._client.close()
