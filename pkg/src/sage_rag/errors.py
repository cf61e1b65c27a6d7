"""Exception hierarchy shared by every stage of the pipeline."""


class SageError(Exception):
    """Base class for all package errors."""


class ContractViolation(SageError, ValueError):
    """An operation was called with arguments outside its contract."""


class RetryableError(SageError):
    """A remote call failed in a way that may succeed on retry."""

    def __init__(self, message: str, endpoint: str | None = None):
        super().__init__(f"{message} (endpoint={endpoint})" if endpoint else message)
        self.endpoint = endpoint


class UpstreamError(SageError):
    """A remote service kept failing after all retries."""

    def __init__(self, message: str, endpoint: str | None = None):
        super().__init__(message)
        self.endpoint = endpoint


class InsufficientDataError(SageError):
    pass


class CorruptModelError(SageError):
    pass


class TrainingDivergedError(SageError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss


class ModelFormatError(SageError):
    pass


class DuplicateIdError(SageError):
    pass


class EmptyIndexError(SageError):
    pass


class IndexFormatError(SageError):
    """Persisted index has an unknown version or fails its checksum."""


class EmptyCandidatesError(SageError):
    pass


class FeedbackParseError(SageError):
    def __init__(self, message: str, raw: str):
        super().__init__(f"{message}: {raw!r}")
        self.raw = raw


class ScriptExhaustedError(SageError):
    """A scripted mock LLM was asked for more responses than it holds."""


class BuildError(SageError):
    pass


class StageError(SageError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
