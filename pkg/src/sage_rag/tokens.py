"""Local tokenizer used for chunk sizes, token accounting and text metrics."""

import re

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_PUNCT_RE = re.compile(r"^[^\w\s]+$", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Split on whitespace, then split punctuation off into single-character tokens.

    >>> tokenize("Hello, world!")
    ['Hello', ',', 'world', '!']
    """
    return _TOKEN_RE.findall(text)


def count_tokens(text: str) -> int:
    return len(_TOKEN_RE.findall(text))


def normalized_tokens(text: str) -> list[str]:
    """Case-folded tokens with punctuation tokens removed."""
    return [t.casefold() for t in tokenize(text) if not _PUNCT_RE.match(t)]
