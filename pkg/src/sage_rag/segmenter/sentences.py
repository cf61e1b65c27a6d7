"""Rule-based sentence splitting and greedy coarse packing."""

import re
from dataclasses import dataclass

from ..errors import ContractViolation
from ..tokens import count_tokens

# Lower-cased, trailing period removed.
ABBREVIATIONS = frozenset(
    {"mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "e.g", "i.e", "inc", "ltd", "co", "fig", "no", "mt"}
)

_TERMINATOR_RE = re.compile(r"[.!?](?=\s)")
_NONSPACE_RE = re.compile(r"\S")


def _is_abbreviation(text: str, start: int, dot: int) -> bool:
    word_start = dot
    while word_start > start and not text[word_start - 1].isspace():
        word_start -= 1
    return text[word_start:dot].casefold() in ABBREVIATIONS


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Character spans ``(start, end)`` of each sentence; whitespace between spans is the separator."""
    spans: list[tuple[int, int]] = []
    first = _NONSPACE_RE.search(text)
    if first is None:
        return spans
    start = first.start()
    for m in _TERMINATOR_RE.finditer(text):
        end = m.end()
        if end <= start:
            continue
        if m.group() == "." and _is_abbreviation(text, start, m.start()):
            continue
        spans.append((start, end))
        nxt = _NONSPACE_RE.search(text, end)
        if nxt is None:
            return spans
        start = nxt.start()
    end = len(text.rstrip())
    if end > start:
        spans.append((start, end))
    return spans


def split_sentences(text: str) -> list[str]:
    """Split text into sentences.

    A boundary falls after ``.``, ``!`` or ``?`` followed by whitespace, unless
    the word ending in ``.`` is a known abbreviation. Separators (whitespace)
    are not part of any sentence, so ``text`` can be rebuilt from
    :func:`sentence_spans`.
    """
    return [text[s:e] for s, e in sentence_spans(text)]


@dataclass(frozen=True)
class CoarseChunk:
    text: str
    sentence_start: int
    sentence_end: int  # exclusive
    token_count: int


def pack_greedy(token_counts: list[int], l: int) -> list[tuple[int, int]]:
    """Group consecutive items while the running total stays <= l; oversize items stand alone."""
    groups: list[tuple[int, int]] = []
    start, total = 0, 0
    for i, n in enumerate(token_counts):
        if i > start and total + n > l:
            groups.append((start, i))
            start, total = i, 0
        total += n
    if token_counts:
        groups.append((start, len(token_counts)))
    return groups


def segment_coarse(text: str, l: int = 400) -> list[CoarseChunk]:
    if l < 16:
        raise ContractViolation("coarse chunk length l must be >= 16")
    spans = sentence_spans(text)
    counts = [count_tokens(text[s:e]) for s, e in spans]
    out = []
    for a, b in pack_greedy(counts, l):
        out.append(CoarseChunk(text[spans[a][0] : spans[b - 1][1]], a, b, sum(counts[a:b])))
    return out
