"""Locate entity occurrences in advice texts and produce masked context strings.

An entity's context pattern is its statement text with every occurrence of
the surface form replaced by the literal token ``[MASK]``:

    "beef liver or chicken"  ->  "beef [MASK] or chicken"

Matching is character-level: case-insensitive, word-boundary-delimited, and
whitespace-tolerant between the words of a multi-word surface.  No tokenizer
is involved, so spans are encoder-agnostic and reproducible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import AdviceStatement, Corpus
from .errors import OverlappingSpansError, SpanOutOfBoundsError

MASK_TOKEN = "[MASK]"


@dataclass(frozen=True)
class Occurrence:
    """A half-open character span [start, end) of a surface form match."""

    statement_id: str
    start: int
    end: int


@dataclass(frozen=True)
class MaskedContext:
    """A statement text with every occurrence of one surface form masked."""

    statement_id: str
    masked_text: str
    mask_count: int


def surface_pattern(surface: str) -> re.Pattern[str]:
    """Compile the occurrence-matching regex for a surface form.

    Words of the surface may be separated by any whitespace run in the text;
    matches must not touch adjacent word characters.
    """
    tokens = surface.split()
    if not tokens:
        raise ValueError("surface must contain at least one non-whitespace character")
    body = r"\s+".join(re.escape(token) for token in tokens)
    return re.compile(rf"(?<!\w)(?:{body})(?!\w)", re.IGNORECASE)


def _mask_token_spans(text: str) -> list[tuple[int, int]]:
    """Spans of literal MASK_TOKEN already present in the text."""
    spans = []
    start = text.find(MASK_TOKEN)
    while start != -1:
        spans.append((start, start + len(MASK_TOKEN)))
        start = text.find(MASK_TOKEN, start + 1)
    return spans

def find_occurrences(surface: str, statement: AdviceStatement) -> list[Occurrence]:
    """All non-overlapping occurrences of ``surface`` in a statement's text.

    Matches are found left to right (greedy, as by ``re.finditer``).  Spans
    that overlap a literal ``[MASK]`` token are skipped, which makes masking
    idempotent even for surfaces such as "mask" itself.  Returns an empty
    list when there is no match.
    """
    pattern = surface_pattern(surface)
    protected = _mask_token_spans(statement.text)
    occurrences = []
    for match in pattern.finditer(statement.text):
        start, end = match.span()
        if any(start < p_end and p_start < end for p_start, p_end in protected):
            continue
        occurrences.append(
            Occurrence(statement_id=statement.id, start=start, end=end)
        )
    return occurrences


def mask_text(
    statement_text: str,
    occurrences: list[Occurrence],
    statement_id: str | None = None,
) -> MaskedContext:
    """Replace each occurrence span with ``[MASK]``, preserving everything else.

    Occurrences must be non-overlapping and within bounds; they are sorted
    internally.  With no occurrences the text is returned unchanged with a
    mask count of zero.  ``statement_id`` defaults to the id carried by the
    occurrences.
    """
    ordered = sorted(occurrences, key=lambda occ: occ.start)
    if statement_id is None:
        statement_id = ordered[0].statement_id if ordered else ""
    parts = []
    cursor = 0
    for occ in ordered:
        if occ.start < 0 or occ.end > len(statement_text) or occ.start >= occ.end:
            raise SpanOutOfBoundsError(
                f"span [{occ.start}, {occ.end}) invalid for text of length "
                f"{len(statement_text)}"
            )
        if occ.start < cursor:
            raise OverlappingSpansError(
                f"span [{occ.start}, {occ.end}) overlaps a previous span"
            )
        parts.append(statement_text[cursor : occ.start])
        parts.append(MASK_TOKEN)
        cursor = occ.end
    parts.append(statement_text[cursor:])
    return MaskedContext(
        statement_id=statement_id,
        masked_text="".join(parts),
        mask_count=len(ordered),
    )


def collect_contexts(
    surface: str,
    corpus: Corpus,
    max_contexts: int | None = None,
) -> list[MaskedContext]:
    """Masked contexts from every statement whose text contains the surface.

    One context per matching statement, in corpus order, including the
    statement a sample came from.  ``max_contexts`` truncates the list;
    ``None`` means unlimited.
    """
    if max_contexts is not None and max_contexts < 1:
        raise ValueError("max_contexts must be a positive integer or None")
    contexts: list[MaskedContext] = []
    for statement in corpus:
        occurrences = find_occurrences(surface, statement)
        if not occurrences:
            continue
        contexts.append(mask_text(statement.text, occurrences, statement.id))
        if max_contexts is not None and len(contexts) >= max_contexts:
            break
    return contexts
