"""Load, validate, index, and summarize an entity-annotated advice corpus.

Corpus files are JSON Lines (UTF-8, one object per line):

    {"id": "2592-2",
     "text": "Some people with type 2 diabetes ...",
     "entities": [{"text": "type 2 diabetes", "label": "DIS"}, ...]}

Six entity classes are recognized: FOOD, MED, DIS, EXER, PHYS, OTH.  The
label string ``VIT`` is accepted as an alias for PHYS.  Unknown top-level
keys are ignored with a warning; unknown labels are hard errors.

Each annotated mention is one sample: the same (surface, label) pair in two
different statements counts twice.  Statements with no entities are legal
and contribute context text only.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DuplicateIdError, MalformedLineError, UnknownLabelError

logger = logging.getLogger(__name__)


class EntityClass(Enum):
    """The six entity class labels, in canonical (tie-break) order."""

    FOOD = "FOOD"
    MED = "MED"
    DIS = "DIS"
    EXER = "EXER"
    PHYS = "PHYS"
    OTH = "OTH"


#: Canonical class order used for model rows, tie-breaking, and reports.
CLASS_ORDER: tuple[EntityClass, ...] = tuple(EntityClass)

#: Index of each class within :data:`CLASS_ORDER`.
CLASS_INDEX: dict[EntityClass, int] = {c: i for i, c in enumerate(CLASS_ORDER)}

#: Accepted spellings that map onto a canonical class.
LABEL_ALIASES: dict[str, EntityClass] = {"VIT": EntityClass.PHYS}


def parse_label(value: str) -> EntityClass:
    """Parse a label string into an :class:`EntityClass`.

    Accepts the six canonical names plus the alias ``VIT`` (-> PHYS).
    Raises ``ValueError`` for anything else.
    """
    if not isinstance(value, str):
        raise ValueError(f"label must be a string, got {type(value).__name__}")
    name = value.strip().upper()
    if name in LABEL_ALIASES:
        return LABEL_ALIASES[name]
    try:
        return EntityClass[name]
    except KeyError:
        raise ValueError(f"unknown label {value!r}") from None


def normalize_surface(surface: str) -> str:
    """Normalize a surface form for indexing: case-fold and collapse whitespace."""
    return " ".join(surface.split()).casefold()


@dataclass(frozen=True)
class EntityAnnotation:
    """A single annotated entity mention: a surface form and its class."""

    surface: str
    label: EntityClass


@dataclass(frozen=True)
class AdviceStatement:
    """One advice text with its annotated entity mentions."""

    id: str
    text: str
    entities: tuple[EntityAnnotation, ...] = ()


@dataclass(frozen=True)
class Corpus:
    """An ordered collection of statements plus a surface-form index.

    ``entity_index`` maps each normalized annotated surface form to the ids
    of the statements annotating it, in corpus order, without duplicates.
    It is always derivable from ``statements`` alone.
    """

    statements: tuple[AdviceStatement, ...]
    entity_index: dict[str, tuple[str, ...]] = field(compare=False)

    @classmethod
    def from_statements(cls, statements: Iterable[AdviceStatement]) -> "Corpus":
        statements = tuple(statements)
        return cls(statements=statements, entity_index=build_entity_index(statements))

    def __len__(self) -> int:
        return len(self.statements)

    def __iter__(self) -> Iterator[AdviceStatement]:
        return iter(self.statements)


def build_entity_index(
    statements: Iterable[AdviceStatement],
) -> dict[str, tuple[str, ...]]:
    """Map normalized surface form -> ids of statements annotating it."""
    index: dict[str, list[str]] = {}
    for statement in statements:
        for annotation in statement.entities:
            key = normalize_surface(annotation.surface)
            ids = index.setdefault(key, [])
            if statement.id not in ids:
                ids.append(statement.id)
    return {key: tuple(ids) for key, ids in index.items()}


_KNOWN_KEYS = {"id", "text", "entities"}


def _parse_entity(line_no: int, item: object) -> EntityAnnotation:
    if not isinstance(item, dict):
        raise MalformedLineError(line_no, "entity must be an object")
    if "labels" in item or isinstance(item.get("label"), (list, tuple)):
        # Multi-label records are an upstream data decision; refuse to pick one.
        raise MalformedLineError(line_no, "multi-label entities are not supported")
    surface = item.get("text")
    if not isinstance(surface, str):
        raise MalformedLineError(line_no, "entity 'text' must be a string")
    surface = surface.strip()
    if not surface:
        raise MalformedLineError(line_no, "entity surface is empty")
    raw_label = item.get("label")
    if not isinstance(raw_label, str):
        raise MalformedLineError(line_no, "entity 'label' must be a string")
    try:
        label = parse_label(raw_label)
    except ValueError:
        raise UnknownLabelError(line_no, raw_label) from None
    return EntityAnnotation(surface=surface, label=label)


def _parse_statement(line_no: int, record: object) -> AdviceStatement:
    if not isinstance(record, dict):
        raise MalformedLineError(line_no, "record must be a JSON object")
    unknown = set(record) - _KNOWN_KEYS
    if unknown:
        logger.warning("line %d: ignoring unknown keys %s", line_no, sorted(unknown))
    statement_id = record.get("id")
    if not isinstance(statement_id, str) or not statement_id:
        raise MalformedLineError(line_no, "'id' must be a non-empty string")
    text = record.get("text")
    if not isinstance(text, str):
        raise MalformedLineError(line_no, "'text' must be a string")
    entities = record.get("entities", [])
    if not isinstance(entities, list):
        raise MalformedLineError(line_no, "'entities' must be a list")
    parsed = tuple(_parse_entity(line_no, item) for item in entities)
    return AdviceStatement(id=statement_id, text=text, entities=parsed)


def load_corpus(path: str | Path) -> Corpus:
    """Load a JSON Lines corpus file.

    Raises ``FileNotFoundError`` if the path does not exist, and structured
    :class:`~entpat.errors.CorpusError` subclasses identifying the offending
    line for malformed records, unknown labels, and duplicate ids.  Blank
    lines are skipped.
    """
    path = Path(path)
    statements: list[AdviceStatement] = []
    seen_ids: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLineError(line_no, f"invalid JSON: {exc.msg}") from None
            statement = _parse_statement(line_no, record)
            if statement.id in seen_ids:
                raise DuplicateIdError(statement.id)
            seen_ids.add(statement.id)
            statements.append(statement)
    return Corpus.from_statements(statements)


def statement_to_dict(statement: AdviceStatement) -> dict:
    """Serialize one statement to the JSON Lines record shape."""
    return {
        "id": statement.id,
        "text": statement.text,
        "entities": [
            {"text": e.surface, "label": e.label.value} for e in statement.entities
        ],
    }


def save_corpus(corpus: Corpus, path: str | Path) -> int:
    """Write a corpus back to JSON Lines; returns the statement count.

    Reloading the written file yields a structurally equal corpus (alias
    labels are canonicalized, so the bytes may differ from the original
    input file).
    """
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for statement in corpus.statements:
            handle.write(json.dumps(statement_to_dict(statement), ensure_ascii=False))
            handle.write("\n")
    return len(corpus.statements)


# -- validation --------------------------------------------------------------

SURFACE_NOT_FOUND = "surface-not-found"
EMPTY_SURFACE = "empty-surface"
DUPLICATE_ANNOTATION = "duplicate-annotation"


@dataclass(frozen=True)
class ValidationIssue:
    """A consistency problem found in a loaded corpus.

    Issues are data, not failures: validation never aborts.
    """

    kind: str
    statement_id: str
    surface: str
    message: str


def validate_corpus(corpus: Corpus) -> list[ValidationIssue]:
    """Report annotations that do not line up with their statement text.

    Checks, per statement: the surface occurs in the text under the masking
    module's occurrence-matching rule; the surface is non-empty; the same
    (surface, label) pair is not annotated twice.
    """
    from .masking import find_occurrences

    issues: list[ValidationIssue] = []
    for statement in corpus.statements:
        seen: set[tuple[str, EntityClass]] = set()
        for annotation in statement.entities:
            if not annotation.surface.strip():
                issues.append(
                    ValidationIssue(
                        kind=EMPTY_SURFACE,
                        statement_id=statement.id,
                        surface=annotation.surface,
                        message="entity surface is empty",
                    )
                )
                continue
            key = (normalize_surface(annotation.surface), annotation.label)
            if key in seen:
                issues.append(
                    ValidationIssue(
                        kind=DUPLICATE_ANNOTATION,
                        statement_id=statement.id,
                        surface=annotation.surface,
                        message=(
                            f"{annotation.surface!r}/{annotation.label.value} "
                            "annotated more than once"
                        ),
                    )
                )
                continue
            seen.add(key)
            if not find_occurrences(annotation.surface, statement):
                issues.append(
                    ValidationIssue(
                        kind=SURFACE_NOT_FOUND,
                        statement_id=statement.id,
                        surface=annotation.surface,
                        message=f"{annotation.surface!r} not found in statement text",
                    )
                )
    return issues


# -- statistics --------------------------------------------------------------


@dataclass(frozen=True)
class ClassDistribution:
    """Mention counts per entity class, plus their total."""

    counts: dict[EntityClass, int]
    total: int

    def format_table(self) -> str:
        """Render counts as an aligned text table in canonical class order."""
        width = max(len(c.value) for c in CLASS_ORDER)
        lines = [
            f"{c.value:<{width}} {self.counts[c]:>6d}" for c in CLASS_ORDER
        ]
        lines.append(f"{'TOTAL':<{width}} {self.total:>6d}")
        return "\n".join(lines)


def class_distribution(corpus: Corpus) -> ClassDistribution:
    """Count annotated mentions per class across the whole corpus."""
    counts = {c: 0 for c in CLASS_ORDER}
    for statement in corpus.statements:
        for annotation in statement.entities:
            counts[annotation.label] += 1
    return ClassDistribution(counts=counts, total=sum(counts.values()))
