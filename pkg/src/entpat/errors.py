"""Exception hierarchy shared across the package.

Everything raised deliberately by this package derives from
:class:`EntpatError`, so callers (and the CLI) can distinguish data/user
errors from genuine bugs.
"""

from __future__ import annotations


class EntpatError(Exception):
    """Base class for all errors raised by this package."""


# -- corpus loading ----------------------------------------------------------


class CorpusError(EntpatError):
    """A corpus file could not be parsed or is inconsistent."""


class MalformedLineError(CorpusError):
    """A JSON Lines record is syntactically or structurally invalid."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class UnknownLabelError(CorpusError):
    """An entity carries a label outside the six-class schema."""

    def __init__(self, line_no: int, label: object):
        super().__init__(f"line {line_no}: unknown label {label!r}")
        self.line_no = line_no
        self.label = label


class DuplicateIdError(CorpusError):
    """Two statements share the same id."""

    def __init__(self, statement_id: str):
        super().__init__(f"duplicate statement id {statement_id!r}")
        self.statement_id = statement_id


# -- masking -----------------------------------------------------------------


class OverlappingSpansError(EntpatError):
    """Occurrence spans overlap and cannot be masked unambiguously."""


class SpanOutOfBoundsError(EntpatError):
    """An occurrence span lies outside the statement text."""


# -- encoders ----------------------------------------------------------------


class EncoderError(EntpatError):
    """An embedding provider failed to produce a vector."""


class CacheMissError(EncoderError):
    """A cache-file provider has no entry for the requested text."""

    def __init__(self, key: str):
        super().__init__(f"no cached vector for text key {key}")
        self.key = key


class AdapterFailureError(EncoderError):
    """The external adapter subprocess misbehaved."""


# -- classifier --------------------------------------------------------------


class DimensionMismatchError(EntpatError):
    """Feature width does not match what the model or provider expects."""


class NonFiniteInputError(EntpatError):
    """An input contains NaN or infinity."""


class EmptyTrainingSetError(EntpatError):
    """Training was requested with zero samples."""


class NonFiniteLossError(EntpatError):
    """Training diverged: the loss became NaN or infinite."""


class ModelFormatError(EntpatError):
    """A model file is corrupt or structurally invalid."""


class VersionMismatchError(ModelFormatError):
    """A model file was written by an incompatible format version."""


# -- evaluation --------------------------------------------------------------


class LengthMismatchError(EntpatError):
    """Gold and predicted label sequences disagree in length (or are empty)."""


class ClassTooSmallError(EntpatError):
    """A class has fewer samples than the number of folds."""

    def __init__(self, label: object, count: int, k: int):
        super().__init__(
            f"class {getattr(label, 'value', label)} has {count} samples, "
            f"fewer than k={k} folds"
        )
        self.label = label
        self.count = count
        self.k = k
