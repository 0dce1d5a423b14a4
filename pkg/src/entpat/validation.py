"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

from .corpus import EntityClass, parse_label
from .errors import DimensionMismatchError, NonFiniteInputError


def as_feature_matrix(X) -> np.ndarray:
    """Coerce features to a finite 2-D float64 matrix.

    Accepts an array-like of rows or a sequence of objects with a
    ``values`` attribute (FeatureVector).  Ragged rows raise
    DimensionMismatchError.
    """
    if isinstance(X, np.ndarray) and X.dtype != object:
        matrix = np.asarray(X, dtype=np.float64)
    else:
        rows = [np.asarray(getattr(row, "values", row), dtype=np.float64) for row in X]
        widths = {row.shape for row in rows}
        if len(widths) > 1:
            raise DimensionMismatchError(
                f"feature rows have inconsistent widths: {sorted(w[0] for w in widths)}"
            )
        matrix = np.stack(rows) if rows else np.empty((0, 0))
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    if matrix.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D feature matrix, got {matrix.ndim}-D")
    check_finite(matrix, "feature matrix")
    return matrix


def as_feature_row(feature, expected_len: int) -> np.ndarray:
    """Coerce one feature (vector or FeatureVector) and check its width."""
    row = np.asarray(getattr(feature, "values", feature), dtype=np.float64)
    if row.ndim != 1 or len(row) != expected_len:
        raise DimensionMismatchError(
            f"feature has shape {row.shape}, model expects length {expected_len}"
        )
    check_finite(row, "feature")
    return row


def as_class_list(labels) -> list[EntityClass]:
    """Coerce labels (EntityClass values or strings) to EntityClass."""
    out = []
    for label in labels:
        out.append(label if isinstance(label, EntityClass) else parse_label(label))
    return out


def check_finite(values: np.ndarray, name: str):
    if not np.all(np.isfinite(values)):
        raise NonFiniteInputError(f"{name} contains NaN or infinite values")
