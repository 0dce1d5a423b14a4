"""Multinomial linear classifier (softmax regression) over feature vectors.

The head is trained from scratch by mini-batch gradient descent on the
regularized mean cross-entropy

    L(W, b) = mean_i w_i * CE_i + (l2 / 2) * ||W||^2

with zero initialization (the objective is convex, so this also removes any
init randomness) and per-epoch shuffling from a seeded generator, making
training bitwise reproducible for a given seed.  The model always has one
row per entity class, in canonical order; prediction ties break toward the
lowest class index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .corpus import CLASS_INDEX, CLASS_ORDER, EntityClass
from .errors import (
    DimensionMismatchError,
    EmptyTrainingSetError,
    ModelFormatError,
    NonFiniteInputError,
    NonFiniteLossError,
    VersionMismatchError,
)
from .validation import as_class_list, as_feature_matrix, as_feature_row

N_CLASSES = len(CLASS_ORDER)

MODEL_FORMAT = "entpat-linear-model"
MODEL_FORMAT_VERSION = 1

WEIGHTING_NONE = "none"
WEIGHTING_INVERSE_FREQUENCY = "inverse-frequency"


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the gradient-descent head."""

    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 32
    l2: float = 1e-4
    seed: int = 0
    class_weighting: str = WEIGHTING_NONE

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be a positive integer")
        if self.batch_size < 1:
            raise ValueError("batch_size must be a positive integer")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if self.class_weighting not in (WEIGHTING_NONE, WEIGHTING_INVERSE_FREQUENCY):
            raise ValueError(
                f"class_weighting must be {WEIGHTING_NONE!r} or "
                f"{WEIGHTING_INVERSE_FREQUENCY!r}"
            )


@dataclass(frozen=True)
class LinearModel:
    """Weights and bias of the linear head, one row per class."""

    weights: np.ndarray  # (6, feature_len)
    bias: np.ndarray  # (6,)
    classes: tuple[EntityClass, ...]
    feature_len: int

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights.T + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.decision_function(X))

    def predict_classes(self, X: np.ndarray) -> list[EntityClass]:
        # argmax takes the first maximum, which is the lowest class index
        indices = np.argmax(self.decision_function(X), axis=1)
        return [self.classes[i] for i in indices]


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax over the last axis; output sums to 1."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise NonFiniteInputError("softmax input contains NaN or infinite values")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def predict(model: LinearModel, feature) -> tuple[EntityClass, np.ndarray]:
    """Predict one sample: (argmax class, probability vector).

    Ties break toward the lowest class index in canonical order.
    """
    row = as_feature_row(feature, model.feature_len)
    probabilities = model.predict_proba(row.reshape(1, -1))[0]
    return model.predict_classes(row.reshape(1, -1))[0], probabilities


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def loss_and_gradient(
    model: LinearModel,
    X: np.ndarray,
    y_indices: np.ndarray,
    l2: float,
    class_weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Regularized mean cross-entropy and its exact analytic gradient.

    ``class_weights``, when given, rescales each sample's contribution by
    the weight of its gold class (length-6 vector, ones = unweighted).
    """
    if len(X) == 0:
        raise EmptyTrainingSetError("batch must be non-empty")
    if X.shape[1] != model.feature_len:
        raise DimensionMismatchError(
            f"batch width {X.shape[1]} != model feature_len {model.feature_len}"
        )
    n = len(X)
    logits = model.decision_function(X)
    log_probs = _log_softmax(logits)
    sample_weights = (
        np.ones(n) if class_weights is None else class_weights[y_indices]
    )
    loss = (
        -(sample_weights * log_probs[np.arange(n), y_indices]).sum() / n
        + 0.5 * l2 * float((model.weights**2).sum())
    )
    delta = np.exp(log_probs)
    delta[np.arange(n), y_indices] -= 1.0
    delta *= sample_weights[:, None] / n
    grad_w = delta.T @ X + l2 * model.weights
    grad_b = delta.sum(axis=0)
    return float(loss), grad_w, grad_b


def inverse_frequency_weights(y_indices: np.ndarray) -> np.ndarray:
    """Per-class weights total / (n_classes * count_c); zero for absent classes."""
    counts = np.bincount(y_indices, minlength=N_CLASSES).astype(np.float64)
    weights = np.zeros(N_CLASSES)
    present = counts > 0
    weights[present] = len(y_indices) / (N_CLASSES * counts[present])
    return weights


def train(features, labels, config: TrainConfig = TrainConfig()) -> tuple[LinearModel, list[float]]:
    """Fit the head by mini-batch SGD; returns (model, per-epoch loss trace).

    Each trace entry is the sample-weighted mean of the batch losses seen
    during that epoch (computed before the parameter updates), so with
    ``batch_size >= n`` it is exactly the full objective at the start of the
    epoch.  Raises NonFiniteLossError if the loss diverges.
    """
    X = as_feature_matrix(features)
    if len(X) == 0:
        raise EmptyTrainingSetError("at least one training sample is required")
    classes = as_class_list(labels)
    if len(classes) != len(X):
        raise DimensionMismatchError(
            f"{len(X)} feature rows but {len(classes)} labels"
        )
    y = np.array([CLASS_INDEX[c] for c in classes])
    n, feature_len = X.shape

    class_weights = None
    if config.class_weighting == WEIGHTING_INVERSE_FREQUENCY:
        class_weights = inverse_frequency_weights(y)

    model = LinearModel(
        weights=np.zeros((N_CLASSES, feature_len)),
        bias=np.zeros(N_CLASSES),
        classes=CLASS_ORDER,
        feature_len=feature_len,
    )
    rng = np.random.default_rng(config.seed)
    trace: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grad_w, grad_b = loss_and_gradient(
                model, X[batch], y[batch], config.l2, class_weights
            )
            if not np.isfinite(loss):
                raise NonFiniteLossError(
                    "training loss is not finite; lower the learning rate"
                )
            epoch_loss += loss * len(batch)
            model = LinearModel(
                weights=model.weights - config.learning_rate * grad_w,
                bias=model.bias - config.learning_rate * grad_b,
                classes=model.classes,
                feature_len=model.feature_len,
            )
        trace.append(epoch_loss / n)
    return model, trace


def save_model(model: LinearModel, path: str | Path):
    """Write a model as versioned JSON (exact float round-trip)."""
    payload = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "classes": [c.value for c in model.classes],
        "feature_len": model.feature_len,
        "weights": [[float(v) for v in row] for row in model.weights],
        "bias": [float(v) for v in model.bias],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LinearModel:
    """Read a model written by :func:`save_model`, checking format and shapes."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON: {exc.msg}") from None
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path}: not a {MODEL_FORMAT} file")
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format version {version!r}, expected {MODEL_FORMAT_VERSION}"
        )
    try:
        classes = tuple(EntityClass(name) for name in payload["classes"])
        feature_len = int(payload["feature_len"])
        weights = np.asarray(payload["weights"], dtype=np.float64)
        bias = np.asarray(payload["bias"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: {exc}") from None
    if classes != CLASS_ORDER:
        raise ModelFormatError(f"{path}: classes must be {[c.value for c in CLASS_ORDER]}")
    if weights.shape != (N_CLASSES, feature_len) or bias.shape != (N_CLASSES,):
        raise ModelFormatError(f"{path}: weight/bias shapes do not match feature_len")
    if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
        raise ModelFormatError(f"{path}: parameters must be finite")
    return LinearModel(
        weights=weights, bias=bias, classes=classes, feature_len=feature_len
    )


class LinearSoftmaxClassifier(BaseEstimator, ClassifierMixin):
    """Scikit-learn estimator wrapper around :func:`train` and :class:`LinearModel`.

    ``y`` may contain EntityClass values or their string names; ``predict``
    returns string names.  ``classes_`` is always the full canonical label
    set, independent of which labels occur in ``y``.
    """

    def __init__(
        self,
        learning_rate: float = 0.1,
        epochs: int = 200,
        batch_size: int = 32,
        l2: float = 1e-4,
        seed: int = 0,
        class_weighting: str = WEIGHTING_NONE,
    ):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.l2 = l2
        self.seed = seed
        self.class_weighting = class_weighting

    def fit(self, X, y) -> "LinearSoftmaxClassifier":
        config = TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            l2=self.l2,
            seed=self.seed,
            class_weighting=self.class_weighting,
        )
        self.model_, self.loss_trace_ = train(X, y, config)
        self.classes_ = np.array([c.value for c in CLASS_ORDER])
        self.n_features_in_ = self.model_.feature_len
        return self

    def predict(self, X) -> np.ndarray:
        X = self._validated(X)
        return np.array([c.value for c in self.model_.predict_classes(X)])

    def predict_proba(self, X) -> np.ndarray:
        return self.model_.predict_proba(self._validated(X))

    def _validated(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise NotFittedError(
                "LinearSoftmaxClassifier is not fitted; call fit first"
            )
        X = as_feature_matrix(X)
        if X.shape[1] != self.model_.feature_len:
            raise DimensionMismatchError(
                f"X has {X.shape[1]} features, model expects {self.model_.feature_len}"
            )
        return X
