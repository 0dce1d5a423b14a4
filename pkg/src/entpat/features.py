"""Build entity-plus-pattern feature vectors.

A sample's feature vector is the concatenation of two parts of equal width:
the embedding of the entity surface form itself, followed by the mean of the
embeddings of all its masked contexts.  Entities with no context in the
corpus get a zero pattern part rather than a duplicated entity embedding, so
out-of-corpus entities are not double-weighted.

A baseline entity-only mode drops the pattern half entirely; the classifier
sizes itself from the feature width.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .corpus import Corpus
from .encoders import Encoder
from .masking import MaskedContext, collect_contexts

MODE_ENTITY_PATTERN = "entity-pattern"
MODE_ENTITY_ONLY = "entity-only"

_MODE_ALIASES = {
    "ep": MODE_ENTITY_PATTERN,
    MODE_ENTITY_PATTERN: MODE_ENTITY_PATTERN,
    MODE_ENTITY_ONLY: MODE_ENTITY_ONLY,
}


def canonical_mode(mode: str) -> str:
    """Resolve a featurization mode name (``ep`` is shorthand)."""
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise ValueError(
            f"unknown mode {mode!r}; expected entity-pattern (ep) or entity-only"
        ) from None


@dataclass(frozen=True)
class FeatureVector:
    """A sample's feature values: entity part first, pattern part second.

    Full features have length ``2 * dim``; entity-only features have length
    ``dim`` and an empty pattern part.  ``context_count`` is the number of
    masked contexts the pattern part was pooled from.
    """

    values: np.ndarray
    dim: int
    context_count: int

    @property
    def entity_part(self) -> np.ndarray:
        return self.values[: self.dim]

    @property
    def pattern_part(self) -> np.ndarray:
        return self.values[self.dim :]

    @property
    def entity_only(self) -> bool:
        return len(self.values) == self.dim

    def __len__(self) -> int:
        return len(self.values)


def entity_embedding(surface: str, encoder: Encoder) -> np.ndarray:
    """Embed the raw surface form (multi-token surfaces are one text)."""
    if not surface.strip():
        raise ValueError("surface must be non-empty")
    return encoder.encode(surface)


def pattern_embedding(contexts: list[MaskedContext], encoder: Encoder) -> np.ndarray:
    """Component-wise mean of context embeddings; zero vector when empty."""
    if not contexts:
        return np.zeros(encoder.dim)
    stacked = np.stack([encoder.encode(c.masked_text) for c in contexts])
    return stacked.mean(axis=0)


def featurize(
    surface: str,
    corpus: Corpus,
    encoder: Encoder,
    max_contexts: int | None = None,
) -> FeatureVector:
    """Full entity-plus-pattern feature for one surface form."""
    entity = entity_embedding(surface, encoder)
    contexts = collect_contexts(surface, corpus, max_contexts)
    pattern = pattern_embedding(contexts, encoder)
    return FeatureVector(
        values=np.concatenate([entity, pattern]),
        dim=encoder.dim,
        context_count=len(contexts),
    )


def featurize_entity_only(surface: str, encoder: Encoder) -> FeatureVector:
    """Baseline feature: the entity embedding alone, length ``dim``."""
    entity = entity_embedding(surface, encoder)
    return FeatureVector(values=entity, dim=encoder.dim, context_count=0)


class EntityPatternFeaturizer(BaseEstimator, TransformerMixin):
    """Turn surface forms into feature rows against a fitted corpus.

    ``fit`` takes the corpus whose texts supply the contexts (ignored in
    entity-only mode, where it may be None); ``transform`` maps a sequence
    of surface forms to a float matrix of shape (n, 2*dim) or (n, dim).
    Features are memoized per surface form across calls, so repeated
    surfaces (e.g. across cross-validation folds) are computed once.
    """

    def __init__(
        self,
        encoder: Encoder | None = None,
        mode: str = MODE_ENTITY_PATTERN,
        max_contexts: int | None = None,
    ):
        self.encoder = encoder
        self.mode = mode
        self.max_contexts = max_contexts

    def fit(self, corpus: Corpus | None, y=None) -> "EntityPatternFeaturizer":
        if self.encoder is None:
            raise ValueError("an encoder is required")
        self.mode_ = canonical_mode(self.mode)
        if self.mode_ == MODE_ENTITY_PATTERN and corpus is None:
            raise ValueError("entity-pattern mode requires a corpus")
        self.corpus_ = corpus
        self.width_ = (
            self.encoder.dim if self.mode_ == MODE_ENTITY_ONLY else 2 * self.encoder.dim
        )
        self._cache: dict[str, FeatureVector] = {}
        return self

    def _check_fitted(self):
        if not hasattr(self, "corpus_"):
            raise NotFittedError("EntityPatternFeaturizer is not fitted; call fit first")

    def featurize(self, surface: str) -> FeatureVector:
        """Feature for one surface form, memoized by the exact surface string."""
        self._check_fitted()
        cached = self._cache.get(surface)
        if cached is None:
            if self.mode_ == MODE_ENTITY_ONLY:
                cached = featurize_entity_only(surface, self.encoder)
            else:
                cached = featurize(
                    surface, self.corpus_, self.encoder, self.max_contexts
                )
            self._cache[surface] = cached
        return cached

    def transform(self, surfaces) -> np.ndarray:
        self._check_fitted()
        matrix = np.empty((len(surfaces), self.width_))
        for row, surface in enumerate(surfaces):
            matrix[row] = self.featurize(surface).values
        return matrix
