"""Entity classification for health-advice text.

The pipeline represents each annotated entity by concatenating its own
embedding with the mean embedding of its masked usage contexts, then trains
a linear softmax head over six entity classes.  Encoders are pluggable:
a deterministic hash encoder for tests, precomputed cache files, or an
external subprocess adapter.
"""

from .classifier import (
    LinearModel,
    LinearSoftmaxClassifier,
    TrainConfig,
    load_model,
    predict,
    save_model,
    train,
)
from .corpus import (
    AdviceStatement,
    ClassDistribution,
    Corpus,
    EntityAnnotation,
    EntityClass,
    class_distribution,
    load_corpus,
    normalize_surface,
    parse_label,
    save_corpus,
    validate_corpus,
)
from .encoders import (
    CacheEncoder,
    Encoder,
    EncoderSpec,
    HashEncoder,
    SubprocessEncoder,
    build_cache,
    build_encoder,
    text_key,
)
from .errors import EntpatError
from .evaluation import (
    CrossValResult,
    EvalReport,
    FoldSpec,
    Sample,
    corpus_samples,
    cross_validate,
    export_errors,
    metrics,
    stratified_kfold,
)
from .features import (
    EntityPatternFeaturizer,
    FeatureVector,
    featurize,
    featurize_entity_only,
)
from .masking import (
    MASK_TOKEN,
    MaskedContext,
    Occurrence,
    collect_contexts,
    find_occurrences,
    mask_text,
)

__version__ = "0.1.0"

__all__ = [
    "AdviceStatement",
    "CacheEncoder",
    "ClassDistribution",
    "Corpus",
    "CrossValResult",
    "Encoder",
    "EncoderSpec",
    "EntityAnnotation",
    "EntityClass",
    "EntityPatternFeaturizer",
    "EntpatError",
    "EvalReport",
    "FeatureVector",
    "FoldSpec",
    "HashEncoder",
    "LinearModel",
    "LinearSoftmaxClassifier",
    "MASK_TOKEN",
    "MaskedContext",
    "Occurrence",
    "Sample",
    "SubprocessEncoder",
    "TrainConfig",
    "build_cache",
    "build_encoder",
    "class_distribution",
    "collect_contexts",
    "corpus_samples",
    "cross_validate",
    "export_errors",
    "featurize",
    "featurize_entity_only",
    "find_occurrences",
    "load_corpus",
    "load_model",
    "mask_text",
    "metrics",
    "normalize_surface",
    "parse_label",
    "predict",
    "save_corpus",
    "save_model",
    "stratified_kfold",
    "text_key",
    "train",
    "validate_corpus",
]
