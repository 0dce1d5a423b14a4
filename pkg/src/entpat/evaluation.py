"""Stratified k-fold cross-validation, per-class F1, and error export.

Metrics follow the one-vs-rest convention: per-class precision, recall, and
F1 with zero substituted when a denominator is zero, plus the
support-weighted F1 average.  Confusion matrices are 6x6 with gold labels
on rows and predictions on columns.

Cross-validation stratifies per class (fold counts within +/-1) and, by
default, forces samples that share a normalized surface form into the same
fold; identical surfaces in train and test would otherwise leak straight
through the entity branch.  Contexts are computed against the full corpus
in every fold: they are unlabeled text, not labels.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import TrainConfig, train
from .corpus import CLASS_INDEX, CLASS_ORDER, Corpus, EntityClass, normalize_surface
from .encoders import Encoder
from .errors import ClassTooSmallError, LengthMismatchError
from .features import EntityPatternFeaturizer, canonical_mode

#: Column order used in report tables.
REPORT_COLUMNS: tuple[EntityClass, ...] = (
    EntityClass.DIS,
    EntityClass.MED,
    EntityClass.FOOD,
    EntityClass.EXER,
    EntityClass.PHYS,
    EntityClass.OTH,
)


@dataclass(frozen=True)
class Sample:
    """One labeled entity mention: the unit of classification."""

    surface: str
    label: EntityClass
    source_id: str


def corpus_samples(corpus: Corpus) -> list[Sample]:
    """All annotated mentions in corpus order, one sample each."""
    return [
        Sample(surface=a.surface, label=a.label, source_id=s.id)
        for s in corpus.statements
        for a in s.entities
    ]


# -- fold assignment ---------------------------------------------------------


@dataclass(frozen=True)
class FoldSpec:
    """A complete assignment of sample indices to folds."""

    k: int
    seed: int
    assignments: np.ndarray  # assignments[i] = fold of sample i

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def _majority_class(labels: list[EntityClass]) -> EntityClass:
    counts = Counter(labels)
    return max(counts, key=lambda c: (counts[c], -CLASS_INDEX[c]))


def stratified_kfold(
    samples: list[Sample],
    k: int = 5,
    seed: int = 0,
    group_by_surface: bool = True,
) -> FoldSpec:
    """Deal samples into k folds, stratified per class.

    Within each class the samples (or surface groups, when grouping is on)
    are shuffled by a seeded generator and dealt round-robin, so per-class
    counts across folds differ by at most one.  With grouping, a group's
    class is the majority label of its members and the +/-1 balance holds at
    the group level; a group's samples always land in one fold together.

    Raises ClassTooSmallError when a class present in the samples has fewer
    than k members.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    class_counts = Counter(s.label for s in samples)
    for cls in CLASS_ORDER:
        if 0 < class_counts[cls] < k:
            raise ClassTooSmallError(cls, class_counts[cls], k)

    if group_by_surface:
        grouped: dict[str, list[int]] = {}
        for i, sample in enumerate(samples):
            grouped.setdefault(normalize_surface(sample.surface), []).append(i)
        groups = list(grouped.values())
    else:
        groups = [[i] for i in range(len(samples))]

    by_class: dict[EntityClass, list[list[int]]] = {c: [] for c in CLASS_ORDER}
    for group in groups:
        by_class[_majority_class([samples[i].label for i in group])].append(group)

    rng = np.random.default_rng(seed)
    assignments = np.full(len(samples), -1, dtype=np.intp)
    for cls in CLASS_ORDER:
        cls_groups = by_class[cls]
        if not cls_groups:
            continue
        for position, group_index in enumerate(rng.permutation(len(cls_groups))):
            for i in cls_groups[group_index]:
                assignments[i] = position % k
    return FoldSpec(k=k, seed=seed, assignments=assignments)


# -- metrics -----------------------------------------------------------------


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class PredictionError:
    surface: str
    gold: EntityClass
    predicted: EntityClass
    source_id: str


@dataclass
class EvalReport:
    """Per-class metrics, weighted F1, confusion matrix, and misclassifications."""

    per_class: dict[EntityClass, ClassMetrics]
    weighted_f1: float
    confusion: np.ndarray  # (6, 6); rows = gold, columns = predicted
    errors: list[PredictionError] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_class": {
                c.value: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for c in REPORT_COLUMNS
                for m in [self.per_class[c]]
            },
            "weighted_f1": self.weighted_f1,
            "confusion": self.confusion.tolist(),
        }


def confusion_matrix(
    gold: list[EntityClass], predicted: list[EntityClass]
) -> np.ndarray:
    matrix = np.zeros((len(CLASS_ORDER), len(CLASS_ORDER)), dtype=np.int64)
    for g, p in zip(gold, predicted):
        matrix[CLASS_INDEX[g], CLASS_INDEX[p]] += 1
    return matrix


def metrics(
    gold: list[EntityClass],
    predicted: list[EntityClass],
    samples: list[Sample] | None = None,
) -> EvalReport:
    """One-vs-rest precision/recall/F1 per class and the weighted average.

    F1 is zero whenever precision + recall is zero; classes without gold
    samples are reported with support 0.  When ``samples`` is supplied (one
    per position), misclassified samples are collected into the report's
    error list.
    """
    if len(gold) != len(predicted) or not gold:
        raise LengthMismatchError(
            f"gold has {len(gold)} labels, predicted has {len(predicted)}; "
            "need equal, non-zero lengths"
        )
    if samples is not None and len(samples) != len(gold):
        raise LengthMismatchError(
            f"{len(samples)} samples but {len(gold)} label pairs"
        )
    confusion = confusion_matrix(gold, predicted)
    per_class: dict[EntityClass, ClassMetrics] = {}
    for cls in CLASS_ORDER:
        i = CLASS_INDEX[cls]
        true_pos = int(confusion[i, i])
        support = int(confusion[i].sum())
        predicted_pos = int(confusion[:, i].sum())
        precision = true_pos / predicted_pos if predicted_pos else 0.0
        recall = true_pos / support if support else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        per_class[cls] = ClassMetrics(precision, recall, f1, support)
    total_support = sum(m.support for m in per_class.values())
    weighted_f1 = (
        sum(m.support * m.f1 for m in per_class.values()) / total_support
    )
    errors = []
    if samples is not None:
        errors = [
            PredictionError(s.surface, g, p, s.source_id)
            for s, g, p in zip(samples, gold, predicted)
            if g != p
        ]
    return EvalReport(
        per_class=per_class,
        weighted_f1=weighted_f1,
        confusion=confusion,
        errors=errors,
    )


def write_confusion_csv(confusion: np.ndarray, path: str | Path):
    """Write a confusion matrix as CSV: gold rows, predicted columns."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["gold\\predicted"] + [c.value for c in CLASS_ORDER])
        for cls in CLASS_ORDER:
            writer.writerow([cls.value] + confusion[CLASS_INDEX[cls]].tolist())


def write_errors_jsonl(errors: list[PredictionError], path: str | Path) -> int:
    """Write misclassified samples as JSON Lines; returns the line count."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for error in errors:
            handle.write(
                json.dumps(
                    {
                        "surface": error.surface,
                        "gold": error.gold.value,
                        "predicted": error.predicted.value,
                        "source_id": error.source_id,
                    },
                    ensure_ascii=False,
                )
            )
            handle.write("\n")
    return len(errors)


def export_errors(
    report: EvalReport,
    path: str | Path,
    confusion_path: str | Path | None = None,
) -> int:
    """Write a report's misclassifications as JSON Lines; returns the count.

    The report's confusion matrix is written alongside as CSV (default:
    ``confusion.csv`` next to the errors file), ready for manual error
    categorization.
    """
    path = Path(path)
    count = write_errors_jsonl(report.errors, path)
    if confusion_path is None:
        confusion_path = path.parent / "confusion.csv"
    write_confusion_csv(report.confusion, confusion_path)
    return count


# -- cross-validation --------------------------------------------------------


@dataclass
class CrossValResult:
    """Per-fold reports plus their across-fold mean.

    Mean per-class figures average over the folds where the class has gold
    samples; the mean weighted F1 averages the per-fold weighted F1 values
    (it is not recomputed from the mean per-class figures).
    """

    fold_reports: list[EvalReport]
    mean_per_class: dict[EntityClass, ClassMetrics]
    mean_weighted_f1: float
    k: int
    seed: int
    mode: str

    def pooled_confusion(self) -> np.ndarray:
        return np.sum([r.confusion for r in self.fold_reports], axis=0)

    def all_errors(self) -> list[PredictionError]:
        return [e for r in self.fold_reports for e in r.errors]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "mode": self.mode,
            "mean": {
                "per_class_f1": {
                    c.value: self.mean_per_class[c].f1 for c in REPORT_COLUMNS
                },
                "weighted_f1": self.mean_weighted_f1,
            },
            "folds": [r.to_dict() for r in self.fold_reports],
        }


def _mean_report(fold_reports: list[EvalReport]) -> dict[EntityClass, ClassMetrics]:
    mean: dict[EntityClass, ClassMetrics] = {}
    for cls in CLASS_ORDER:
        rows = [r.per_class[cls] for r in fold_reports]
        supported = [m for m in rows if m.support > 0]
        if supported:
            mean[cls] = ClassMetrics(
                precision=float(np.mean([m.precision for m in supported])),
                recall=float(np.mean([m.recall for m in supported])),
                f1=float(np.mean([m.f1 for m in supported])),
                support=sum(m.support for m in rows),
            )
        else:
            mean[cls] = ClassMetrics(0.0, 0.0, 0.0, 0)
    return mean


def cross_validate(
    corpus: Corpus,
    encoder: Encoder,
    train_config: TrainConfig = TrainConfig(),
    k: int = 5,
    seed: int = 0,
    mode: str = "entity-pattern",
    max_contexts: int | None = None,
    group_by_surface: bool = True,
) -> CrossValResult:
    """Stratified k-fold cross-validation of the full pipeline.

    Features are computed once per surface against the full corpus; each
    fold trains a fresh head on the other k-1 folds and is scored on its
    held-out samples.
    """
    mode = canonical_mode(mode)
    samples = corpus_samples(corpus)
    if not samples:
        raise ValueError("corpus has no annotated mentions to evaluate")
    featurizer = EntityPatternFeaturizer(
        encoder=encoder, mode=mode, max_contexts=max_contexts
    ).fit(corpus)
    X = featurizer.transform([s.surface for s in samples])
    labels = [s.label for s in samples]
    folds = stratified_kfold(samples, k=k, seed=seed, group_by_surface=group_by_surface)

    fold_reports = []
    for fold in range(k):
        train_idx = folds.train_indices(fold)
        test_idx = folds.test_indices(fold)
        model, _ = train(X[train_idx], [labels[i] for i in train_idx], train_config)
        predicted = model.predict_classes(X[test_idx])
        fold_reports.append(
            metrics(
                [labels[i] for i in test_idx],
                predicted,
                samples=[samples[i] for i in test_idx],
            )
        )
    return CrossValResult(
        fold_reports=fold_reports,
        mean_per_class=_mean_report(fold_reports),
        mean_weighted_f1=float(np.mean([r.weighted_f1 for r in fold_reports])),
        k=k,
        seed=seed,
        mode=mode,
    )
