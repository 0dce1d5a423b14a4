"""Command-line entry point for reproducible classification runs.

Subcommands: ``stats``, ``mask``, ``build-cache``, ``train``, ``cv``,
``predict``.  Training commands accept a JSON config file; explicit
command-line flags override it, and the fully resolved configuration is
written into every output directory so a run can be replayed byte-for-byte
with ``--config <out>/config.json``.

Exit codes: 0 success, 1 user or data error, 2 internal error.
"""

from __future__ import annotations

import functools
import json
import sys
import traceback
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

import click
from click.core import ParameterSource

from .classifier import (
    WEIGHTING_INVERSE_FREQUENCY,
    WEIGHTING_NONE,
    TrainConfig,
    load_model,
    predict,
    save_model,
    train,
)
from .corpus import CLASS_ORDER, class_distribution, load_corpus
from .encoders import Encoder, EncoderSpec, build_cache, build_encoder
from .errors import EntpatError
from .evaluation import (
    corpus_samples,
    cross_validate,
    write_confusion_csv,
    write_errors_jsonl,
)
from .features import (
    MODE_ENTITY_ONLY,
    MODE_ENTITY_PATTERN,
    EntityPatternFeaturizer,
    canonical_mode,
)
from .masking import collect_contexts

_DEFAULTS = TrainConfig()

_MODE_CHOICES = ("ep", MODE_ENTITY_PATTERN, MODE_ENTITY_ONLY)
_WEIGHTING_CHOICES = (WEIGHTING_NONE, WEIGHTING_INVERSE_FREQUENCY)

#: Config-file keys accepted by ``train``; ``cv`` adds its own on top.
TRAIN_KEYS = (
    "corpus",
    "encoder",
    "dim",
    "mode",
    "max_contexts",
    "lr",
    "epochs",
    "batch",
    "l2",
    "seed",
    "class_weighting",
)
CV_KEYS = TRAIN_KEYS + ("k", "group_surfaces")


def handle_errors(func):
    """Map domain and I/O failures to exit code 1 with a clean message."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.ClickException:
            raise
        except (EntpatError, OSError, ValueError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _coerce(values: dict) -> dict:
    """Normalize config values to their expected types (JSON is loose)."""
    out = dict(values)
    try:
        for key in ("dim", "max_contexts", "epochs", "batch", "seed", "k"):
            if key in out and out[key] is not None:
                out[key] = int(out[key])
        for key in ("lr", "l2"):
            if key in out:
                out[key] = float(out[key])
        for key in ("corpus", "encoder", "mode", "class_weighting"):
            if key in out and out[key] is not None:
                out[key] = str(out[key])
        if "group_surfaces" in out and not isinstance(out["group_surfaces"], bool):
            raise ValueError("group_surfaces must be true or false")
    except (TypeError, ValueError) as exc:
        raise click.ClickException(f"invalid config value: {exc}") from exc
    return out


def _resolved(config_path: Path | None, keys: tuple) -> dict:
    """Merge current flag values with a JSON config file; explicit flags win."""
    ctx = click.get_current_context()
    values = {key: ctx.params[key] for key in keys}
    if config_path is not None:
        try:
            file_values = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"config file {config_path}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise click.ClickException(
                f"config file {config_path}: expected a JSON object"
            )
        unknown = sorted(set(file_values) - set(keys))
        if unknown:
            raise click.ClickException(
                f"config file {config_path}: unknown keys {', '.join(unknown)}"
            )
        for key, value in file_values.items():
            if ctx.get_parameter_source(key) != ParameterSource.COMMANDLINE:
                values[key] = value
    values = _coerce(values)
    if not values.get("corpus"):
        raise click.UsageError("--corpus is required (flag or config file)")
    values["mode"] = canonical_mode(values["mode"])
    return values


def _train_config(values: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=values["lr"],
        epochs=values["epochs"],
        batch_size=values["batch"],
        l2=values["l2"],
        seed=values["seed"],
        class_weighting=values["class_weighting"],
    )


@contextmanager
def _open_encoder(flag: str, dim: int | None) -> Iterator[Encoder]:
    encoder = build_encoder(EncoderSpec.parse(flag, dim=dim))
    try:
        yield encoder
    finally:
        close = getattr(encoder, "close", None)
        if close is not None:
            close()


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def _require_corpus(corpus: Path | None):
    if corpus is None:
        raise click.UsageError("--corpus is required")
    return load_corpus(corpus)


# -- shared option stacks ----------------------------------------------------

_corpus_option = click.option(
    "--corpus",
    "corpus",
    type=click.Path(path_type=Path),
    help="Annotated corpus in JSON Lines format.",
)
_max_contexts_option = click.option(
    "--max-contexts",
    "max_contexts",
    type=int,
    default=None,
    help="Cap on contexts pooled per surface form (default: all).",
)


def _encoder_options(func):
    for option in reversed(
        (
            click.option(
                "--encoder",
                default="test-hash",
                show_default=True,
                help="Embedding provider: test-hash, cache:<path>, or adapter:<command>.",
            ),
            click.option(
                "--dim",
                type=int,
                default=None,
                help="Embedding dimension (adapters require it; caches infer it).",
            ),
        )
    ):
        func = option(func)
    return func


def _mode_option(func):
    return click.option(
        "--mode",
        type=click.Choice(_MODE_CHOICES),
        default="ep",
        show_default=True,
        help="Feature mode: entity+pattern (ep) or the entity-only baseline.",
    )(func)


def _train_options(func):
    for option in reversed(
        (
            click.option(
                "--lr", type=float, default=_DEFAULTS.learning_rate, show_default=True
            ),
            click.option(
                "--epochs", type=int, default=_DEFAULTS.epochs, show_default=True
            ),
            click.option(
                "--batch", type=int, default=_DEFAULTS.batch_size, show_default=True
            ),
            click.option("--l2", type=float, default=_DEFAULTS.l2, show_default=True),
            click.option(
                "--seed", type=int, default=_DEFAULTS.seed, show_default=True
            ),
            click.option(
                "--class-weighting",
                "class_weighting",
                type=click.Choice(_WEIGHTING_CHOICES),
                default=_DEFAULTS.class_weighting,
                show_default=True,
            ),
            click.option(
                "--config",
                "config_path",
                type=click.Path(path_type=Path),
                default=None,
                help="JSON config file; explicit flags take precedence over it.",
            ),
            click.option(
                "--out",
                type=click.Path(path_type=Path),
                required=True,
                help="Output directory for this run.",
            ),
        )
    ):
        func = option(func)
    return func


# -- commands ----------------------------------------------------------------


@click.group()
def cli() -> None:
    """Classify health-advice entities from their surface and usage contexts."""


@cli.command("stats")
@_corpus_option
@handle_errors
def cmd_stats(corpus: Path | None) -> None:
    """Print per-class mention counts for a corpus."""
    click.echo(class_distribution(_require_corpus(corpus)).format_table())


@cli.command("mask")
@click.option("--surface", required=True, help="Entity surface form to mask.")
@_corpus_option
@_max_contexts_option
@handle_errors
def cmd_mask(surface: str, corpus: Path | None, max_contexts: int | None) -> None:
    """Print the masked contexts of a surface form as JSON Lines."""
    for context in collect_contexts(surface, _require_corpus(corpus), max_contexts):
        click.echo(
            json.dumps(
                {
                    "statement_id": context.statement_id,
                    "masked_text": context.masked_text,
                    "mask_count": context.mask_count,
                },
                ensure_ascii=False,
            )
        )


@cli.command("build-cache")
@_corpus_option
@_encoder_options
@_max_contexts_option
@click.option(
    "--out",
    type=click.Path(path_type=Path),
    required=True,
    help="Cache file to write (JSON Lines).",
)
@handle_errors
def cmd_build_cache(
    corpus: Path | None,
    encoder: str,
    dim: int | None,
    max_contexts: int | None,
    out: Path,
) -> None:
    """Precompute embeddings for every surface and masked context in a corpus."""
    loaded = _require_corpus(corpus)

    def texts() -> Iterator[str]:
        seen: set[str] = set()
        for statement in loaded.statements:
            for annotation in statement.entities:
                if annotation.surface in seen:
                    continue
                seen.add(annotation.surface)
                yield annotation.surface
                for context in collect_contexts(
                    annotation.surface, loaded, max_contexts
                ):
                    yield context.masked_text

    with _open_encoder(encoder, dim) as provider:
        count = build_cache(provider, texts(), out)
    click.echo(f"wrote {count} entries to {out}")


@cli.command("train")
@_corpus_option
@_encoder_options
@_mode_option
@_max_contexts_option
@_train_options
@handle_errors
def cmd_train(config_path: Path | None, out: Path, **_flags) -> None:
    """Train a classifier on the full corpus and write model + loss trace."""
    values = _resolved(config_path, TRAIN_KEYS)
    corpus = load_corpus(values["corpus"])
    samples = corpus_samples(corpus)
    if not samples:
        raise click.ClickException("corpus has no annotated mentions to train on")
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", values)
    with _open_encoder(values["encoder"], values["dim"]) as encoder:
        featurizer = EntityPatternFeaturizer(
            encoder=encoder, mode=values["mode"], max_contexts=values["max_contexts"]
        ).fit(corpus)
        X = featurizer.transform([s.surface for s in samples])
    model, trace = train(X, [s.label for s in samples], _train_config(values))
    save_model(model, out / "model.json")
    _write_json(out / "loss_trace.json", {"epochs": len(trace), "loss": trace})
    click.echo(
        f"trained on {len(samples)} samples; final loss {trace[-1]:.6f}; "
        f"model written to {out / 'model.json'}"
    )


@cli.command("cv")
@_corpus_option
@click.option("--k", type=int, default=5, show_default=True, help="Number of folds.")
@click.option(
    "--group-surfaces/--no-group-surfaces",
    "group_surfaces",
    default=True,
    show_default=True,
    help="Keep samples sharing a surface form in one fold (leakage control).",
)
@_encoder_options
@_mode_option
@_max_contexts_option
@_train_options
@handle_errors
def cmd_cv(config_path: Path | None, out: Path, **_flags) -> None:
    """Cross-validate the pipeline and write report, confusion, and errors."""
    values = _resolved(config_path, CV_KEYS)
    corpus = load_corpus(values["corpus"])
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", values)
    with _open_encoder(values["encoder"], values["dim"]) as encoder:
        result = cross_validate(
            corpus,
            encoder,
            train_config=_train_config(values),
            k=values["k"],
            seed=values["seed"],
            mode=values["mode"],
            max_contexts=values["max_contexts"],
            group_by_surface=values["group_surfaces"],
        )
    _write_json(out / "report.json", result.to_dict())
    write_confusion_csv(result.pooled_confusion(), out / "confusion.csv")
    count = write_errors_jsonl(result.all_errors(), out / "errors.jsonl")
    for cls, row in result.mean_per_class.items():
        click.echo(f"{cls.value:<5} mean F1 {row.f1:.4f}")
    click.echo(f"W/AVG mean F1 {result.mean_weighted_f1:.4f}")
    click.echo(f"{count} misclassifications written to {out / 'errors.jsonl'}")


@cli.command("predict")
@click.option(
    "--model",
    "model_path",
    type=click.Path(path_type=Path),
    required=True,
    help="Model file written by the train command.",
)
@click.option("--surface", required=True, help="Entity surface form to classify.")
@_corpus_option
@_encoder_options
@_mode_option
@_max_contexts_option
@handle_errors
def cmd_predict(
    model_path: Path,
    surface: str,
    corpus: Path | None,
    encoder: str,
    dim: int | None,
    mode: str,
    max_contexts: int | None,
) -> None:
    """Featurize a surface against a corpus and print its predicted class."""
    mode = canonical_mode(mode)
    if corpus is None and mode == MODE_ENTITY_PATTERN:
        raise click.UsageError("--corpus is required in entity-pattern mode")
    model = load_model(model_path)
    loaded = load_corpus(corpus) if corpus is not None else None
    with _open_encoder(encoder, dim) as provider:
        featurizer = EntityPatternFeaturizer(
            encoder=provider, mode=mode, max_contexts=max_contexts
        ).fit(loaded)
        feature = featurizer.featurize(surface)
    predicted, probabilities = predict(model, feature)
    click.echo(
        json.dumps(
            {
                "surface": surface,
                "predicted": predicted.value,
                "probabilities": {
                    c.value: round(float(p), 6)
                    for c, p in zip(CLASS_ORDER, probabilities)
                },
                "context_count": feature.context_count,
            },
            ensure_ascii=False,
        )
    )


def main(argv=None) -> int:
    """Console-script entry point with the documented exit-code mapping."""
    try:
        result = cli.main(args=argv, prog_name="entpat", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except EntpatError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception:  # pragma: no cover - guard rail for unexpected bugs
        traceback.print_exc()
        return 2
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(main())
