"""Text-to-vector providers behind a uniform, deterministic interface.

Three provider kinds exist:

* ``test-hash`` -- a seeded hash projection used in tests and examples.  No
  model, no I/O, fully deterministic across platforms.
* ``cache-file`` -- precomputed vectors from a JSON Lines cache keyed by the
  SHA-256 of the text:
  ``{"key": "<hex sha-256>", "text": "...", "vector": [...]}``.
* ``external-adapter`` -- a subprocess speaking line-delimited JSON over
  stdin/stdout: request ``{"text": ...}``, response ``{"vector": [...]}``.
  This keeps neural runtimes out of process; encoders are consumed here,
  never trained.

All providers are read-only after construction and must return the same
vector for the same text every time.  No normalization is applied; consumers
decide what to do with raw vectors.
"""

from __future__ import annotations

import hashlib
import json
import shlex
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import AdapterFailureError, CacheMissError, EncoderError

KIND_TEST_HASH = "test-hash"
KIND_CACHE_FILE = "cache-file"
KIND_EXTERNAL_ADAPTER = "external-adapter"

DEFAULT_DIM = 64


def text_key(text: str) -> str:
    """Content-address a text: hex SHA-256 of its UTF-8 bytes."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EncoderSpec:
    """Declarative description of an embedding provider.

    ``dim`` may be None for cache files, whose dimension is inferred from
    the file itself.
    """

    kind: str
    dim: int | None = None
    source: str | None = None

    def __post_init__(self):
        if self.kind not in (KIND_TEST_HASH, KIND_CACHE_FILE, KIND_EXTERNAL_ADAPTER):
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.dim is not None and self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if self.kind in (KIND_CACHE_FILE, KIND_EXTERNAL_ADAPTER) and not self.source:
            raise ValueError(f"encoder kind {self.kind!r} requires a source")
        if self.kind == KIND_EXTERNAL_ADAPTER and self.dim is None:
            raise ValueError("external-adapter requires an explicit dim")

    @classmethod
    def parse(cls, flag: str, dim: int | None = None) -> "EncoderSpec":
        """Parse a CLI-style flag: ``test-hash``, ``cache:<path>``, ``adapter:<cmd>``."""
        if flag == KIND_TEST_HASH:
            return cls(kind=KIND_TEST_HASH, dim=dim if dim is not None else DEFAULT_DIM)
        if flag.startswith("cache:"):
            return cls(kind=KIND_CACHE_FILE, dim=dim, source=flag[len("cache:"):])
        if flag.startswith("adapter:"):
            return cls(
                kind=KIND_EXTERNAL_ADAPTER,
                dim=dim if dim is not None else DEFAULT_DIM,
                source=flag[len("adapter:"):],
            )
        raise ValueError(
            f"unrecognized encoder flag {flag!r}; "
            "expected test-hash, cache:<path>, or adapter:<command>"
        )


class Encoder:
    """Base class for embedding providers: text -> fixed-dimension vector."""

    dim: int

    def encode(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def encode_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        """Encode texts in order; element-wise equal to mapping :meth:`encode`.

        The first failing element aborts the batch; the raised error carries
        the offending position in its ``batch_index`` attribute.
        """
        vectors = []
        for index, text in enumerate(texts):
            try:
                vectors.append(self.encode(text))
            except EncoderError as exc:
                exc.batch_index = index
                raise
        return vectors


class HashEncoder(Encoder):
    """Deterministic pseudo-random projection of a text digest.

    Each text is hashed (SHA-256, mixed with the seed) and the digest is
    expanded counter-mode into ``dim`` floats in [-1, 1).  Identical texts
    give bitwise-identical vectors on every platform; distinct short strings
    collide only if SHA-256 does.
    """

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0):
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        self.dim = dim
        self.seed = seed

    def encode(self, text: str) -> np.ndarray:
        base = hashlib.sha256(f"{self.seed}\x1f{text}".encode("utf-8")).digest()
        raw = bytearray()
        counter = 0
        while len(raw) < self.dim * 8:
            block = hashlib.sha256(base + counter.to_bytes(4, "big")).digest()
            raw.extend(block)
            counter += 1
        ints = np.frombuffer(bytes(raw[: self.dim * 8]), dtype=">u8")
        return ints.astype(np.float64) / 2.0**63 - 1.0


class CacheEncoder(Encoder):
    """Serve precomputed vectors from a JSON Lines cache file.

    The whole file is loaded at construction.  Duplicate keys, keys that do
    not hash their own text, inconsistent dimensions, and non-finite values
    are all rejected.  Unknown texts raise :class:`CacheMissError`.
    """

    def __init__(self, path: str | Path, dim: int | None = None):
        self.path = Path(path)
        self._vectors: dict[str, np.ndarray] = {}
        inferred: int | None = None
        with self.path.open("r", encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise EncoderError(
                        f"{self.path}: line {line_no}: invalid JSON: {exc.msg}"
                    ) from None
                try:
                    key, text, values = entry["key"], entry["text"], entry["vector"]
                except (TypeError, KeyError):
                    raise EncoderError(
                        f"{self.path}: line {line_no}: entry needs key/text/vector"
                    ) from None
                if key != text_key(text):
                    raise EncoderError(
                        f"{self.path}: line {line_no}: key does not match text hash"
                    )
                if key in self._vectors:
                    raise EncoderError(
                        f"{self.path}: line {line_no}: duplicate key {key}"
                    )
                vector = np.asarray(values, dtype=np.float64)
                if vector.ndim != 1 or not np.all(np.isfinite(vector)):
                    raise EncoderError(
                        f"{self.path}: line {line_no}: vector must be a finite 1-D list"
                    )
                if inferred is None:
                    inferred = len(vector)
                elif len(vector) != inferred:
                    raise EncoderError(
                        f"{self.path}: line {line_no}: vector length {len(vector)} "
                        f"!= {inferred}"
                    )
                vector.flags.writeable = False
                self._vectors[key] = vector
        if dim is None:
            if inferred is None:
                raise EncoderError(f"{self.path}: cache is empty and no dim was given")
            dim = inferred
        elif inferred is not None and inferred != dim:
            raise EncoderError(
                f"{self.path}: cache dimension {inferred} != requested dim {dim}"
            )
        self.dim = dim

    def __len__(self) -> int:
        return len(self._vectors)

    def encode(self, text: str) -> np.ndarray:
        key = text_key(text)
        try:
            return self._vectors[key]
        except KeyError:
            raise CacheMissError(key) from None


class SubprocessEncoder(Encoder):
    """Drive an out-of-process encoder over line-delimited JSON.

    The subprocess is started lazily and kept alive; requests are
    serialized under a lock.  Any protocol violation (process exit, bad
    JSON, wrong dimension, non-finite values) raises
    :class:`AdapterFailureError`.
    """

    def __init__(self, command: str, dim: int):
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        self.command = command
        self.dim = dim
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    shlex.split(self.command),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise AdapterFailureError(
                    f"could not start adapter {self.command!r}: {exc}"
                ) from exc
        return self._proc

    def encode(self, text: str) -> np.ndarray:
        with self._lock:
            proc = self._ensure_started()
            try:
                proc.stdin.write(json.dumps({"text": text}) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise AdapterFailureError(f"adapter pipe failed: {exc}") from exc
            if not line:
                raise AdapterFailureError(
                    f"adapter closed its output (exit code {proc.poll()})"
                )
            try:
                response = json.loads(line)
                values = response["vector"]
            except (json.JSONDecodeError, TypeError, KeyError):
                raise AdapterFailureError(
                    f"adapter response is not a vector object: {line!r}"
                ) from None
            vector = np.asarray(values, dtype=np.float64)
            if vector.shape != (self.dim,):
                raise AdapterFailureError(
                    f"adapter returned {vector.shape} values, expected ({self.dim},)"
                )
            if not np.all(np.isfinite(vector)):
                raise AdapterFailureError("adapter returned non-finite values")
            return vector

    def close(self):
        if self._proc is not None:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.terminate()
            self._proc.wait(timeout=5)
            self._proc = None

    def __enter__(self) -> "SubprocessEncoder":
        return self

    def __exit__(self, *exc_info):
        self.close()


def build_encoder(spec: EncoderSpec) -> Encoder:
    """Construct the provider described by a spec."""
    if spec.kind == KIND_TEST_HASH:
        return HashEncoder(dim=spec.dim if spec.dim is not None else DEFAULT_DIM)
    if spec.kind == KIND_CACHE_FILE:
        return CacheEncoder(spec.source, dim=spec.dim)
    return SubprocessEncoder(spec.source, dim=spec.dim)


def build_cache(encoder: Encoder, texts: Iterable[str], out: str | Path) -> int:
    """Precompute vectors for texts into a cache file; returns entries written.

    Texts are deduplicated by content key in first-seen order, so re-running
    with the same inputs produces byte-identical output.
    """
    unique: dict[str, str] = {}
    for text in texts:
        unique.setdefault(text_key(text), text)
    out = Path(out)
    with out.open("w", encoding="utf-8") as handle:
        for key, text in unique.items():
            vector = encoder.encode(text)
            entry = {"key": key, "text": text, "vector": [float(v) for v in vector]}
            handle.write(json.dumps(entry, ensure_ascii=False))
            handle.write("\n")
    return len(unique)
