"""Numeric containers, deterministic random streams, and binary file formats.

Parameter vectors and dense matrices are plain float64 numpy arrays; the
helpers here validate them and move them to/from the package's two binary
formats:

    MMPV: "MMPV" | u32 version (=1) | u64 dim | dim * float64 (LE)
    MMMX: "MMMX" | u32 version (=1) | u64 rows | u64 cols | row-major float64 (LE)

Roundtrips are bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError, NumericError

PVEC_MAGIC = b"MMPV"
MATRIX_MAGIC = b"MMMX"
FORMAT_VERSION = 1


def as_pvec(values, dim: int | None = None) -> np.ndarray:
    """Validate and return a parameter vector (1-D float64, finite)."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ConfigError(f"parameter vector must be 1-D, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ConfigError(f"expected dim {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise NumericError("parameter vector contains non-finite entries")
    return v


def as_matrix(values, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Validate and return a dense matrix (2-D float64, finite)."""
    m = np.ascontiguousarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise ConfigError(f"matrix must be 2-D, got shape {m.shape}")
    if rows is not None and m.shape[0] != rows:
        raise ConfigError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ConfigError(f"expected {cols} cols, got {m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix contains non-finite entries")
    return m


@dataclass(frozen=True)
class LowRankDelta:
    """Factored expert increment: delta = scale * left @ right.

    left is (d_out, r), right is (r, d_in), with r <= min(d_out, d_in).
    """

    left: np.ndarray
    right: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        left = as_matrix(self.left)
        right = as_matrix(self.right)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        if left.shape[1] != right.shape[0]:
            raise ConfigError(
                f"inner dimensions disagree: left is {left.shape}, right is {right.shape}"
            )
        r = left.shape[1]
        if r > min(left.shape[0], right.shape[1]):
            raise ConfigError(f"rank {r} exceeds min(d_out, d_in)")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.left.shape[0], self.right.shape[1])

    @property
    def rank(self) -> int:
        return self.left.shape[1]

    def dense(self) -> np.ndarray:
        return self.scale * (self.left @ self.right)


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream: (seed, stream_id) fully determines the draws.

    Distinct stream_ids are statistically independent (Philox keyed on both
    words), so Monte-Carlo loops can fan out over substreams without changing
    results.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) < 2**64):
                raise ConfigError(f"{name} must be a u64, got {v!r}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(key=[self.seed, self.stream_id]))

    def substream(self, offset: int) -> "RngStream":
        """Derived independent stream, for splitting work across workers."""
        return RngStream(self.seed, (self.stream_id + 1 + offset) % 2**64)


def gaussian_sample(stream: RngStream, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    """n i.i.d. normal draws, deterministic for a fixed stream."""
    if std < 0:
        raise ConfigError(f"std must be >= 0, got {std}")
    if n < 0:
        raise ConfigError(f"n must be >= 0, got {n}")
    if std == 0:
        return np.full(n, float(mean))
    return stream.generator().normal(mean, std, size=n)


def _read_exact(f, n: int, offset: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated file while reading {what}", offset + len(buf))
    return buf


def write_pvec(v: np.ndarray, path) -> None:
    v = as_pvec(v)
    with open(path, "wb") as f:
        f.write(PVEC_MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", v.shape[0]))
        f.write(v.astype("<f8").tobytes())


def read_pvec(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, 0, "magic")
        if magic != PVEC_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {PVEC_MAGIC!r}", 0)
        (version,) = struct.unpack("<I", _read_exact(f, 4, 4, "version"))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported MMPV version {version}", 4)
        (dim,) = struct.unpack("<Q", _read_exact(f, 8, 8, "dim"))
        payload = _read_exact(f, 8 * dim, 16, "payload")
        extra = f.read(1)
        if extra:
            raise FormatError("trailing bytes after payload", 16 + 8 * dim)
    return np.frombuffer(payload, dtype="<f8").astype(np.float64, copy=True)


def write_matrix(m: np.ndarray, path) -> None:
    m = as_matrix(m)
    with open(path, "wb") as f:
        f.write(MATRIX_MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<QQ", m.shape[0], m.shape[1]))
        f.write(np.ascontiguousarray(m, dtype="<f8").tobytes())


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, 0, "magic")
        if magic != MATRIX_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MATRIX_MAGIC!r}", 0)
        (version,) = struct.unpack("<I", _read_exact(f, 4, 4, "version"))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported MMMX version {version}", 4)
        rows, cols = struct.unpack("<QQ", _read_exact(f, 16, 8, "rows/cols"))
        payload = _read_exact(f, 8 * rows * cols, 24, "payload")
        extra = f.read(1)
        if extra:
            raise FormatError("trailing bytes after payload", 24 + 8 * rows * cols)
    return np.frombuffer(payload, dtype="<f8").astype(np.float64, copy=True).reshape(rows, cols)
