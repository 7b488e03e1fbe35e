"""Dense matrix helpers, seeded RNG streams, and matrix serialization.

Matrices are plain 2-D float64 numpy arrays in row-major order. Everything
here is a thin, validated layer over numpy so the rest of the package can
share one set of conventions (finiteness checks, the zero-vector cosine
convention, reproducible random streams, and the on-disk formats).
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

Matrix = np.ndarray

BINARY_MAGIC = b"PHNM"


class ShapeError(ValueError):
    """Operands have incompatible or invalid shapes."""


class ValidationError(ValueError):
    """Input values violate a documented precondition."""


class ZeroVectorWarning(UserWarning):
    """A zero vector was met where a direction was expected; cosine is 0."""


def as_matrix(values, name: str = "matrix") -> Matrix:
    """Coerce to a C-contiguous 2-D float64 array, rejecting NaN/Inf."""
    a = np.ascontiguousarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"{name} must be non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return a


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float64 array, rejecting NaN/Inf."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return v


def matmul(a, b) -> Matrix:
    """Matrix product, with an explicit error on mismatched inner dimensions."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul: inner dimensions differ, {a.shape} x {b.shape}"
        )
    return a @ b


def frobenius_norm(a) -> float:
    """sqrt of the sum of squared entries."""
    a = as_matrix(a)
    return float(np.sqrt(np.vdot(a, a)))


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between two vectors, clipped to [-1, 1].

    A zero vector has no direction; by convention the result is 0.0 and a
    ZeroVectorWarning is emitted so degenerate factor rows do not abort
    model selection.
    """
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.shape[0] != v.shape[0]:
        raise ShapeError(f"cosine: length mismatch {u.shape[0]} vs {v.shape[0]}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        warnings.warn("cosine_similarity of a zero vector is 0", ZeroVectorWarning)
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def cosine_matrix(a: Matrix, b: Matrix) -> Matrix:
    """Pairwise row cosines between two matrices with equal column counts.

    Zero rows contribute 0 cosines (one ZeroVectorWarning per call).
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"cosine_matrix: column counts differ {a.shape} vs {b.shape}")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0.0) or np.any(nb == 0.0):
        warnings.warn("cosine similarities with zero rows set to 0", ZeroVectorWarning)
    denom = np.outer(np.where(na == 0.0, 1.0, na), np.where(nb == 0.0, 1.0, nb))
    c = (a @ b.T) / denom
    c[na == 0.0, :] = 0.0
    c[:, nb == 0.0] = 0.0
    return np.clip(c, -1.0, 1.0)


# ---------------------------------------------------------------------------
# Reproducible random streams

_UINT64 = 2**64


@dataclass(frozen=True)
class SeededRng:
    """A named random stream: (master_seed, stream_id) fixes the sequence.

    Streams with distinct ids are statistically independent. The underlying
    generator is counter-based (Philox), so replicated experiments can fan
    out over ids and still rerun bit-identically in any order.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not (0 <= int(self.master_seed) < _UINT64):
            raise ValidationError("master_seed must fit in an unsigned 64-bit int")
        if int(self.stream_id) < 0:
            raise ValidationError("stream_id must be non-negative")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(seq))

    def stream(self, index: int) -> "SeededRng":
        """Derive an independent child stream from this one."""
        return SeededRng(derive_seed(self.master_seed, self.stream_id, index))


def derive_seed(base_seed: int, *path: int) -> int:
    """Map (base_seed, path of indices) to a stable 64-bit seed."""
    if not (0 <= int(base_seed) < _UINT64):
        raise ValidationError("base_seed must fit in an unsigned 64-bit int")
    seq = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Serialization

def save_matrix_csv(x, path) -> None:
    """Write one row per line, comma-separated, '.' decimal, no header.

    Floats use shortest round-trip formatting, so load_matrix_csv restores
    the exact float64 entries. All-integer matrices are written as integer
    tokens.
    """
    a = as_matrix(x)
    integral = bool(np.all(a == np.trunc(a)) and np.all(np.abs(a) < 2**53))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        if integral:
            for row in a:
                fh.write(",".join(str(int(v)) for v in row))
                fh.write("\n")
        else:
            for row in a:
                fh.write(",".join(repr(float(v)) for v in row))
                fh.write("\n")


def load_matrix_csv(path) -> Matrix:
    """Inverse of save_matrix_csv."""
    a = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return as_matrix(a, f"matrix from {path}")


def save_matrix_bin(x, path) -> None:
    """Raw binary form: magic 'PHNM', u64 rows, u64 cols, little-endian f64."""
    a = as_matrix(x)
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<QQ", a.shape[0], a.shape[1]))
        fh.write(a.astype("<f8", copy=False).tobytes(order="C"))


def load_matrix_bin(path) -> Matrix:
    """Inverse of save_matrix_bin; validates magic bytes and payload size."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != BINARY_MAGIC:
        raise ValidationError(f"{path}: bad magic bytes, not a matrix file")
    if len(blob) < 20:
        raise ValidationError(f"{path}: truncated header")
    rows, cols = struct.unpack("<QQ", blob[4:20])
    expected = 20 + 8 * rows * cols
    if len(blob) != expected:
        raise ValidationError(
            f"{path}: payload is {len(blob)} bytes, expected {expected}"
        )
    data = np.frombuffer(blob, dtype="<f8", offset=20).reshape(rows, cols)
    return as_matrix(data, f"matrix from {path}")
