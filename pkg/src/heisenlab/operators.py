"""Dense operators on the lattice Hilbert space, Schatten norms and brackets."""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from heisenlab import kernels

#: Above this dimension the operator norm falls back to power iteration.
SVD_DIM_LIMIT = 1024

_MAGIC = b"HLOP"
_VERSION = 1
_HEADER = struct.Struct("<4sIQ")


@dataclass(frozen=True, eq=False)
class Operator:
    """Immutable square complex matrix, optionally tied to a grid.

    Parameters
    ----------
    entries : array_like
        Square matrix; copied into a read-only ``complex128`` array.
    grid : GridSpec, optional
        Grid whose dimension must match the matrix.
    label : str
        Free-form provenance string.
    """

    entries: np.ndarray
    grid: object = None
    label: str = ""

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.complex128, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"operator must be a square matrix, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("operator entries must be finite")
        if self.grid is not None and arr.shape[0] != self.grid.dim:
            raise ValueError(
                f"matrix dimension {arr.shape[0]} does not match grid dimension {self.grid.dim}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def with_entries(self, entries, label=None) -> Operator:
        return Operator(entries, self.grid, self.label if label is None else label)

    def __add__(self, other):
        _check_same_dim(self, other)
        return self.with_entries(self.entries + other.entries)

    def __sub__(self, other):
        _check_same_dim(self, other)
        return self.with_entries(self.entries - other.entries)

    def __mul__(self, scalar):
        return self.with_entries(self.entries * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        _check_same_dim(self, other)
        return self.with_entries(self.entries @ other.entries)

    @property
    def H(self) -> Operator:
        return self.with_entries(self.entries.conj().T)


def _check_same_dim(A: Operator, B: Operator) -> None:
    if A.dim != B.dim:
        raise ValueError(f"dimension mismatch: {A.dim} vs {B.dim}")


def schatten_index(q) -> float:
    """Validate a Schatten exponent; returns a float with ``inf`` for the operator norm."""
    if isinstance(q, str):
        q = math.inf if q.strip().lower() in ("inf", "infinity", "∞") else float(q)
    q = float(q)
    if math.isnan(q) or q < 1:
        raise ValueError(f"Schatten index must satisfy q >= 1 or q = inf, got {q}")
    return q


def conjugate_index(q) -> float:
    q = schatten_index(q)
    if q == 1:
        return math.inf
    if math.isinf(q):
        return 1.0
    return q / (q - 1.0)


def schatten_norm(Y, q) -> float:
    r"""Schatten norm :math:`(\sum_i \sigma_i^q)^{1/q}`, the largest singular value for q = inf."""
    q = schatten_index(q)
    A = Y.entries if isinstance(Y, Operator) else np.asarray(Y, dtype=complex)
    if not np.isfinite(A).all():
        raise ValueError("operator entries must be finite")
    if math.isinf(q) and A.shape[0] > SVD_DIM_LIMIT:
        return kernels.spectral_norm_power(A)
    return kernels.schatten_from_sv(kernels.singular_values(A), q)


def duality_pairing(Y: Operator, V: Operator) -> complex:
    """Trace pairing Tr(YV)."""
    _check_same_dim(Y, V)
    return complex(np.einsum("ij,ji->", Y.entries, V.entries))


def commutator(A: Operator, B: Operator) -> Operator:
    _check_same_dim(A, B)
    return B.with_entries(A.entries @ B.entries - B.entries @ A.entries)


def iterated_commutator(generators, word, Y: Operator) -> Operator:
    """Nested bracket [X_{j1}, [X_{j2}, ... [X_{jk}, Y] ... ]].

    `word` holds 0-based generator indices; the innermost bracket uses the
    last index.  `generators` is either a sequence of Operators or a
    GeneratorSet, in which case brackets are applied in the eigenbasis of each
    generator rather than by dense products.
    """
    word = tuple(int(j) for j in word)
    m = len(generators)
    for j in word:
        if not 0 <= j < m:
            raise IndexError(f"word index {j} outside generator range 0..{m - 1}")
    fast = getattr(generators, "ad", None)
    out = Y.entries
    for j in reversed(word):
        if fast is not None:
            out = fast(j, out)
        else:
            G = generators[j].entries
            if G.shape != out.shape:
                raise ValueError("generator and operator dimensions differ")
            out = G @ out - out @ G
    return Y.with_entries(out)


def to_bytes(Y: Operator) -> bytes:
    """Flat container: magic ``HLOP``, uint32 version, uint64 dimension, row-major complex128 (LE)."""
    data = np.ascontiguousarray(Y.entries, dtype="<c16")
    return _HEADER.pack(_MAGIC, _VERSION, Y.dim) + data.tobytes(order="C")


def from_bytes(blob: bytes, grid=None, label: str = "") -> Operator:
    if len(blob) < _HEADER.size:
        raise ValueError("truncated operator container")
    magic, version, dim = _HEADER.unpack_from(blob)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("not an operator container (bad magic or version)")
    expected = _HEADER.size + 16 * dim * dim
    if len(blob) != expected:
        raise ValueError(f"container length {len(blob)} does not match dimension {dim}")
    arr = np.frombuffer(blob, dtype="<c16", offset=_HEADER.size).reshape(dim, dim)
    return Operator(arr, grid, label)


def save(Y: Operator, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(Y))


def load(path, grid=None, label: str = "") -> Operator:
    with open(path, "rb") as fh:
        return from_bytes(fh.read(), grid, label)


def to_json(Y: Operator) -> str:
    doc = {
        "dim": Y.dim,
        "label": Y.label,
        "grid": Y.grid.to_dict() if Y.grid is not None else None,
        "re": Y.entries.real.tolist(),
        "im": Y.entries.imag.tolist(),
    }
    return json.dumps(doc, sort_keys=True)


def from_json(text: str) -> Operator:
    doc = json.loads(text)
    arr = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
    if arr.shape != (doc["dim"], doc["dim"]):
        raise ValueError("JSON operator shape does not match its dimension field")
    grid = None
    if doc.get("grid"):
        from heisenlab.grid import GridSpec

        grid = GridSpec(**doc["grid"])
    return Operator(arr, grid, doc.get("label", ""))
