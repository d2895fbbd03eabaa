"""Periodic lattice discretization of L^2(R^n) and the Schroedinger representation.

The Hilbert space is C^D with D = N**n, indexed by position-lattice points in
C order (axis 0 slowest).  Frequencies use the symmetric set
{-N/2, ..., N/2 - 1} * (2*pi/L) stored in FFT order, so the Nyquist mode
carries -N/2.

Group elements act by

    rho(a, b, c) = exp(i c) exp(i b.Q) exp(i a.P) exp(i a.b / 2),

so t -> rho(t e_j, 0, 0) is generated by iP_j, t -> rho(0, t e_j, 0) by iQ_j
and t -> rho(0, 0, t) by iI.  With this convention the group law carries the
symmetric cocycle (a.b' - b.a') / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from heisenlab import kernels
from heisenlab.operators import Operator

DEFAULT_MAX_DIM = 4096


@dataclass(frozen=True)
class GridSpec:
    """Periodic lattice with `N` points per axis on a torus of side `L`."""

    n: int
    N: int
    L: float
    max_dim: int = field(default=DEFAULT_MAX_DIM, compare=False, repr=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"spatial dimension n must be a positive integer, got {self.n}")
        if int(self.N) != self.N or self.N < 2 or self.N % 2:
            raise ValueError(f"N must be a positive even integer, got {self.N}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"period L must be positive and finite, got {self.L}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))
        if self.dim > self.max_dim:
            raise ValueError(f"grid dimension N**n = {self.dim} exceeds the cap {self.max_dim}")

    @property
    def dim(self) -> int:
        return self.N**self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def dxi(self) -> float:
        return 2.0 * math.pi / self.L

    @property
    def xi_max(self) -> float:
        """Largest frequency magnitude on the lattice, pi*N/L."""
        return math.pi * self.N / self.L

    @cached_property
    def x(self) -> np.ndarray:
        """Position lattice along one axis, covering [-L/2, L/2)."""
        return -self.L / 2 + self.h * np.arange(self.N)

    @cached_property
    def freq_index(self) -> np.ndarray:
        """Integer frequency labels along one axis in FFT order."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(np.int64)

    @cached_property
    def xi(self) -> np.ndarray:
        return self.dxi * self.freq_index

    def coords(self, axis: int) -> np.ndarray:
        """Coordinate `axis` of every flattened position index (length D)."""
        return self._expand(self.x, axis)

    def wavenumbers(self, axis: int) -> np.ndarray:
        """Frequency along `axis` of every flattened frequency index (length D)."""
        return self._expand(self.xi, axis)

    def _expand(self, values: np.ndarray, axis: int) -> np.ndarray:
        self.check_axis(axis)
        shape = [1] * self.n
        shape[axis] = self.N
        return np.broadcast_to(values.reshape(shape), self.shape).ravel()

    def check_axis(self, axis: int) -> None:
        if not 0 <= axis < self.n:
            raise ValueError(f"axis {axis} out of range for n = {self.n}")

    def to_dict(self) -> dict:
        return {"n": self.n, "N": self.N, "L": self.L}


@dataclass(frozen=True)
class HeisenbergElement:
    """Element (a, b, c) of the (2n+1)-dimensional Heisenberg group."""

    a: tuple[float, ...]
    b: tuple[float, ...]
    c: float = 0.0

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.a))
        b = tuple(float(v) for v in np.atleast_1d(self.b))
        if len(a) != len(b):
            raise ValueError("translation and modulation parts must have equal length")
        if not all(math.isfinite(v) for v in (*a, *b, float(self.c))):
            raise ValueError("group element coordinates must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    @classmethod
    def identity(cls, n: int = 1) -> HeisenbergElement:
        return cls((0.0,) * n, (0.0,) * n, 0.0)

    @property
    def n(self) -> int:
        return len(self.a)

    def __mul__(self, other: HeisenbergElement) -> HeisenbergElement:
        return heisenberg_mul(self, other)


def heisenberg_mul(g1: HeisenbergElement, g2: HeisenbergElement) -> HeisenbergElement:
    a1, b1, a2, b2 = map(np.asarray, (g1.a, g1.b, g2.a, g2.b))
    if a1.shape != a2.shape:
        raise ValueError("group elements of different dimension")
    c = g1.c + g2.c + 0.5 * (a1 @ b2 - b1 @ a2)
    return HeisenbergElement(tuple(a1 + a2), tuple(b1 + b2), float(c))


def heisenberg_inv(g: HeisenbergElement) -> HeisenbergElement:
    return HeisenbergElement(tuple(-v for v in g.a), tuple(-v for v in g.b), -g.c)


def one_parameter(n: int, index: int, t: float) -> HeisenbergElement:
    """exp_G(t X_index) for the basis (P_1..P_n, Q_1..Q_n, I)."""
    m = 2 * n + 1
    if not 0 <= index < m:
        raise ValueError(f"generator index {index} out of range for m = {m}")
    a = [0.0] * n
    b = [0.0] * n
    c = 0.0
    if index < n:
        a[index] = t
    elif index < 2 * n:
        b[index - n] = t
    else:
        c = t
    return HeisenbergElement(tuple(a), tuple(b), c)


def _check_element(grid: GridSpec, g: HeisenbergElement) -> None:
    if g.n != grid.n:
        raise ValueError(f"group element of dimension {g.n} on a grid with n = {grid.n}")


def _translation_phase(grid: GridSpec, a) -> np.ndarray:
    phase = np.zeros(grid.dim)
    for axis, aj in enumerate(a):
        if aj:
            phase += aj * grid.wavenumbers(axis)
    return np.exp(1j * phase)


def _modulation_phase(grid: GridSpec, b) -> np.ndarray:
    phase = np.zeros(grid.dim)
    for axis, bj in enumerate(b):
        if bj:
            phase += bj * grid.coords(axis)
    return np.exp(1j * phase)


def build_position(grid: GridSpec, axis: int = 0) -> Operator:
    grid.check_axis(axis)
    return Operator(np.diag(grid.coords(axis)).astype(complex), grid, f"Q[{axis}]")


def build_momentum(grid: GridSpec, axis: int = 0) -> Operator:
    """Spectral derivative -i d/dx_axis, Hermitian by construction."""
    grid.check_axis(axis)
    P = kernels.from_freq(np.diag(grid.wavenumbers(axis)).astype(complex), grid.shape)
    P = 0.5 * (P + P.conj().T)
    return Operator(P, grid, f"P[{axis}]")


def rho_unitary(grid: GridSpec, g: HeisenbergElement) -> Operator:
    _check_element(grid, g)
    a, b = np.asarray(g.a), np.asarray(g.b)
    T = kernels.from_freq(np.diag(_translation_phase(grid, a)), grid.shape)
    U = _modulation_phase(grid, b)[:, None] * T
    U *= np.exp(1j * (g.c + 0.5 * float(a @ b)))
    return Operator(U, grid, f"rho{(g.a, g.b, g.c)}")


def conj_array(grid: GridSpec, g: HeisenbergElement, Y: np.ndarray) -> np.ndarray:
    """rho(g) Y rho(g)^-1 on a raw array; the central coordinate drops out."""
    _check_element(grid, g)
    out = Y
    if any(g.a):
        u = _translation_phase(grid, g.a)
        Yf = kernels.to_freq(out, grid.shape)
        Yf *= u[:, None]
        Yf *= u.conj()[None, :]
        out = kernels.from_freq(Yf, grid.shape)
    if any(g.b):
        v = _modulation_phase(grid, g.b)
        out = out * (v[:, None] * v.conj()[None, :])
    if out is Y:
        out = Y.copy()
    return out


def conj_action(grid: GridSpec, g: HeisenbergElement, Y: Operator) -> Operator:
    if Y.dim != grid.dim:
        raise ValueError(f"operator of dimension {Y.dim} on a grid of dimension {grid.dim}")
    return Operator(conj_array(grid, g, Y.entries), grid, Y.label)


class GeneratorSet:
    """Skew-Hermitian generators iP_1..iP_n, iQ_1..iQ_n, iI of the representation.

    Dense matrices are built lazily; `ad` applies [generator, Y] in the
    generator's eigenbasis, which is how every pipeline evaluates brackets.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.m = 2 * grid.n + 1
        self._ops = None

    @property
    def ops(self) -> list[Operator]:
        if self._ops is None:
            g = self.grid
            ops = [Operator(1j * build_momentum(g, j).entries, g, f"iP[{j}]") for j in range(g.n)]
            ops += [Operator(1j * build_position(g, j).entries, g, f"iQ[{j}]") for j in range(g.n)]
            ops.append(Operator(1j * np.eye(g.dim), g, "iI"))
            self._ops = ops
        return self._ops

    def __len__(self) -> int:
        return self.m

    def __getitem__(self, index: int) -> Operator:
        return self.ops[index]

    def name(self, index: int) -> str:
        n = self.grid.n
        if index < n:
            return f"iP{index + 1}" if n > 1 else "iP"
        if index < 2 * n:
            return f"iQ{index - n + 1}" if n > 1 else "iQ"
        return "iI"

    @property
    def noncentral(self) -> tuple[int, ...]:
        return tuple(range(2 * self.grid.n))

    def ad(self, index: int, Y: np.ndarray) -> np.ndarray:
        """[X_index, Y] for a raw array Y."""
        g = self.grid
        if not 0 <= index < self.m:
            raise IndexError(f"generator index {index} out of range for m = {self.m}")
        if index < g.n:
            w = g.wavenumbers(index)
            Yf = kernels.to_freq(Y, g.shape)
            Yf *= 1j * (w[:, None] - w[None, :])
            return kernels.from_freq(Yf, g.shape)
        if index < 2 * g.n:
            x = g.coords(index - g.n)
            return 1j * (x[:, None] - x[None, :]) * Y
        return np.zeros_like(Y)


def build_generators(grid: GridSpec) -> GeneratorSet:
    return GeneratorSet(grid)
