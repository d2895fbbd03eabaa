"""Smooth phase-space window used for every norm taken in a refinement study.

Bracketing a lattice operator with the discrete iP or iQ picks up
wrap-around terms at the frequency edge and at the position edge of the torus.
Those terms have nothing to do with the continuum operator and grow like N, so
norms are measured on  W C W^*  with  W = chi_xi(P) chi_x(Q).  Both cutoffs
equal 1 on the inner quarter of their range and vanish at half of it, so two
points inside the window are never further apart than half the torus (or half
the frequency band) and conjugation cannot alias between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from heisenlab import kernels
from heisenlab.operators import SVD_DIM_LIMIT, schatten_index


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        f1 = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return f0 / (f0 + f1)


def plateau(u, flat, cut):
    """1 for |u| <= flat, 0 for |u| >= cut, smooth in between."""
    return smooth_step((cut - np.abs(u)) / (cut - flat))


@dataclass(frozen=True)
class PhaseWindow:
    """Window flat on |x| <= flat*L/2, |xi| <= flat*xi_max and zero beyond cut."""

    grid: object
    flat: float = 0.25
    cut: float = 0.5

    def __post_init__(self):
        if not 0 < self.flat < self.cut <= 1:
            raise ValueError("window fractions must satisfy 0 < flat < cut <= 1")

    @cached_property
    def position(self) -> np.ndarray:
        g = self.grid
        half = g.L / 2
        w = np.ones(g.dim)
        for axis in range(g.n):
            w *= plateau(g.coords(axis), self.flat * half, self.cut * half)
        return w

    @cached_property
    def frequency(self) -> np.ndarray:
        g = self.grid
        w = np.ones(g.dim)
        for axis in range(g.n):
            w *= plateau(g.wavenumbers(axis), self.flat * g.xi_max, self.cut * g.xi_max)
        return w

    @cached_property
    def support(self) -> np.ndarray:
        """Frequency indices where the window does not vanish."""
        return np.flatnonzero(self.frequency > 0)

    def compress(self, C) -> np.ndarray:
        """W C W^* in the frequency basis, cropped to the window support.

        Cropping drops rows and columns that are identically zero, so the
        singular values (hence every Schatten norm) are unchanged.
        """
        cx = self.position
        A = C * (cx[:, None] * cx[None, :])
        A = kernels.to_freq(A, self.grid.shape)
        idx = self.support
        cf = self.frequency[idx]
        return A[np.ix_(idx, idx)] * (cf[:, None] * cf[None, :])

    def apply(self, v) -> np.ndarray:
        """W v in the position basis."""
        shape = self.grid.shape
        vf = kernels.vec_to_freq(np.asarray(v) * self.position, shape)
        return kernels.vec_from_freq(vf * self.frequency, shape)

    def apply_adjoint(self, v) -> np.ndarray:
        """W^* v in the position basis."""
        shape = self.grid.shape
        vf = kernels.vec_to_freq(v, shape) * self.frequency
        return kernels.vec_from_freq(vf, shape) * self.position

    def norms(self, C, qs) -> dict:
        """Windowed Schatten norms of C for each exponent in `qs`."""
        return compressed_norms(self.compress(C), qs)

    def norm(self, C, q=math.inf) -> float:
        q = schatten_index(q)
        return self.norms(C, [q])[q]

    def adjoint_probes(self, probes) -> np.ndarray:
        """Columns W^* v for each probe v."""
        return np.column_stack([self.apply_adjoint(v) for v in probes])

    def strong_image(self, C, V) -> np.ndarray:
        """Columns W C W^* v, given ``V = adjoint_probes(probes)``."""
        cols = np.asarray(C) @ V
        return np.column_stack([self.apply(c) for c in cols.T])

    def strong(self, C, probes) -> float:
        """max over unit probes v of |W C W^* v|, bounded by the windowed operator norm."""
        if len(probes) == 0:
            return 0.0
        return image_size(self.strong_image(C, self.adjoint_probes(probes)))


def image_size(S) -> float:
    return float(np.linalg.norm(S, axis=0).max()) if S.size else 0.0


def compressed_norms(A, qs) -> dict:
    """Schatten norms of an already compressed matrix; one SVD serves every q."""
    qs = [schatten_index(q) for q in qs]
    if all(q == 2 for q in qs):
        return {q: float(np.linalg.norm(A)) for q in qs}
    if all(math.isinf(q) for q in qs) and A.shape[0] > SVD_DIM_LIMIT:
        val = kernels.spectral_norm_power(A)
        return {q: val for q in qs}
    s = kernels.singular_values(A)
    return {q: kernels.schatten_from_sv(s, q) for q in qs}
