"""Garding smoothing: mollified averages of the conjugation orbit.

Y_eps = sum_i w_i rho(g_i) Y rho(g_i)^-1 over nodes g_i of the (a, b) chart,
with a Gaussian kernel of width eps, tapered smoothly to zero between radius
3 eps and the cutoff 4 eps so that it is C-infinity with compact support.
The central coordinate is left out since it acts trivially.

Two quadratures are offered.  "lattice" (the default) puts a node on every
lattice translation and modulation in the ball; the average is then a Fourier
multiplier on the displacement coefficients and converges to the continuum
convolution as N grows.  "gauss-legendre" uses a tensor rule with a fixed
node count per axis; it is exact for smooth orbits but a finite sum of
translates of a kinked function is still kinked, so it does not smooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from heisenlab.criterion import ck_scores
from heisenlab.fitting import FAIL, PASS, Thresholds
from heisenlab.grid import HeisenbergElement, conj_array
from heisenlab.operators import Operator, schatten_index, schatten_norm
from heisenlab.orbit import q_key
from heisenlab.weyl import operator_coefficients, operator_from_coefficients
from heisenlab.window import plateau

METHODS = ("lattice", "gauss-legendre")


@dataclass(frozen=True)
class Mollifier:
    """Gaussian exp(-|z|^2 / (2 eps^2)), z = (a, b), tapered to zero at `radius`.

    Parameters
    ----------
    eps : float
        Kernel width.
    radius : float, optional
        Cutoff; defaults to 4 * eps.
    nodes : int
        Gauss-Legendre nodes per axis (ignored by the lattice rule).
    method : {"lattice", "gauss-legendre"}
    """

    eps: float
    radius: float | None = None
    nodes: int = 9
    method: str = "lattice"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("mollifier width must be positive")
        if self.radius is None:
            object.__setattr__(self, "radius", 4.0 * self.eps)
        if not self.radius > 0:
            raise ValueError("mollifier radius must be positive")
        if self.nodes < 1:
            raise ValueError("need at least one node per axis")
        if self.method not in METHODS:
            raise ValueError(f"unknown quadrature {self.method!r}; choose from {METHODS}")

    def kernel(self, z2):
        z2 = np.asarray(z2, dtype=float)
        taper = plateau(np.sqrt(z2), 0.75 * self.radius, self.radius)
        return np.exp(-0.5 * z2 / self.eps**2) * taper

    def lattice_weights(self, grid) -> np.ndarray:
        """Weights over (s_1..s_n, r_1..r_n) mod N, FFT-ordered labels.

        Node (s, r) is the translation s*h and the modulation r*2pi/L; nodes
        that wrap around the torus are folded onto their residue.
        """
        n, N = grid.n, grid.N
        S = int(math.floor(self.radius / grid.h))
        Rr = int(math.floor(self.radius / grid.dxi))
        axes = [np.arange(-S, S + 1) * grid.h] * n + [np.arange(-Rr, Rr + 1) * grid.dxi] * n
        mesh = np.meshgrid(*axes, indexing="ij")
        w = self.kernel(sum(m**2 for m in mesh))
        labels = [np.arange(-S, S + 1) % N] * n + [np.arange(-Rr, Rr + 1) % N] * n
        idx = np.meshgrid(*labels, indexing="ij")
        W = np.zeros((N,) * (2 * n))
        np.add.at(W, tuple(i.ravel() for i in idx), w.ravel())
        return W / W.sum()

    def gauss_legendre(self, n: int):
        """(elements, weights) of the tensor rule on [-R, R]^(2n), kernel folded in."""
        t, wt = np.polynomial.legendre.leggauss(self.nodes)
        t, wt = t * self.radius, wt * self.radius
        pts = np.array(np.meshgrid(*[t] * (2 * n), indexing="ij")).reshape(2 * n, -1).T
        wts = np.prod(np.array(np.meshgrid(*[wt] * (2 * n), indexing="ij")).reshape(2 * n, -1), axis=0)
        wts = wts * self.kernel(np.sum(pts**2, axis=1))
        keep = wts > 0
        pts, wts = pts[keep], wts[keep]
        elements = [HeisenbergElement(tuple(p[:n]), tuple(p[n:]), 0.0) for p in pts]
        return elements, wts / wts.sum()

    def to_dict(self) -> dict:
        return {"eps": self.eps, "radius": self.radius, "nodes": self.nodes, "method": self.method}


def lattice_multiplier(grid, f: Mollifier) -> np.ndarray:
    """Factor applied to displacement coefficient (l, k) by the lattice average."""
    W = f.lattice_weights(grid)
    return np.real(sfft.ifftn(W)) * grid.N ** (2 * grid.n)


def garding_average(Y: Operator, f: Mollifier) -> Operator:
    """Quadrature of the mollified orbit integral; same grid and dimension as Y."""
    grid = Y.grid
    if grid is None:
        raise ValueError("garding_average needs an operator with a grid")
    if f.method == "lattice":
        coef = operator_coefficients(Y.entries, grid) * lattice_multiplier(grid, f)
        out = operator_from_coefficients(coef, grid)
    else:
        elements, weights = f.gauss_legendre(grid.n)
        out = np.zeros_like(Y.entries)
        for g, w in zip(elements, weights):
            out += w * conj_array(grid, g, Y.entries)
    return Y.with_entries(out, f"garding({Y.label},eps={f.eps:g})")


DEFAULT_WIDTHS = (0.5, 0.25, 0.1)
DENSITY_GRIDS = (64, 128, 256, 512)


def density_study(family, q=math.inf, widths=DEFAULT_WIDTHS, grids=DENSITY_GRIDS, k_max: int = 3,
                  method: str = "lattice", thresholds: Thresholds | None = None, n: int = 1) -> dict:
    """Deviation |Y_eps - Y|_q and C^k verdicts of Y_eps for decreasing widths.

    Deviations are taken on the finest grid, relative to |Y|_q when q < inf.
    The study passes when the deviations strictly decrease (or all vanish)
    and every smoothed family is C^k bounded up to k_max.
    """
    th = thresholds or Thresholds()
    q = schatten_index(q)
    widths = [float(e) for e in widths]
    if any(b >= a for a, b in zip(widths, widths[1:])):
        raise ValueError("widths must be strictly decreasing")
    Ys = family.operators(list(grids), n)
    finest = Ys[-1]
    ref = schatten_norm(finest, q)
    relative = not math.isinf(q)
    rows = []
    for eps in widths:
        f = Mollifier(eps, method=method)
        smoothed = [garding_average(Y, f) for Y in Ys]
        dev = schatten_norm(smoothed[-1] - finest, q)
        if relative and ref > 0:
            dev /= ref
        study = ck_scores(smoothed, q, k_max, th, f"{family.family_id}|eps={eps:g}")
        rows.append({"eps": eps, "deviation": dev, "ck": study.orders[k_max],
                     "max_exponent": study.max_exponent(k_max), "study": study.to_dict()})
    devs = [r["deviation"] for r in rows]
    floor = th.zero * max(1.0, 1.0 if relative else ref)
    vanishing = all(d <= floor for d in devs)
    decreasing = vanishing or all(b < a for a, b in zip(devs, devs[1:]))
    smooth = all(r["ck"] == PASS for r in rows)
    return {
        "family": family.family_id,
        "q": q_key(q),
        "method": method,
        "N": list(grids),
        "k_max": k_max,
        "rows": rows,
        "decreasing": decreasing,
        "smooth": smooth,
        "verdict": PASS if decreasing and smooth else FAIL,
    }
