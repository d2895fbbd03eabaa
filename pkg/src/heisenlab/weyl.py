"""Discrete Weyl calculus on the N x N (per axis) phase-space lattice.

A symbol is sampled at (x_m, xi_j).  Its discrete Fourier coefficients

    a(m, j) = sum_{k,l} ahat(k, l) exp(2 pi i (l.m - k.j) / N)

multiply the symmetric displacement operators D(k, l) = phi(k, l) M^l T^k,
where T is the unit lattice translation and M the unit modulation.  The phase
phi(k, l) = exp(-i pi k~.l~ / N) is taken on integer representatives (k~, l~)
chosen antipodally symmetric, so that D(k, l)^* = D(-k, -l) holds on the
Nyquist lines of an even grid as well.  The D(k, l) are orthogonal with
Tr(D^* D) = N^n, which makes Op a bijection with Op(1) = I, Op(conj a) =
Op(a)^* and  |Op(a)|_2 = N^(-n/2) |a|_l2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy.special import erfc

from heisenlab.operators import Operator
from heisenlab.window import PhaseWindow, plateau


@dataclass(frozen=True, eq=False)
class PhaseSymbol:
    """Samples of a(x, xi) with array axes (x_1..x_n, xi_1..xi_n).

    Frequency axes are stored in FFT order, matching ``GridSpec.xi``.
    """

    values: np.ndarray
    grid: object
    label: str = ""

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.complex128, copy=True)
        expected = self.grid.shape * 2
        if arr.shape != expected:
            raise ValueError(f"symbol shape {arr.shape} does not match phase grid {expected}")
        if not np.isfinite(arr).all():
            raise ValueError("symbol values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_function(cls, grid, func, label=""):
        """Evaluate ``func(x_1..x_n, xi_1..xi_n)`` on the phase lattice."""
        axes = [grid.x] * grid.n + [grid.xi] * grid.n
        mesh = np.meshgrid(*axes, indexing="ij")
        vals = np.broadcast_to(np.asarray(func(*mesh), dtype=complex), grid.shape * 2)
        return cls(vals, grid, label)

    def conj(self) -> PhaseSymbol:
        return PhaseSymbol(self.values.conj(), self.grid, self.label)


def _check_grid(a_grid, grid):
    if grid is not None and (a_grid.n, a_grid.N, a_grid.L) != (grid.n, grid.N, grid.L):
        raise ValueError("symbol grid does not match the operator grid")


@lru_cache(maxsize=16)
def _phase_1d(N: int) -> np.ndarray:
    """phi[k, l] over FFT-ordered integer labels."""
    lab = np.fft.fftfreq(N, d=1.0 / N).astype(np.int64)
    k = np.repeat(lab[:, None], N, axis=1)
    l = np.repeat(lab[None, :], N, axis=0)
    kt, lt = k.copy(), l.copy()
    half = N // 2
    on_k = (k == -half) & (l != 0) & (l != -half)
    kt[on_k] = half * np.sign(l[on_k])
    on_l = (l == -half) & (k != 0) & (k != -half)
    lt[on_l] = half * np.sign(k[on_l])
    return np.exp(-1j * np.pi * (kt * lt) / N)


@lru_cache(maxsize=8)
def _phase(n: int, N: int) -> np.ndarray:
    """Phase over the coefficient layout [l_1..l_n, k_1..k_n]."""
    p1 = _phase_1d(N).T  # [l, k]
    out = np.ones((N,) * (2 * n), dtype=complex)
    for axis in range(n):
        shape = [1] * (2 * n)
        shape[axis] = N
        shape[n + axis] = N
        out = out * p1.reshape(shape)
    return out


@lru_cache(maxsize=8)
def _diagonal_index(n: int, N: int):
    """Row/column index arrays mapping (m, k) -> (m, m - k mod N)."""
    shape = (N,) * n
    m = np.indices(shape).reshape(n, -1)
    rows = np.ravel_multi_index(tuple(m), shape)
    cols = np.empty((N**n, N**n), dtype=np.int64)
    for kflat, k in enumerate(np.ndindex(*shape)):
        shifted = (m - np.asarray(k)[:, None]) % N
        cols[:, kflat] = np.ravel_multi_index(tuple(shifted), shape)
    return rows, cols


def symbol_coefficients(a: PhaseSymbol) -> np.ndarray:
    """ahat in layout [l_1..l_n, k_1..k_n], each axis in FFT order."""
    n, N = a.grid.n, a.grid.N
    c = sfft.fftn(a.values, axes=range(n)) / N**n
    return sfft.ifftn(c, axes=range(n, 2 * n))


def symbol_from_coefficients(coef: np.ndarray, grid) -> PhaseSymbol:
    n, N = grid.n, grid.N
    vals = sfft.ifftn(coef, axes=range(n)) * N**n
    vals = sfft.fftn(vals, axes=range(n, 2 * n))
    return PhaseSymbol(vals, grid)


def operator_from_coefficients(coef: np.ndarray, grid) -> np.ndarray:
    """sum_{k,l} coef(l, k) D(k, l) as a raw array."""
    n, N = grid.n, grid.N
    D = N**n
    c = coef * _phase(n, N)
    rowvals = sfft.ifftn(c, axes=range(n)) * D  # [m, k]
    rows, cols = _diagonal_index(n, N)
    out = np.zeros((D, D), dtype=complex)
    out[rows[:, None], cols] = rowvals.reshape(D, D)
    return out


def operator_coefficients(Y: np.ndarray, grid) -> np.ndarray:
    """Inverse of :func:`operator_from_coefficients`: Tr(D(k,l)^* Y) / N^n."""
    n, N = grid.n, grid.N
    D = N**n
    rows, cols = _diagonal_index(n, N)
    diag = np.asarray(Y)[rows[:, None], cols].reshape((N,) * (2 * n))  # [m, k]
    c = sfft.fftn(diag, axes=range(n)) / D
    return c * _phase(n, N).conj()


def weyl_quantize(a: PhaseSymbol, grid=None) -> Operator:
    _check_grid(a.grid, grid)
    Y = operator_from_coefficients(symbol_coefficients(a), a.grid)
    return Operator(Y, a.grid, f"Op({a.label})" if a.label else "Op")


def weyl_symbol(Y: Operator, grid=None) -> PhaseSymbol:
    grid = grid if grid is not None else Y.grid
    if grid is None:
        raise ValueError("a grid is required to read off a symbol")
    if Y.dim != grid.dim:
        raise ValueError("operator dimension does not match the grid")
    coef = operator_coefficients(Y.entries, grid)
    return symbol_from_coefficients(coef, grid)


def plancherel_constant(grid) -> float:
    return grid.N ** (-grid.n / 2)


def phase_window(grid, window: PhaseWindow | None = None) -> np.ndarray:
    """Window weights on the phase lattice matching the operator-side window."""
    window = window if window is not None else PhaseWindow(grid)
    flat, cut = window.flat, window.cut
    w = np.ones(grid.shape * 2)
    for axis in range(grid.n):
        shape = [1] * (2 * grid.n)
        shape[axis] = grid.N
        w = w * plateau(grid.x, flat * grid.L / 2, cut * grid.L / 2).reshape(shape)
        shape = [1] * (2 * grid.n)
        shape[grid.n + axis] = grid.N
        w = w * plateau(grid.xi, flat * grid.xi_max, cut * grid.xi_max).reshape(shape)
    return w


def multi_indices(dim: int, order: int):
    """All multi-indices alpha in N^dim with |alpha| = order, lexicographic."""
    if order == 0:
        yield (0,) * dim
        return
    if dim == 1:
        yield (order,)
        return
    for first in range(order, -1, -1):
        for rest in multi_indices(dim - 1, order - first):
            yield (first, *rest)


def symbol_derivative(a: PhaseSymbol, alpha) -> np.ndarray:
    """Spectral partial derivative d^alpha a; odd orders drop the Nyquist mode."""
    g = a.grid
    n, N = g.n, g.N
    alpha = tuple(int(v) for v in alpha)
    if len(alpha) != 2 * n:
        raise ValueError(f"multi-index must have length {2 * n}")
    if not any(alpha):
        return np.array(a.values)
    coef = symbol_coefficients(a)
    lab = g.freq_index.astype(float)
    for axis, order in enumerate(alpha):
        if not order:
            continue
        if axis < n:
            factor = 1j * g.dxi * lab  # d/dx_axis
        else:
            factor = -1j * g.h * lab  # d/dxi_axis
        factor = factor**order
        if order % 2:
            factor[N // 2] = 0.0
        shape = [1] * (2 * n)
        shape[axis] = N
        coef = coef * factor.reshape(shape)
    return symbol_from_coefficients(coef, g).values


def lp_norm(values: np.ndarray, grid, p) -> float:
    """Discrete L^p norm with Riemann weights (h * 2pi/L)^n per phase-space cell."""
    p = float(p)
    absval = np.abs(values)
    if math.isinf(p):
        return float(absval.max())
    cell = (grid.h * grid.dxi) ** grid.n
    return float((cell * np.sum(absval**p)) ** (1.0 / p))


#: outer window used to make a symbol periodic before differentiating; it is
#: flat wherever the measuring window is nonzero
PERIODIZE = (0.5, 1.0)


def _erf_plateau(u, flat, cut):
    # 1 to double precision for |u| <= flat, 0 beyond cut; its Fourier tail
    # is Gaussian, so spectral derivatives of the tapered symbol do not alias
    s = (cut - flat) / 12.0
    return 0.5 * erfc((np.abs(u) - 0.5 * (flat + cut)) / s)


def periodize(a: PhaseSymbol) -> PhaseSymbol:
    """Taper a symbol to zero at the phase-space edge, keeping it on the window support.

    Spectral derivatives of a symbol that jumps across the torus edge ring
    everywhere.  The taper acts on ``a - c`` with c the value at the origin,
    so constant symbols stay exactly constant.
    """
    g = a.grid
    flat, cut = PERIODIZE
    outer = np.ones(g.shape * 2)
    for axis in range(g.n):
        shape = [1] * (2 * g.n)
        shape[axis] = g.N
        outer = outer * _erf_plateau(g.x, flat * g.L / 2, cut * g.L / 2).reshape(shape)
        shape = [1] * (2 * g.n)
        shape[g.n + axis] = g.N
        outer = outer * _erf_plateau(g.xi, flat * g.xi_max, cut * g.xi_max).reshape(shape)
    c = a.values[(g.N // 2,) * g.n + (0,) * g.n]
    return PhaseSymbol(outer * (a.values - c) + c, g, a.label)


def symbol_derivative_norms(a: PhaseSymbol, p, k_max: int, window: PhaseWindow | None = None):
    """{order: {alpha: windowed L^p norm of d^alpha a}} for orders 0..k_max."""
    if not 0 <= k_max <= 3:
        raise ValueError("k_max must lie in 0..3")
    w = phase_window(a.grid, window)
    ap = periodize(a)
    out = {}
    for order in range(k_max + 1):
        out[order] = {
            alpha: lp_norm(w * symbol_derivative(ap, alpha), a.grid, p)
            for alpha in multi_indices(2 * a.grid.n, order)
        }
    return out


def alpha_name(alpha) -> str:
    """``"d(1,0)"`` style label for a multi-index over (x..., xi...)."""
    return "d(" + ",".join(str(int(v)) for v in alpha) + ")"


@dataclass
class SymbolStudy:
    """Windowed L^p norms of symbol derivatives across grids, with growth fits.

    For p < inf the values are relative to the windowed L^p norm of the
    symbol itself, mirroring the operator side.
    """

    family: str
    p: float
    k_max: int
    Ns: list
    baseline: list
    derivatives: dict
    orders: dict

    def verdict(self, k: int) -> str:
        return self.orders[k]

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "p": "inf" if math.isinf(self.p) else f"{self.p:g}",
            "k_max": self.k_max,
            "N": list(self.Ns),
            "baseline": list(self.baseline),
            "derivatives": {k: self.derivatives[k] for k in sorted(self.derivatives)},
            "orders": {str(k): v for k, v in sorted(self.orders.items())},
        }


def _derivative_floor(grid, alpha, scale, th) -> float:
    amp = 1.0
    for axis, order in enumerate(alpha):
        amp *= (grid.xi_max if axis < grid.n else grid.L / 2) ** order
    return th.zero * scale * amp


def symbol_class_score(symbols, p=math.inf, k_max: int = 3, thresholds=None, family: str = "") -> SymbolStudy:
    """Classify {d^alpha a in L^p, |alpha| = k} order by order across refinement.

    Parameters
    ----------
    symbols : PhaseSymbol or sequence of PhaseSymbol
        One symbol per grid, N increasing.  With a single grid only the
        norms are meaningful and nonzero orders are inconclusive.
    p : float
        Lebesgue exponent in [1, inf].
    """
    from heisenlab.criterion import growth_fit
    from heisenlab.fitting import INCONCLUSIVE, PASS, Thresholds, at_most, growth_verdict, worst

    th = thresholds or Thresholds()
    symbols = [symbols] if isinstance(symbols, PhaseSymbol) else list(symbols)
    p = float(p)
    if not (p >= 1):
        raise ValueError("p must lie in [1, inf]")
    if not 1 <= k_max <= 3:
        raise ValueError("k_max must lie in 1..3")
    Ns = [a.grid.N for a in symbols]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError(f"grids must be strictly increasing in N, got {Ns}")
    per_grid = [symbol_derivative_norms(a, p, k_max) for a in symbols]
    baseline = [per[0][(0,) * (2 * a.grid.n)] for a, per in zip(symbols, per_grid)]
    relative = not math.isinf(p)
    base = np.asarray(baseline)
    derivs = {}
    for k in range(1, k_max + 1):
        for alpha in per_grid[0][k]:
            vals = np.array([per[k][alpha] for per in per_grid])
            floors = np.array([_derivative_floor(a.grid, alpha, max(b, 1.0), th)
                               for a, b in zip(symbols, baseline)])
            if relative:
                vals = np.divide(vals, base, out=np.zeros_like(vals), where=base > 0)
                floors = np.divide(floors, base, out=np.zeros_like(floors), where=base > 0)
            if len(Ns) >= 2:
                exponent, ratio = growth_fit(Ns, vals, floors)
                verdict = growth_verdict(exponent, ratio, th)
            else:
                exponent, ratio = None, None
                verdict = PASS if vals[0] <= floors[0] else INCONCLUSIVE
            derivs[alpha_name(alpha)] = {"order": k, "values": vals.tolist(), "exponent": exponent,
                                         "last_ratio": ratio, "verdict": verdict}
    orders = {}
    for k in range(1, k_max + 1):
        v = worst(d["verdict"] for d in derivs.values() if d["order"] == k)
        orders[k] = at_most(v, orders[k - 1]) if k > 1 else v
    return SymbolStudy(family, p, k_max, Ns, list(map(float, baseline)), derivs, orders)


def correspondence_audit(symbols, p=math.inf, k_max: int = 3, thresholds=None, family: str = "") -> dict:
    """Compare symbol-side and commutator-side verdicts order by order.

    The operator side runs the commutator criterion on Op(a) with q = p.
    Orders agree when both sides return the same decisive verdict.
    """
    from heisenlab.criterion import ck_scores
    from heisenlab.fitting import FAIL, INCONCLUSIVE, PASS

    symbols = list(symbols)
    sym = symbol_class_score(symbols, p, k_max, thresholds, family)
    ops = ck_scores([weyl_quantize(a) for a in symbols], p, k_max, thresholds, family)
    orders = {}
    for k in range(1, k_max + 1):
        s, c = sym.verdict(k), ops.verdict(k)
        orders[str(k)] = {"symbol": s, "operator": c, "agree": s == c and s != INCONCLUSIVE}
    agree = all(o["agree"] for o in orders.values())
    kind = "bounded" if all(o["symbol"] == PASS for o in orders.values()) else (
        "unbounded" if any(o["symbol"] == FAIL for o in orders.values()) else "mixed")
    return {"family": family, "p": sym.to_dict()["p"], "k_max": k_max, "orders": orders,
            "classification": kind, "verdict": PASS if agree else FAIL,
            "symbol_study": sym.to_dict(), "operator_study": ops.to_dict()}


def write_symbol_csv(a: PhaseSymbol, path) -> None:
    """Rows (x..., xi..., re, im) with frequencies in increasing order."""
    g = a.grid
    order = np.argsort(g.xi, kind="stable")
    vals = a.values
    for axis in range(g.n, 2 * g.n):
        vals = np.take(vals, order, axis=axis)
    axes = [g.x] * g.n + [g.xi[order]] * g.n
    mesh = [m.ravel() for m in np.meshgrid(*axes, indexing="ij")]
    header = [f"x{i + 1}" for i in range(g.n)] + [f"xi{i + 1}" for i in range(g.n)]
    if g.n == 1:
        header = ["x", "xi"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header + ["re", "im"])
        for row in zip(*mesh, vals.real.ravel(), vals.imag.ravel()):
            writer.writerow([repr(float(v)) for v in row])


def read_symbol_csv(path, grid) -> PhaseSymbol:
    """Inverse of :func:`write_symbol_csv`; every lattice point must appear once."""
    n = grid.n
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.N ** (2 * n), 2 * n + 2):
        raise ValueError(f"symbol CSV has shape {data.shape}, expected {(grid.N ** (2 * n), 2 * n + 2)}")
    idx = []
    for axis in range(2 * n):
        coord = data[:, axis]
        if axis < n:
            raw = (coord + grid.L / 2) / grid.h
        else:
            raw = coord / grid.dxi
        lab = np.rint(raw).astype(np.int64)
        if np.max(np.abs(raw - lab)) > 1e-6:
            raise ValueError(f"column {axis} does not sit on the lattice")
        idx.append(lab % grid.N)
    vals = np.full(grid.shape * 2, np.nan + 0j)
    vals[tuple(idx)] = data[:, -2] + 1j * data[:, -1]
    if np.isnan(vals).any():
        raise ValueError("symbol CSV does not cover the phase lattice")
    return PhaseSymbol(vals, grid)
def calculus_checks(grid, samples: int = 10, seed: int = 0) -> dict:
    """Normalization, round trip, *-compatibility and Plancherel on random symbols.

    Returns the raw defects together with pass flags at the standard
    tolerances (exact identity, 1e-10 round trip and adjoint, 1e-8 spread
    of the Plancherel constant).
    """
    one = PhaseSymbol(np.ones(grid.shape * 2), grid)
    identity_error = float(np.abs(weyl_quantize(one).entries - np.eye(grid.dim)).max())
    rng = np.random.default_rng([int(seed), grid.n, grid.N])
    roundtrip = adjoint = 0.0
    constants = []
    for _ in range(samples):
        vals = rng.standard_normal(grid.shape * 2) + 1j * rng.standard_normal(grid.shape * 2)
        a = PhaseSymbol(vals, grid)
        Y = weyl_quantize(a)
        roundtrip = max(roundtrip, float(np.abs(weyl_symbol(Y).values - vals).max()))
        adjoint = max(adjoint, float(np.abs(weyl_quantize(a.conj()).entries - Y.entries.conj().T).max()))
        constants.append(np.linalg.norm(Y.entries) / np.linalg.norm(vals))
    constants = np.asarray(constants)
    spread = float(np.ptp(constants) / constants.mean())
    return {
        "N": grid.N,
        "n": grid.n,
        "identity_error": identity_error,
        "roundtrip_error": roundtrip,
        "adjoint_error": adjoint,
        "plancherel_constant": float(constants.mean()),
        "plancherel_expected": plancherel_constant(grid),
        "plancherel_spread": spread,
        "passed": identity_error == 0.0 and roundtrip < 1e-10 and adjoint < 1e-10 and spread < 1e-8,
    }
