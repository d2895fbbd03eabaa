"""Regularity of the orbit map g -> rho(g) Y rho(g)^-1.

Continuity is measured by moduli over shrinking balls in the (a, b) chart,
differentiability by nested central differences along one-parameter
subgroups.  Both work in two topologies: a Schatten norm of the windowed
operator and the strong topology given by a finite probe set.

Differences are compared at a fixed step schedule.  A single lattice cannot
tell a kink from a smooth ramp once the step approaches its spacing, so the
Cauchy gaps are maximized over the refinement grids (the finest grid
dominates whenever the continuum gap is positive) before a verdict is taken.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from heisenlab.fitting import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    Thresholds,
    at_most,
    decay_order,
    monotone_fit,
    refinement_growth,
    uniform_cauchy_verdict,
    worst,
)
from heisenlab.grid import GridSpec, HeisenbergElement, conj_array, heisenberg_mul, one_parameter
from heisenlab.operators import Operator, commutator, schatten_index, schatten_norm
from heisenlab.window import PhaseWindow, compressed_norms, image_size

DEFAULT_STEPS = (0.16, 0.08, 0.04, 0.02, 0.01)
DEFAULT_RADII = (0.2, 0.1, 0.05, 0.025, 0.0125)
MIN_STEP = 1e-7
#: continuity moduli use the two finest grids not exceeding this size
CONTINUITY_MAX_N = 512


@dataclass(frozen=True)
class ProbeSet:
    """Unit probe vectors defining the strong topology."""

    vectors: tuple

    @classmethod
    def default(cls, grid: GridSpec, seed: int = 0, n_random: int = 5) -> ProbeSet:
        """Gaussian of width L/16, its first two excitations, and seeded random vectors.

        The random vectors are passed through the phase-space window so that
        they are resolved on every grid of a refinement study.
        """
        sigma = grid.L / 16
        x0 = grid.coords(0)
        g = np.ones(grid.dim)
        for axis in range(grid.n):
            g = g * np.exp(-0.5 * (grid.coords(axis) / sigma) ** 2)
        vecs = [g, x0 * g, (x0**2 - sigma**2) * g]
        rng = np.random.default_rng([int(seed), grid.N])
        window = PhaseWindow(grid)
        for _ in range(n_random):
            v = rng.standard_normal(grid.dim) + 1j * rng.standard_normal(grid.dim)
            vecs.append(window.apply(v))
        return cls(tuple(np.asarray(v, dtype=complex) / np.linalg.norm(v) for v in vecs))

    def __len__(self) -> int:
        return len(self.vectors)


def _qlist(q) -> list:
    qs = q if isinstance(q, (list, tuple)) else [q]
    return [schatten_index(v) for v in qs]


def q_key(q) -> str:
    return "inf" if math.isinf(q) else f"{q:g}"


def _verdict_from_gaps(steps, gaps, th: Thresholds, Ns=(), tails=()):
    """(tail, decay order, refinement growth, verdict) for a gap sequence.

    `gaps` is maximized over grids; `tails` holds the gap curve of each grid
    of `Ns` and feeds the uniformity check.
    """
    gaps = np.asarray(gaps, dtype=float)
    tail = float(gaps[-1])
    if gaps.max() <= th.zero:
        return tail, None, None, PASS
    order = decay_order(list(steps)[1:], gaps, floor=th.zero)
    growth = refinement_growth(list(Ns), list(tails), floor=th.zero)
    return tail, order, growth, uniform_cauchy_verdict(tail, order, growth, th)


# ---------------------------------------------------------------- continuity


@dataclass
class ContinuityReport:
    radii: list
    moduli: list
    relative: list
    exponent: float | None
    verdict: str
    topology: str
    scale: float
    growth: float | None = None

    def to_dict(self) -> dict:
        return {
            "radii": list(self.radii),
            "moduli": list(self.moduli),
            "relative": list(self.relative),
            "exponent": self.exponent,
            "growth": self.growth,
            "verdict": self.verdict,
            "topology": self.topology,
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ContinuityReport:
        return cls(d["radii"], d["moduli"], d["relative"], d["exponent"], d["verdict"], d["topology"],
                   d["scale"], d.get("growth"))


def ball_samples(n: int, radius: float, count: int, seed: int = 0) -> list[HeisenbergElement]:
    """Deterministic points of the (a, b) ball: axis extremes plus Halton points pulled into the ball."""
    dim = 2 * n
    pts = []
    for i in range(dim):
        for s in (1.0, -1.0):
            e = np.zeros(dim)
            e[i] = s * radius
            pts.append(e)
    if count > 0:
        u = qmc.Halton(d=dim, scramble=True, seed=seed).random(count)
        for p in radius * (2 * u - 1):
            r = np.linalg.norm(p)
            pts.append(p * (radius / r) if r > radius else p)
    return [HeisenbergElement(tuple(p[:n]), tuple(p[n:]), 0.0) for p in pts]


def _check_radii(radii):
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("radii must be non-empty")
    if any(r <= 0 for r in radii) or any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
        raise ValueError("radii must be positive and strictly decreasing")
    return radii


def _continuity_verdict(radii, moduli, scale, th: Thresholds, growth=None):
    rel = np.asarray(moduli) / scale if scale > 0 else np.zeros(len(moduli))
    exponent = None
    if rel.max() > th.zero:
        fitted = monotone_fit(rel[::-1], increasing=True)[::-1]
        exponent = decay_order(radii, np.maximum(fitted, 0.0), floor=th.zero)
    if growth is not None and growth >= th.unbounded and rel[-1] > th.continuity:
        verdict = FAIL
    elif rel[-1] <= th.continuity or (exponent is not None and exponent >= th.decay_pass):
        verdict = PASS
    elif exponent is not None and exponent < th.decay_fail and rel[-1] > th.cauchy_fail:
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    return rel, exponent, verdict


def _continuity_raw(Y: Operator, qs, radii, samples, seed, probes: ProbeSet):
    """Moduli for every q and for the strong topology on a single grid."""
    grid = Y.grid
    window = PhaseWindow(grid)
    V = window.adjoint_probes(probes.vectors)
    mod = {q: np.zeros(len(radii)) for q in qs}
    mod["strong"] = np.zeros(len(radii))
    for i, r in enumerate(radii):
        for g in ball_samples(grid.n, r, samples, seed + i):
            C = conj_array(grid, g, Y.entries) - Y.entries
            for q, v in window.norms(C, qs).items():
                mod[q][i] = max(mod[q][i], v)
            mod["strong"][i] = max(mod["strong"][i], image_size(window.strong_image(C, V)))
    scale = window.norms(Y.entries, qs)
    scale["strong"] = image_size(window.strong_image(Y.entries, V))
    return mod, scale


def continuity_modulus(Ys, q=math.inf, radii=DEFAULT_RADII, samples: int = 8, seed: int = 0,
                       strong: bool = False, thresholds: Thresholds | None = None) -> ContinuityReport:
    """Sup over sampled |(a, b)| <= delta of the distance from conj_action(g, Y) to Y.

    Parameters
    ----------
    Ys : Operator or list of Operator
        Moduli are maximized over the given grids.
    q : Schatten index of the norm topology.
    radii : strictly decreasing positive radii.
    samples : Halton points per radius, on top of the 4n axis extremes.
    strong : measure with the default probe set instead of the norm.
    """
    th = thresholds or Thresholds()
    Ys = [Ys] if isinstance(Ys, Operator) else list(Ys)
    radii = _check_radii(radii)
    q = schatten_index(q)
    reports = _continuity_reports(Ys, [q], radii, samples, seed, th)
    return reports["strong" if strong else q]


def _continuity_reports(Ys, qs, radii, samples, seed, th: Thresholds) -> dict:
    """Continuity reports keyed by q and "strong"; moduli maximized over `Ys`.

    With two or more grids the relative modulus curve must not grow under
    the last refinement step (uniform continuity).
    """
    Ys = sorted(Ys, key=lambda Y: Y.grid.N)
    keys = list(qs) + ["strong"]
    moduli = {k: np.zeros(len(radii)) for k in keys}
    scale = dict.fromkeys(keys, 0.0)
    tails = {k: [] for k in keys}
    for Y in Ys:
        mod, sc = _continuity_raw(Y, qs, radii, samples, seed, ProbeSet.default(Y.grid, seed))
        for k in keys:
            moduli[k] = np.maximum(moduli[k], mod[k])
            scale[k] = max(scale[k], sc[k])
            tails[k].append(mod[k] / sc[k] if sc[k] > 0 else np.zeros(len(radii)))
    Ns = [Y.grid.N for Y in Ys]
    out = {}
    for k in keys:
        growth = refinement_growth(Ns, tails[k], floor=th.zero)
        rel, exponent, verdict = _continuity_verdict(radii, moduli[k], scale[k], th, growth)
        name = "strong" if k == "strong" else f"norm-{q_key(k)}"
        out[k] = ContinuityReport(radii, moduli[k].tolist(), rel.tolist(), exponent, verdict, name,
                                  scale[k], growth)
    return out


# ---------------------------------------------------------- difference quotients


def _step(grid: GridSpec, j: int, t: float, Y: np.ndarray) -> np.ndarray:
    plus = conj_array(grid, one_parameter(grid.n, j, t), Y)
    minus = conj_array(grid, one_parameter(grid.n, j, -t), Y)
    return (plus - minus) / (2 * t)


def _difference(grid: GridSpec, word, t: float, Y: np.ndarray) -> np.ndarray:
    """Nested central differences; the first word entry is the outermost."""
    out = Y
    for j in reversed(word):
        out = _step(grid, j, t, out)
    return out


def difference_quotient(Y: Operator, word, step: float) -> Operator:
    """Difference-quotient approximation of the iterated bracket along `word`."""
    if step < MIN_STEP:
        raise ValueError(f"step {step} is below the floor {MIN_STEP}")
    word = tuple(int(j) for j in word)
    m = 2 * Y.grid.n + 1
    if any(not 0 <= j < m for j in word):
        raise IndexError(f"word {word} outside generator range 0..{m - 1}")
    return Y.with_entries(_difference(Y.grid, word, step, Y.entries))


def _check_steps(steps):
    steps = [float(s) for s in steps]
    if len(steps) < 2:
        raise ValueError("need at least two steps")
    if any(s2 >= s1 for s1, s2 in zip(steps, steps[1:])):
        raise ValueError("steps must be strictly decreasing")
    if steps[-1] < MIN_STEP:
        raise ValueError(f"steps below {MIN_STEP} underflow the difference quotient")
    return steps


@dataclass
class CauchyDiagnostics:
    """Gaps between quotients at consecutive steps (relative, maximized over grids).

    `order` is the fitted decay of the gaps in the step, `growth` the
    smallest growth exponent of the gap curve under the last grid refinement.
    """

    steps: list
    gaps: list
    tail: float | None
    order: float | None
    verdict: str
    topology: str
    growth: float | None = None

    def to_dict(self) -> dict:
        return {
            "steps": list(self.steps),
            "gaps": list(self.gaps),
            "tail": self.tail,
            "order": self.order,
            "growth": self.growth,
            "verdict": self.verdict,
            "topology": self.topology,
        }


def _quotient_tree(grid, words, t, Y):
    """All quotients for `words` (closed under suffixes), each computed once."""
    out = {(): Y}
    for w in sorted(words, key=len):
        out[w] = _step(grid, w[0], t, out[w[1:]])
    del out[()]
    return out


def _gap_engine(Ys, words, steps, qs, seed):
    """Relative Cauchy gaps per word for each q and for the strong topology.

    Returns ``gaps[key][word]`` (max over grids) where key is a q or
    "strong", the per-grid gap curves, the sorted grid sizes, and
    the finest-grid quotient at the smallest step.
    """
    words = sorted(set(words), key=lambda w: (len(w), w))
    closure = set()
    for w in words:
        for i in range(len(w)):
            closure.add(w[i:])
    keys = list(qs) + ["strong"]
    gaps = {k: {w: np.zeros(len(steps) - 1) for w in words} for k in keys}
    tails = {k: {w: [] for w in words} for k in keys}
    finest = {}
    Ys = sorted(Ys, key=lambda Y: Y.grid.N)
    for Y in Ys:
        grid = Y.grid
        window = PhaseWindow(grid)
        V = window.adjoint_probes(ProbeSet.default(grid, seed).vectors)
        base = window.norms(Y.entries, qs)
        base["strong"] = image_size(window.strong_image(Y.entries, V))
        raw = {k: {w: np.zeros(len(steps) - 1) for w in words} for k in keys}
        last = {k: {} for k in keys}
        prev = {}
        for i, t in enumerate(steps):
            quots = _quotient_tree(grid, closure, t, Y.entries)
            cur = {}
            for w in words:
                A = window.compress(quots[w])
                S = window.strong_image(quots[w], V)
                if i > 0:
                    pA, pS = prev[w]
                    for q, v in compressed_norms(A - pA, qs).items():
                        raw[q][w][i - 1] = v
                    raw["strong"][w][i - 1] = image_size(S - pS)
                if i == len(steps) - 1:
                    for q, v in compressed_norms(A, qs).items():
                        last[q][w] = v
                    last["strong"][w] = image_size(S)
                    finest[w] = quots[w]
                cur[w] = (A, S)
            prev = cur
        for k in keys:
            for w in words:
                scale = max(base[k], last[k][w])
                rel = raw[k][w] / scale if scale > 0 else np.zeros_like(raw[k][w])
                gaps[k][w] = np.maximum(gaps[k][w], rel)
                tails[k][w].append(rel)
    return gaps, tails, [Y.grid.N for Y in Ys], finest


def orbit_fd_derivative(Ys, word, steps=DEFAULT_STEPS, q=math.inf, strong: bool = False,
                        seed: int = 0, thresholds: Thresholds | None = None):
    """Difference-quotient estimate along `word` and Cauchy diagnostics across steps.

    Parameters
    ----------
    Ys : Operator or list of Operator
        The family on one or several grids; gaps are maximized over grids.
    word : int or sequence of int
        Generator indices (0-based, outermost first); the order k is its length.
    steps : strictly decreasing steps, all >= 1e-7.
    q : Schatten index for the norm topology.
    strong : use the default probe set (seeded by `seed`) instead.

    Returns
    -------
    estimate : Operator
        Quotient at the smallest step on the finest grid.
    diag : CauchyDiagnostics
    """
    th = thresholds or Thresholds()
    Ys = [Ys] if isinstance(Ys, Operator) else list(Ys)
    word = (int(word),) if np.isscalar(word) else tuple(int(j) for j in word)
    if not word:
        raise ValueError("order k must be at least 1")
    m = 2 * Ys[0].grid.n + 1
    if any(not 0 <= j < m for j in word):
        raise IndexError(f"word {word} outside generator range 0..{m - 1}")
    steps = _check_steps(steps)
    q = schatten_index(q)
    gaps, tails, Ns, finest = _gap_engine(Ys, [word], steps, [q], seed)
    key = "strong" if strong else q
    g = gaps[key][word]
    tail, order, growth, verdict = _verdict_from_gaps(steps, g, th, Ns, tails[key][word])
    name = "strong" if strong else f"norm-{q_key(q)}"
    estimate = max(Ys, key=lambda Y: Y.grid.N).with_entries(finest[word])
    return estimate, CauchyDiagnostics(steps, g.tolist(), tail, order, verdict, name, growth)


# ------------------------------------------------------------------ classifier


@dataclass
class OrderResult:
    order: int
    norm: str
    strong: str
    words: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"order": self.order, "norm": self.norm, "strong": self.strong,
                "words": {k: self.words[k] for k in sorted(self.words)}}


@dataclass
class SmoothnessReport:
    """Per-order Y^k verdicts in norm and strong topology.

    Order 0 is orbit continuity.  Each verdict is capped by the verdict one
    order lower (filtration monotonicity).  Orders where the norm verdict
    passes but the strong one does not are listed as comparability violations.
    """

    family: str
    q: float
    k_max: int
    orders: list
    continuity: dict
    comparability_violations: list = field(default_factory=list)

    def verdict(self, k: int, topology: str = "norm") -> str:
        return getattr(self.orders[k], topology)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "q": q_key(self.q),
            "k_max": self.k_max,
            "orders": [o.to_dict() for o in self.orders],
            "continuity": {k: self.continuity[k].to_dict() for k in sorted(self.continuity)},
            "comparability_violations": list(self.comparability_violations),
        }

    @classmethod
    def from_dict(cls, d: dict) -> SmoothnessReport:
        """Rebuild a report from :meth:`to_dict` output (e.g. a cache entry)."""
        orders = [OrderResult(o["order"], o["norm"], o["strong"], dict(o["words"])) for o in d["orders"]]
        cont = {k: ContinuityReport.from_dict(v) for k, v in d["continuity"].items()}
        return cls(d["family"], schatten_index(d["q"]), d["k_max"], orders, cont,
                   list(d["comparability_violations"]))


def words_of_length(generator_indices, k: int):
    return list(itertools.product(generator_indices, repeat=k))


def word_name(grid_n: int, word) -> str:
    names = []
    for j in word:
        if j < grid_n:
            names.append("iP" + (str(j + 1) if grid_n > 1 else ""))
        elif j < 2 * grid_n:
            names.append("iQ" + (str(j - grid_n + 1) if grid_n > 1 else ""))
        else:
            names.append("iI")
    return "[" + ",".join(names) + "]"


def _continuity_grids(Ys):
    """The two finest grids not exceeding CONTINUITY_MAX_N (or the coarsest grid)."""
    small = sorted((Y for Y in Ys if Y.grid.N <= CONTINUITY_MAX_N), key=lambda Y: Y.grid.N)
    return small[-2:] if small else [min(Ys, key=lambda Y: Y.grid.N)]


def classify_Yk_multi(Ys, qs=(math.inf,), k_max: int = 3, steps=DEFAULT_STEPS, radii=DEFAULT_RADII,
                      samples: int = 8, seed: int = 0, thresholds: Thresholds | None = None,
                      family: str = "") -> dict:
    """Y^k classification for several Schatten indices sharing one set of quotients.

    Returns ``{q: SmoothnessReport}``.
    """
    th = thresholds or Thresholds()
    Ys = [Ys] if isinstance(Ys, Operator) else list(Ys)
    if not 0 <= k_max <= 3:
        raise ValueError("k_max must lie in 0..3")
    n = Ys[0].grid.n
    for Y in Ys:
        if Y.grid is None or Y.grid.n != n or Y.dim != Y.grid.dim:
            raise ValueError("inconsistent family dimensions")
    qs = _qlist(list(qs))
    steps = _check_steps(steps)
    radii = _check_radii(radii)

    conts = _continuity_reports(_continuity_grids(Ys), qs, radii, samples, seed, th)
    noncentral = tuple(range(2 * n))
    words = [w for k in range(1, k_max + 1) for w in words_of_length(noncentral, k)]
    if words:
        gaps, tails, Ns, _ = _gap_engine(Ys, words, steps, qs, seed)
    reports = {}
    for q in qs:
        cont = {"norm": conts[q], "strong": conts["strong"]}
        orders = [OrderResult(0, cont["norm"].verdict, cont["strong"].verdict)]
        for k in range(1, k_max + 1):
            per_word = {}
            for w in words_of_length(noncentral, k):
                entry = {}
                for key, name in ((q, f"norm-{q_key(q)}"), ("strong", "strong")):
                    tail, order, growth, verdict = _verdict_from_gaps(steps, gaps[key][w], th, Ns,
                                                                      tails[key][w])
                    diag = CauchyDiagnostics(steps, gaps[key][w].tolist(), tail, order, verdict, name, growth)
                    entry["strong" if key == "strong" else "norm"] = diag.to_dict()
                per_word[word_name(n, w)] = entry
            nv = worst(d["norm"]["verdict"] for d in per_word.values())
            sv = worst(d["strong"]["verdict"] for d in per_word.values())
            orders.append(OrderResult(k, nv, sv, per_word))
        violations = []
        for k in range(len(orders)):
            if k > 0:
                orders[k].norm = at_most(orders[k].norm, orders[k - 1].norm)
                orders[k].strong = at_most(orders[k].strong, orders[k - 1].strong)
            if orders[k].norm == PASS and orders[k].strong != PASS:
                violations.append({"order": k, "norm": orders[k].norm, "strong": orders[k].strong})
        reports[q] = SmoothnessReport(family, q, k_max, orders, cont, violations)
    return reports


def classify_Yk(Ys, q=math.inf, k_max: int = 3, steps=DEFAULT_STEPS, radii=DEFAULT_RADII,
                samples: int = 8, seed: int = 0, thresholds: Thresholds | None = None,
                family: str = "") -> SmoothnessReport:
    """Y^k classification of a family given on several grids (one Schatten index)."""
    q = schatten_index(q)
    return classify_Yk_multi(Ys, [q], k_max, steps, radii, samples, seed, thresholds, family)[q]


# ------------------------------------------------------- one-parameter reduction


def one_param_reduction_check(Y: Operator, delta: float, samples: int = 100, q=math.inf, seed: int = 0,
                              slack: float = 1e-9) -> dict:
    """Check |g.Y - Y| <= sum_j |gamma_j(t_j).Y - Y| for g = gamma_1(t_1)...gamma_m(t_m).

    The bound holds with constant 1 because conjugation is isometric.  Raw
    (unwindowed) Schatten norms are used; `slack` is relative to max(1, |Y|_inf).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    grid = Y.grid
    m = 2 * grid.n + 1
    q = schatten_index(q)
    tol = slack * max(1.0, schatten_norm(Y, math.inf))
    ts = delta * (2 * qmc.Halton(d=m, scramble=True, seed=seed).random(samples) - 1)
    lhs, rhs = [], []
    for t in ts:
        g = HeisenbergElement.identity(grid.n)
        coord = 0.0
        for j in range(m):
            gj = one_parameter(grid.n, j, float(t[j]))
            g = heisenberg_mul(g, gj)
            coord += schatten_norm(conj_array(grid, gj, Y.entries) - Y.entries, q)
        lhs.append(schatten_norm(conj_array(grid, g, Y.entries) - Y.entries, q))
        rhs.append(coord)
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    excess = lhs - rhs
    held = int(np.sum(excess <= tol))
    return {
        "delta": float(delta),
        "samples": int(samples),
        "held": held,
        "holds": held == samples,
        "max_excess": float(excess.max()),
        "max_lhs": float(lhs.max()),
        "max_rhs": float(rhs.max()),
        "tolerance": tol,
    }


def gradient_check(Y: Operator, generators, index: int, step: float = 1e-4, windowed: bool = True) -> float:
    """Relative distance between the first-order quotient and the direct bracket.

    Measured in the windowed operator norm (raw norm if `windowed` is False)
    relative to max(|[X, Y]|, |Y|).
    """
    est = difference_quotient(Y, (index,), step).entries
    direct = commutator(generators[index], Y).entries
    if windowed:
        w = PhaseWindow(Y.grid)
        num = w.norm(est - direct)
        den = max(w.norm(direct), w.norm(Y.entries))
    else:
        num = schatten_norm(est - direct, math.inf)
        den = max(schatten_norm(direct, math.inf), schatten_norm(Y, math.inf))
    return num / den if den > 0 else num
