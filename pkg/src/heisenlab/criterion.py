"""Commutator criterion: bounded iterated commutators across grid refinement.

Order k is bounded when every length-k bracket [X_j1, [..., [X_jk, Y]]]
keeps a bounded windowed Schatten norm as N doubles.  For q < inf the norms
are divided by the windowed norm of Y itself, since even the identity has a
Schatten norm that grows with the dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from heisenlab.fitting import FAIL, PASS, Thresholds, at_most, growth_verdict, loglog_slope, worst
from heisenlab.grid import build_generators
from heisenlab.operators import Operator, schatten_index
from heisenlab.orbit import q_key, word_name, words_of_length
from heisenlab.window import PhaseWindow, compressed_norms

MIN_GRIDS = 3


def _check_family(Ys) -> list[Operator]:
    Ys = list(Ys)
    if len(Ys) < MIN_GRIDS:
        raise ValueError(f"a refinement study needs at least {MIN_GRIDS} grids, got {len(Ys)}")
    Ns = [Y.grid.N for Y in Ys]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError(f"grids must be strictly increasing in N, got {Ns}")
    n = Ys[0].grid.n
    if any(Y.grid.n != n for Y in Ys):
        raise ValueError("every grid of a study must have the same dimension n")
    return Ys


def growth_fit(Ns, values, floors):
    """(exponent, last ratio) of a nonnegative sequence; (None, None) if it vanishes.

    Values at or below `floors` are roundoff zeros and are left out of the
    fit; a sequence that drops to zero on the finest grid has last ratio 0.
    """
    Ns = np.asarray(Ns, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > np.broadcast_to(np.asarray(floors, dtype=float), values.shape)
    if keep.sum() < 2:
        return None, None
    exponent = loglog_slope(Ns[keep], values[keep])
    if not keep[-1]:
        return exponent, 0.0
    ratio = float(values[-1] / values[-2]) if keep[-2] else None
    return exponent, ratio


def roundoff_floor(grid, word, scale: float, th: Thresholds) -> float:
    """Size below which a bracket is indistinguishable from zero.

    Each ad(iP) can amplify by 2*xi_max and each ad(iQ) by L, so the floor
    is th.zero * scale times the product of those bounds.
    """
    amp = 1.0
    for j in word:
        amp *= 2.0 * grid.xi_max if j < grid.n else grid.L
    return th.zero * scale * amp


@dataclass
class RefinementStudy:
    """Windowed commutator norms per word and grid, with growth fits.

    Attributes
    ----------
    norms : dict
        ``{word name: [norm per grid]}``, raw windowed Schatten-q norms.
    baseline : list
        Windowed norm of Y on each grid; the reference for q < inf.
    words : dict
        ``{word name: {"order", "values", "exponent", "last_ratio", "verdict"}}``
        where ``values`` are the (possibly relative) norms that were fitted.
    orders : dict
        ``{k: verdict}`` for k = 1..k_max, capped by the verdict at k - 1.
    """

    family: str
    q: float
    k_max: int
    Ns: list
    baseline: list
    norms: dict
    words: dict
    orders: dict
    thresholds: Thresholds = field(default_factory=Thresholds)

    def verdict(self, k: int) -> str:
        return self.orders[k]

    def max_exponent(self, k: int):
        exps = [w["exponent"] for w in self.words.values() if w["order"] == k and w["exponent"] is not None]
        return max(exps) if exps else None

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "q": q_key(self.q),
            "k_max": self.k_max,
            "N": list(self.Ns),
            "baseline": list(self.baseline),
            "words": {k: self.words[k] for k in sorted(self.words)},
            "orders": {str(k): v for k, v in sorted(self.orders.items())},
            "norms": {k: self.norms[k] for k in sorted(self.norms)},
            "thresholds": self.thresholds.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> RefinementStudy:
        """Rebuild a study from :meth:`to_dict` output (e.g. a cache entry)."""
        return cls(d["family"], schatten_index(d["q"]), d["k_max"], list(d["N"]), list(d["baseline"]),
                   dict(d["norms"]), dict(d["words"]), {int(k): v for k, v in d["orders"].items()},
                   Thresholds(**d["thresholds"]))


def commutator_norms(Y: Operator, words, qs, window: PhaseWindow | None = None) -> dict:
    """``{word: {q: windowed norm}}`` with brackets shared along common suffixes."""
    grid = Y.grid
    gens = build_generators(grid)
    window = window or PhaseWindow(grid)
    cache = {(): np.asarray(Y.entries)}

    def bracket(word):
        if word not in cache:
            cache[word] = gens.ad(word[0], bracket(word[1:]))
        return cache[word]

    out = {}
    for w in sorted(words, key=len):
        out[w] = compressed_norms(window.compress(bracket(w)), qs)
    return out


def ck_scores(Ys, q=math.inf, k_max: int = 3, thresholds: Thresholds | None = None,
              family: str = "") -> RefinementStudy:
    """C^k classification of a family given on at least three grids."""
    th = thresholds or Thresholds()
    Ys = _check_family(Ys)
    if not 1 <= k_max <= 3:
        raise ValueError("k_max must lie in 1..3")
    q = schatten_index(q)
    n = Ys[0].grid.n
    words = [w for k in range(1, k_max + 1) for w in words_of_length(range(2 * n), k)]
    Ns = [Y.grid.N for Y in Ys]

    baseline, raw = [], {w: [] for w in words}
    for Y in Ys:
        window = PhaseWindow(Y.grid)
        baseline.append(window.norm(Y.entries, q))
        per = commutator_norms(Y, words, [q], window)
        for w in words:
            raw[w].append(per[w][q])

    relative = not math.isinf(q)
    base = np.asarray(baseline)
    records, norms = {}, {}
    for w in words:
        vals = np.asarray(raw[w])
        floors = np.array([roundoff_floor(Y.grid, w, max(b, 1.0), th) for Y, b in zip(Ys, baseline)])
        if relative:
            vals = np.divide(vals, base, out=np.zeros_like(vals), where=base > 0)
            floors = np.divide(floors, base, out=np.zeros_like(floors), where=base > 0)
        exponent, ratio = growth_fit(Ns, vals, floors)
        name = word_name(n, w)
        norms[name] = list(map(float, raw[w]))
        records[name] = {
            "order": len(w),
            "values": vals.tolist(),
            "exponent": exponent,
            "last_ratio": ratio,
            "verdict": growth_verdict(exponent, ratio, th),
        }
    orders = {}
    for k in range(1, k_max + 1):
        v = worst(r["verdict"] for r in records.values() if r["order"] == k)
        orders[k] = at_most(v, orders[k - 1]) if k > 1 else v
    return RefinementStudy(family, q, k_max, Ns, list(map(float, baseline)), norms, records, orders, th)


# ---------------------------------------------------------------------- audits


@dataclass
class ChainAudit:
    family: str
    q: float
    k_max: int
    Y: dict
    C: dict
    violations: list
    confirmations: list

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "q": q_key(self.q),
            "k_max": self.k_max,
            "Y": {str(k): v for k, v in sorted(self.Y.items())},
            "C": {str(k): v for k, v in sorted(self.C.items())},
            "violations": list(self.violations),
            "confirmations": list(self.confirmations),
        }


def chain_audit(smoothness, study: RefinementStudy, k_max: int | None = None) -> ChainAudit:
    """Check Y^k <= C^k <= Y^(k-1) order by order.

    A violation is (Y^k pass and C^k fail) or (C^k pass and Y^(k-1) fail).
    Strict inclusions seen in the data are kept as confirmations.
    """
    k_max = study.k_max if k_max is None else k_max
    if k_max > study.k_max or k_max > smoothness.k_max:
        raise ValueError(f"k_max {k_max} exceeds the orders covered by the reports")
    if schatten_index(smoothness.q) != study.q:
        raise ValueError("smoothness report and refinement study use different Schatten indices")
    Yv = {k: smoothness.verdict(k) for k in range(k_max + 1)}
    Cv = {k: study.verdict(k) for k in range(1, k_max + 1)}
    violations, confirmations = [], []
    for k in range(1, k_max + 1):
        if Yv[k] == PASS and Cv[k] == FAIL:
            violations.append({"order": k, "rule": f"Y{k} pass but C{k} fail"})
        if Cv[k] == PASS and Yv[k - 1] == FAIL:
            violations.append({"order": k, "rule": f"C{k} pass but Y{k - 1} fail"})
        if Cv[k] == PASS and Yv[k] == FAIL:
            confirmations.append({"order": k, "record": f"C{k} pass, Y{k}(norm) fail"})
        if Yv[k - 1] == PASS and Cv[k] == FAIL:
            confirmations.append({"order": k, "record": f"Y{k - 1} pass, C{k} fail"})
    return ChainAudit(smoothness.family or study.family, study.q, k_max, Yv, Cv, violations, confirmations)


def sobolev_embedding_check(study: RefinementStudy, continuity) -> dict:
    """C^1 bounded must imply a continuous orbit; returns a verdict record."""
    c1 = study.verdict(1)
    cont = continuity.verdict
    ok = c1 != PASS or cont == PASS
    return {"family": study.family, "q": q_key(study.q), "C1": c1, "continuity": cont,
            "verdict": PASS if ok else FAIL}
