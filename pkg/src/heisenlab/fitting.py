"""Growth/decay exponent fits and the verdict rules built on them."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import isotonic_regression

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
_RANK = {FAIL: 0, INCONCLUSIVE: 1, PASS: 2}


@dataclass(frozen=True)
class Thresholds:
    """Decision rules shared by every pipeline; embedded verbatim in reports.

    Attributes
    ----------
    bounded, unbounded : float
        Growth exponent below which a norm sequence counts as bounded, and at
        or above which it counts as unbounded.
    ratio : float
        Largest admissible ratio between the last two norms of a bounded sequence.
    cauchy_pass, cauchy_fail : float
        Relative Cauchy-tail levels for difference quotients.
    decay_pass, decay_fail : float
        Fitted decay order of the Cauchy gaps (or continuity moduli) that
        counts as convergence, respectively as stagnation.
    continuity : float
        Relative modulus at the smallest radius that certifies continuity.
    zero : float
        Norms below ``zero * scale`` are treated as exact zeros.
    """

    bounded: float = 0.1
    unbounded: float = 0.25
    ratio: float = 1.15
    cauchy_pass: float = 1e-4
    cauchy_fail: float = 1e-1
    decay_pass: float = 0.25
    decay_fail: float = 0.1
    continuity: float = 1e-3
    zero: float = 1e-12

    def __post_init__(self):
        if not self.bounded < self.unbounded:
            raise ValueError("thresholds: bounded must be smaller than unbounded")
        if not self.cauchy_pass < self.cauchy_fail:
            raise ValueError("thresholds: cauchy_pass must be smaller than cauchy_fail")
        if not self.decay_fail < self.decay_pass:
            raise ValueError("thresholds: decay_fail must be smaller than decay_pass")
        if self.ratio <= 1 or self.continuity <= 0 or self.zero < 0:
            raise ValueError("thresholds: ratio > 1, continuity > 0 and zero >= 0 are required")

    def to_dict(self) -> dict:
        return asdict(self)


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(ys) against log(xs)."""
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def monotone_fit(values, increasing=True) -> np.ndarray:
    """Isotonic least-squares fit, used to clean sampling noise before a slope fit."""
    res = isotonic_regression(np.asarray(values, dtype=float), increasing=increasing)
    return np.asarray(res.x)


def worst(verdicts) -> str:
    verdicts = list(verdicts)
    if not verdicts:
        return PASS
    return min(verdicts, key=_RANK.__getitem__)


def at_most(verdict: str, cap: str) -> str:
    return worst([verdict, cap])


def growth_verdict(exponent, last_ratio, th: Thresholds) -> str:
    """Bounded/unbounded rule for a norm sequence over N-doubling.

    ``exponent is None`` marks an identically zero sequence.
    """
    if exponent is None:
        return PASS
    if exponent >= th.unbounded:
        return FAIL
    if exponent < th.bounded and last_ratio is not None and last_ratio < th.ratio:
        return PASS
    return INCONCLUSIVE


def cauchy_verdict(tail, order, th: Thresholds) -> str:
    """Convergence rule for a gap sequence measured at shrinking steps."""
    if tail is None:
        return INCONCLUSIVE
    if tail < th.cauchy_pass:
        return PASS
    if order is not None and order >= th.decay_pass:
        return PASS
    if order is not None and order < th.decay_fail and tail > th.cauchy_fail:
        return FAIL
    return INCONCLUSIVE


def refinement_growth(Ns, values, floor=0.0):
    """Growth exponent of `values` across the last refinement step in `Ns`.

    `values` holds one scalar or one curve per grid.  For curves the smallest
    exponent over the curve is returned: a family that is not uniform in N
    grows at every scale, while under-resolution only lifts the points that
    sit close to the grid spacing.
    """
    if len(Ns) < 2:
        return None
    v1 = np.atleast_1d(np.asarray(values[-2], dtype=float))
    v2 = np.atleast_1d(np.asarray(values[-1], dtype=float))
    keep = (v1 > floor) & (v2 > floor)
    if not keep.any():
        return None
    rates = np.log(v2[keep] / v1[keep]) / math.log(Ns[-1] / Ns[-2])
    return float(rates.min())


def uniform_cauchy_verdict(tail, order, growth, th: Thresholds) -> str:
    """Cauchy rule plus uniformity in N: gaps that grow under refinement fail."""
    if growth is not None and growth >= th.unbounded and tail is not None and tail > th.cauchy_pass:
        return FAIL
    return cauchy_verdict(tail, order, th)


def decay_order(steps, gaps, floor=0.0):
    """Fitted slope of log(gap) against log(step); None if every gap is below `floor`."""
    steps = np.asarray(steps, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    keep = gaps > floor
    if keep.sum() < 2:
        return None
    return loglog_slope(steps[keep], gaps[keep])


def finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None
