"""Named operator and symbol families used by the audits.

Multiplication families live on a fixed torus of length 2 so that refining N
only sharpens the spatial resolution of a fixed function.  Symbol families
use the balanced rule L = sqrt(2*pi*N), which gives the position torus
[-L/2, L/2) and the frequency band [-xi_max, xi_max) the same half-width
sqrt(pi*N/2), so refinement grows phase space evenly in both directions.  Every family carries the classification it is expected to receive
under the operator norm; the acceptance harness checks pipeline output
against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from heisenlab.fitting import FAIL, PASS
from heisenlab.grid import GridSpec
from heisenlab.operators import Operator
from heisenlab.weyl import PhaseSymbol, weyl_quantize

BALANCED = "balanced"
MULTIPLICATION_L = 2.0


def balanced_length(N: int) -> float:
    return math.sqrt(2.0 * math.pi * N)


@dataclass(frozen=True)
class FamilySpec:
    """A named family Y_N, one operator per grid.

    Parameters
    ----------
    name : str
        Registry key, e.g. ``"triangle_wave"``.
    params : tuple of (str, float)
        Sorted parameter items; use :attr:`param_dict` for lookups.
    kind : {"operator", "symbol"}
        Symbol families are quantized with the Weyl calculus.
    length : float or "balanced"
        Torus length rule.
    expected : mapping
        ``{"Y": {k: verdict}, "Y_strong": {...}, "C": {...}}`` under the
        operator norm; orders that are not listed carry no expectation.
    """

    name: str
    params: tuple = ()
    kind: str = "operator"
    length: object = MULTIPLICATION_L
    expected: object = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.name not in _BUILDERS:
            raise ValueError(f"unknown family {self.name!r}; known: {sorted(_BUILDERS)}")
        object.__setattr__(self, "params", tuple(sorted((str(k), float(v)) for k, v in dict(self.params).items())))
        exp = {key: MappingProxyType(dict(val)) for key, val in dict(self.expected).items()}
        object.__setattr__(self, "expected", MappingProxyType(exp))

    def __reduce__(self):
        # mapping proxies do not pickle; rebuild from plain dicts
        expected = {k: dict(v) for k, v in self.expected.items()}
        return (FamilySpec, (self.name, self.params, self.kind, self.length, expected))

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    @property
    def family_id(self) -> str:
        inner = ",".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.name}({inner})"

    def grid(self, N: int, n: int = 1) -> GridSpec:
        L = balanced_length(N) if self.length == BALANCED else float(self.length)
        return GridSpec(n, N, L)

    def symbol(self, grid: GridSpec) -> PhaseSymbol:
        if self.kind != "symbol":
            raise TypeError(f"{self.name} is not a symbol family")
        func = _BUILDERS[self.name](grid, **self.param_dict)
        return PhaseSymbol.from_function(grid, func, self.family_id)

    def build(self, grid: GridSpec) -> Operator:
        if self.kind == "symbol":
            return weyl_quantize(self.symbol(grid))
        entries = _BUILDERS[self.name](grid, **self.param_dict)
        return Operator(entries, grid, self.family_id)

    def operators(self, Ns, n: int = 1) -> list[Operator]:
        return [self.build(self.grid(N, n)) for N in Ns]

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.param_dict}


def _check_period(grid: GridSpec, period: float) -> None:
    if period <= 0:
        raise ValueError("period must be positive")
    ratio = grid.L / period
    if abs(ratio - round(ratio)) > 1e-9:
        raise ValueError(f"period {period} does not divide the torus length {grid.L}")


def _multiplication(grid: GridSpec, profile) -> np.ndarray:
    vals = np.ones(grid.dim)
    for axis in range(grid.n):
        vals = vals * profile(grid.coords(axis))
    return np.diag(vals.astype(complex))


def _identity(grid):
    return np.eye(grid.dim, dtype=complex)


def _triangle(grid, period=1.0, slope=1.0):
    _check_period(grid, period)
    # kinks at period/4 + j*period/2, away from the probe centre
    def tri(x):
        return slope * (np.abs(np.mod(x - period / 4, period) - period / 2) - period / 4)

    return _multiplication(grid, tri)


def _holder(grid, period=1.0):
    _check_period(grid, period)

    def root_dist(x):
        r = np.mod(x, period)
        return np.sqrt(np.minimum(r, period - r))

    return _multiplication(grid, root_dist)


def _gaussian(grid, width=0.1):
    if width <= 0:
        raise ValueError("width must be positive")
    return _multiplication(grid, lambda x: np.exp(-0.5 * (x / width) ** 2))


def _random_hermitian(grid, seed=0):
    rng = np.random.default_rng([int(seed), grid.n, grid.N])
    G = rng.standard_normal((grid.dim, grid.dim)) + 1j * rng.standard_normal((grid.dim, grid.dim))
    return (G + G.conj().T) / (2.0 * math.sqrt(grid.dim))


def _const_symbol(grid, value=1.0):
    return lambda *z: np.full(z[0].shape, value)


def _coordinate_symbol(grid, axis=0.0):
    axis = int(axis)
    if not 0 <= axis < 2 * grid.n:
        raise ValueError(f"phase-space axis {axis} out of range")
    return lambda *z: z[axis]


def _trig_symbol(grid, amplitude=1.0):
    # not periodic on the torus; the jump at the edge lies outside the window
    n = grid.n

    def a(*z):
        out = amplitude * np.ones(z[0].shape)
        for i in range(n):
            out = out * np.sin(z[i]) * np.cos(z[n + i])
        return out

    return a


#: keeps the local frequency 2*rate*|x| below xi_max/2 on the whole torus
#: under the balanced length rule, for every N
CHIRP_RATE = 0.25


def _chirp_symbol(grid, rate=CHIRP_RATE):
    return lambda *z: np.sin(rate * sum(z[i] ** 2 for i in range(grid.n)))


_BUILDERS = {
    "identity": _identity,
    "triangle_wave": _triangle,
    "holder_half": _holder,
    "smooth_gaussian": _gaussian,
    "random_hermitian": _random_hermitian,
    "constant": _const_symbol,
    "coordinate": _coordinate_symbol,
    "separable_trig": _trig_symbol,
    "chirp": _chirp_symbol,
}

_ALL_PASS = {"Y": {k: PASS for k in range(4)}, "Y_strong": {k: PASS for k in range(4)},
             "C": {k: PASS for k in range(1, 4)}}


def identity() -> FamilySpec:
    return FamilySpec("identity", (), "operator", MULTIPLICATION_L, _ALL_PASS)


def triangle_wave(period: float = 1.0, slope: float = 1.0) -> FamilySpec:
    expected = {"Y": {0: PASS, 1: FAIL}, "Y_strong": {0: PASS, 1: PASS}, "C": {1: PASS, 2: FAIL}}
    return FamilySpec("triangle_wave", {"period": period, "slope": slope}, "operator", MULTIPLICATION_L, expected)


def holder_half(period: float = 1.0) -> FamilySpec:
    expected = {"Y": {0: PASS, 1: FAIL}, "Y_strong": {0: PASS}, "C": {1: FAIL}}
    return FamilySpec("holder_half", {"period": period}, "operator", MULTIPLICATION_L, expected)


def smooth_gaussian(width: float = 0.1) -> FamilySpec:
    return FamilySpec("smooth_gaussian", {"width": width}, "operator", MULTIPLICATION_L, _ALL_PASS)


def random_hermitian(seed: int = 0) -> FamilySpec:
    """Seeded random Hermitian matrix per grid; not a continuum family, so no expectations."""
    return FamilySpec("random_hermitian", {"seed": seed}, "operator", MULTIPLICATION_L, {})


def constant(value: float = 1.0) -> FamilySpec:
    return FamilySpec("constant", {"value": value}, "symbol", BALANCED, _ALL_PASS)


def coordinate(axis: int = 0) -> FamilySpec:
    return FamilySpec("coordinate", {"axis": axis}, "symbol", BALANCED, {})


def separable_trig(amplitude: float = 1.0) -> FamilySpec:
    return FamilySpec("separable_trig", {"amplitude": amplitude}, "symbol", BALANCED, _ALL_PASS)


def chirp(rate: float = CHIRP_RATE) -> FamilySpec:
    return FamilySpec("chirp", {"rate": rate}, "symbol", BALANCED, {"C": {1: FAIL}})


CONSTRUCTORS = {
    "identity": identity,
    "triangle_wave": triangle_wave,
    "holder_half": holder_half,
    "smooth_gaussian": smooth_gaussian,
    "random_hermitian": random_hermitian,
    "constant": constant,
    "coordinate": coordinate,
    "separable_trig": separable_trig,
    "chirp": chirp,
}


def make_family(name: str, **params) -> FamilySpec:
    if name not in CONSTRUCTORS:
        raise ValueError(f"unknown family {name!r}; known: {sorted(CONSTRUCTORS)}")
    return CONSTRUCTORS[name](**params)


def audit_suite() -> list[FamilySpec]:
    """Continuum families audited end to end (chain, embedding, smoothing)."""
    return [identity(), smooth_gaussian(), triangle_wave(), holder_half(), separable_trig()]


def weyl_suite() -> list[FamilySpec]:
    return [constant(), separable_trig(), chirp()]


def full_suite() -> list[FamilySpec]:
    """Every family with a continuum limit: the audit suite plus the remaining Weyl symbols."""
    return audit_suite() + [constant(), chirp()]


def garding_suite() -> list[FamilySpec]:
    """Families smoothed by the density study.

    The chirp is left out: the k-th derivative of its smoothed symbol peaks
    near |x| = sqrt(k) / (2 rate eps), outside the analysis window for every
    grid below N of about 2000, so the refinement study sees growth.
    """
    return audit_suite() + [constant()]


def counterexample_suite() -> list[FamilySpec]:
    """The two strictness witnesses: Lipschitz but not C^1, and Holder-1/2 but not Lipschitz."""
    return [triangle_wave(), holder_half()]
