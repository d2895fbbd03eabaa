"""Run configuration: a single JSON document, validated before any work starts."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from heisenlab.fitting import Thresholds
from heisenlab.garding import DEFAULT_WIDTHS, DENSITY_GRIDS, METHODS
from heisenlab.operators import schatten_index
from heisenlab.suite import (BALANCED, CONSTRUCTORS, audit_suite, counterexample_suite, full_suite, garding_suite,
                             make_family, weyl_suite)

COMMANDS = ("classify", "refine-study", "counterexamples", "garding", "weyl-audit", "full-audit")
PIPELINES = ("orbit", "criterion", "garding", "weyl")
MIN_N = 16

DEFAULT_GRIDS = {
    "orbit": (128, 256, 512, 1024),
    "criterion": (64, 128, 256, 512, 1024),
    "garding": DENSITY_GRIDS,
    "weyl": (64, 128, 256, 512, 1024),
}

_DEFAULT_FAMILIES = {
    "classify": audit_suite,
    "refine-study": audit_suite,
    "counterexamples": counterexample_suite,
    "garding": garding_suite,
    "weyl-audit": weyl_suite,
    "full-audit": full_suite,
}
# full-audit defaults per pipeline; explicit config families apply everywhere
_FULL_AUDIT = {"orbit": full_suite, "criterion": full_suite, "garding": garding_suite, "weyl": weyl_suite}


class ConfigError(ValueError):
    """Invalid configuration; `field` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field '{field_name}': {message}")
        self.field = field_name


def _grid_list(name, values) -> tuple:
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigError(name, "must be a non-empty list of grid sizes")
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(name, f"grid size {v!r} is not an integer")
        if v < MIN_N or v % 2:
            raise ConfigError(name, f"grid size {v} must be even and at least {MIN_N}")
        out.append(v)
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError(name, f"grid sizes must be strictly increasing, got {out}")
    return tuple(out)


def _family_entry(i, entry):
    name = f"families[{i}]"
    if isinstance(entry, str):
        entry = {"name": entry}
    if not isinstance(entry, dict) or "name" not in entry:
        raise ConfigError(name, "expected a family name or an object with 'name' and 'params'")
    extra = set(entry) - {"name", "params"}
    if extra:
        raise ConfigError(name, f"unknown keys {sorted(extra)}")
    if entry["name"] not in CONSTRUCTORS:
        raise ConfigError(f"{name}.name", f"unknown family {entry['name']!r}; known: {sorted(CONSTRUCTORS)}")
    params = entry.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError(f"{name}.params", "must be an object")
    try:
        return make_family(entry["name"], **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}.params", str(exc)) from None


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one CLI run.

    Attributes
    ----------
    command : str
        Pipeline to execute, one of ``COMMANDS``.
    grids : dict
        ``{pipeline: tuple of N}`` for the orbit, criterion, garding and weyl
        pipelines.
    length : None, float or "balanced"
        Overrides each family's torus length rule when set.
    families : tuple of FamilySpec
    q : tuple of float
        Schatten indices for the orbit and commutator pipelines.
    p : float
        Lebesgue exponent of the Weyl correspondence audit.
    """

    command: str
    n: int = 1
    grids: dict = field(default_factory=lambda: dict(DEFAULT_GRIDS))
    length: object = None
    families: tuple = ()
    q: tuple = (math.inf, 2.0)
    p: float = math.inf
    k_max: int = 3
    thresholds: Thresholds = field(default_factory=Thresholds)
    seed: int = 0
    widths: tuple = DEFAULT_WIDTHS
    garding_q: float = math.inf
    quadrature: str = "lattice"
    out: str | None = None
    cache: bool = True

    def resolved_families(self, pipeline: str | None = None) -> list:
        if self.families:
            fams = list(self.families)
        elif self.command == "full-audit" and pipeline is not None:
            fams = _FULL_AUDIT[pipeline]()
        else:
            fams = _DEFAULT_FAMILIES[self.command]()
        if self.length is None:
            return fams
        return [dataclasses.replace(f, length=self.length) for f in fams]

    def to_dict(self) -> dict:
        """Canonical form embedded in reports (output location excluded)."""
        return {
            "command": self.command,
            "n": self.n,
            "grids": {k: list(v) for k, v in sorted(self.grids.items())},
            "length": self.length,
            "families": {k: [f.to_dict() for f in self.resolved_families(k)] for k in PIPELINES},
            "q": ["inf" if math.isinf(q) else q for q in self.q],
            "p": "inf" if math.isinf(self.p) else self.p,
            "k_max": self.k_max,
            "thresholds": self.thresholds.to_dict(),
            "seed": self.seed,
            "widths": list(self.widths),
            "garding_q": "inf" if math.isinf(self.garding_q) else self.garding_q,
            "quadrature": self.quadrature,
        }


_KEYS = {"command", "n", "grids", "length", "families", "q", "p", "k_max", "thresholds", "seed",
         "widths", "garding_q", "quadrature", "out", "cache"}


def _index(name, value, allow_list=False):
    values = value if (allow_list and isinstance(value, (list, tuple))) else [value]
    if allow_list and not values:
        raise ConfigError(name, "must not be empty")
    try:
        out = tuple(schatten_index(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, str(exc)) from None
    return out if allow_list else out[0]


def parse_config(data: dict, command: str | None = None) -> RunConfig:
    """Validate a decoded JSON document; `command` comes from the command line."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "the configuration must be a JSON object")
    unknown = set(data) - _KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    cfg_cmd = data.get("command")
    if command is None:
        command = cfg_cmd
    elif cfg_cmd is not None and cfg_cmd != command:
        raise ConfigError("command", f"config says {cfg_cmd!r} but {command!r} was requested")
    if command not in COMMANDS:
        raise ConfigError("command", f"must be one of {COMMANDS}, got {command!r}")

    n = data.get("n", 1)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError("n", "must be a positive integer")

    grids = dict(DEFAULT_GRIDS)
    raw = data.get("grids")
    if isinstance(raw, list):
        grids = {k: _grid_list("grids", raw) for k in PIPELINES}
    elif isinstance(raw, dict):
        for k, v in raw.items():
            if k not in PIPELINES:
                raise ConfigError(f"grids.{k}", f"unknown pipeline; expected one of {PIPELINES}")
            grids[k] = _grid_list(f"grids.{k}", v)
    elif raw is not None:
        raise ConfigError("grids", "must be a list of N or an object keyed by pipeline")
    for k in ("criterion", "weyl", "garding"):
        if len(grids[k]) < 3:
            raise ConfigError(f"grids.{k}", "a refinement study needs at least 3 grids")

    length = data.get("length")
    if length is not None and length != BALANCED:
        if isinstance(length, bool) or not isinstance(length, (int, float)) or not length > 0:
            raise ConfigError("length", f"must be null, a positive number or {BALANCED!r}")
        length = float(length)

    families = tuple(_family_entry(i, e) for i, e in enumerate(data.get("families") or []))

    k_max = data.get("k_max", 3)
    if isinstance(k_max, bool) or not isinstance(k_max, int) or not 1 <= k_max <= 3:
        raise ConfigError("k_max", f"must be an integer in 1..3, got {k_max!r}")

    th = data.get("thresholds", {}) or {}
    if not isinstance(th, dict):
        raise ConfigError("thresholds", "must be an object")
    names = {f.name for f in dataclasses.fields(Thresholds)}
    for key in th:
        if key not in names:
            raise ConfigError(f"thresholds.{key}", "unknown threshold")
    try:
        thresholds = Thresholds(**{k: float(v) for k, v in th.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError("thresholds", str(exc)) from None

    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", "must be a non-negative integer")

    widths = data.get("widths", list(DEFAULT_WIDTHS))
    if (not isinstance(widths, list) or not widths
            or not all(isinstance(w, (int, float)) and not isinstance(w, bool) and w > 0 for w in widths)):
        raise ConfigError("widths", "must be a non-empty list of positive numbers")
    if any(b >= a for a, b in zip(widths, widths[1:])):
        raise ConfigError("widths", "must be strictly decreasing")

    quadrature = data.get("quadrature", "lattice")
    if quadrature not in METHODS:
        raise ConfigError("quadrature", f"must be one of {METHODS}")

    out = data.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out", "must be a path string")
    cache = data.get("cache", True)
    if not isinstance(cache, bool):
        raise ConfigError("cache", "must be true or false")

    return RunConfig(
        command=command,
        n=n,
        grids=grids,
        length=length,
        families=families,
        q=_index("q", data.get("q", ["inf", 2]), allow_list=True),
        p=_index("p", data.get("p", "inf")),
        k_max=k_max,
        thresholds=thresholds,
        seed=seed,
        widths=tuple(float(w) for w in widths),
        garding_q=_index("garding_q", data.get("garding_q", "inf")),
        quadrature=quadrature,
        out=out,
        cache=cache,
    )


def load_config(path, command: str | None = None) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"{path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    return parse_config(data, command)
