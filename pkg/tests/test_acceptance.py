"""Acceptance criteria, one printed pass/fail line each.

Criteria 3, 4, 5, 7, 8 and 9 read the report of two fresh `full-audit` runs
(about four minutes each on one core); the rest evaluate directly.
"""

import json
import math

import numpy as np
import pytest

from heisenlab.cli import main
from heisenlab.grid import HeisenbergElement, build_generators, conj_action, rho_unitary
from heisenlab.operators import Operator, schatten_norm
from heisenlab.orbit import gradient_check, one_param_reduction_check
from heisenlab.suite import full_suite, garding_suite, random_hermitian, smooth_gaussian, weyl_suite
from tests.conftest import ACCEPTANCE_LINES, grid_for, random_matrix

pytestmark = pytest.mark.slow

TRI = "triangle_wave(period=1,slope=1)"
HOL = "holder_half(period=1)"


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def audit(tmp_path_factory):
    root = tmp_path_factory.mktemp("full-audit")
    codes = [main(["full-audit", "--out", str(root / name), "--no-cache"]) for name in ("run1", "run2")]
    blobs = [(root / name / "report.json").read_bytes() for name in ("run1", "run2")]
    return {"codes": codes, "blobs": blobs, "report": json.loads(blobs[0])}


def test_1_representation_integrity():
    unit = iso = central = 0.0
    for N in (64, 128, 256):
        g = grid_for(N)
        rng = np.random.default_rng(N)
        Y = Operator(random_matrix(rng, N), g)
        base = {q: schatten_norm(Y, q) for q in (1, 2, math.inf)}
        for _ in range(50):
            a, b, c = rng.uniform(-2, 2, 3)
            U = rho_unitary(g, HeisenbergElement(a, b, c)).entries
            unit = max(unit, float(np.abs(U @ U.conj().T - np.eye(N)).max()))
        for _ in range(5):
            el = HeisenbergElement(*rng.uniform(-2, 2, 3))
            Z = conj_action(g, el, Y)
            iso = max(iso, max(abs(schatten_norm(Z, q) / base[q] - 1) for q in base))
            Zc = conj_action(g, HeisenbergElement(0.0, 0.0, float(rng.uniform(-10, 10))), Y)
            central = max(central, float(np.abs(Zc.entries - Y.entries).max()))
    ok = unit <= 1e-10 and iso <= 1e-10 and central <= 1e-14
    record(1, "representation integrity", ok,
           f"unitarity {unit:.1e} <= 1e-10, isometry S1/S2/Sinf {iso:.1e} <= 1e-10, central {central:.1e} <= 1e-14")


def test_2_gradient_check():
    Y = smooth_gaussian().operators([128])[0]
    gens = build_generators(Y.grid)
    errs = [gradient_check(Y, gens, j, step=1e-4) for j in (0, 1)]
    record(2, "gradient check", max(errs) <= 1e-4,
           f"windowed rel. error iP {errs[0]:.1e}, iQ {errs[1]:.1e} <= 1e-4 at N=128, step 1e-4")


def test_3_triangle_strictness(audit):
    rep = audit["report"]["results"]
    study = rep["refine"][TRI]["inf"]
    k1 = {w: r for w, r in study["words"].items() if r["order"] == 1}
    exps = [r["exponent"] for r in k1.values() if r["exponent"] is not None]
    value = study["words"]["[iP]"]["values"][-1]
    orders = rep["classify"][TRI]["inf"]["orders"][1]
    ok = (study["N"] == [64, 128, 256, 512, 1024] and max(exps) < 0.1 and abs(value - 1) <= 0.1
          and study["orders"]["1"] == "pass" and orders["norm"] == "fail" and orders["strong"] == "pass")
    record(3, "triangle wave in C1 minus Y1", ok,
           f"k=1 exponent {max(exps):.2e} < 0.1, |[iP,Y]| at N=1024 = {value:.6f} (target 1), "
           f"C1 {study['orders']['1']}, Y1 norm {orders['norm']}, Y1 strong {orders['strong']}")


def test_4_holder_strictness(audit):
    rep = audit["report"]["results"]
    cls = rep["classify"][HOL]["inf"]
    modulus = cls["continuity"]["norm"]
    exp_c = rep["refine"][HOL]["inf"]["words"]["[iP]"]["exponent"]
    y0 = cls["orders"][0]["norm"]
    ok = y0 == "pass" and 0.3 <= modulus["exponent"] <= 0.7 and exp_c >= 0.25
    record(4, "Holder-1/2 in Y0 minus C1", ok,
           f"Y0 {y0}, modulus exponent {modulus['exponent']:.3f} in [0.3, 0.7], k=1 growth exponent {exp_c:.3f} >= 0.25")


def test_5_chain_and_embedding(audit):
    report = audit["report"]
    a = report["audit"]
    chains = report["results"]["chain"]
    fams = {f.family_id for f in full_suite()}
    covered = set(chains) == fams and all(set(v) == {"inf", "2"} for v in chains.values())
    k_max = all(c["chain"]["k_max"] == 3 for v in chains.values() for c in v.values())
    ok = covered and k_max and not a["violations"] and not a["mismatches"]
    record(5, "inclusion chain and embedding", ok,
           f"{len(fams)} families x q in {{2, inf}} at k_max=3: {len(a['violations'])} violations, "
           f"{len(a['mismatches'])} expectation mismatches")


def test_6_one_parameter_reduction():
    worst, failures, count = -math.inf, [], 0
    for fam in full_suite() + [random_hermitian()]:
        Y = fam.operators([64])[0]
        for delta in (0.1, 0.01):
            r = one_param_reduction_check(Y, delta, samples=100, slack=1e-9)
            count += 1
            worst = max(worst, r["max_excess"])
            if not r["holds"]:
                failures.append((fam.family_id, delta))
    record(6, "one-parameter reduction", not failures,
           f"{count} (member, delta) cases x 100 samples at N=64, max excess {worst:.1e} (slack 1e-9), "
           f"failures {failures}")


def test_7_garding_density(audit):
    rows = audit["report"]["results"]["garding"]
    fams = {f.family_id for f in garding_suite()}
    bad = [f for f, r in rows.items() if r["verdict"] != "pass" or r["q"] != "inf"]
    ok = set(rows) == fams and not bad
    record(7, "Garding density", ok,
           f"{len(rows)} families, eps in {{0.5, 0.25, 0.1}}: decreasing deviation and C3 pass except {bad}")


def test_8_weyl_correspondence(audit):
    weyl = audit["report"]["results"]["weyl"]
    calc = weyl["calculus"]
    ident = max(c["identity_error"] for c in calc)
    rt = max(c["roundtrip_error"] for c in calc)
    spread = max(c["plancherel_spread"] for c in calc)
    corr = weyl["correspondence"]
    agree = {f: r["verdict"] == "pass" and r["p"] == "inf" and r["k_max"] == 3 for f, r in corr.items()}
    ok = (ident == 0.0 and rt <= 1e-10 and spread < 1e-8
          and set(corr) == {f.family_id for f in weyl_suite()} and all(agree.values()))
    classes = ", ".join(f"{f.split('(')[0]} {r['classification']}" for f, r in sorted(corr.items()))
    record(8, "Weyl correspondence", ok,
           f"Op(1)-I {ident:.1e}, round trip {rt:.1e}, Plancherel spread {spread:.1e}; agreement at p=inf: {classes}")


def test_9_determinism(audit):
    same = audit["blobs"][0] == audit["blobs"][1]
    record(9, "determinism", same and audit["codes"] == [0, 0],
           f"two fresh full-audit runs: report.json byte-identical {same}, exit codes {audit['codes']}")
