import math

import numpy as np
import pytest

from heisenlab.criterion import (RefinementStudy, chain_audit, ck_scores, commutator_norms, growth_fit, roundoff_floor,
                                 sobolev_embedding_check)
from heisenlab.fitting import FAIL, INCONCLUSIVE, PASS, Thresholds
from heisenlab.orbit import ContinuityReport, OrderResult, SmoothnessReport
from heisenlab.suite import holder_half, identity, smooth_gaussian, triangle_wave
from heisenlab.weyl import PhaseSymbol, weyl_quantize
from tests.conftest import grid_for

GRIDS = [64, 128, 256, 512]


def test_identity_all_zero():
    Ys = identity().operators(GRIDS[:3])
    s = ck_scores(Ys, math.inf, 3)
    th = Thresholds()
    for name, values in s.norms.items():
        k = s.words[name]["order"]
        # roundoff only: below the floor of the worst word of that order
        assert max(values) <= roundoff_floor(Ys[-1].grid, (0,) * k, 1.0, th)
    assert s.orders == {1: PASS, 2: PASS, 3: PASS}


def test_needs_three_grids_and_valid_kmax():
    with pytest.raises(ValueError):
        ck_scores(identity().operators([64, 128]))
    with pytest.raises(ValueError):
        ck_scores(identity().operators(GRIDS[:3]), k_max=4)


def test_triangle_c1_bounded_with_unit_slope():
    # oracle: [phi(Q), P] has norm sup|phi'| = 1; the windowed norm is 1.0000001 at N = 512
    s = ck_scores(triangle_wave().operators(GRIDS), math.inf, 2)
    p = s.words["[iP]"]
    assert p["values"][-1] == pytest.approx(1.0, rel=0.1)
    assert abs(p["exponent"]) < 0.1
    assert s.orders == {1: PASS, 2: FAIL}
    assert s.words["[iP,iP]"]["exponent"] == pytest.approx(1.0, abs=0.05)


def test_holder_c1_unbounded():
    # oracle: |psi'| ~ 1/sqrt(dist) resolved to h gives growth N^(1/2)
    s = ck_scores(holder_half().operators(GRIDS), math.inf, 1)
    assert s.words["[iP]"]["exponent"] >= 0.25
    assert s.orders[1] == FAIL


def test_scale_equivariance():
    Ys = smooth_gaussian().operators(GRIDS[:3])
    lam = -2.5
    s1 = ck_scores(Ys, math.inf, 2)
    s2 = ck_scores([lam * Y for Y in Ys], math.inf, 2)
    top = max(max(v) for v in s1.norms.values())
    for w in s1.norms:
        assert np.allclose(s2.norms[w], abs(lam) * np.asarray(s1.norms[w]), rtol=1e-9, atol=1e-12 * top)
    assert s1.orders == s2.orders


def test_relative_norms_for_finite_q():
    s = ck_scores(triangle_wave().operators(GRIDS[:3]), 2, 1)
    vals = np.asarray(s.words["[iP]"]["values"])
    assert np.allclose(vals, np.asarray(s.norms["[iP]"]) / np.asarray(s.baseline))


def test_word_set_invariant_under_relabeling():
    # swapping the two coordinates of a symbol permutes the bracket words
    g = grid_for(16, n=2)
    rng = np.random.default_rng(7)
    c = rng.standard_normal(6)

    def symbol(x1, x2, k1, k2):
        return np.cos(c[0] * x1 + c[1] * k1) * np.sin(c[2] * x2 + c[3] * k2) + c[4] * np.cos(k1 - c[5] * x2)

    Y = weyl_quantize(PhaseSymbol.from_function(g, symbol))
    Ys = weyl_quantize(PhaseSymbol.from_function(g, lambda x1, x2, k1, k2: symbol(x2, x1, k2, k1)))
    words = [(i, j) for i in range(4) for j in range(4)] + [(i,) for i in range(4)]
    a = commutator_norms(Y, words, [math.inf])
    b = commutator_norms(Ys, words, [math.inf])
    swap = {0: 1, 1: 0, 2: 3, 3: 2}
    for w in words:
        assert b[tuple(swap[j] for j in w)][math.inf] == pytest.approx(a[w][math.inf], rel=1e-9)
    for k in (1, 2):
        ka = sorted(round(a[w][math.inf], 8) for w in words if len(w) == k)
        kb = sorted(round(b[w][math.inf], 8) for w in words if len(w) == k)
        assert ka == kb


def test_growth_fit_floor():
    Ns = [64, 128, 256]
    assert growth_fit(Ns, [1e-20, 1e-21, 1e-22], [1e-12] * 3) == (None, None)
    assert growth_fit(Ns, [1.0, 0.5, 1e-20], [1e-12] * 3)[1] == 0.0
    exp, ratio = growth_fit(Ns, [1.0, 2.0, 4.0], [0.0] * 3)
    assert exp == pytest.approx(1.0) and ratio == pytest.approx(2.0)


def test_study_roundtrip():
    s = ck_scores(triangle_wave().operators(GRIDS[:3]), math.inf, 1, family="tri")
    assert RefinementStudy.from_dict(s.to_dict()).to_dict() == s.to_dict()


def _smoothness(verdicts):
    cont = verdicts[0]
    orders = [OrderResult(k, v, v) for k, v in enumerate(verdicts)]
    c = ContinuityReport([0.1], [0.0], [0.0], None, cont, "norm-inf", 1.0)
    return SmoothnessReport("f", math.inf, len(verdicts) - 1, orders, {"norm": c, "strong": c})


def _study(verdicts):
    return RefinementStudy("f", math.inf, len(verdicts), [64, 128, 256], [1.0] * 3, {}, {},
                           {k + 1: v for k, v in enumerate(verdicts)})


def test_chain_audit_rules():
    tri = chain_audit(_smoothness([PASS, FAIL, FAIL]), _study([PASS, FAIL]))
    assert tri.passed
    assert {"order": 1, "record": "C1 pass, Y1(norm) fail"} in tri.confirmations
    hol = chain_audit(_smoothness([PASS, FAIL]), _study([FAIL]))
    assert hol.passed and hol.confirmations == [{"order": 1, "record": "Y0 pass, C1 fail"}]
    bad = chain_audit(_smoothness([PASS, PASS]), _study([FAIL]))
    assert [v["rule"] for v in bad.violations] == ["Y1 pass but C1 fail"]
    bad = chain_audit(_smoothness([FAIL, FAIL]), _study([PASS]))
    assert [v["rule"] for v in bad.violations] == ["C1 pass but Y0 fail"]
    inc = chain_audit(_smoothness([PASS, INCONCLUSIVE]), _study([INCONCLUSIVE]))
    assert inc.passed and not inc.confirmations
    with pytest.raises(ValueError):
        chain_audit(_smoothness([PASS, PASS]), _study([PASS, PASS]), k_max=2)


def test_embedding_check():
    ok = sobolev_embedding_check(_study([PASS]), _smoothness([PASS]).continuity["norm"])
    assert ok["verdict"] == PASS
    bad = sobolev_embedding_check(_study([PASS]), _smoothness([FAIL]).continuity["norm"])
    assert bad["verdict"] == FAIL
    assert sobolev_embedding_check(_study([FAIL]), _smoothness([FAIL]).continuity["norm"])["verdict"] == PASS
