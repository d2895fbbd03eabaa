import math

import numpy as np
import pytest

from heisenlab.fitting import FAIL, PASS
from heisenlab.grid import HeisenbergElement, build_momentum, build_position, conj_action
from heisenlab.operators import Operator, schatten_norm
from heisenlab.suite import chirp, constant, separable_trig
from heisenlab.weyl import (PhaseSymbol, calculus_checks, correspondence_audit, multi_indices, periodize,
                            plancherel_constant, read_symbol_csv, symbol_class_score, symbol_derivative,
                            symbol_derivative_norms, weyl_quantize, weyl_symbol, write_symbol_csv)
from tests.conftest import grid_for


def random_symbol(g, rng, real=False):
    vals = rng.standard_normal(g.shape * 2)
    if not real:
        vals = vals + 1j * rng.standard_normal(g.shape * 2)
    return PhaseSymbol(vals, g)


def test_quantize_one_is_identity_exactly():
    g = grid_for(64)
    assert np.array_equal(weyl_quantize(PhaseSymbol(np.ones((64, 64)), g)).entries, np.eye(64))
    a = weyl_symbol(Operator(np.eye(64), g))
    assert np.abs(a.values - 1).max() < 1e-14


def test_linear_symbols_quantize_to_generators():
    g = grid_for(64)
    Q, P = build_position(g).entries, build_momentum(g).entries
    assert np.abs(weyl_quantize(PhaseSymbol.from_function(g, lambda x, k: x)).entries - Q).max() <= 1e-8
    assert np.abs(weyl_quantize(PhaseSymbol.from_function(g, lambda x, k: k)).entries - P).max() <= 1e-8
    a = weyl_symbol(Operator(Q, g))
    assert np.abs(a.values - PhaseSymbol.from_function(g, lambda x, k: x + 0 * k).values).max() <= 1e-8


def test_real_symbol_hermitian_and_adjoint(rng):
    g = grid_for(64)
    Y = weyl_quantize(random_symbol(g, rng, real=True)).entries
    assert np.abs(Y - Y.conj().T).max() <= 1e-10
    a = random_symbol(g, rng)
    assert np.abs(weyl_quantize(a.conj()).entries - weyl_quantize(a).entries.conj().T).max() <= 1e-10


def test_roundtrip_and_plancherel(rng):
    g = grid_for(64)
    consts = []
    for _ in range(10):
        a = random_symbol(g, rng)
        Y = weyl_quantize(a)
        assert np.abs(weyl_symbol(Y).values - a.values).max() < 1e-10
        consts.append(schatten_norm(Y, 2) / np.linalg.norm(a.values))
    assert np.ptp(consts) / np.mean(consts) < 1e-8
    assert np.mean(consts) == pytest.approx(plancherel_constant(g), rel=1e-12)


def test_translation_covariance(rng):
    g = grid_for(64)
    a = random_symbol(g, rng)
    Y = weyl_quantize(a)
    for s, r in [(3, 0), (0, 5), (-7, 2)]:
        # a(x - s h, xi - r dxi); exp(i a P) shifts by -a, so the element is (-s h, r dxi)
        shifted = PhaseSymbol(np.roll(np.roll(a.values, s, axis=0), r, axis=1), g)
        el = HeisenbergElement(-s * g.h, r * g.dxi)
        assert np.abs(weyl_quantize(shifted).entries - conj_action(g, el, Y).entries).max() <= 1e-9


def test_grid_mismatch():
    g = grid_for(32)
    with pytest.raises(ValueError):
        PhaseSymbol(np.ones((16, 16)), g)
    with pytest.raises(ValueError):
        PhaseSymbol(np.full((32, 32), np.nan), g)


def test_multi_indices():
    assert list(multi_indices(2, 2)) == [(2, 0), (1, 1), (0, 2)]
    assert len(list(multi_indices(4, 3))) == 20


def test_spectral_derivative_of_trig():
    g = grid_for(64)
    a = PhaseSymbol.from_function(g, lambda x, k: np.sin(g.dxi * 3 * x) * np.cos(g.h * 2 * k))
    d = symbol_derivative(a, (1, 0))
    expect = PhaseSymbol.from_function(g, lambda x, k: 3 * g.dxi * np.cos(g.dxi * 3 * x) * np.cos(g.h * 2 * k)).values
    assert np.abs(d - expect).max() < 1e-10


def test_periodize_keeps_constants():
    g = grid_for(64)
    a = PhaseSymbol(np.full((64, 64), 2.5), g)
    assert np.array_equal(periodize(a).values, a.values)


def test_constant_symbol_all_derivatives_zero():
    norms = symbol_derivative_norms(constant().symbol(grid_for(64)), math.inf, 3)
    assert all(v == 0 for k in (1, 2, 3) for v in norms[k].values())


@pytest.mark.parametrize("N", [128, 256])
def test_separable_trig_derivatives_bounded_by_one(N):
    norms = symbol_derivative_norms(separable_trig().symbol(grid_for(N)), math.inf, 3)
    assert max(max(d.values()) for d in norms.values()) <= 1 + 1e-6


def test_chirp_first_order_unbounded():
    # oracle: |d_x a| ~ 2 rate |x| grows with the window, exponent 0.58 over N = 64..512
    s = symbol_class_score([chirp().symbol(grid_for(N)) for N in (64, 128, 256, 512)], math.inf, 1)
    assert s.derivatives["d(1,0)"]["exponent"] >= 0.25
    assert s.orders[1] == FAIL


def test_class_score_validation():
    syms = [constant().symbol(grid_for(N)) for N in (64, 32)]
    with pytest.raises(ValueError):
        symbol_class_score(syms)
    with pytest.raises(ValueError):
        symbol_class_score(syms[:1], k_max=4)
    with pytest.raises(ValueError):
        symbol_class_score(syms[:1], p=0.5)


def test_correspondence_constant_agrees():
    r = correspondence_audit([constant().symbol(grid_for(N)) for N in (64, 128, 256)], math.inf, 3)
    assert r["verdict"] == PASS and r["classification"] == "bounded"
    assert all(o["agree"] for o in r["orders"].values())


def test_calculus_checks_record():
    r = calculus_checks(grid_for(64))
    assert r["passed"] and r["identity_error"] == 0.0


def test_symbol_csv_roundtrip(tmp_path, rng):
    g = grid_for(16)
    a = random_symbol(g, rng)
    write_symbol_csv(a, tmp_path / "a.csv")
    back = read_symbol_csv(tmp_path / "a.csv", g)
    assert np.abs(back.values - a.values).max() < 1e-12
