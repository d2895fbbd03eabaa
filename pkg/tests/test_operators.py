import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenlab.grid import build_generators, build_momentum, build_position
from heisenlab.operators import (Operator, commutator, conjugate_index, duality_pairing, from_bytes, from_json,
                                 iterated_commutator, load, save, schatten_index, schatten_norm, to_bytes, to_json)
from tests.conftest import grid_for, random_matrix


def test_schatten_diag_examples():
    Y = Operator(np.diag([3.0, 4.0]))
    assert schatten_norm(Y, 1) == pytest.approx(7.0)
    assert schatten_norm(Y, math.inf) == pytest.approx(4.0)
    assert schatten_norm(Y, 2) == pytest.approx(5.0)


@pytest.mark.parametrize("bad", [0, 0.5, -1, float("nan")])
def test_schatten_index_rejects(bad):
    with pytest.raises(ValueError):
        schatten_index(bad)


def test_schatten_index_parses_inf():
    assert schatten_index("inf") == math.inf
    assert conjugate_index(1) == math.inf
    assert conjugate_index("inf") == 1.0
    assert conjugate_index(4) == pytest.approx(4 / 3)


def test_operator_validation():
    with pytest.raises(ValueError):
        Operator(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        Operator(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(ValueError):
        Operator(np.eye(3), grid=grid_for(16))
    with pytest.raises(ValueError):
        schatten_norm(np.array([[np.inf]]), 2)


def test_operator_is_immutable():
    Y = Operator(np.eye(2))
    with pytest.raises(ValueError):
        Y.entries[0, 0] = 2


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), D=st.integers(2, 32), q=st.sampled_from([1.0, 1.5, 2.0, 3.0, 4.0, math.inf]))
def test_holder_duality(seed, D, q):
    rng = np.random.default_rng(seed)
    Y, V = Operator(random_matrix(rng, D)), Operator(random_matrix(rng, D))
    p = conjugate_index(q)
    assert abs(duality_pairing(Y, V)) <= schatten_norm(Y, q) * schatten_norm(V, p) * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), D=st.integers(2, 64))
def test_schatten_monotone(seed, D):
    Y = Operator(random_matrix(np.random.default_rng(seed), D))
    qs = [1, 1.5, 2, 4, 8, math.inf]
    norms = [schatten_norm(Y, q) for q in qs]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))


def test_duality_pairing_examples(rng):
    assert duality_pairing(Operator(np.eye(4)), Operator(np.eye(4))) == 4
    assert duality_pairing(Operator(np.diag([1.0, -1.0])), Operator(np.eye(2))) == 0
    Y, V = Operator(random_matrix(rng, 8)), Operator(random_matrix(rng, 8))
    assert duality_pairing(Y, V) == pytest.approx(duality_pairing(V, Y), rel=1e-12)
    with pytest.raises(ValueError):
        duality_pairing(Y, Operator(np.eye(3)))


def test_commutator_examples(rng):
    A = Operator(random_matrix(rng, 6))
    assert np.abs(commutator(A, A).entries).max() < 1e-12
    assert np.all(commutator(Operator(np.diag([1.0, 2.0])), Operator(np.diag([5.0, 7.0]))).entries == 0)


def test_canonical_commutation_interior():
    # [Q, P] = i I holds on vectors band-limited well inside the grid
    g = grid_for(64)
    Q, P = build_position(g), build_momentum(g)
    C = commutator(Q, P).entries
    x = g.coords(0)
    for shift, k in [(0.0, 0), (1.0, 2), (-1.5, -3)]:
        v = np.exp(-0.5 * (x - shift) ** 2 + 1j * k * g.dxi * x)
        v /= np.linalg.norm(v)
        assert np.linalg.norm(C @ v - 1j * v) < 1e-8


def test_iterated_commutator_definition(rng):
    gens = [Operator(random_matrix(rng, 16)) for _ in range(3)]
    Y = Operator(random_matrix(rng, 16))
    assert np.array_equal(iterated_commutator(gens, (), Y).entries, Y.entries)
    assert np.allclose(iterated_commutator(gens, (1,), Y).entries, commutator(gens[1], Y).entries)
    # Jacobi: [g0,[g1,Y]] - [g1,[g0,Y]] = [[g0,g1],Y]
    lhs = iterated_commutator(gens, (0, 1), Y).entries - iterated_commutator(gens, (1, 0), Y).entries
    rhs = commutator(commutator(gens[0], gens[1]), Y).entries
    assert np.abs(lhs - rhs).max() <= 1e-10 * np.abs(rhs).max()
    with pytest.raises(IndexError):
        iterated_commutator(gens, (3,), Y)


def test_iterated_commutator_linear(rng):
    g = grid_for(16)
    gens = build_generators(g)
    Y1, Y2 = Operator(random_matrix(rng, 16), g), Operator(random_matrix(rng, 16), g)
    lam = 0.3 - 1.7j
    for word in [(0,), (1, 0), (0, 1, 1)]:
        lhs = iterated_commutator(gens, word, Y1 + lam * Y2).entries
        rhs = iterated_commutator(gens, word, Y1).entries + lam * iterated_commutator(gens, word, Y2).entries
        assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()


def test_generator_set_matches_dense(rng):
    g = grid_for(32)
    gens = build_generators(g)
    Y = Operator(random_matrix(rng, 32), g)
    for word in [(0,), (1,), (2,), (0, 1), (1, 0, 1)]:
        fast = iterated_commutator(gens, word, Y).entries
        dense = iterated_commutator(list(gens.ops), word, Y).entries
        assert np.abs(fast - dense).max() <= 1e-9 * max(1.0, np.abs(dense).max())


def test_binary_layout(tmp_path, rng):
    Y = Operator(random_matrix(rng, 5))
    blob = to_bytes(Y)
    assert blob[:4] == b"HLOP"
    assert struct.unpack_from("<IQ", blob, 4) == (1, 5)
    assert len(blob) == 16 + 16 * 25
    # first entry sits right after the header as little-endian (re, im) doubles
    assert struct.unpack_from("<dd", blob, 16) == (Y.entries[0, 0].real, Y.entries[0, 0].imag)
    assert struct.unpack_from("<dd", blob, 32) == (Y.entries[0, 1].real, Y.entries[0, 1].imag)
    assert np.array_equal(from_bytes(blob).entries, Y.entries)
    save(Y, tmp_path / "y.hlop")
    assert np.array_equal(load(tmp_path / "y.hlop").entries, Y.entries)


@pytest.mark.parametrize("blob", [b"", b"XXXX" + bytes(12), to_bytes(Operator(np.eye(2)))[:-1]])
def test_binary_rejects(blob):
    with pytest.raises(ValueError):
        from_bytes(blob)


def test_json_roundtrip(rng):
    g = grid_for(16)
    Y = Operator(random_matrix(rng, 16), g, "rand")
    back = from_json(to_json(Y))
    assert np.array_equal(back.entries, Y.entries)
    assert back.grid == g and back.label == "rand"
