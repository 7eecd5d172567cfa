from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from schurwalk.cmv import BandedUnitary, Layer, ThetaBlock, build_cmv, dense, resolvent_column
from schurwalk.errors import DimensionCapExceededError, InconsistentWindowError
from schurwalk.schur_core import SchurParamSeq, schur_eval, theta_matrix


def random_two_sided(rng, n_head=8, real=False):
    def draw(k):
        r = rng.uniform(0, 0.9, k)
        ph = np.ones(k) if real else np.exp(1j * rng.uniform(-math.pi, math.pi, k))
        return tuple(r * ph * (rng.choice([-1, 1], k) if real else 1))

    return SchurParamSeq(draw(n_head), "periodic", draw(2), True, -n_head // 2, "periodic", draw(2))


def test_zero_parameters_give_swaps():
    seq = SchurParamSeq((), "periodic", (0.0, 0.0), True, 0, "periodic", (0.0, 0.0))
    w = build_cmv(seq, (0, 4))
    u = w.dense()
    assert np.allclose(u @ u.T, np.eye(4))
    assert set(np.unique(u.real)) <= {0.0, 1.0}
    assert np.allclose(theta_matrix(0), [[0, 1], [1, 0]])


def test_single_block_dense():
    alpha = 0.3 - 0.4j
    layer = Layer(2, ((0, theta_matrix(alpha)),))
    w = BandedUnitary(layer, Layer(2, ()))
    assert np.allclose(w.dense(), theta_matrix(alpha))
    assert np.allclose(ThetaBlock(alpha).matrix, theta_matrix(alpha))


def test_open_truncation_is_unitary():
    rng = np.random.default_rng(0)
    w = build_cmv(random_two_sided(rng), (-20, 20))
    u = w.dense()
    assert np.linalg.norm(u @ u.conj().T - np.eye(w.dim)) < 1e-12


def test_ring_spectrum_on_unit_circle():
    rng = np.random.default_rng(1)
    w = build_cmv(random_two_sided(rng, 12, real=True), (-6, 6), "ring")
    assert w.dim == 12
    ev = np.linalg.eigvals(w.dense())
    assert np.max(np.abs(np.abs(ev) - 1)) < 1e-12


def test_ring_needs_even_length():
    with pytest.raises(InconsistentWindowError):
        build_cmv(random_two_sided(np.random.default_rng(2)), (0, 5), "ring")


def test_real_parameters_give_orthogonal_involution_layers():
    seq = SchurParamSeq((), "periodic", (0.0, math.sin(math.pi / 4)), True, 0, "periodic", (math.sin(math.pi / 4), 0.0))
    w = build_cmv(seq, (-40, 40))
    u = w.dense()
    assert np.abs(u.imag).max() == 0
    assert np.linalg.norm(u @ u.T - np.eye(w.dim)) < 1e-12
    for layer in (w.layer_even, w.layer_odd):
        m = layer.dense()
        assert np.linalg.norm(m @ m - np.eye(w.dim)) < 1e-12
    assert np.allclose(u, w.layer_even.dense() @ w.layer_odd.dense())


def test_factorized_matches_dense_products():
    rng = np.random.default_rng(3)
    w = build_cmv(random_two_sided(rng), (-16, 16))
    x = rng.normal(size=(w.dim, 100)) + 1j * rng.normal(size=(w.dim, 100))
    u = w.dense()
    assert np.abs(w.matmat(x) - u @ x).max() < 1e-12
    assert np.abs(w.rmatmat(x) - u.conj().T @ x).max() < 1e-12
    assert np.allclose(w.adjoint().dense(), u.conj().T)


def test_ring_and_open_agree_in_the_interior():
    rng = np.random.default_rng(4)
    seq = random_two_sided(rng, 10)
    a = build_cmv(seq, (-10, 10)).dense()
    b = build_cmv(seq, (-10, 10), "ring").dense()
    assert np.allclose(a[3:-3, 3:-3], b[3:-3, 3:-3], atol=0)


@given(st.lists(st.complex_numbers(max_magnitude=0.9), min_size=1, max_size=6), st.complex_numbers(max_magnitude=0.7))
def test_first_vector_reproduces_schur_parameters(head, z):
    seq = SchurParamSeq.periodic2(head, 0.2, -0.5)
    w = build_cmv(seq, (-1, 120))
    f = resolvent_column(w, [0], z)[0, 0]
    assert abs(f - schur_eval(seq, z)) < 1e-12


def test_whole_space_gives_adjoint():
    rng = np.random.default_rng(5)
    w = build_cmv(random_two_sided(rng), (-6, 6))
    idx = np.arange(w.dim)
    for z in (0.0, 0.5, -0.3 + 0.6j):
        assert np.allclose(resolvent_column(w, idx, z), w.dense().conj().T, atol=1e-12)


def test_resolvent_at_origin_is_diagonal_block_of_adjoint():
    rng = np.random.default_rng(6)
    w = build_cmv(random_two_sided(rng), (-8, 8))
    idx = [7, 8, 9]
    assert np.allclose(resolvent_column(w, idx, 0), w.dense().conj().T[np.ix_(idx, idx)], atol=1e-14)


def test_resolvent_rejects_circle():
    w = build_cmv(random_two_sided(np.random.default_rng(7)), (-4, 4))
    with pytest.raises(ValueError):
        resolvent_column(w, [0], 1.0)


def test_bandwidth_is_small():
    w = build_cmv(random_two_sided(np.random.default_rng(8)), (-20, 20))
    lower, upper = w.bandwidth
    assert max(lower, upper) <= 3


def test_dense_cap():
    w = build_cmv(random_two_sided(np.random.default_rng(9)), (-20, 20))
    with pytest.raises(DimensionCapExceededError):
        dense(w, cap=10)


def test_restrict_requires_invariant_range():
    w = build_cmv(random_two_sided(np.random.default_rng(10)), (-10, 10))
    with pytest.raises(InconsistentWindowError):
        w.restrict(0, 5)
