from __future__ import annotations

import json
import math

import numpy as np
import pytest
import scipy.linalg as sla
from helpers import A6, coined_cell, random_split_step_spec, split_step_cell

from schurwalk.cmv import resolvent_column
from schurwalk.errors import GapClosedError, NotCyclicError, SymmetryViolatedError, WindowNotConvergedError
from schurwalk.index_engine import (
    AIII,
    BDI,
    IndexReport,
    SymmetryType,
    boundary_values,
    classify,
    classify_resolvent,
    decouple,
    forget_mod2,
    is_cyclic,
    mass_points,
    quantized_trace,
    resolvent_boundary_values,
    si_finite,
    si_lr_walk,
    si_pm_finite,
    si_pm_walk,
)
from schurwalk.schur_core import SchurValue, schur_eval, theta_matrix
from schurwalk.walk_models import WalkModel, WalkSpec, build_walk

SWAP = np.array([[0, 1], [1, 0]], dtype=complex)


# ---------------------------------------------------------------------------
# finite indices


def test_si_finite_examples():
    assert si_finite(SymmetryType(gamma=True, gamma_matrix=SWAP)) == 0
    assert si_finite(SymmetryType(eta=1), dim=3) == 1
    assert si_finite(SymmetryType(gamma=True, gamma_matrix=np.diag([1, 1, -1]))) == 1
    assert si_finite(SymmetryType(eta=1, tau=-1), dim=6) == 2


def test_symmetry_types():
    assert BDI.case == "III" and AIII.case == "III"
    assert SymmetryType(eta=-1).case is None
    assert BDI.gamma


def test_si_pm_finite_type_iii():
    sym = SymmetryType(gamma=True, gamma_matrix=SWAP)
    assert si_pm_finite(SWAP, sym) == (1, -1)
    assert si_pm_finite(-SWAP, sym) == (-1, 1)


def test_si_pm_finite_type_i():
    assert si_pm_finite(np.eye(1), SymmetryType(eta=1, eta_matrix=np.eye(1))) == (1, 0)


def test_si_pm_finite_checks_symmetry():
    sym = SymmetryType(gamma=True, gamma_matrix=SWAP)
    with pytest.raises(SymmetryViolatedError):
        si_pm_finite(np.diag([1, 1j]), sym)


def test_si_pm_finite_matches_decoupled_truncation():
    # the open truncation carries the chiral symmetry of its cell layer
    rng = np.random.default_rng(0)
    b = build_walk(random_split_step_spec(rng), 6)
    g, _ = b.chiral.dense()
    u = b.unitary.dense()
    plus, minus = si_pm_finite(u, SymmetryType(gamma=True, gamma_matrix=g))
    ev = np.linalg.eigvals(u)
    assert abs(plus) <= np.sum(abs(ev - 1) < 1e-8)
    assert abs(minus) <= np.sum(abs(ev + 1) < 1e-8)


# ---------------------------------------------------------------------------
# walk indices


def test_classify_row_101():
    spec = WalkSpec("split_step", (-A6, 0.0), (0.0, -A6))
    r = classify(spec)
    assert r.status == "classified"
    assert r.triple == (1, 0, 1)


def test_classify_row_001():
    r = classify(WalkSpec("split_step", (0.0, A6), (0.0, -A6)))
    assert r.triple == (0, 0, 1)


def test_classify_free_shift_is_gap_closed():
    r = classify(WalkSpec("split_step", (0.0, 0.0), (0.0, 0.0)))
    assert r.status == "gap_closed"
    assert {"tail": "left", "point": 1} in r.diagnostics["gap_closed_at"]


def test_si_lr_examples():
    assert si_lr_walk(WalkSpec("split_step", (-A6, 0.0), (-A6, 0.0))) == (1, -1)
    shifted = WalkSpec("shifted_coined", {"angles": [0.4, -0.7]}, {"angles": [-0.2, 0.9]}, cell_dim=4)
    assert si_lr_walk(shifted) == (0, 0)
    coined = WalkSpec("chiral_coined", {"angles": [0.4, 0.4]}, {"angles": [0.5, -0.5]}, cell_dim=4)
    assert si_lr_walk(coined)[1] == 0


def test_si_lr_raises_on_closed_gap():
    with pytest.raises(GapClosedError) as info:
        si_lr_walk(WalkSpec("split_step", (0.3, 0.3), (0.5, 0.1)))
    assert info.value.side == "left" and info.value.point == -1


def test_si_pm_translation_invariant_is_zero():
    for t in [(0.3, 0.9), (-0.8, 0.2), (1.0, -0.1)]:
        assert si_pm_walk(WalkSpec("split_step", t, t)) == (0, 0)


def test_si_pm_crossover():
    spec = WalkSpec("split_step", (-A6, 0.0), (A6, 0.0))
    assert si_pm_walk(spec) == (1, 1)
    assert si_pm_walk(spec, method="resolvent", radius=30) == (1, 1)


def test_shifted_coined_sign_follows_table():
    spec = WalkSpec("shifted_coined", {"angles": [-0.5, -0.5]}, {"angles": [0.5, 0.5]}, cell_dim=4)
    r = classify(spec)
    assert r.diagnostics["traces"]["L+"] == 2 and r.diagnostics["traces"]["R+"] == 2
    assert r.triple == (0, 0, -2)


def test_sum_rule_and_direct_si_plus():
    rng = np.random.default_rng(1)
    for _ in range(10):
        r = classify(random_split_step_spec(rng))
        assert r.si_plus + r.si_minus == r.si_left + r.si_right
        assert r.si_plus == r.diagnostics["si_plus_direct"]


def test_quantized_trace_lattice():
    assert quantized_trace(SchurValue(1, np.diag([1.0, -1.0, 1.0])), 3) == 1
    with pytest.raises(WindowNotConvergedError):
        quantized_trace(SchurValue(1, np.diag([1.0, 0.0])), 2)


def test_report_document_is_json():
    r = classify(split_step_cell((1, -1), (1, -1)))
    doc = json.loads(json.dumps(r.to_document()))
    assert doc["si_left"] == 1 and doc["phase_label"].startswith("split_step[")


def test_coined_label():
    r = classify(coined_cell("chiral_coined", 2, 0))
    assert r.triple == (2, 0, 1)
    assert r.phase_label == "chiral_coined[d=2, tr fL(1)=+2, tr fR(1)=+0]"


def test_forget_mod2_examples():
    base = IndexReport("classified", "split_step", 2, 1, 1, 1, 1)
    assert forget_mod2(base).triple == (1, 1, 1)
    assert forget_mod2(IndexReport("classified", "split_step", 2, -1, 1, 0, 0)).triple == (1, 1, 0)
    assert forget_mod2(IndexReport("classified", "split_step", 2, 0, 0, -1, 1)).triple == (0, 0, 1)
    assert forget_mod2(base).modulus == 2


# ---------------------------------------------------------------------------
# decoupling and resolvent routes


def _spec():
    return WalkSpec("split_step", (-0.4, 0.1), (0.9, -0.3), {-1: (-0.6, 0.2), 0: (0.3, -0.1), 1: (0.7, 0.2)})


@pytest.mark.parametrize("side", ["right_gamma_tilde", "left_gamma"])
def test_decoupling_is_a_local_perturbation(side):
    b = build_walk(_spec(), 8)
    dec = decouple(b, 0, side)
    w = b.unitary.dense()
    v = np.eye(len(w), dtype=complex)
    v[np.ix_(dec.subspace, dec.subspace)] = dec.v_restriction
    joined = sla.block_diag(dec.left.dense(), dec.right.dense())
    expected = v @ w if dec.product == "VW" else w @ v
    assert np.abs(joined - expected).max() < 1e-14


def test_right_half_starts_with_cell_coin():
    b = build_walk(_spec(), 8)
    dec = decouple(b, 0, "right_gamma_tilde")
    assert dec.right.dim == b.unitary.dim - 2 * 8
    # only the cell-aligned layer has a block at offset 0 after the cut
    first = [blk for layer in (dec.right.layer_even, dec.right.layer_odd) for o, blk in layer.blocks if o == 0]
    assert len(first) == 1
    assert np.allclose(first[0], b.model.cell_block(0))


def test_cell_function_factorizes():
    b = build_walk(_spec(), 40)
    z = 0.9
    dec = decouple(b, 0, "left_gamma")
    fl = resolvent_column(dec.left, [dec.left.dim - 1], z)
    fr = resolvent_column(dec.right, [0], z)
    g = b.model.cell_block(0)
    cell = resolvent_column(b.unitary, b.unitary.cell_indices(0), z)
    assert np.abs(cell - g.conj().T @ sla.block_diag(fl, fr)).max() < 1e-8
    m = WalkModel(_spec())
    assert abs(fl[0, 0] - schur_eval(m.left_seq(0), z)) < 1e-12
    assert abs(fr[0, 0] - schur_eval(m.right_seq(0), z)) < 1e-12


def test_resolvent_boundary_values_match_exact_route():
    b = build_walk(_spec(), 60)
    exact = boundary_values(b.model, 0)
    for est in ("radial", "richardson"):
        num = resolvent_boundary_values(b, 0, estimator=est)
        for k, v in exact.items():
            assert abs(complex(np.asarray(num[k].value).ravel()[0]) - v.value) < 1e-5


def test_classify_resolvent_cross_check():
    for spec in (_spec(), split_step_cell((1, -1), (-1, -1)), coined_cell("chiral_coined", -2, 2)):
        b = build_walk(spec, 40)
        exact = classify(spec)
        num = classify_resolvent(b)
        assert num.triple == exact.triple
        assert num.si_plus == exact.si_plus


def test_boundary_values_are_x_independent():
    m = WalkModel(_spec())
    ref = boundary_values(m, -3)
    for x in range(-2, 4):
        vals = boundary_values(m, x)
        assert all(vals[k].value == ref[k].value for k in ref)


# ---------------------------------------------------------------------------
# mass points


def test_mass_points_diagonal():
    u = np.diag([1, 1j])
    pts = mass_points(u, np.array([[1.0], [1.0]]) / math.sqrt(2))
    assert sorted((round(p.eigenvalue.real, 12), round(p.eigenvalue.imag, 12)) for p in pts) == [(0.0, 1.0), (1.0, 0.0)]
    assert all(p.multiplicity == 1 for p in pts)


def test_mass_points_involution():
    u = theta_matrix(0.35)
    pts = mass_points(u, np.array([0]))
    assert sorted(round(p.eigenvalue.real, 12) for p in pts) == [-1.0, 1.0]


def test_not_cyclic():
    u = np.diag([1, 1j, -1])
    q = np.array([[1.0], [0.0], [0.0]])
    assert not is_cyclic(u, q)
    with pytest.raises(NotCyclicError):
        mass_points(u, q)
