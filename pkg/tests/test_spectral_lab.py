from __future__ import annotations

import csv
import math
import xml.etree.ElementTree as ET

import mpmath
import numpy as np
import pytest

from schurwalk.errors import BoundViolatedError, DimensionCapExceededError, NoCandidateError
from schurwalk.spectral_lab import (
    atomic_write,
    edge_state_profile,
    profile_of,
    run_ring,
    smallest_abs_eigenvalue,
    spectrum_svg,
    write_profile_csv,
    write_spectrum_csv,
    write_spectrum_svg,
)


@pytest.fixture(scope="module")
def degenerate():
    return run_ring(8, 0.0, 0.0, seed=0)


@pytest.fixture(scope="module")
def disordered():
    return run_ring(60, 0.3, 0.2, seed=3)


def test_degenerate_ring_has_exact_protected_eigenvalues(degenerate):
    assert degenerate.distances[1].sigma == 0
    assert degenerate.distances[-1].sigma == 0
    assert len(degenerate.eigenvalues) == 16
    assert np.min(degenerate.dist_to(1)) < 1e-14 and np.min(degenerate.dist_to(-1)) < 1e-14


def test_degenerate_profiles_sit_on_interfaces(degenerate):
    for point in (1, -1):
        prof = edge_state_profile(degenerate, point, radius=1)
        assert prof.interface_mass == pytest.approx(1.0, abs=1e-12)


def test_spectrum_invariants(disordered):
    assert disordered.unitarity_residual() < 1e-10
    assert disordered.conjugation_residual() < 1e-10
    assert np.all(np.diff(disordered.eigenphases) >= 0)


def test_certified_distance_below_float_noise(disordered):
    for point in (1, -1):
        d = disordered.distances[point]
        assert d.certified
        assert d.log10 < -20
        assert 0 < d.eigenphase < 1e-20


def _periodic(n, seed):
    rng = np.random.default_rng(seed)
    off = rng.normal(size=n - 1)
    t = np.diag(rng.normal(size=n)) + np.diag(off, 1) + np.diag(off, -1)
    t[0, -1] = t[-1, 0] = 0.4
    return t


def test_smallest_abs_eigenvalue_large_values_use_float_solver():
    t = _periodic(7, 0)
    sigma, certified = smallest_abs_eigenvalue(t)
    assert not certified
    assert float(sigma) == pytest.approx(np.min(np.abs(np.linalg.eigvalsh(t))), rel=1e-12)


@pytest.mark.parametrize("n,seed", [(3, 1), (6, 2), (9, 3)])
def test_smallest_abs_eigenvalue_certified_against_extended_eigensolver(n, seed):
    t = _periodic(n, seed)
    t -= np.diag(np.full(n, np.linalg.eigvalsh(t)[n // 2]))
    sigma, certified = smallest_abs_eigenvalue(t, rel_tol=1e-12)
    assert certified
    with mpmath.workdps(60):
        ref = min(abs(v) for v in mpmath.eigsy(mpmath.matrix(t.tolist()))[0])
        assert abs(sigma - ref) <= 1e-8 * ref


def test_bulk_states_are_not_interface_states(disordered):
    bulk = np.flatnonzero(np.minimum(disordered.dist_to(1), disordered.dist_to(-1)) > 0.3)
    masses = [profile_of(disordered, int(k), radius=5).interface_mass for k in bulk]
    assert np.mean(masses) < 0.5


def test_no_candidate():
    exp = run_ring(8, 0.3, 0.2, seed=1, threshold=1e-300, certify=False)
    with pytest.raises(NoCandidateError):
        edge_state_profile(exp, 1)


def test_ring_validation():
    with pytest.raises(ValueError):
        run_ring(7, 0.1, 0.1)
    with pytest.raises(BoundViolatedError):
        run_ring(8, 1.2, 1.2)
    with pytest.raises(DimensionCapExceededError):
        run_ring(2000, 0.1, 0.1)


def test_deterministic_under_seed():
    a = run_ring(20, 0.3, 0.2, seed=5, certify=False)
    b = run_ring(20, 0.3, 0.2, seed=5, certify=False)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_spectrum_csv(tmp_path, disordered):
    path = tmp_path / "spec.csv"
    write_spectrum_csv(disordered, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["re", "im", "eigenphase", "dist_to_plus1", "dist_to_minus1"]
    assert len(rows) == 1 + 2 * disordered.n_cells
    lam = np.array([complex(float(r[0]), float(r[1])) for r in rows[1:]])
    assert np.array_equal(lam, disordered.eigenvalues)


def test_profile_csv(tmp_path, degenerate):
    path = tmp_path / "profile.csv"
    write_profile_csv(edge_state_profile(degenerate, -1), path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["cell", "mass"]
    assert sum(float(r[1]) for r in rows[1:]) == pytest.approx(1.0)


def test_svg_is_well_formed(tmp_path, degenerate):
    path = tmp_path / "spec.svg"
    write_spectrum_svg(degenerate, path)
    root = ET.parse(path).getroot()
    ns = "{http://www.w3.org/2000/svg}"
    assert len([e for e in root.iter(ns + "line") if e.get("class") == "interface"]) == 2
    assert len([e for e in root.iter(ns + "circle") if e.get("class") == "eigenvalue"]) == 16
    assert spectrum_svg(degenerate) == path.read_text()


def test_atomic_write_leaves_no_partial_file(tmp_path):
    path = tmp_path / "out.txt"

    def failing(fh):
        fh.write("partial")
        raise RuntimeError("boom")

    with pytest.raises(RuntimeError):
        atomic_write(path, failing)
    assert list(tmp_path.iterdir()) == []
    atomic_write(path, lambda fh: fh.write("ok"))
    assert path.read_text() == "ok"


def test_eigenphase_of_distance():
    exp = run_ring(8, 0.0, 0.0, seed=0)
    d = exp.distances[1]
    assert float(d.eigenphase) == 0.0
    assert math.isinf(d.log10)
