"""Symmetry indices of finite unitaries and of walks.

Walk indices are assembled from the boundary values at ``+-1`` of the
half-line Schur functions ``f_L`` (vector ``x up``, left half-walk) and
``f_R`` (vector ``x down``, right half-walk)::

    si_L = (tr f_L(1) - tr f_L(-1)) / 2
    si_R = (tr f_R(1) - tr f_R(-1)) / 2
    si_- = -(tr f_L(-1) + tr f_R(-1)) / 2
    si_+ = si_L + si_R - si_-
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
import scipy.linalg as sla

from .cmv import BandedUnitary, Layer, resolvent_column
from .config import DEFAULT, Tolerances
from .errors import (
    GapClosedError,
    InconsistentRepresentationError,
    NotCyclicError,
    SymmetryViolatedError,
    WindowNotConvergedError,
)
from .schur_core import SchurValue, block_tail_fixed_point, eval_boundary, radial_boundary_value, richardson_estimate
from .walk_models import BuiltWalk, WalkModel, WalkSpec

# --------------------------------------------------------------------------
# symmetry types and finite indices
# --------------------------------------------------------------------------

_CARTAN = {
    (None, None, False): "A",
    (None, None, True): "AIII",
    (None, 1, False): "AI",
    (1, 1, True): "BDI",
    (1, None, False): "D",
    (1, -1, True): "DIII",
    (None, -1, False): "AII",
    (-1, -1, True): "CII",
    (-1, None, False): "C",
    (-1, 1, True): "CI",
}


@dataclass(frozen=True, eq=False)
class SymmetryType:
    """A tenfold-way symmetry type, optionally with concrete matrices.

    ``eta`` and ``tau`` hold the signs of ``eta^2`` and ``tau^2`` (``None`` if
    absent).  The antiunitaries are ``eta = eta_matrix K`` and
    ``tau = tau_matrix K``.  When both are present the chiral element is
    ``gamma = eta tau`` with ``gamma^2 = eta^2 tau^2``.
    """

    eta: int | None = None
    tau: int | None = None
    gamma: bool = False
    eta_matrix: np.ndarray | None = None
    tau_matrix: np.ndarray | None = None
    gamma_matrix: np.ndarray | None = None

    def __post_init__(self):
        for s in (self.eta, self.tau):
            if s not in (None, 1, -1):
                raise ValueError("eta/tau signs must be +1, -1 or None")
        if self.eta is not None and self.tau is not None:
            object.__setattr__(self, "gamma", True)
        elif self.gamma and (self.eta is not None or self.tau is not None):
            raise ValueError("a group with gamma and one antiunitary is not closed under products")

    @property
    def label(self) -> str:
        return _CARTAN[(self.eta, self.tau, self.gamma)]

    @property
    def case(self) -> str | None:
        """``"I"``, ``"II"`` or ``"III"`` for the types with nontrivial finite index."""
        if self.eta == 1 and self.tau is None:
            return "I"
        if self.eta == 1 and self.tau == -1:
            return "II"
        if self.gamma and (self.eta is None or self.eta == self.tau):
            return "III"
        return None

    def gamma_operator(self) -> np.ndarray | None:
        if self.gamma_matrix is not None:
            return np.asarray(self.gamma_matrix, dtype=complex)
        if self.eta_matrix is not None and self.tau_matrix is not None:
            # (E K)(T K) = E conj(T)
            return np.asarray(self.eta_matrix) @ np.conj(self.tau_matrix)
        return None

    def check_representation(self, tol: float = 1e-9) -> None:
        def unitary(m, name):
            if np.linalg.norm(m @ m.conj().T - np.eye(m.shape[0])) > tol:
                raise InconsistentRepresentationError(f"{name} is not unitary")

        for name, m, sign in (("eta", self.eta_matrix, self.eta), ("tau", self.tau_matrix, self.tau)):
            if m is None:
                continue
            m = np.asarray(m, dtype=complex)
            unitary(m, name)
            if sign is None:
                raise InconsistentRepresentationError(f"{name} matrix given without a declared sign")
            if np.linalg.norm(m @ m.conj() - sign * np.eye(m.shape[0])) > tol:
                raise InconsistentRepresentationError(f"{name}^2 does not equal {sign:+d}")
        g = self.gamma_operator()
        if g is not None:
            unitary(g, "gamma")
            sq = (self.eta * self.tau) if (self.eta and self.tau) else 1
            if np.linalg.norm(g @ g - sq * np.eye(g.shape[0])) > tol:
                raise InconsistentRepresentationError(f"gamma^2 does not equal {sq:+d}")


BDI = SymmetryType(eta=1, tau=1)
AIII = SymmetryType(gamma=True)


def si_finite(rep: SymmetryType, dim: int | None = None, tol: float = 1e-9) -> int:
    """Symmetry index of a finite-dimensional representation."""
    rep.check_representation(tol)
    case = rep.case
    if case in ("I", "II"):
        if dim is None:
            m = rep.eta_matrix
            if m is None:
                raise InconsistentRepresentationError("dimension unknown")
            dim = np.asarray(m).shape[0]
        return dim % (2 if case == "I" else 4)
    if case == "III":
        g = rep.gamma_operator()
        if g is None:
            raise InconsistentRepresentationError("type III index needs the chiral matrix")
        t = np.trace(g)
        if abs(t.imag) > tol or abs(t.real - round(t.real)) > tol:
            raise InconsistentRepresentationError("tr gamma is not an integer")
        return int(round(t.real))
    return 0


def _count_eigs_at(u: np.ndarray, point: int, tol: float) -> int:
    return int(np.sum(np.abs(np.linalg.eigvals(u) - point) < tol))


def si_pm_finite(u: np.ndarray, sym: SymmetryType, tol: float = 1e-8) -> tuple[int, int]:
    """``(si_+, si_-)`` of a finite unitary with the given symmetries."""
    u = np.asarray(u, dtype=complex)
    case = sym.case
    if case == "III":
        g = sym.gamma_operator()
        if g is None:
            raise InconsistentRepresentationError("type III index needs the chiral matrix")
        if np.linalg.norm(g @ u @ g.conj().T - u.conj().T) > tol * max(1, u.shape[0]):
            raise SymmetryViolatedError("gamma U gamma* differs from U*")
        one = np.eye(u.shape[0])
        out = []
        for sign in (1, -1):
            v = 0.5 * np.trace(g @ (one + sign * u))
            if abs(v.imag) > 1e-6 or abs(v.real - round(v.real)) > 1e-6:
                raise SymmetryViolatedError("chiral trace is not an integer")
            out.append(int(round(v.real)))
        return out[0], out[1]
    if case == "I":
        if sym.eta_matrix is not None:
            e = np.asarray(sym.eta_matrix, dtype=complex)
            if np.linalg.norm(e @ u.conj() @ e.conj().T - u) > tol * max(1, u.shape[0]):
                raise SymmetryViolatedError("eta does not commute with U")
        out = []
        for sign in (1, -1):
            det = np.linalg.det(-sign * u)
            if abs(det.imag) > 1e-6 or abs(abs(det.real) - 1) > 1e-6:
                raise SymmetryViolatedError("det(-+U) is not +-1")
            out.append(0 if det.real > 0 else 1)
        return out[0], out[1]
    if case == "II":
        return _count_eigs_at(u, 1, 1e-6) % 4, _count_eigs_at(u, -1, 1e-6) % 4
    return 0, 0


# --------------------------------------------------------------------------
# phase tables
# --------------------------------------------------------------------------

# split-step: rows f_L pattern, columns f_R pattern; a pattern is (f(1), f(-1))
PATTERNS = {(1, -1): "+-1", (-1, 1): "-+1", (1, 1): "=+1", (-1, -1): "=-1"}
_ORDER = [(1, -1), (-1, 1), (1, 1), (-1, -1)]
_SS_ROWS = [
    [(1, 1, 1), (1, -1, 0), (1, 0, 0), (1, 0, 1)],
    [(-1, 1, 0), (-1, -1, -1), (-1, 0, -1), (-1, 0, 0)],
    [(0, 1, 0), (0, -1, -1), (0, 0, -1), (0, 0, 0)],
    [(0, 1, 1), (0, -1, 0), (0, 0, 0), (0, 0, 1)],
]
SPLIT_STEP_TABLE = {(rl, rr): _SS_ROWS[i][j] for i, rl in enumerate(_ORDER) for j, rr in enumerate(_ORDER)}

_MOD2_ROWS = [
    [(1, 1, 1), (1, 1, 0), (1, 0, 0), (1, 0, 1)],
    [(1, 1, 0), (1, 1, 1), (1, 0, 1), (1, 0, 0)],
    [(0, 1, 0), (0, 1, 1), (0, 0, 1), (0, 0, 0)],
    [(0, 1, 1), (0, 1, 0), (0, 0, 0), (0, 0, 1)],
]
SPLIT_STEP_MOD2_TABLE = {(rl, rr): _MOD2_ROWS[i][j] for i, rl in enumerate(_ORDER) for j, rr in enumerate(_ORDER)}

# d = 2 coined models, keyed by (tr f_L(1), tr f_R(1))
_TR = [2, 0, -2]
COINED_D2_TABLE = {
    (tl, tr): t
    for tl, row in zip(_TR, [[(2, 2, 2), (2, 0, 1), (2, -2, 0)], [(0, 2, 1), (0, 0, 0), (0, -2, -1)], [(-2, 2, 0), (-2, 0, -1), (-2, -2, -2)]])
    for tr, t in zip(_TR, row)
}
SHIFTED_D2_TABLE = {
    (tl, tr): t
    for tl, row in zip(_TR, [[(0, 0, -2), (0, 0, -1), (0, 0, 0)], [(0, 0, -1), (0, 0, 0), (0, 0, 1)], [(0, 0, 0), (0, 0, 1), (0, 0, 2)]])
    for tr, t in zip(_TR, row)
}


def phase_label(model: str, d: int, traces: dict[str, int], triple: tuple[int, int, int]) -> str:
    """Table cell matching the boundary traces, or ``"unlisted"``."""
    if model == "split_step":
        key = ((traces["L+"], traces["L-"]), (traces["R+"], traces["R-"]))
        if SPLIT_STEP_TABLE.get(key) == triple:
            return f"split_step[fL {PATTERNS[key[0]]}, fR {PATTERNS[key[1]]}]"
        return "unlisted"
    table = {("chiral_coined", 2): COINED_D2_TABLE, ("shifted_coined", 2): SHIFTED_D2_TABLE}.get((model, d))
    if d == 1 and model == "chiral_coined":
        table = {(1, 1): (1, 1, 1), (1, -1): (1, -1, 0), (-1, 1): (-1, 1, 0), (-1, -1): (-1, -1, -1)}
    if d == 1 and model == "shifted_coined":
        table = {(1, 1): (0, 0, -1), (1, -1): (0, 0, 0), (-1, 1): (0, 0, 0), (-1, -1): (0, 0, 1)}
    if table is None:
        return "unlisted"
    key = (traces["L+"], traces["R+"])
    if table.get(key) == triple:
        return f"{model}[d={d}, tr fL(1)={key[0]:+d}, tr fR(1)={key[1]:+d}]"
    return "unlisted"


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IndexReport:
    status: str
    model: str
    cell_dim: int
    si_left: int | None = None
    si_right: int | None = None
    si_minus: int | None = None
    si_plus: int | None = None
    phase_label: str = "unlisted"
    modulus: int | None = None
    """``None`` for integer indices, ``2`` after the mod-2 forget map."""
    diagnostics: dict = field(default_factory=dict)

    @property
    def triple(self) -> tuple[int, int, int] | None:
        if self.si_left is None:
            return None
        return (self.si_left, self.si_right, self.si_minus)

    def to_document(self) -> dict:
        return {
            "status": self.status,
            "model": self.model,
            "cell_dim": self.cell_dim,
            "si_left": self.si_left,
            "si_right": self.si_right,
            "si_minus": self.si_minus,
            "si_plus": self.si_plus,
            "phase_label": self.phase_label,
            "modulus": self.modulus,
            "diagnostics": _plain(self.diagnostics),
        }


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return float(obj.real) if obj.imag == 0 else [float(obj.real), float(obj.imag)]
    return obj


def forget_mod2(report: IndexReport) -> IndexReport:
    """Reduce the integer indices mod 2 (particle-hole-only classification)."""
    if report.si_left is None:
        return replace(report, modulus=2)
    m = lambda v: v % 2  # noqa: E731
    triple = (m(report.si_left), m(report.si_right), m(report.si_minus))
    label = report.phase_label
    if report.model == "split_step" and "traces" in report.diagnostics:
        t = report.diagnostics["traces"]
        key = ((t["L+"], t["L-"]), (t["R+"], t["R-"]))
        label = "mod2:" + label if SPLIT_STEP_MOD2_TABLE.get(key) == triple else "unlisted"
    return replace(
        report,
        si_left=triple[0],
        si_right=triple[1],
        si_minus=triple[2],
        si_plus=m(report.si_plus),
        phase_label=label,
        modulus=2,
    )


# --------------------------------------------------------------------------
# boundary values of the half-line Schur functions (exact tail route)
# --------------------------------------------------------------------------


def _as_model(walk) -> WalkModel:
    if isinstance(walk, BuiltWalk):
        return walk.model
    if isinstance(walk, WalkSpec):
        return WalkModel(walk)
    return walk


def tail_gaps(model: WalkModel, tol: Tolerances = DEFAULT) -> dict[str, dict[int, bool]]:
    """Gap status at ``+-1`` of the left and right tails."""
    spec = model.spec
    out: dict[str, dict[int, bool]] = {}
    if spec.model == "split_step":
        for side, (t1, t2) in (("left", spec.left_tail), ("right", spec.right_tail)):
            s, st = math.sin(t1), math.sin(t2)
            out[side] = {1: abs(st + s) > tol.gap, -1: abs(st - s) > tol.gap}
        return out
    lo, hi = spec.window_range
    chains = {"left": model.left_chain(lo - 1), "right": model.right_chain(hi + 1)}
    for side, chain in chains.items():
        out[side] = {}
        for p in (1, -1):
            try:
                block_tail_fixed_point(chain.tail, p, tol)
                out[side][p] = True
            except GapClosedError:
                out[side][p] = False
    return out


def boundary_values(model: WalkModel, x: int, tol: Tolerances = DEFAULT) -> dict[str, SchurValue]:
    """``f_L^{x up}(+-1)`` and ``f_R^{x down}(+-1)``, keyed ``"L+"``, ``"L-"``, ``"R+"``, ``"R-"``."""
    out = {}
    if model.spec.model == "split_step":
        for p, tag in ((1, "+"), (-1, "-")):
            out["L" + tag] = eval_boundary(model.left_seq(x), p, tol)
            out["R" + tag] = eval_boundary(model.right_seq(x), p, tol)
        return out
    left, right = model.left_chain(x), model.right_chain(x)
    for p, tag in ((1, "+"), (-1, "-")):
        out["L" + tag] = left.boundary(p, tol)
        out["R" + tag] = right.boundary(p, tol)
    return out


def quantized_trace(v: SchurValue, d: int, tol: Tolerances = DEFAULT) -> int:
    """Round ``tr v`` to the allowed set ``{-d, -d+2, ..., d}`` of involution traces."""
    t = v.trace
    k = round((t.real + d) / 2)
    q = 2 * k - d
    if abs(t - q) > tol.quantization or not -d <= q <= d or v.residual > tol.rounding_residual:
        raise WindowNotConvergedError(f"trace {t:.6g} is not quantized (residual {v.residual:.2g})")
    return int(q)


def _traces(vals: dict[str, SchurValue], d: int, tol: Tolerances) -> dict[str, int]:
    return {k: quantized_trace(v, d, tol) for k, v in vals.items()}


def _indices_from_traces(t: dict[str, int]) -> dict[str, int]:
    si_l = (t["L+"] - t["L-"]) // 2
    si_r = (t["R+"] - t["R-"]) // 2
    si_m = -(t["L-"] + t["R-"]) // 2
    return {
        "si_left": si_l,
        "si_right": si_r,
        "si_minus": si_m,
        "si_plus": si_l + si_r - si_m,
        "si_plus_direct": (t["L+"] + t["R+"]) // 2,
    }


def default_sites(spec: WalkSpec) -> list[int]:
    lo, hi = spec.window_range
    if hi < lo:
        return [-1, 0, 1]
    return [lo - 1, (lo + hi) // 2, hi + 1]


# --------------------------------------------------------------------------
# walk indices
# --------------------------------------------------------------------------


def si_lr_walk(walk, tol: Tolerances = DEFAULT, site: int = 0) -> tuple[int, int]:
    """``(si_L, si_R)`` after the symmetry-preserving decoupling at ``site``."""
    model = _as_model(walk)
    gaps = tail_gaps(model, tol)
    _raise_if_closed(gaps)
    t = _traces(boundary_values(model, site, tol), model.d, tol)
    idx = _indices_from_traces(t)
    return idx["si_left"], idx["si_right"]


def _raise_if_closed(gaps: dict[str, dict[int, bool]]) -> None:
    for side, g in gaps.items():
        for p, ok in g.items():
            if not ok:
                raise GapClosedError(f"{side} tail is not gapped at {p:+d}", side=side, point=p)


def si_pm_walk(
    walk,
    cell_window: Sequence[int] | None = None,
    method: str = "exact",
    tol: Tolerances = DEFAULT,
    radius: int = 60,
) -> tuple[int, int]:
    """``(si_+, si_-)`` from the cell Schur function at ``+-1``.

    ``method="exact"`` uses the single cell ``cell_window[0]`` and the exact
    tail route, ``f = gamma_x* (f_L + f_R)``.  ``method="resolvent"`` evaluates
    the Schur function of the whole cell window on open truncations by the
    radial scheme, enlarging the window until two consecutive enlargements
    agree.
    """
    model = _as_model(walk)
    _raise_if_closed(tail_gaps(model, tol))
    cells = list(cell_window) if cell_window is not None else [0]
    if method == "exact":
        x = cells[0]
        vals = boundary_values(model, x, tol)
        g = model.cell_block(x)
        out = []
        for p, tag in ((1, "+"), (-1, "-")):
            f = g.conj().T @ sla.block_diag(np.atleast_2d(vals["L" + tag].value), np.atleast_2d(vals["R" + tag].value))
            v = 0.5 * np.trace(g @ (np.eye(g.shape[0]) + p * f))
            out.append(_round_int(v, tol))
        return out[0], out[1]
    if method != "resolvent":
        raise ValueError("method must be 'exact' or 'resolvent'")
    lo, hi = min(cells), max(cells)
    results, changes = [], 0
    for grow in range(0, 12):
        win = list(range(lo - grow, hi + grow + 1))
        res = _si_pm_resolvent(model, win, tol, radius + grow)
        if results and res != results[-1]:
            changes += 1
            if changes >= 2:
                raise WindowNotConvergedError("cell-window enlargement changed the indices twice in a row")
        elif results:
            changes = 0
        results.append(res)
        if len(results) >= 2 and results[-1] == results[-2]:
            return res
    raise WindowNotConvergedError("cell-window enlargement did not settle")


def _round_int(v: complex, tol: Tolerances) -> int:
    r = round(v.real)
    if abs(v - r) > tol.quantization:
        raise WindowNotConvergedError(f"index {v:.6g} is not close to an integer")
    return int(r)


def _si_pm_resolvent(model: WalkModel, cells: list[int], tol: Tolerances, radius: int) -> tuple[int, int]:
    built = model.truncate(min(cells) - radius, max(cells) + radius)
    w = built.unitary
    idx = w.cells_indices(cells)
    g = sla.block_diag(*[model.cell_block(x) for x in cells])
    out = []
    for p in (1, -1):
        f = radial_boundary_value(lambda z: resolvent_column(w, idx, z), p, tol).value
        f = np.atleast_2d(f)
        out.append(_round_int(0.5 * np.trace(g @ (np.eye(g.shape[0]) + p * f)), tol))
    return out[0], out[1]


def classify(walk, tol: Tolerances = DEFAULT, sites: Sequence[int] | None = None) -> IndexReport:
    """Indices, phase label and diagnostics of a walk with constant tails."""
    model = _as_model(walk)
    spec = model.spec
    d = model.d
    gaps = tail_gaps(model, tol)
    diag: dict[str, Any] = {"gaps": {s: {f"{p:+d}": v for p, v in g.items()} for s, g in gaps.items()}}
    closed = [(s, p) for s, g in gaps.items() for p, ok in g.items() if not ok]
    if closed:
        diag["gap_closed_at"] = [{"tail": s, "point": p} for s, p in closed]
        return IndexReport("gap_closed", spec.model, spec.cell_dim, diagnostics=diag)
    sites = list(sites) if sites is not None else default_sites(spec)
    per_site, residuals = [], {}
    for x in sites:
        vals = boundary_values(model, x, tol)
        try:
            per_site.append(_traces(vals, d, tol))
        except WindowNotConvergedError as exc:
            diag["error"] = str(exc)
            return IndexReport("not_quantized", spec.model, spec.cell_dim, diagnostics=diag)
        residuals[x] = max(v.residual for v in vals.values())
    t = per_site[0]
    diag["sites"] = sites
    diag["x_independent"] = all(p == t for p in per_site)
    diag["traces"] = t
    diag["residuals"] = residuals
    if not diag["x_independent"]:
        diag["traces_per_site"] = dict(zip(sites, per_site))
        return IndexReport("x_dependent", spec.model, spec.cell_dim, diagnostics=diag)
    idx = _indices_from_traces(t)
    diag["si_plus_direct"] = idx.pop("si_plus_direct")
    diag["parity"] = _parity(t)
    triple = (idx["si_left"], idx["si_right"], idx["si_minus"])
    return IndexReport(
        "classified",
        spec.model,
        spec.cell_dim,
        phase_label=phase_label(spec.model, d, t, triple),
        diagnostics=diag,
        **idx,
    )


def _parity(t: dict[str, int]) -> dict[str, str]:
    out = {}
    for side in "LR":
        a, b = t[side + "+"], t[side + "-"]
        out[side] = "odd" if a == -b else ("even" if a == b else "none")
    return out


# --------------------------------------------------------------------------
# decoupling and the resolvent route
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Decoupling:
    left: BandedUnitary
    right: BandedUnitary
    v_restriction: np.ndarray
    subspace: np.ndarray
    """Scalar indices (in the parent truncation) on which ``V - 1`` acts."""
    product: str
    """``"VW"`` (perturbation on the left) or ``"WV"``."""
    split: int
    """Scalar index where the right half starts."""


def _layer_roles(w: BandedUnitary) -> tuple[str, str]:
    """Names of the cell-aligned and the half-shifted layer of ``w``."""
    odd_offsets = {o for o, _ in w.layer_odd.blocks}
    if all(o % w.cell_size == 0 for o in odd_offsets):
        return "layer_odd", "layer_even"
    return "layer_even", "layer_odd"


def decouple(walk, site: int, side: str = "right_gamma_tilde", unitary: BandedUnitary | None = None) -> Decoupling:
    """Replace ``gamma_tilde_site`` (``right_gamma_tilde``) or ``gamma_site`` (``left_gamma``) by the identity."""
    w = unitary if unitary is not None else walk.unitary
    cell, shifted = _layer_roles(w)
    k = site - w.cell_origin
    size, d = w.cell_size, w.cell_size // 2
    if not 0 <= k < w.n_cells:
        raise IndexError("site outside the truncation")
    if side == "right_gamma_tilde":
        name, offset, split = shifted, (k * size - d) % w.dim, k * size
    elif side == "left_gamma":
        name, offset, split = cell, k * size, k * size + d
    else:
        raise ValueError("side must be 'left_gamma' or 'right_gamma_tilde'")
    layer: Layer = getattr(w, name)
    j = layer.block_at(offset)
    blk = layer.blocks[j][1]
    sub = layer.indices(j)
    new = BandedUnitary(
        **{
            "layer_even": w.layer_even if name != "layer_even" else layer.without(j),
            "layer_odd": w.layer_odd if name != "layer_odd" else layer.without(j),
        },
        boundary="open",
        cell_size=size,
        cell_origin=w.cell_origin,
    )
    product = "VW" if name == "layer_even" else "WV"
    left = new.restrict(0, split)
    right = new.restrict(split, w.dim)
    return Decoupling(left, right, blk.conj().T, sub, product, split)


def classify_resolvent(
    built: BuiltWalk, adjoint: bool = False, site: int = 0, tol: Tolerances = DEFAULT
) -> IndexReport:
    """Indices from truncated resolvents and radial limits (independent of the tail route).

    With ``adjoint=True`` the operator ``W*`` is classified, using the same
    chiral layer.
    """
    model = built.model
    w = built.unitary.adjoint() if adjoint else built.unitary
    if w.boundary != "open":
        raise ValueError("the resolvent route needs an open truncation")
    dec = decouple(built, site, "right_gamma_tilde", unitary=w)
    d2 = w.cell_size
    g_left = model.cell_block(site - 1)
    g_right = model.cell_block(site)
    left_idx = np.arange(dec.left.dim - d2, dec.left.dim)
    right_idx = np.arange(d2)
    f = {}
    for p in (1, -1):
        f["L", p] = np.atleast_2d(radial_boundary_value(lambda z: resolvent_column(dec.left, left_idx, z), p, tol).value)
        f["R", p] = np.atleast_2d(radial_boundary_value(lambda z: resolvent_column(dec.right, right_idx, z), p, tol).value)
        f["W", p] = np.atleast_2d(
            radial_boundary_value(lambda z: resolvent_column(w, w.cell_indices(site), z), p, tol).value
        )
    si_l = _round_int(0.5 * np.trace(g_left @ (f["L", 1] - f["L", -1])), tol)
    si_r = _round_int(0.5 * np.trace(g_right @ (f["R", 1] - f["R", -1])), tol)
    one = np.eye(d2)
    si_p = _round_int(0.5 * np.trace(g_right @ (one + f["W", 1])), tol)
    si_m = _round_int(0.5 * np.trace(g_right @ (one - f["W", -1])), tol)
    spec = model.spec
    return IndexReport(
        "classified",
        spec.model,
        spec.cell_dim,
        si_left=si_l,
        si_right=si_r,
        si_minus=si_m,
        si_plus=si_p,
        diagnostics={"route": "resolvent", "adjoint": adjoint},
    )


def resolvent_boundary_values(
    built: BuiltWalk,
    site: int = 0,
    estimator: str = "radial",
    h: float = 1e-6,
    tol: Tolerances = DEFAULT,
    depth: int = 5,
) -> dict[str, SchurValue]:
    """Numeric counterparts of :func:`boundary_values` from a truncation.

    The walk is decoupled by removing ``gamma_site``; ``f_L`` is the Schur
    function of ``site up`` in the left half and ``f_R`` that of ``site down``
    in the right half.  ``estimator`` is ``"radial"`` (adaptive radial
    limit) or ``"richardson"`` (radii ``1 - h 2**-j`` for ``j = 0..depth``).
    """
    w = built.unitary
    if w.boundary != "open":
        raise ValueError("the resolvent route needs an open truncation")
    dec = decouple(built, site, "left_gamma")
    d = w.cell_size // 2
    left_idx = np.arange(dec.left.dim - d, dec.left.dim)
    right_idx = np.arange(d)
    out = {}
    for p, tag in ((1, "+"), (-1, "-")):
        for side, half, idx in (("L", dec.left, left_idx), ("R", dec.right, right_idx)):
            fun = lambda z, half=half, idx=idx: resolvent_column(half, idx, z)  # noqa: E731
            if estimator == "radial":
                v = radial_boundary_value(fun, p, tol)
            elif estimator == "richardson":
                v = richardson_estimate(fun, p, h, depth)
            else:
                raise ValueError("estimator must be 'radial' or 'richardson'")
            out[side + tag] = v
    return out


# --------------------------------------------------------------------------
# mass points of finite unitaries
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MassPoint:
    eigenvalue: complex
    kernel: np.ndarray
    """Orthonormal basis of ``ker(1 - lambda f(lambda))`` in subspace coordinates."""

    @property
    def multiplicity(self) -> int:
        return self.kernel.shape[1]


def _subspace_basis(u: np.ndarray, subspace) -> np.ndarray:
    s = np.asarray(subspace)
    if s.ndim == 1 and np.issubdtype(s.dtype, np.integer):
        q = np.zeros((u.shape[0], s.size), dtype=complex)
        q[s, np.arange(s.size)] = 1.0
        return q
    q, _ = np.linalg.qr(np.atleast_2d(s.T).T.astype(complex))
    return q


def subspace_schur_function(u: np.ndarray, q: np.ndarray, z: complex) -> np.ndarray:
    """``Q* (U - z (1 - Q Q*))^{-1} Q`` for an orthonormal basis ``Q``."""
    n = u.shape[0]
    m = u - z * (np.eye(n) - q @ q.conj().T)
    return q.conj().T @ np.linalg.solve(m, q)


def is_cyclic(u: np.ndarray, q: np.ndarray, tol: float = 1e-10) -> bool:
    """Whether the Krylov spaces of ``U`` over ``range(Q)`` fill the whole space."""
    n = u.shape[0]
    basis = np.linalg.qr(q)[0]
    cur = basis
    while basis.shape[1] < n:
        cur = u @ cur
        for _ in range(2):
            cur = cur - basis @ (basis.conj().T @ cur)
        uu, ss, _ = np.linalg.svd(cur, full_matrices=False)
        cur = uu[:, ss > tol]
        if cur.shape[1] == 0:
            return False
        basis = np.hstack([basis, cur])
    return True


def mass_points(u: np.ndarray, subspace, tol: float = 1e-8, cluster: float = 1e-7) -> list[MassPoint]:
    """Circle zeros of ``det(1 - z f(z))`` and the kernels of ``1 - lambda f(lambda)``."""
    u = np.asarray(u, dtype=complex)
    q = _subspace_basis(u, subspace)
    if not is_cyclic(u, q):
        raise NotCyclicError("the subspace is not cyclic for U")
    eigs = np.linalg.eigvals(u)
    groups: list[list[complex]] = []
    for lam in eigs[np.argsort(np.angle(eigs))]:
        for g in groups:
            if abs(g[0] - lam) < cluster:
                g.append(lam)
                break
        else:
            groups.append([lam])
    out = []
    k = q.shape[1]
    for g in groups:
        lam = complex(np.mean(g))
        lam /= abs(lam)
        # no eigenvector is orthogonal to a cyclic subspace, so f is regular at lam
        f = subspace_schur_function(u, q, lam)
        _, s, vh = np.linalg.svd(np.eye(k) - lam * f)
        ker = vh[s < tol].conj().T
        if ker.shape[1] == 0:
            continue
        out.append(MassPoint(lam, ker))
    return out
