"""Scalar and block Schur-function machinery.

Conventions
-----------
A Schur parameter sequence ``(alpha_0, alpha_1, ...)`` determines the Schur
function ``f`` through the recursion ``f_{n} = (z f_{n+1} + alpha_n) /
(1 + conj(alpha_n) z f_{n+1})``.  A *block chain* generalises this to a
sequence of unitary blocks ``Theta = [[a, b], [c, e]]`` with ``d x d``
quadrants, where one inverse step reads::

    f = a* + c* z g (1 - z e* g)^{-1} b*

For ``Theta(alpha) = [[conj(alpha), rho], [rho, -alpha]]`` this reduces to the
scalar inverse step.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .config import DEFAULT, Tolerances
from .errors import (
    BranchAmbiguousError,
    DivisionDegenerateError,
    GapClosedError,
    MassPointSingularError,
    WindowNotConvergedError,
)

TAIL_KINDS = ("none", "zero", "periodic", "terminating")


# --------------------------------------------------------------------------
# data types
# --------------------------------------------------------------------------


def _as_complex_tuple(values) -> tuple[complex, ...]:
    return tuple(complex(v) for v in values)


@dataclass(frozen=True)
class SchurParamSeq:
    """Schur parameters with an eventually periodic description.

    One-sided sequences list ``alpha_0 .. alpha_{k-1}`` in ``head`` followed by
    the ``tail``: zeros (``"none"``/``"zero"``), a single unimodular
    ``"terminating"`` parameter, or a ``"periodic"`` block repeated forever.
    A two-period tail ``(s_tilde, s)`` is the case produced by walks.

    Two-sided sequences place ``head[0]`` at index ``start`` and additionally
    carry a periodic ``left_tail`` listed outward from ``start - 1``.
    """

    head: tuple[complex, ...] = ()
    tail_kind: str = "none"
    tail: tuple[complex, ...] = ()
    two_sided: bool = False
    start: int = 0
    left_tail_kind: str = "none"
    left_tail: tuple[complex, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "head", _as_complex_tuple(self.head))
        object.__setattr__(self, "tail", _as_complex_tuple(self.tail))
        object.__setattr__(self, "left_tail", _as_complex_tuple(self.left_tail))
        for kind in (self.tail_kind, self.left_tail_kind):
            if kind not in TAIL_KINDS:
                raise ValueError(f"unknown tail kind {kind!r}")
        for n, a in enumerate(self.head):
            if not abs(a) < 1.0:
                raise ValueError(f"head parameter {n} has modulus {abs(a)} >= 1")
        self._check_tail(self.tail_kind, self.tail, "tail")
        if self.two_sided:
            if self.tail_kind == "terminating" or self.left_tail_kind == "terminating":
                raise ValueError("two-sided sequences need non-terminating tails")
            self._check_tail(self.left_tail_kind, self.left_tail, "left_tail")

    @staticmethod
    def _check_tail(kind: str, values: tuple[complex, ...], name: str) -> None:
        if kind == "terminating":
            if len(values) != 1 or abs(abs(values[0]) - 1.0) > 1e-12:
                raise ValueError(f"{name}: terminating tail needs one unimodular parameter")
        elif kind == "periodic":
            if not values:
                raise ValueError(f"{name}: periodic tail needs at least one parameter")
            if any(not abs(a) < 1.0 for a in values):
                raise ValueError(f"{name}: periodic parameters must lie in the open disk")
        elif values:
            raise ValueError(f"{name}: tail kind {kind!r} takes no values")

    # convenience constructors
    @classmethod
    def periodic2(cls, head: Sequence[complex], s_tilde: float, s: float) -> "SchurParamSeq":
        return cls(tuple(head), "periodic", (s_tilde, s))

    @classmethod
    def terminating(cls, head: Sequence[complex], alpha: complex) -> "SchurParamSeq":
        return cls(tuple(head), "terminating", (alpha,))

    @property
    def end(self) -> int:
        return self.start + len(self.head)

    @property
    def is_real(self) -> bool:
        vals = self.head + self.tail + self.left_tail
        return all(v.imag == 0.0 for v in vals)

    def at(self, n: int) -> complex:
        """Parameter with index ``n``."""
        if not self.two_sided and n < 0:
            raise IndexError("one-sided sequences start at index 0")
        if self.start <= n < self.end:
            return self.head[n - self.start]
        if n >= self.end:
            k = n - self.end
            if self.tail_kind == "periodic":
                return self.tail[k % len(self.tail)]
            if self.tail_kind == "terminating":
                if k == 0:
                    return self.tail[0]
                raise IndexError("sequence terminates")
            return 0j
        k = self.start - 1 - n
        if self.left_tail_kind == "periodic":
            return self.left_tail[k % len(self.left_tail)]
        return 0j

    def one_sided_from(self, n0: int, direction: int = 1, negate: bool = False) -> "SchurParamSeq":
        """Read the sequence from index ``n0`` onward (``direction=+1``) or backward (``-1``)."""
        sign = -1.0 if negate else 1.0
        if direction == 1:
            stop = max(n0, self.end)
            head = [sign * self.at(n) for n in range(n0, stop)]
            if self.tail_kind == "periodic":
                p = len(self.tail)
                return SchurParamSeq(tuple(head), "periodic", tuple(sign * self.at(stop + k) for k in range(p)))
            if self.tail_kind == "terminating":
                return SchurParamSeq(tuple(head), "terminating", (sign * self.tail[0],))
            return SchurParamSeq(tuple(head), self.tail_kind)
        if direction == -1:
            if not self.two_sided:
                raise ValueError("backward reading needs a two-sided sequence")
            stop = min(n0, self.start - 1)
            head = [sign * self.at(n) for n in range(n0, stop, -1)]
            if self.left_tail_kind == "periodic":
                p = len(self.left_tail)
                return SchurParamSeq(tuple(head), "periodic", tuple(sign * self.at(stop - k) for k in range(p)))
            return SchurParamSeq(tuple(head), self.left_tail_kind)
        raise ValueError("direction must be +1 or -1")


@dataclass(frozen=True)
class SchurValue:
    """A Schur function value together with its certification data."""

    z: complex
    value: complex | np.ndarray
    residual: float = 0.0
    method: str = "exact"
    exact: bool = False

    @property
    def trace(self) -> complex:
        v = self.value
        return complex(np.trace(v)) if isinstance(v, np.ndarray) else complex(v)


@dataclass(frozen=True)
class GapAnalysis:
    theta: float
    theta_tilde: float
    gapped_at_plus: bool
    gapped_at_minus: bool
    branch_point_cosines: tuple[float, float] = field(default=(0.0, 0.0))

    def gapped_at(self, point: int) -> bool:
        return self.gapped_at_plus if point > 0 else self.gapped_at_minus


# --------------------------------------------------------------------------
# scalar Schur algorithm
# --------------------------------------------------------------------------


def schur_step(f_value: complex, alpha: complex, z: complex) -> complex:
    """One forward Schur step ``(1/z) (f - alpha) / (1 - conj(alpha) f)``."""
    if z == 0:
        raise DivisionDegenerateError("the forward step is undefined at z = 0")
    f, a = complex(f_value), complex(alpha)
    den = 1.0 - a.conjugate() * f
    if den == 0:
        raise DivisionDegenerateError("1 - conj(alpha) f vanishes; the sequence terminated earlier")
    return (f - a) / (complex(z) * den)


def schur_unstep(next_value: complex, alpha: complex, z: complex) -> complex:
    """Inverse Schur step ``(z g + alpha) / (1 + conj(alpha) z g)``."""
    g, a, z = complex(next_value), complex(alpha), complex(z)
    if g.imag == 0 and a.imag == 0 and z.imag == 0:
        # real arithmetic keeps the fixed points +-1 exact
        zg = z.real * g.real
        den = 1.0 + a.real * zg
        if den == 0:
            raise DivisionDegenerateError("boundary-degenerate inverse step")
        return complex((zg + a.real) / den)
    zg = z * g
    den = 1.0 + a.conjugate() * zg
    if den == 0:
        raise DivisionDegenerateError("boundary-degenerate inverse step")
    return (zg + a) / den


def gap_analysis(s: float, s_tilde: float, tol: Tolerances = DEFAULT) -> GapAnalysis:
    """Gap status at ``+-1`` of the two-periodic sequence ``(s_tilde, s, s_tilde, ...)``."""
    th, tt = math.asin(s), math.asin(s_tilde)
    return GapAnalysis(
        theta=th,
        theta_tilde=tt,
        gapped_at_plus=abs(s_tilde + s) > tol.gap,
        gapped_at_minus=abs(s_tilde - s) > tol.gap,
        branch_point_cosines=(math.cos(tt + th), -math.cos(tt - th)),
    )


def _p2_discriminant(s: float, st: float, z: complex) -> complex:
    return (1 - z * z) ** 2 + 4 * z * (s + st * z) * (s * z + st)


def _p2_sqrt_disc(s: float, st: float, z: complex) -> complex:
    """``sqrt(Delta(z))`` continued along ``[0, z]`` from the value 1 at the origin."""
    prev = 1.0 + 0j
    t, h = 0.0, 0.125
    while t < 1.0:
        h = min(h, 1.0 - t)
        cand = cmath.sqrt(_p2_discriminant(s, st, (t + h) * z))
        if abs(cand + prev) < abs(cand - prev):
            cand = -cand
        jump = abs(cmath.phase(cand / prev)) if prev != 0 and cand != 0 else 0.0
        if jump > math.pi / 4 and h > 1e-12:
            h /= 2
            continue
        prev, t = cand, t + h
        h *= 2
    return prev


def periodic2_schur(s: float, s_tilde: float, z: complex, tol: Tolerances = DEFAULT) -> complex:
    """Schur function of the two-periodic real sequence ``(s_tilde, s, s_tilde, s, ...)``.

    Evaluated in the rationalised form ``2 (s_tilde + s z) / (1 - z**2 + sqrt(Delta))``,
    which has no removable singularities in the closed disk.

    Raises
    ------
    GapClosedError
        at ``z = +-1`` when ``s_tilde +- s`` vanishes.
    BranchAmbiguousError
        at the branch points on the unit circle.
    """
    s, st = float(s), float(s_tilde)
    if not (abs(s) < 1 and abs(st) < 1):
        raise ValueError("periodic parameters must lie in (-1, 1)")
    z = complex(z)
    if abs(z) > 1 + 1e-12:
        raise ValueError("z must lie in the closed unit disk")
    if z == 1 or z == -1:
        q = st + s if z == 1 else st - s
        if abs(q) <= tol.gap:
            raise GapClosedError(
                f"gap closed at {int(z.real):+d}: s_tilde {'+' if z == 1 else '-'} s = {q:.3g}",
                point=int(z.real),
            )
        return complex(math.copysign(1.0, q))
    if abs(s) == 0 and abs(st) == 0:
        return 0j
    disc = _p2_discriminant(s, st, z)
    if abs(abs(z) - 1) < 1e-12 and abs(disc) < 1e-13:
        raise BranchAmbiguousError(f"z = {z} is a branch point")
    root = _p2_sqrt_disc(s, st, z)
    return complex(2 * (st + s * z) / (1 - z * z + root))


# --------------------------------------------------------------------------
# general periodic tails and sequence evaluation
# --------------------------------------------------------------------------


def _mobius_matrix(alpha: complex, z: complex) -> np.ndarray:
    return np.array([[z, alpha], [np.conj(alpha) * z, 1.0]], dtype=complex)


def _periodic_tail_value(period: Sequence[complex], z: complex, tol: Tolerances) -> complex:
    """Attracting fixed point of the period's inverse-step Mobius map."""
    if z == 0:
        return complex(period[0])
    m = np.eye(2, dtype=complex)
    for a in period:
        m = m @ _mobius_matrix(a, z)
    w, v = np.linalg.eig(m)
    order = np.argsort(-np.abs(w))
    big, small = abs(w[order[0]]), abs(w[order[1]])
    if big - small <= tol.gap * max(big, 1.0):
        raise GapClosedError(f"periodic tail is not hyperbolic at z = {z}")
    vec = v[:, order[0]]
    return complex(vec[0] / vec[1])


def tail_value(seq: SchurParamSeq, z: complex, tol: Tolerances = DEFAULT) -> complex:
    """Value at ``z`` of the Schur function generated by the tail alone."""
    if seq.tail_kind in ("none", "zero"):
        return 0j
    if seq.tail_kind == "terminating":
        return seq.tail[0]
    t = seq.tail
    if len(t) == 2 and t[0].imag == 0 and t[1].imag == 0:
        return periodic2_schur(t[1].real, t[0].real, z, tol)
    return _periodic_tail_value(t, z, tol)


def schur_eval(seq: SchurParamSeq, z: complex, tol: Tolerances = DEFAULT) -> complex:
    """Evaluate the one-sided sequence's Schur function at ``z`` in the closed disk."""
    if seq.two_sided:
        raise ValueError("evaluate a one-sided reading of a two-sided sequence")
    z = complex(z)
    if z == 0:
        return seq.head[0] if seq.head else tail_value(seq, 0, tol)
    g = tail_value(seq, z, tol)
    for a in reversed(seq.head):
        g = schur_unstep(g, a, z)
    return g


def eval_boundary(seq: SchurParamSeq, point: int, tol: Tolerances = DEFAULT) -> SchurValue:
    """Exact value at ``point`` in ``{+1, -1}`` via the tail and inverse steps.

    A zero tail corresponds to the free shift, which has no gap anywhere.
    """
    if point not in (1, -1):
        raise ValueError("point must be +1 or -1")
    if seq.tail_kind in ("none", "zero"):
        raise GapClosedError("a zero tail has no spectral gap", point=point)
    g = tail_value(seq, point, tol)
    exact_fixed = seq.is_real and g in (1, -1)
    for a in reversed(seq.head):
        g = schur_unstep(g, a, point)
    if exact_fixed and g not in (1, -1):
        raise AssertionError("fixed-point identity violated")
    return SchurValue(complex(point), g, residual=abs(abs(g) - 1.0), method="tail", exact=exact_fixed)


def apply_parity_transform(seq: SchurParamSeq, transform: str) -> SchurParamSeq:
    """``negate`` gives ``-f``; ``interleave_even`` gives ``f(z^2)``; ``interleave_odd`` gives ``z f(z^2)``."""
    if transform == "negate":
        return SchurParamSeq(
            tuple(-a for a in seq.head),
            seq.tail_kind,
            tuple(-a for a in seq.tail),
            seq.two_sided,
            seq.start,
            seq.left_tail_kind,
            tuple(-a for a in seq.left_tail),
        )
    if seq.two_sided:
        raise ValueError("interleaving is defined for one-sided sequences")
    if transform == "interleave_even":
        head = tuple(x for a in seq.head for x in (a, 0j))
        if seq.tail_kind == "periodic":
            return SchurParamSeq(head, "periodic", tuple(x for a in seq.tail for x in (a, 0j)))
        return SchurParamSeq(head, seq.tail_kind, seq.tail)
    if transform == "interleave_odd":
        head = tuple(x for a in seq.head for x in (0j, a))
        if seq.tail_kind == "periodic":
            return SchurParamSeq(head, "periodic", tuple(x for a in seq.tail for x in (0j, a)))
        if seq.tail_kind == "terminating":
            return SchurParamSeq(head + (0j,), "terminating", seq.tail)
        return SchurParamSeq(head, seq.tail_kind)
    raise ValueError(f"unknown transform {transform!r}")


def schur_to_caratheodory(f_value, z: complex, cond_limit: float = 1e12):
    """Caratheodory value ``(1 + z f)(1 - z f)^{-1}`` for a scalar or matrix ``f``."""
    if np.ndim(f_value) == 0:
        den = 1.0 - z * complex(f_value)
        if abs(den) < 1.0 / cond_limit:
            raise MassPointSingularError(f"1 - z f(z) vanishes at z = {z}")
        return complex((1.0 + z * f_value) / den)
    f = np.asarray(f_value, dtype=complex)
    one = np.eye(f.shape[0])
    m = one - z * f
    if np.linalg.cond(m) > cond_limit:
        raise MassPointSingularError(f"1 - z f(z) is singular at z = {z}")
    return (one + z * f) @ np.linalg.inv(m)


def power_series_coefficients(walk, cell_projection: Sequence[int], order: int) -> list[np.ndarray]:
    """Coefficients ``P (W* P_perp)^n W* P`` for ``n = 0 .. order``.

    ``walk`` is any operator exposing ``dim`` and ``rmatmat`` (``W* @ X``).
    """
    idx = np.asarray(cell_projection, dtype=int)
    x = np.zeros((walk.dim, idx.size), dtype=complex)
    x[idx, np.arange(idx.size)] = 1.0
    y = walk.rmatmat(x)
    out = [y[idx].copy()]
    for _ in range(order):
        y[idx] = 0.0
        y = walk.rmatmat(y)
        out.append(y[idx].copy())
    return out


# --------------------------------------------------------------------------
# block chains
# --------------------------------------------------------------------------


def _quadrants(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    d = theta.shape[0] // 2
    return theta[:d, :d], theta[:d, d:], theta[d:, :d], theta[d:, d:]


def block_unstep(theta: np.ndarray, g: np.ndarray, z: complex) -> np.ndarray:
    """Inverse step of a block chain: ``a* + c* z g (1 - z e* g)^{-1} b*``."""
    a, b, c, e = _quadrants(theta)
    d = a.shape[0]
    zg = z * g
    m = np.eye(d) - e.conj().T @ zg
    try:
        x = np.linalg.solve(m, b.conj().T)
    except np.linalg.LinAlgError as exc:
        raise DivisionDegenerateError("boundary-degenerate block inverse step") from exc
    return a.conj().T + c.conj().T @ zg @ x


def block_lft(theta: np.ndarray, z: complex) -> np.ndarray:
    """Matrix ``T`` with ``block_unstep(theta, g, z) = (T11 g + T12)(T21 g + T22)^{-1}``."""
    a, b, c, e = _quadrants(theta)
    ah, bh, ch, eh = a.conj().T, b.conj().T, c.conj().T, e.conj().T
    binv = np.linalg.inv(bh)
    ab = ah @ binv
    top = np.hstack([z * (ch - ab @ eh), ab])
    bot = np.hstack([-z * binv @ eh, binv])
    return np.vstack([top, bot])


@dataclass(frozen=True)
class TailFixedPoint:
    value: np.ndarray
    separation: float
    """Ratio ``|lambda_d| / |lambda_{d+1}|`` of the period transfer matrix."""
    residual: float


def block_tail_fixed_point(period: Sequence[np.ndarray], z: complex, tol: Tolerances = DEFAULT) -> TailFixedPoint:
    """Attracting fixed point of a periodic block chain at ``z``.

    The fixed point is the graph of the dominant ``d``-dimensional invariant
    subspace of the period transfer matrix, taken from an ordered Schur form.
    """
    d = period[0].shape[0] // 2
    if z == 0:
        a = _quadrants(period[0])[0]
        return TailFixedPoint(a.conj().T.copy(), math.inf, 0.0)
    t = np.eye(2 * d, dtype=complex)
    for th in period:
        t = t @ block_lft(th, z)
    lam = np.sort(np.abs(np.linalg.eigvals(t)))[::-1]
    sep = lam[d - 1] / lam[d] if lam[d] > 0 else math.inf
    if not sep > 1.0 + max(tol.gap, 1e-10):
        raise GapClosedError(f"periodic block tail is not hyperbolic at z = {z} (ratio {sep:.6g})")
    cut = math.sqrt(lam[d - 1] * lam[d])
    _, zmat, sdim = sla.schur(t, output="complex", sort=lambda x: abs(x) > cut)
    if sdim != d:
        raise GapClosedError(f"could not isolate the dominant subspace at z = {z}")
    basis = zmat[:, :d]
    g = np.linalg.solve(basis[d:].T, basis[:d].T).T
    h = g
    for th in reversed(period):
        h = block_unstep(th, h, z)
    return TailFixedPoint(g, float(sep), float(np.linalg.norm(h - g)))


@dataclass(frozen=True)
class BlockSchurChain:
    """Matrix Schur function given by ``head`` blocks followed by a periodic ``tail``."""

    head: tuple[np.ndarray, ...]
    tail: tuple[np.ndarray, ...]

    @property
    def d(self) -> int:
        return (self.tail[0] if self.tail else self.head[0]).shape[0] // 2

    def tail_value(self, z: complex, tol: Tolerances = DEFAULT) -> TailFixedPoint:
        return block_tail_fixed_point(self.tail, z, tol)

    def value(self, z: complex, tol: Tolerances = DEFAULT) -> np.ndarray:
        z = complex(z)
        if z == 0:
            first = self.head[0] if self.head else self.tail[0]
            return _quadrants(first)[0].conj().T.copy()
        g = self.tail_value(z, tol).value
        for th in reversed(self.head):
            g = block_unstep(th, g, z)
        return g

    def boundary(self, point: int, tol: Tolerances = DEFAULT) -> SchurValue:
        fp = self.tail_value(point, tol)
        g = fp.value
        for th in reversed(self.head):
            g = block_unstep(th, g, point)
        res = float(np.linalg.norm(g.conj().T @ g - np.eye(g.shape[0]), 2))
        return SchurValue(complex(point), g, residual=max(res, fp.residual), method="tail")


def theta_matrix(alpha: complex) -> np.ndarray:
    """The 2x2 unitary ``[[conj(alpha), rho], [rho, -alpha]]``."""
    rho = math.sqrt(max(0.0, 1.0 - abs(alpha) ** 2))
    return np.array([[np.conj(alpha), rho], [rho, -alpha]], dtype=complex)


def scalar_chain(seq: SchurParamSeq) -> BlockSchurChain:
    """Block chain of ``1 x 1`` quadrants equivalent to a periodic-tailed sequence."""
    if seq.tail_kind != "periodic":
        raise ValueError("only periodic tails convert to block chains")
    return BlockSchurChain(tuple(theta_matrix(a) for a in seq.head), tuple(theta_matrix(a) for a in seq.tail))


# --------------------------------------------------------------------------
# radial limits
# --------------------------------------------------------------------------


def radial_boundary_value(
    fun: Callable[[complex], complex | np.ndarray],
    point: int,
    tol: Tolerances = DEFAULT,
    k_range: tuple[int, int] = (4, 44),
    depth: int = 4,
) -> SchurValue:
    """Boundary value at ``point`` from the radii ``1 - 2**-k``.

    The samples are combined in a Richardson tableau (polynomial
    extrapolation in ``h = 2**-k`` of order up to ``depth``).  The first
    extrapolated value that agrees with its predecessor within
    ``tol.radial_agreement`` and has unitarity residual below
    ``tol.rounding_residual`` is accepted.
    """
    k0, k1 = k_range
    rows: list[list[np.ndarray]] = []
    prev = None
    for k in range(k0, k1 + 1):
        sample = np.atleast_2d(np.asarray(fun(point * (1.0 - 2.0 ** -k)), dtype=complex))
        row = [sample]
        for j in range(1, min(depth, len(rows)) + 1):
            row.append((2**j * row[j - 1] - rows[-1][j - 1]) / (2**j - 1))
        rows.append(row)
        est = row[-1]
        res = float(np.linalg.norm(est.conj().T @ est - np.eye(est.shape[0]), 2))
        if prev is not None and np.max(np.abs(est - prev)) < tol.radial_agreement and res < tol.rounding_residual:
            val = est[0, 0] if est.shape == (1, 1) else est
            return SchurValue(complex(point), val, residual=res, method="radial")
        prev = est
    raise WindowNotConvergedError(f"radial estimates at {point:+d} did not settle on a unitary value")


def richardson_estimate(fun: Callable[[complex], np.ndarray], point: int, h: float = 1e-6, depth: int = 3) -> SchurValue:
    """Richardson extrapolation from the radii ``1 - h 2**-j``, ``j = 0..depth``.

    ``depth=1`` is the two-point rule ``2 f((1-h/2) p) - f((1-h) p)``.
    """
    row: list[np.ndarray] = []
    for k in range(depth + 1):
        new = [np.atleast_2d(np.asarray(fun(point * (1.0 - h * 2.0**-k)), dtype=complex))]
        for j in range(1, k + 1):
            new.append((2**j * new[j - 1] - row[j - 1]) / (2**j - 1))
        row = new
    est = row[-1]
    res = float(np.linalg.norm(est.conj().T @ est - np.eye(est.shape[0]), 2))
    val = est[0, 0] if est.shape == (1, 1) else est
    return SchurValue(complex(point), val, residual=res, method="richardson")
