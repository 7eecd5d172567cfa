"""Finite ring simulations of disordered split-step crossovers.

A ring of ``n`` cells carries random angles from the ``+1`` phase on cells
``[0, n/2)`` and from the ``-1`` phase on ``[n/2, n)``, so the two
interfaces sit at cells ``0`` and ``n/2``.  Eigenvalues are computed densely;
the distances of the spectrum to ``+1`` and ``-1`` are additionally
certified in extended precision because they shrink far below double
precision as the ring grows.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
import numpy as np
import scipy.linalg as sla

from .errors import BoundViolatedError, DimensionCapExceededError, NoCandidateError
from .walk_models import BuiltWalk, WalkModel, WalkSpec, admissible, sample_phase_region

MAX_RING_CELLS = 1500
_FLOAT_RELIABLE = 1e-8
_SIGMA_FLOOR_LOG10 = -3000


@dataclass(frozen=True)
class PhaseDistance:
    """Distance of the spectrum to a point ``+1`` or ``-1``.

    ``sigma`` is the smallest singular value of ``W - point`` (chordal
    distance) and ``eigenphase`` the corresponding arc length.  ``certified``
    is true when the value comes from exact-inertia bisection.
    """

    point: int
    sigma: mpmath.mpf
    certified: bool

    @property
    def eigenphase(self) -> mpmath.mpf:
        return 2 * mpmath.asin(self.sigma / 2)

    @property
    def log10(self) -> float:
        return float(mpmath.log10(self.sigma)) if self.sigma > 0 else -math.inf


@dataclass
class RingExperiment:
    n_cells: int
    epsilon: float
    epsilon_prime: float
    rng_seed: int | None
    threshold: float
    walk: BuiltWalk
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    distances: dict[int, PhaseDistance] = field(default_factory=dict)

    @property
    def interfaces(self) -> tuple[int, int]:
        return 0, self.n_cells // 2

    @property
    def eigenphases(self) -> np.ndarray:
        return np.angle(self.eigenvalues)

    def dist_to(self, point: int) -> np.ndarray:
        """Eigenphase distance of every eigenvalue to ``point``."""
        return np.abs(np.angle(self.eigenvalues * point))

    def candidates(self, point: int | None = None) -> np.ndarray:
        """Indices of eigenvalues within ``threshold`` (eigenphase) of ``point`` or of either of ``+-1``."""
        if point is None:
            near = np.minimum(self.dist_to(1), self.dist_to(-1))
        else:
            near = self.dist_to(point)
        idx = np.flatnonzero(near < self.threshold)
        return idx[np.argsort(near[idx])]

    def unitarity_residual(self) -> float:
        return float(np.max(np.abs(np.abs(self.eigenvalues) - 1)))

    def conjugation_residual(self) -> float:
        """Largest distance from a conjugated eigenvalue to the spectrum."""
        ev = self.eigenvalues
        return float(np.max(np.min(np.abs(ev.conj()[:, None] - ev[None, :]), axis=1)))


def _ring_spec(n: int, eps: float, eps_prime: float, seed) -> WalkSpec:
    left_rng, right_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    half = n // 2
    window = {}
    window.update(sample_phase_region(1, eps, eps_prime, range(half), right_rng))
    window.update(sample_phase_region(-1, eps, eps_prime, range(half, n), left_rng))
    return WalkSpec(
        "split_step", (-math.pi / 2, 0.0), (math.pi / 2, 0.0), window, allow_any_angle=True
    )


def run_ring(
    n: int,
    eps: float,
    eps_prime: float,
    seed: int | None = None,
    threshold: float = 1e-3,
    certify: bool = True,
) -> RingExperiment:
    """Sample a crossover ring, diagonalize it and measure the approach to ``+-1``."""
    if n < 8 or n % 2:
        raise ValueError("n must be even and at least 8")
    if n > MAX_RING_CELLS:
        raise DimensionCapExceededError(f"ring of {n} cells exceeds the cap {MAX_RING_CELLS}")
    if not admissible(eps, eps_prime):
        raise BoundViolatedError("sin(eps/2) + sin(eps'/2) must be below 1/sqrt(2)")
    walk = WalkModel(_ring_spec(n, eps, eps_prime, seed)).truncate(0, n - 1, "ring")
    w = walk.unitary.dense()
    # Schur vectors of a normal matrix are orthonormal eigenvectors
    t, z = sla.schur(w.astype(complex), output="complex")
    ev = np.diag(t).copy()
    order = np.argsort(np.angle(ev), kind="stable")
    exp = RingExperiment(n, eps, eps_prime, seed, threshold, walk, ev[order], z[:, order])
    for point in (1, -1):
        exp.distances[point] = phase_distance(walk, point, certify=certify)
    return exp


# ---------------------------------------------------------------------------
# certified distances


def _periodic_tridiagonal(t: np.ndarray) -> tuple[list[float], list[float], float]:
    n = t.shape[0]
    diag = [float(t[i, i]) for i in range(n)]
    off = [float(t[i, i + 1]) for i in range(n - 1)]
    corner = float(t[0, n - 1]) if n > 2 else 0.0
    mask = np.ones_like(t, dtype=bool)
    i = np.arange(n)
    mask[i, i] = False
    mask[i[:-1], i[:-1] + 1] = False
    mask[i[:-1] + 1, i[:-1]] = False
    mask[0, n - 1] = mask[n - 1, 0] = False
    if np.any(t[mask] != 0) or not np.array_equal(t, t.T):
        raise ValueError("expected a real symmetric periodic tridiagonal matrix")
    return diag, off, corner


def _negative_count(diag, off, corner, shift) -> int:
    """Number of negative eigenvalues of ``T - shift`` by Sylvester inertia.

    The leading ``n-1`` block is factored as ``L D L^T`` and the last row
    enters through its Schur complement ``t_nn - u^T A^{-1} u``.
    """
    n = len(diag)
    u = [0] * (n - 1)
    u[0] = corner
    u[n - 2] = u[n - 2] + off[n - 2]
    tiny = mpmath.mpf(2) ** (-(mpmath.mp.prec + 64))
    neg = 0
    quad = 0
    d = w = None
    for i in range(n - 1):
        if i == 0:
            d_new, w_new = diag[0] - shift, u[0]
        else:
            l = off[i - 1] / d
            d_new = diag[i] - shift - l * off[i - 1]
            w_new = u[i] - l * w
        d, w = (d_new if d_new != 0 else tiny), w_new
        neg += d < 0
        quad += w * w / d
    neg += diag[n - 1] - shift - quad < 0
    return int(neg)


def _count_in(diag, off, corner, sigma) -> int:
    """Number of eigenvalues of ``T`` in the open interval ``(-sigma, sigma)``."""
    return _negative_count(diag, off, corner, sigma) - _negative_count(diag, off, corner, -sigma)


def _float_entries(t: np.ndarray):
    diag_f, off_f, corner_f = _periodic_tridiagonal(t)

    def entries():
        return [mpmath.mpf(v) for v in diag_f], [mpmath.mpf(v) for v in off_f], mpmath.mpf(corner_f)

    return entries


def smallest_abs_eigenvalue(t: np.ndarray, entries=None, rel_tol: float = 1e-8) -> tuple[mpmath.mpf, bool]:
    """Smallest ``|mu|`` over eigenvalues of a symmetric periodic tridiagonal matrix.

    Returns ``(mu, certified)``.  Values above ``1e-8`` are taken from a
    double-precision eigensolver on ``t``; smaller ones are bracketed by
    inertia counts in extended precision down to relative width ``rel_tol``.
    ``entries`` optionally regenerates ``(diag, off, corner)`` at the current
    mpmath precision (default: the entries of ``t`` read exactly).  A zero
    return means an eigenvalue below ``10**-3000``.
    """
    mu0 = float(np.min(np.abs(np.linalg.eigvalsh(t))))
    if mu0 > _FLOAT_RELIABLE:
        return mpmath.mpf(mu0), False
    entries = entries or _float_entries(t)
    cache: dict[int, tuple] = {}

    def count(log_sigma: float) -> int:
        dps = max(30, 10 * ((int(-log_sigma) + 40) // 10))
        with mpmath.workdps(dps):
            if dps not in cache:
                cache[dps] = entries()
            diag, off, corner = cache[dps]
            return _count_in(diag, off, corner, mpmath.mpf(10) ** log_sigma)

    hi = math.log10(_FLOAT_RELIABLE) + 1
    if count(hi) == 0:
        hi = 0.0
    lo = hi
    step = 8.0
    while True:
        lo = max(lo - step, _SIGMA_FLOOR_LOG10)
        if count(lo) == 0:
            break
        hi = lo
        if lo <= _SIGMA_FLOOR_LOG10:
            return mpmath.mpf(0), True
        step *= 2
    tol = math.log10(1 + rel_tol)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if count(mid) == 0:
            lo = mid
        else:
            hi = mid
    with mpmath.workdps(30):
        return mpmath.mpf(10) ** (0.5 * (lo + hi)), True


def _ring_entries(walk: BuiltWalk, point: int):
    """Exact entries of ``gamma - point gamma_tilde`` for a split-step ring.

    The rotation blocks are rebuilt from the angles at the working
    precision, so the matrix is an exact difference of involutions.
    """
    spec = walk.model.spec
    x0, x1 = walk.cells
    angles = [spec.site(x) for x in range(x0, x1 + 1)]

    def entries():
        s1 = [mpmath.sin(mpmath.mpf(a)) for a, _ in angles]
        c1 = [mpmath.cos(mpmath.mpf(a)) for a, _ in angles]
        s2 = [mpmath.sin(mpmath.mpf(b)) for _, b in angles]
        c2 = [mpmath.cos(mpmath.mpf(b)) for _, b in angles]
        n = len(angles)
        diag, off = [], []
        for k in range(n):
            nxt = (k + 1) % n
            diag += [s1[k] + point * s2[k], -s1[k] - point * s2[nxt]]
            off += [c1[k], -point * c2[nxt]]
        return diag, off[:-1], -point * c2[0]

    return entries


def phase_distance(walk: BuiltWalk, point: int, certify: bool = True) -> PhaseDistance:
    """Distance of the ring spectrum to ``point``.

    With ``W = gamma_tilde gamma`` one has ``W - point = gamma_tilde (gamma -
    point gamma_tilde)``, so the singular values of ``W - point`` are the
    absolute eigenvalues of the real symmetric matrix ``gamma - point
    gamma_tilde``.
    """
    g, gt = walk.chiral.dense()
    t = np.real(g - point * gt)
    if not certify:
        return PhaseDistance(point, mpmath.mpf(float(np.min(np.abs(np.linalg.eigvalsh(t))))), False)
    entries = _ring_entries(walk, point) if walk.model.spec.model == "split_step" and walk.unitary.boundary == "ring" else None
    if entries is not None:
        with mpmath.workdps(20):
            d, o, c = entries()
        ref = _periodic_tridiagonal(t)
        if not (np.allclose([float(v) for v in d], ref[0], atol=1e-14)
                and np.allclose([float(v) for v in o], ref[1], atol=1e-14)
                and abs(float(c) - ref[2]) < 1e-14):
            raise AssertionError("ring entries disagree with the assembled layers")
    mu, cert = smallest_abs_eigenvalue(t, entries)
    return PhaseDistance(point, mu, cert)


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class EdgeProfile:
    eigenvalue: complex
    mass: np.ndarray
    interfaces: tuple[int, int]
    radius: int
    interface_mass: float
    interface_mass_each: tuple[float, float]


def _cyclic_mask(n: int, centre: int, radius: int) -> np.ndarray:
    """Cells within ``radius`` cells on either side of the cut before ``centre``."""
    x = np.arange(n)
    offset = (x - centre) % n
    return (offset < radius) | (offset >= n - radius)


def profile_of(exp: RingExperiment, k: int, radius: int = 10) -> EdgeProfile:
    vec = exp.eigenvectors[:, k]
    mass = (np.abs(vec) ** 2).reshape(exp.n_cells, -1).sum(axis=1)
    mass = mass / mass.sum()
    masks = [_cyclic_mask(exp.n_cells, c, radius) for c in exp.interfaces]
    each = tuple(float(mass[m].sum()) for m in masks)
    total = float(mass[masks[0] | masks[1]].sum())
    return EdgeProfile(complex(exp.eigenvalues[k]), mass, exp.interfaces, radius, total, each)


def edge_state_profile(exp: RingExperiment, which: int, radius: int = 10) -> EdgeProfile:
    """Cell masses of the eigenvector closest to ``which`` (``+1`` or ``-1``)."""
    if which not in (1, -1):
        raise ValueError("which must be +1 or -1")
    cand = exp.candidates(which)
    if cand.size == 0:
        raise NoCandidateError(f"no eigenvalue within {exp.threshold} of {which:+d}")
    return profile_of(exp, int(cand[0]), radius)


# ---------------------------------------------------------------------------
# output


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def atomic_write(path: str | os.PathLike, writer) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_spectrum_csv(exp: RingExperiment, path) -> None:
    def emit(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["re", "im", "eigenphase", "dist_to_plus1", "dist_to_minus1"])
        dp, dm = exp.dist_to(1), exp.dist_to(-1)
        for lam, ph, a, b in zip(exp.eigenvalues, exp.eigenphases, dp, dm):
            out.writerow([_fmt(lam.real), _fmt(lam.imag), _fmt(ph), _fmt(a), _fmt(b)])

    atomic_write(path, emit)


def write_profile_csv(profile: EdgeProfile, path) -> None:
    def emit(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["cell", "mass"])
        for x, m in enumerate(profile.mass):
            out.writerow([x, _fmt(m)])

    atomic_write(path, emit)


def spectrum_svg(exp: RingExperiment, size: int = 480) -> str:
    """Scatter of the spectrum on the unit circle plus a cell ring with the interfaces marked."""
    c = size / 2
    r = 0.8 * c
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size * 2}" height="{size}" viewBox="0 0 {size * 2} {size}">',
        f'<circle cx="{c:.3f}" cy="{c:.3f}" r="{r:.3f}" fill="none" stroke="#999" stroke-width="1"/>',
    ]
    for pt, label in ((1, "+1"), (-1, "-1")):
        parts.append(f'<text x="{c + pt * (r + 14):.3f}" y="{c + 4:.3f}" font-size="12" text-anchor="middle">{label}</text>')
    for lam in exp.eigenvalues:
        x, y = c + r * lam.real, c - r * lam.imag
        parts.append(f'<circle class="eigenvalue" cx="{x:.3f}" cy="{y:.3f}" r="2" fill="#2a2"/>')
    # cell ring: angle of cell x is 2 pi x / n, +1 phase blue and -1 phase red
    cx = size + c
    n = exp.n_cells
    for x in range(n):
        a = 2 * math.pi * (x + 0.5) / n
        colour = "#36c" if x < n // 2 else "#c33"
        parts.append(
            f'<circle class="cell" cx="{cx + r * math.cos(a):.3f}" cy="{c - r * math.sin(a):.3f}" r="1.5" fill="{colour}"/>'
        )
    for k, x in enumerate(exp.interfaces):
        a = 2 * math.pi * x / n
        x0, y0 = cx + 0.85 * r * math.cos(a), c - 0.85 * r * math.sin(a)
        x1, y1 = cx + 1.15 * r * math.cos(a), c - 1.15 * r * math.sin(a)
        parts.append(
            f'<line class="interface" x1="{x0:.3f}" y1="{y0:.3f}" x2="{x1:.3f}" y2="{y1:.3f}" stroke="#000" stroke-width="2"/>'
        )
        parts.append(f'<text x="{x1:.3f}" y="{y1:.3f}" font-size="12">interface {k + 1} (cell {x})</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_spectrum_svg(exp: RingExperiment, path) -> None:
    atomic_write(path, lambda fh: fh.write(spectrum_svg(exp)))
