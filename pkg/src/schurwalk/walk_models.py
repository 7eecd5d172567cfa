"""Split-step, chiral coined and shifted-coin walks on the line.

Every model is written as ``W = gamma_tilde @ gamma`` with two involution
layers.  ``gamma`` acts cell by cell (cell ``x`` has scalar indices
``2d x .. 2d x + 2d - 1`` with the ``d`` up components first) and
``gamma_tilde`` acts on the half-shifted cells ``(x-1 down) + (x up)``.

Coin data
---------
split_step
    per site a pair ``(theta1, theta2)``.  ``gamma_x = Theta(sin theta1)``
    and ``gamma_tilde_x = Theta(sin theta2)``.
chiral_coined
    per site a :class:`Coin` ``C_1``; ``gamma_x`` is built from its blocks and
    ``gamma_tilde`` is the d-block swap.
shifted_coined
    per site a :class:`Coin` ``C_2``; ``gamma`` is the swap and
    ``gamma_tilde_x`` carries the coin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np

from .cmv import BandedUnitary, Layer
from .config import DEFAULT, Tolerances
from .errors import AngleOutOfRangeError, BoundViolatedError, CoinConstraintError, InconsistentWindowError
from .schur_core import BlockSchurChain, SchurParamSeq

MODELS = ("split_step", "chiral_coined", "shifted_coined")


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def rotation_block(theta: float) -> np.ndarray:
    """``[[sin, cos], [cos, -sin]]`` for an arbitrary real angle."""
    s, c = math.sin(theta), math.cos(theta)
    return np.array([[s, c], [c, -s]], dtype=complex)


@dataclass(frozen=True, eq=False)
class Coin:
    """Coin blocks ``(A, B, B_hat)`` subject to the chiral-coin identities."""

    A: np.ndarray
    B: np.ndarray
    B_hat: np.ndarray

    @classmethod
    def from_blocks(cls, A, B, tol: Tolerances = DEFAULT) -> "Coin":
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        B = np.atleast_2d(np.asarray(B, dtype=complex))
        det = abs(np.linalg.det(A))
        if det < tol.coin:
            raise CoinConstraintError("A is singular", identity="det A != 0", violation=det)
        coin = cls(A, B, -A @ B @ np.linalg.inv(A))
        coin.validate(tol)
        return coin

    @classmethod
    def from_A(cls, A, sign: int = 1, tol: Tolerances = DEFAULT) -> "Coin":
        """Blocks ``B = +-(1 - A*A)^(1/2)`` and ``B_hat = -+(1 - AA*)^(1/2)``."""
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        one = np.eye(A.shape[0])
        if np.linalg.norm(A, 2) > 1 + tol.coin:
            raise CoinConstraintError("A must be a contraction", identity="||A|| <= 1", violation=np.linalg.norm(A, 2) - 1)
        det = abs(np.linalg.det(A))
        if det < tol.coin:
            raise CoinConstraintError("A is singular", identity="det A != 0", violation=det)
        sgn = 1 if sign >= 0 else -1
        coin = cls(A, sgn * _psd_sqrt(one - A.conj().T @ A), -sgn * _psd_sqrt(one - A @ A.conj().T))
        coin.validate(tol)
        return coin

    @classmethod
    def diagonal(cls, angles: Sequence[float]) -> "Coin":
        """``A = diag(cos theta_r)``, ``B = diag(sin theta_r)``."""
        a = np.asarray(angles, dtype=float)
        return cls(np.diag(np.cos(a)).astype(complex), np.diag(np.sin(a)).astype(complex), -np.diag(np.sin(a)).astype(complex))

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def validate(self, tol: Tolerances = DEFAULT) -> None:
        A, B, Bh = self.A, self.B, self.B_hat
        one = np.eye(self.d)
        checks = [
            ("det A != 0", tol.coin - abs(np.linalg.det(A))),
            ("B* = B", np.linalg.norm(B - B.conj().T)),
            ("A*A + B^2 = 1", np.linalg.norm(A.conj().T @ A + B @ B - one)),
        ]
        if abs(np.linalg.det(A)) >= tol.coin:
            checks.append(("B_hat = -A B A^-1", np.linalg.norm(Bh + A @ B @ np.linalg.inv(A))))
        for name, v in checks:
            if v > tol.coin:
                raise CoinConstraintError(f"coin identity {name} violated by {v:.3g}", identity=name, violation=float(v))

    @property
    def block(self) -> np.ndarray:
        """The involution ``[[B, A*], [A, B_hat]]``."""
        return np.block([[self.B, self.A.conj().T], [self.A, self.B_hat]])


def swap_block(d: int) -> np.ndarray:
    z = np.zeros((d, d))
    one = np.eye(d)
    return np.block([[z, one], [one, z]]).astype(complex)


def half_swap(m: np.ndarray) -> np.ndarray:
    """``P m P`` with ``P`` exchanging the two d-blocks."""
    d = m.shape[0] // 2
    p = swap_block(d)
    return p @ m @ p


def normalize_site(model: str, data: Any, d: int, sign: int = 1, allow_any_angle: bool = False, tol: Tolerances = DEFAULT):
    """Normalise one site's coin data to ``(theta1, theta2)`` or a :class:`Coin`."""
    if model == "split_step":
        if isinstance(data, Mapping):
            th = (float(data["theta1"]), float(data["theta2"]))
        else:
            th = tuple(float(t) for t in data)
            if len(th) != 2:
                raise ValueError("split-step site data needs two angles")
        if not allow_any_angle:
            for t in th:
                if not -math.pi / 2 < t < math.pi / 2:
                    raise AngleOutOfRangeError(f"angle {t} outside (-pi/2, pi/2)")
        return th
    if isinstance(data, Coin):
        coin = data
    elif isinstance(data, Mapping):
        if "angles" in data:
            coin = Coin.diagonal(data["angles"])
        elif "B" in data:
            coin = Coin.from_blocks(data["A"], data["B"], tol)
        elif "A" in data:
            coin = Coin.from_A(data["A"], int(data.get("sign", sign)), tol)
        else:
            raise ValueError("coin data needs 'angles', 'A' or 'A' and 'B'")
    else:
        coin = Coin.diagonal(data)
    if coin.d != d:
        raise CoinConstraintError(f"coin dimension {coin.d} does not match d = {d}", identity="cell_dim")
    return coin


@dataclass(frozen=True, eq=False)
class WalkSpec:
    """Declarative description of a walk with constant tails and a finite window."""

    model: str
    left_tail: Any
    right_tail: Any
    window: Mapping[int, Any] = field(default_factory=dict)
    cell_dim: int = 2
    sign_choice: int = 1
    allow_any_angle: bool = False

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.cell_dim < 2 or self.cell_dim % 2:
            raise ValueError("cell_dim must be an even number >= 2")
        if self.model == "split_step" and self.cell_dim != 2:
            raise ValueError("split-step walks have cell_dim 2")
        d = self.cell_dim // 2
        norm = lambda v: normalize_site(self.model, v, d, self.sign_choice, self.allow_any_angle)  # noqa: E731
        object.__setattr__(self, "left_tail", norm(self.left_tail))
        object.__setattr__(self, "right_tail", norm(self.right_tail))
        object.__setattr__(self, "window", {int(x): norm(v) for x, v in dict(self.window).items()})

    @property
    def d(self) -> int:
        return self.cell_dim // 2

    @property
    def window_range(self) -> tuple[int, int]:
        """``(lo, hi)`` of the window; an empty window puts the interface between cells 0 and 1."""
        if not self.window:
            return 1, 0
        return min(self.window), max(self.window)

    def site(self, x: int):
        if x in self.window:
            return self.window[x]
        lo, _ = self.window_range
        return self.left_tail if x < lo else self.right_tail

    def with_window(self, window: Mapping[int, Any]) -> "WalkSpec":
        return WalkSpec(self.model, self.left_tail, self.right_tail, window, self.cell_dim, self.sign_choice, self.allow_any_angle)


@dataclass(frozen=True, eq=False)
class ChiralPair:
    """The involution layers with ``W = gamma_tilde @ gamma``."""

    gamma: Layer
    gamma_tilde: Layer

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        return self.gamma.dense(), self.gamma_tilde.dense()


class WalkModel:
    """Cell-level access to a walk: blocks, Schur chains and truncations."""

    def __init__(self, spec: WalkSpec):
        self.spec = spec
        self.d = spec.d

    # blocks ---------------------------------------------------------------
    def cell_block(self, x: int) -> np.ndarray:
        """``gamma_x`` on cell ``x`` in the basis (up, down)."""
        m = self.spec.model
        if m == "split_step":
            return rotation_block(self.spec.site(x)[0])
        if m == "chiral_coined":
            return self.spec.site(x).block
        return swap_block(self.d)

    def shift_block(self, x: int) -> np.ndarray:
        """``gamma_tilde_x`` on ``(x-1 down) + (x up)``."""
        m = self.spec.model
        if m == "split_step":
            return rotation_block(self.spec.site(x)[1])
        if m == "shifted_coined":
            return self.spec.site(x).block
        return swap_block(self.d)

    # Schur data -----------------------------------------------------------
    @cached_property
    def params(self) -> SchurParamSeq:
        """Two-sided split-step parameters ``alpha_2x = sin theta2_x``, ``alpha_2x+1 = sin theta1_x``."""
        if self.spec.model != "split_step":
            raise ValueError("Schur parameters are defined for split-step walks")
        lo, hi = self.spec.window_range
        head = []
        for x in range(lo, hi + 1):
            t1, t2 = self.spec.site(x)
            head += [math.sin(t2), math.sin(t1)]
        r1, r2 = self.spec.right_tail
        l1, l2 = self.spec.left_tail
        return SchurParamSeq(
            tuple(head),
            "periodic",
            (math.sin(r2), math.sin(r1)),
            two_sided=True,
            start=2 * lo,
            left_tail_kind="periodic",
            left_tail=(math.sin(l1), math.sin(l2)),
        )

    def right_seq(self, x: int) -> SchurParamSeq:
        """Parameters of ``f_R`` for the vector ``x down``: ``(alpha_n)_{n >= 2x+2}``."""
        return self.params.one_sided_from(2 * x + 2, 1)

    def left_seq(self, x: int) -> SchurParamSeq:
        """Parameters of ``f_L`` for the vector ``x up``: ``(-alpha_{2x-n})_{n >= 0}``."""
        return self.params.one_sided_from(2 * x, -1, negate=True)

    def right_chain(self, x: int) -> BlockSchurChain:
        """Block chain of ``f_R`` for the subspace ``x down`` of the half-walk on cells ``> x``."""
        _, hi = self.spec.window_range
        head = []
        for j in range(x + 1, hi + 1):
            head += [self.shift_block(j), self.cell_block(j)]
        far = max(hi, x) + 1
        return BlockSchurChain(tuple(head), (self.shift_block(far), self.cell_block(far)))

    def left_chain(self, x: int) -> BlockSchurChain:
        """Block chain of ``f_L`` for the subspace ``x up`` of the half-walk on cells ``< x`` plus ``x up``."""
        lo, _ = self.spec.window_range
        head = []
        for j in range(x, lo - 1, -1):
            head += [half_swap(self.shift_block(j)), half_swap(self.cell_block(j - 1))]
        far = min(lo, x + 1) - 1
        return BlockSchurChain(tuple(head), (half_swap(self.shift_block(far)), half_swap(self.cell_block(far - 1))))

    # truncations ----------------------------------------------------------
    def truncate(self, x_min: int, x_max: int, boundary: str = "open") -> "BuiltWalk":
        if x_max < x_min:
            raise InconsistentWindowError("empty cell range")
        d2 = 2 * self.d
        n = x_max - x_min + 1
        dim = d2 * n
        gam = tuple((d2 * (x - x_min), self.cell_block(x)) for x in range(x_min, x_max + 1))
        shifted = []
        for x in range(x_min, x_max + 1):
            if x == x_min and boundary != "ring":
                continue
            if x == x_min and n == 1:
                continue
            shifted.append(((d2 * (x - x_min) - self.d) % dim, self.shift_block(x)))
        gamma, gamma_t = Layer(dim, gam), Layer(dim, tuple(shifted))
        w = BandedUnitary(gamma_t, gamma, boundary, d2, x_min)
        params = None
        if self.spec.model == "split_step":
            try:
                params = self.params
            except ValueError:
                params = None
        return BuiltWalk(w, ChiralPair(gamma, gamma_t), params, self, (x_min, x_max))


@dataclass(frozen=True, eq=False)
class BuiltWalk:
    unitary: BandedUnitary
    chiral: ChiralPair
    params: SchurParamSeq | None
    model: WalkModel
    cells: tuple[int, int]


def _build(spec: WalkSpec, window_radius: int, model: str) -> BuiltWalk:
    if spec.model != model:
        raise ValueError(f"expected a {model} spec, got {spec.model}")
    lo, hi = spec.window_range
    if spec.window and (lo < -window_radius or hi > window_radius):
        raise InconsistentWindowError("window_radius does not cover the spec window")
    return WalkModel(spec).truncate(-window_radius, window_radius)


def build_split_step(spec: WalkSpec, window_radius: int) -> BuiltWalk:
    """Open truncation on cells ``[-R, R]`` with chiral pair and two-sided parameters."""
    return _build(spec, window_radius, "split_step")


def build_chiral_coined(spec: WalkSpec, window_radius: int) -> BuiltWalk:
    return _build(spec, window_radius, "chiral_coined")


def build_shifted_coined(spec: WalkSpec, window_radius: int) -> BuiltWalk:
    return _build(spec, window_radius, "shifted_coined")


def build_walk(spec: WalkSpec, window_radius: int) -> BuiltWalk:
    return _build(spec, window_radius, spec.model)


def admissible(epsilon: float, epsilon_prime: float) -> bool:
    return math.sin(epsilon / 2) + math.sin(epsilon_prime / 2) < 1 / math.sqrt(2)


def sample_phase_region(
    phase: int, epsilon: float, epsilon_prime: float, sites: Sequence[int], rng_seed=None
) -> dict[int, tuple[float, float]]:
    """Random split-step angles around the decoupled walk ``theta1 = phase * pi/2``, ``theta2 = 0``.

    ``theta1`` is uniform in ``[phase pi/2 - eps, phase pi/2 + eps]`` and
    ``theta2`` uniform in ``[-eps', eps']``.
    """
    if phase not in (1, -1):
        raise ValueError("phase must be +1 or -1")
    if not admissible(epsilon, epsilon_prime):
        raise BoundViolatedError(
            f"sin(eps/2) + sin(eps'/2) = {math.sin(epsilon / 2) + math.sin(epsilon_prime / 2):.4f} >= 1/sqrt(2)"
        )
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    sites = list(sites)
    centre = phase * math.pi / 2
    t1 = rng.uniform(centre - epsilon, centre + epsilon, len(sites)) if epsilon > 0 else np.full(len(sites), centre)
    t2 = rng.uniform(-epsilon_prime, epsilon_prime, len(sites)) if epsilon_prime > 0 else np.zeros(len(sites))
    return {x: (float(a), float(b)) for x, a, b in zip(sites, t1, t2)}
