"""Shared generators and representative specs for the test-suite."""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg as sla

from schurwalk.index_engine import decouple
from schurwalk.walk_models import WalkSpec


# split-step representative angles (theta1, theta2) per boundary pattern (f(1), f(-1))
A6 = math.pi / 6
SS_LEFT = {(1, -1): (-A6, 0.0), (-1, 1): (A6, 0.0), (1, 1): (0.0, -A6), (-1, -1): (0.0, A6)}
SS_RIGHT = {(1, -1): (A6, 0.0), (-1, 1): (-A6, 0.0), (1, 1): (0.0, A6), (-1, -1): (0.0, -A6)}
PATTERN_ORDER = [(1, -1), (-1, 1), (1, 1), (-1, -1)]

# d = 2 diagonal-coin angles keyed by tr f(1)
A2 = 0.6
COIN_LEFT = {2: [-A2, -A2], 0: [-A2, A2], -2: [A2, A2]}
COIN_RIGHT = {2: [A2, A2], 0: [A2, -A2], -2: [-A2, -A2]}


def split_step_cell(left_pattern, right_pattern) -> WalkSpec:
    return WalkSpec("split_step", SS_LEFT[left_pattern], SS_RIGHT[right_pattern])


def coined_cell(model: str, tr_left: int, tr_right: int) -> WalkSpec:
    return WalkSpec(model, {"angles": COIN_LEFT[tr_left]}, {"angles": COIN_RIGHT[tr_right]}, cell_dim=4)


def random_contraction(rng: np.random.Generator, d: int, max_norm: float = 0.95) -> np.ndarray:
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return m * (rng.uniform(0.2, max_norm) / np.linalg.norm(m, 2))


def _phase_pattern(t1: float, t2: float) -> tuple[int, int]:
    return int(np.sign(t1 + t2)), int(np.sign(t2 - t1))


def _gapped_pair(rng, pattern=None, lim=1.2, margin=0.3):
    while True:
        t1, t2 = rng.uniform(-lim, lim, 2)
        if min(abs(math.sin(t2) + math.sin(t1)), abs(math.sin(t2) - math.sin(t1))) < margin:
            continue
        if pattern is None or _phase_pattern(t1, t2) == pattern:
            return float(t1), float(t2)


def random_split_step_spec(rng: np.random.Generator) -> WalkSpec:
    """Gapped tails and a disordered window without domain walls."""
    left, right = _gapped_pair(rng), _gapped_pair(rng)
    k = int(rng.integers(1, 11))
    lo = int(rng.integers(-5, 6 - k))
    window = {}
    for x in range(lo, lo + k):
        tail = left if x < 0 else right
        window[x] = _gapped_pair(rng, _phase_pattern(*tail))
    return WalkSpec("split_step", left, right, window)


def near_bound_state(built, site=0, eta=0.02, radius=15, weight=1e-8) -> bool:
    """Whether a decoupled half carries a non-protected eigenvalue close to +-1 near the site."""
    dec = decouple(built, site, "left_gamma")
    for half, anchor in ((dec.left, dec.left.dim), (dec.right, 0)):
        t, z = sla.schur(half.dense().astype(complex), output="complex")
        ev = np.diag(t)
        lo, hi = max(anchor - 2 * radius, 0), min(anchor + 2 * radius, half.dim)
        w = np.sum(np.abs(z[lo:hi]) ** 2, axis=0)
        dist = np.minimum(abs(ev - 1), abs(ev + 1))
        if np.any((dist > 1e-9) & (dist < eta) & (w > weight)):
            return True
    return False
