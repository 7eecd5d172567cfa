"""Two-layer factorised unitaries built from small unitary blocks.

Scalar index convention: the parameter ``alpha_n`` sits in a block acting on
scalar indices ``(n - 1, n)``.  Odd-``n`` blocks form ``layer_odd`` (applied
first) and even-``n`` blocks form ``layer_even`` (applied second), so the
operator is ``W = layer_even @ layer_odd``.  A split-step walk then has
``layer_odd = gamma`` and ``layer_even = gamma_tilde`` with cell ``x`` on
scalar indices ``2x, 2x + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .config import BANDED_MAX_BANDWIDTH, DENSE_CAP
from .errors import DimensionCapExceededError, InconsistentWindowError
from .schur_core import SchurParamSeq, theta_matrix

BOUNDARIES = ("open", "ring")


@dataclass(frozen=True)
class ThetaBlock:
    """``Theta(alpha) = [[conj(alpha), rho], [rho, -alpha]]``."""

    alpha: complex

    def __post_init__(self):
        if abs(self.alpha) > 1 + 1e-15:
            raise ValueError("|alpha| must not exceed 1")

    @property
    def matrix(self) -> np.ndarray:
        return theta_matrix(self.alpha)


@dataclass(frozen=True, eq=False)
class Layer:
    """Direct sum of square blocks placed at scalar offsets, identity elsewhere.

    A block may run past ``dim`` only in a ring, where its indices wrap.
    """

    dim: int
    blocks: tuple[tuple[int, np.ndarray], ...] = ()

    def indices(self, k: int) -> np.ndarray:
        off, blk = self.blocks[k]
        return (off + np.arange(blk.shape[0])) % self.dim

    @cached_property
    def sparse(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        covered = np.zeros(self.dim, dtype=bool)
        for k, (_, blk) in enumerate(self.blocks):
            idx = self.indices(k)
            if covered[idx].any():
                raise InconsistentWindowError("overlapping blocks in one layer")
            covered[idx] = True
            r, c = np.meshgrid(idx, idx, indexing="ij")
            rows.append(r.ravel())
            cols.append(c.ravel())
            vals.append(np.asarray(blk, dtype=complex).ravel())
        free = np.flatnonzero(~covered)
        rows.append(free)
        cols.append(free)
        vals.append(np.ones(free.size, dtype=complex))
        m = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(self.dim, self.dim)
        )
        return m.tocsr()

    def dense(self) -> np.ndarray:
        return self.sparse.toarray()

    def adjoint(self) -> "Layer":
        return Layer(self.dim, tuple((o, b.conj().T) for o, b in self.blocks))

    def without(self, k: int) -> "Layer":
        """The layer with block ``k`` replaced by the identity."""
        return Layer(self.dim, self.blocks[:k] + self.blocks[k + 1 :])

    def block_at(self, offset: int) -> int:
        for k, (o, _) in enumerate(self.blocks):
            if o == offset:
                return k
        raise KeyError(f"no block at offset {offset}")


@dataclass(frozen=True, eq=False)
class BandedUnitary:
    """``W = layer_even @ layer_odd`` with optional cell bookkeeping.

    ``cell_size`` is the number of scalar indices per cell (``2d`` for walks)
    and ``cell_origin`` the cell label of scalar index 0.
    """

    layer_even: Layer
    layer_odd: Layer
    boundary: str = "open"
    cell_size: int = 2
    cell_origin: int = 0

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if self.layer_even.dim != self.layer_odd.dim:
            raise InconsistentWindowError("layer dimensions differ")

    @property
    def dim(self) -> int:
        return self.layer_even.dim

    @property
    def n_cells(self) -> int:
        return self.dim // self.cell_size

    def cell_indices(self, x: int) -> np.ndarray:
        """Scalar indices of cell ``x`` (cell labels as in the source walk)."""
        k = x - self.cell_origin
        if not 0 <= k < self.n_cells:
            raise IndexError(f"cell {x} outside the truncation")
        return k * self.cell_size + np.arange(self.cell_size)

    def cells_indices(self, cells: Sequence[int]) -> np.ndarray:
        return np.concatenate([self.cell_indices(x) for x in cells])

    @cached_property
    def sparse(self) -> sp.csr_matrix:
        return (self.layer_even.sparse @ self.layer_odd.sparse).tocsr()

    def matmat(self, x: np.ndarray) -> np.ndarray:
        return self.layer_even.sparse @ (self.layer_odd.sparse @ x)

    def rmatmat(self, x: np.ndarray) -> np.ndarray:
        """``W* @ x``."""
        return self.layer_odd.sparse.conj().T @ (self.layer_even.sparse.conj().T @ x)

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        return dense(self, cap)

    def adjoint(self) -> "BandedUnitary":
        """``W* = layer_odd* @ layer_even*`` as a new two-layer operator."""
        return BandedUnitary(
            self.layer_odd.adjoint(), self.layer_even.adjoint(), self.boundary, self.cell_size, self.cell_origin
        )

    @property
    def bandwidth(self) -> tuple[int, int]:
        m = self.sparse.tocoo()
        diff = m.row - m.col
        return int(max(diff.max(), 0)), int(max(-diff.min(), 0))

    def restrict(self, lo: int, hi: int, cell_origin: int | None = None) -> "BandedUnitary":
        """Restriction to scalar indices ``[lo, hi)``, which must be invariant."""
        layers = []
        for layer in (self.layer_even, self.layer_odd):
            kept = []
            for k, (o, b) in enumerate(layer.blocks):
                idx = layer.indices(k)
                inside = (idx >= lo) & (idx < hi)
                if inside.all():
                    kept.append((o - lo, b))
                elif inside.any():
                    raise InconsistentWindowError("a block straddles the restriction boundary")
            layers.append(Layer(hi - lo, tuple(kept)))
        origin = self.cell_origin + lo // self.cell_size if cell_origin is None else cell_origin
        return BandedUnitary(layers[0], layers[1], "open", self.cell_size, origin)

    def shifted_resolvent_solve(self, rhs: np.ndarray, z: complex, cols: np.ndarray) -> np.ndarray:
        """Solve ``(W - z P_perp) X = rhs`` where ``P`` projects on ``cols``."""
        diag = np.full(self.dim, z, dtype=complex)
        diag[cols] = 0.0
        a = (self.sparse - sp.diags(diag)).tocsr()
        lower, upper = self.bandwidth
        if self.boundary == "open" and max(lower, upper) <= BANDED_MAX_BANDWIDTH:
            ab = np.zeros((lower + upper + 1, self.dim), dtype=complex)
            coo = a.tocoo()
            ab[upper + coo.row - coo.col, coo.col] = coo.data
            return sla.solve_banded((lower, upper), ab, rhs)
        if self.dim <= DENSE_CAP:
            return np.linalg.solve(a.toarray(), rhs)
        import scipy.sparse.linalg as spla

        return spla.splu(a.tocsc()).solve(rhs)


def build_cmv(seq: SchurParamSeq, window: tuple[int, int], boundary: str = "open") -> BandedUnitary:
    """Factorised unitary on the scalar indices ``[window[0], window[1])``.

    Parameter ``alpha_n`` is placed on ``(n - 1, n)``.  With the open boundary
    only blocks lying entirely inside the window are kept (identity padding
    at the cuts); on a ring every ``n`` in the window contributes and the
    block of the first index wraps around.  A one-sided sequence read from
    ``alpha_0`` uses the window ``(-1, K)``; its first basis vector then has
    Schur parameters ``alpha_0, alpha_1, ...``.
    """
    lo, hi = window
    dim = hi - lo
    if dim <= 0:
        raise InconsistentWindowError("window must be nonempty")
    if boundary == "ring":
        if dim % 2:
            raise InconsistentWindowError("ring closure needs an even window length")
        ns = range(lo, hi)
    elif boundary == "open":
        ns = range(lo + 1, hi)
    else:
        raise ValueError(f"boundary must be one of {BOUNDARIES}")
    even, odd = [], []
    for n in ns:
        alpha = seq.at(n) if (seq.two_sided or n >= 0) else 0j
        blk = theta_matrix(alpha)
        off = (n - 1 - lo) % dim
        (even if n % 2 == 0 else odd).append((off, blk))
    origin = lo // 2
    return BandedUnitary(Layer(dim, tuple(even)), Layer(dim, tuple(odd)), boundary, 2, origin)


def resolvent_column(w: BandedUnitary, cell_projection: Sequence[int], z: complex) -> np.ndarray:
    """Schur function ``P (W - z P_perp)^{-1} P`` of the span of the given scalar indices."""
    if abs(z) >= 1:
        raise ValueError("resolvent formula needs |z| < 1")
    cols = np.asarray(cell_projection, dtype=int)
    rhs = np.zeros((w.dim, cols.size), dtype=complex)
    rhs[cols, np.arange(cols.size)] = 1.0
    x = w.shifted_resolvent_solve(rhs, complex(z), cols)
    return x[cols]


schur_function = resolvent_column


def dense(w: BandedUnitary, cap: int = DENSE_CAP) -> np.ndarray:
    if w.dim > cap:
        raise DimensionCapExceededError(f"dimension {w.dim} exceeds the dense cap {cap}")
    return w.sparse.toarray()
