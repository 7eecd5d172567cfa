"""Numerical tolerances.

Every public routine that makes an accept/reject decision takes an optional
:class:`Tolerances`; the module-level :data:`DEFAULT` is used otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    unitarity: float = 1e-9
    """Allowed deviation from unitarity of constructed operators and boundary values."""
    boundary: float = 1e-9
    """Residual allowed for exact (tail-route) boundary values."""
    gap: float = 1e-12
    """``|s~ +- s|`` (or the transfer eigenvalue separation) below this counts as a closed gap."""
    quantization: float = 0.1
    """Distance to the nearest allowed integer accepted when rounding traces."""
    rounding_residual: float = 1e-6
    """Unitarity residual required before a numeric boundary value is rounded."""
    radial_agreement: float = 1e-8
    """Agreement of successive radial estimates required by the radial scheme."""
    coin: float = 1e-10
    """Tolerance for the chiral-coin block identities."""

    def with_overrides(self, **kw: float) -> "Tolerances":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


DEFAULT = Tolerances()

DENSE_CAP = 4096
BANDED_MAX_BANDWIDTH = 64
