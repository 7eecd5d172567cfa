"""Schur-function methods for symmetry indices of one-dimensional quantum walks."""

from __future__ import annotations

from .config import DEFAULT, Tolerances
from .errors import GapClosedError, SchurWalkError, SpecError
from .index_engine import AIII, BDI, IndexReport, SymmetryType, classify, forget_mod2, si_finite, si_lr_walk, si_pm_walk
from .schur_core import SchurParamSeq, SchurValue, eval_boundary, periodic2_schur, schur_eval, schur_step, schur_unstep
from .cmv import BandedUnitary, build_cmv
from .spectral_lab import RingExperiment, edge_state_profile, run_ring
from .walk_models import WalkSpec, build_chiral_coined, build_shifted_coined, build_split_step, build_walk

__all__ = [
    "AIII",
    "BDI",
    "BandedUnitary",
    "DEFAULT",
    "GapClosedError",
    "IndexReport",
    "RingExperiment",
    "SchurParamSeq",
    "SchurValue",
    "SchurWalkError",
    "SpecError",
    "SymmetryType",
    "Tolerances",
    "WalkSpec",
    "build_chiral_coined",
    "build_cmv",
    "build_shifted_coined",
    "build_split_step",
    "build_walk",
    "classify",
    "edge_state_profile",
    "eval_boundary",
    "forget_mod2",
    "periodic2_schur",
    "run_ring",
    "schur_eval",
    "schur_step",
    "schur_unstep",
    "si_finite",
    "si_lr_walk",
    "si_pm_walk",
]
