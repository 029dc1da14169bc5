"""Spreading speeds for KPP invasions along a fast-diffusion road with nonlocal exchange."""

from __future__ import annotations

__version__ = "0.1.0"

from ._backend import BACKEND
from .bvp import GridControl, lambda_window, psi1, psi2, psi2_closed_limit, psi2_closed_rpsl2, solve_profile
from .dispersion import SearchControl, check_inequality_chain, curve_sample, gap, spreading_speed
from .errors import DomainError, KernelError, RoadSpreadError, SolverError
from .model import Kernel, ModelSpec, Params, limit_spec, make_kernel, mix_with_atom, mollify, nonlocal_spec

__all__ = [
    "BACKEND", "DomainError", "GridControl", "Kernel", "KernelError", "ModelSpec", "Params",
    "RoadSpreadError", "SearchControl", "SolverError", "check_inequality_chain", "curve_sample", "gap",
    "lambda_window", "limit_spec", "make_kernel", "mix_with_atom", "mollify", "nonlocal_spec", "psi1", "psi2",
    "psi2_closed_limit", "psi2_closed_rpsl2", "solve_profile", "spreading_speed",
]
