"""General fractional calculus with a memory kernel.

The kernel ``k`` enters through its Laplace transform ``K(p)``. Admissible
kernels (``K`` Stieltjes with the four limit conditions) have a conjugate
Sonine kernel, completely monotone relaxation functions, a probabilistic
fundamental solution for the time-fractional heat equation and a renewal
interpretation through inverse subordinators.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .kernels import (
    BoxKernel,
    Caputo,
    ConditionReport,
    ConditionStarError,
    CustomKernel,
    DistributedOrder,
    KernelSpec,
    LogBernstein,
    check_condition_star,
    complete_monotonicity_check,
    parse_kernel,
)
from .laplace import Stehfest, Talbot, forward_laplace, invert, invert_cm, invert_talbot
from .sampled import SampledFunction
from .sonine import SonineKernel, apply_D, apply_DI, apply_I, build_kappa, sonine_residual
from .relaxation import mittag_leffler, renewal_survival, solve_relaxation
from .diffusion import G_profile, Z_profile, Z_tilde, solve_heat, verify_LT_solution
from .special import bessel_K

__all__ = [
    "BoxKernel",
    "Caputo",
    "ConditionReport",
    "ConditionStarError",
    "CustomKernel",
    "DistributedOrder",
    "KernelSpec",
    "LogBernstein",
    "SampledFunction",
    "SonineKernel",
    "Stehfest",
    "Talbot",
    "G_profile",
    "Z_profile",
    "Z_tilde",
    "apply_D",
    "apply_DI",
    "apply_I",
    "bessel_K",
    "build_kappa",
    "check_condition_star",
    "complete_monotonicity_check",
    "forward_laplace",
    "invert",
    "invert_cm",
    "invert_talbot",
    "mittag_leffler",
    "parse_kernel",
    "renewal_survival",
    "solve_heat",
    "solve_relaxation",
    "sonine_residual",
    "verify_LT_solution",
]
