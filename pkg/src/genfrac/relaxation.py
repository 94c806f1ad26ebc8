"""Relaxation equation ``D u = -λ u``, ``u(0) = 1``.

The solution is computed in the Laplace domain, where its image is
``K(p) / (pK(p) + λ)``. For the Caputo kernel it reduces to
``E_α(-λ t^α)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as kc
from .kernels import ConditionReport, KernelSpec
from .laplace import InversionConfig
from .sampled import SampledFunction
from .special import mittag_leffler

__all__ = [
    "RelaxationSolution",
    "solve_relaxation",
    "relaxation_values",
    "renewal_survival",
    "mittag_leffler",
    "box_kernel_solution",
    "box_kernel_recursive_solution",
]

log = logging.getLogger(__name__)


@dataclass
class RelaxationSolution:
    spec: KernelSpec
    lam: float
    samples: SampledFunction
    report: ConditionReport
    violations: list[str] = field(default_factory=list)
    u_at_zero: float = 1.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def __call__(self, t):
        return self.samples(t)

    def to_dict(self) -> dict:
        return {
            "kernel": self.spec.label,
            "lambda": self.lam,
            "u_at_zero": self.u_at_zero,
            "violations": list(self.violations),
            "condition_report": self.report.to_dict(),
        }


def relaxation_values(spec: KernelSpec, lam: float, t, cfg: InversionConfig | None = None):
    """``u_λ(t)`` for ``t >= 0`` without gate or invariant checks."""
    if not lam >= 0:
        raise ValueError("lambda must be nonnegative")
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("t must be nonnegative")
    out = np.ones_like(arr)
    pos = arr > 0
    if lam > 0 and np.any(pos):
        def image(p):
            K = spec.laplace(p)
            return K / (p * K + lam)

        out[pos] = kc.invert_image(spec, image, arr[pos], cfg)
    return float(out) if out.ndim == 0 else out


def _check_invariants(spec: KernelSpec, lam: float, grid: np.ndarray, u: np.ndarray) -> list[str]:
    bad = []
    pos = grid > 0
    if np.any(u[pos] <= 0) or np.any(u > 1 + 1e-12):
        bad.append("values outside (0, 1]")
    if np.any(np.diff(u) > 1e-12 * np.abs(u[:-1])):
        bad.append("not nonincreasing")
    g, v = grid[pos], u[pos]
    if g.size >= 5 and not kc.complete_monotonicity_check(SampledFunction(g, v), min(4, g.size - 1)):
        bad.append("complete monotonicity certificate (order 4) failed")
    if g.size and lam > 0:
        # u = 1 - λ I[u] with 0 < u <= 1 gives u >= 1 - λ ∫_0^t ϰ.
        from .sonine import SonineKernel

        floor = 1.0 - lam * SonineKernel(spec).primitive(g[0], 1)
        if v[0] < floor - 1e-10:
            bad.append(f"u(t_min) = {v[0]:.6g} below the small-time floor {floor:.6g}")
    return bad


def solve_relaxation(
    spec: KernelSpec,
    lam: float,
    grid,
    cfg: InversionConfig | None = None,
    *,
    strict: bool = False,
) -> RelaxationSolution:
    """Relaxation function ``u_λ`` on ``grid`` by inversion of ``K/(pK + λ)``.

    The kernel must pass the admissibility gate. The solution invariants
    (range, monotonicity, complete monotonicity, small-time limit) are
    checked after the fact; violations are logged and recorded on the
    result, or raised when ``strict`` is set.
    """
    report = kc.require_condition_star(spec)
    grid = np.asarray(grid, dtype=float)
    u = np.atleast_1d(relaxation_values(spec, lam, grid, cfg))
    samples = SampledFunction(grid, u, name="u")
    violations = _check_invariants(spec, lam, grid, u)
    for msg in violations:
        log.warning("relaxation %s, lambda=%g: %s", spec.label, lam, msg)
    if strict and violations:
        raise ArithmeticError("; ".join(violations))
    return RelaxationSolution(spec, float(lam), samples, report, violations)


def renewal_survival(spec: KernelSpec, lam: float, t):
    """Survival function ``P[J > t]`` of the renewal waiting times.

    It coincides with ``u_λ(t)`` when the subordinator has Laplace exponent
    ``s K(s)``.
    """
    kc.require_condition_star(spec)
    return relaxation_values(spec, lam, t)


def box_kernel_solution(lam: float, t, c: float = 1.0):
    """Piecewise profile ``1`` at 0, ``(1+λ)^{-1}`` on ``(0,1]``, ``c(1+λ)^{-t}`` beyond.

    With the box kernel, ``D u(t) = u(t) - u(t-1)`` for ``t > 1``, so the
    profile solves ``D u = -λ u`` on ``(0, 1]`` and for ``t > 2``; on
    ``(1, 2)`` it does not (see :func:`box_kernel_recursive_solution`).
    """
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("t must be nonnegative")
    q = 1.0 + lam
    out = np.where(arr == 0, 1.0, np.where(arr <= 1.0, 1.0 / q, c * q ** (-arr)))
    return float(out) if out.ndim == 0 else out


def box_kernel_recursive_solution(lam: float, t):
    """Solution ``(1+λ)^{-⌈t⌉}`` of ``u(t) - u(t-1) = -λ u(t)`` continued from ``(0, 1]``."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("t must be nonnegative")
    out = (1.0 + lam) ** (-np.ceil(arr))
    return float(out) if out.ndim == 0 else out


def caputo_relaxation(alpha: float, lam: float, t):
    """``E_α(-λ t^α)``: closed form of ``u_λ`` for the Caputo kernel."""
    arr = np.asarray(t, dtype=float)
    return mittag_leffler(alpha, -lam * arr**alpha)
