"""Acceptance suite shared by ``genfrac verify-all`` and the test suite.

Every check returns a :class:`CriterionResult`; a check passes only when
its numerical condition holds and it finishes within its time budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np

from . import diffusion as df
from . import kernels as kc
from . import relaxation as rl
from . import renewal as rn
from . import sonine as so
from .sampled import SampledFunction, log_grid, uniform_grid


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.2f}s / {self.budget:g}s)"

    def to_dict(self) -> dict:
        return {
            "number": self.number,
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
            "seconds": self.seconds,
            "budget": self.budget,
        }


def _erfc_oracle(t: float) -> float:
    with mpmath.workdps(40):
        return float(mpmath.exp(t) * mpmath.erfc(mpmath.sqrt(t)))


def relaxation_oracle() -> tuple[bool, str]:
    ts = (0.1, 1.0, 10.0)
    sol = rl.solve_relaxation(kc.Caputo(0.5), 1.0, ts)
    err = max(abs(v - _erfc_oracle(t)) for v, t in zip(sol.samples.values, ts))
    return err < 1e-6, f"max |u - e^t erfc(sqrt t)| = {err:.2e}"


def mittag_leffler_equivalence() -> tuple[bool, str]:
    ts = log_grid(0.01, 100.0, 30)
    worst = 0.0
    for a in (0.3, 0.5, 0.8):
        u = rl.relaxation_values(kc.Caputo(a), 1.0, ts)
        ml = rl.mittag_leffler(a, -(ts**a))
        worst = max(worst, float(np.max(np.abs(u / ml - 1.0))))
    return worst < 1e-5, f"max relative error = {worst:.2e}"


def sonine_identity() -> tuple[bool, str]:
    ts = log_grid(0.01, 100.0, 20)
    specs = (kc.Caputo(0.3), kc.Caputo(0.5), kc.Caputo(0.7), kc.LogBernstein(0.5))
    worst = max(abs(so.sonine_residual(s, t)) for s in specs for t in ts)
    return worst < 1e-4, f"max |k*kappa - 1| = {worst:.2e}"


def roundtrip_residuals() -> tuple[bool, str]:
    spec = kc.Caputo(0.5)
    res = []
    for h in (1e-3, 5e-4):
        g = uniform_grid(5.0, h)
        res.append(so.roundtrip_residuals(spec, SampledFunction(g, np.cos(g)), SampledFunction(g, 1.0 / (1.0 + g))))
    (di1, id1), (di2, id2) = res
    ok = di1 < 1e-3 and id1 < 1e-3 and di1 / di2 >= 1.5 and id1 / id2 >= 1.5
    return ok, f"DI {di1:.2e} (x{di1 / di2:.2f} on halving), ID {id1:.2e} (x{id1 / id2:.2f})"


def complete_monotonicity() -> tuple[bool, str]:
    grid = log_grid(0.01, 100.0, 50)
    failed = []
    for spec in kc.BUILTIN_ADMISSIBLE:
        for lam in (0.5, 1.0, 4.0):
            sol = rl.solve_relaxation(spec, lam, grid)
            if not kc.complete_monotonicity_check(sol.samples, 6):
                failed.append(f"{spec.label}/{lam:g}")
    return not failed, "order-6 certificate passed for 9 cases" if not failed else f"failed: {failed}"


def condition_gate_and_box() -> tuple[bool, str]:
    admissible = all(kc.check_condition_star(s).passed for s in kc.BUILTIN_ADMISSIBLE)
    box = kc.BoxKernel()
    box_rejected = not kc.check_condition_star(box).passed
    lam = 1.0
    t = np.linspace(0.01, 1.0, 100)
    profile_ok = bool(np.all(rl.box_kernel_solution(lam, t) == (1.0 + lam) ** -1))
    g = uniform_grid(5.0, 0.01)
    u = SampledFunction(g, 1.0 / (1.0 + g) + 0.3 * np.sin(3 * g))
    Du = so.apply_D(box, u)
    lag = g > 1.0
    shifted = u(g[lag] - 1.0)
    err = float(np.max(np.abs(Du.values[lag] - (u.values[lag] - shifted))))
    ok = admissible and box_rejected and profile_ok and err < 1e-12
    return ok, (
        f"built-ins pass={admissible}, box rejected={box_rejected}, "
        f"(1+lam)^-1 on (0,1]={profile_ok}, |Du - (u(t)-u(t-1))| = {err:.1e}"
    )


def heat_kernel_mass() -> tuple[bool, str]:
    spec = kc.Caputo(0.5)
    x = np.linspace(-40.0, 40.0, 8001)
    worst_mass, worst_min = 0.0, math.inf
    for t in (0.1, 1.0, 10.0):
        sol = df.Z_profile(spec, t, x)
        worst_mass = max(worst_mass, abs(sol.mass - 1.0))
        worst_min = min(worst_min, float(sol.Z_values.min()))
    probes = [(0.1, 0.2), (0.1, 1.0), (0.1, 2.0), (1.0, 0.5), (1.0, 1.5), (1.0, 3.0), (10.0, 0.5), (10.0, 2.0), (10.0, 5.0), (10.0, 8.0)]
    worst_rel = 0.0
    for t, xv in probes:
        a = df.Z_profile(spec, t, np.array([xv])).Z_values[0]
        b = df.Z_profile(spec, t, np.array([xv]), method="laplace").Z_values[0]
        worst_rel = max(worst_rel, abs(a / b - 1.0))
    ok = worst_mass < 1e-3 and worst_min >= -1e-8 and worst_rel < 1e-3
    return ok, f"mass error {worst_mass:.1e}, min Z {worst_min:.1e}, route mismatch {worst_rel:.1e}"


def lt_solution_residual() -> tuple[bool, str]:
    spec = kc.Caputo(0.5)
    x = uniform_grid(10.0, 1e-2, start=-10.0)
    gauss = SampledFunction(x, np.exp(-(x**2)))
    one = SampledFunction(x, np.ones_like(x))
    rg = max(df.verify_LT_solution(spec, gauss, p) for p in (0.5, 1.0, 2.0))
    r1 = max(df.verify_LT_solution(spec, one, p) for p in (0.5, 1.0, 2.0))
    return rg < 5e-3 and r1 < 1e-6, f"Gaussian residual {rg:.1e}, constant residual {r1:.1e}"


def renewal_identity(seed: int = 20240917) -> tuple[bool, str]:
    sample = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 1, 20_000, seed, step=1e-3)
    dist = rn.survival_distance(sample, t_window=(0.05, 5.0))
    ctrl = rn.simulate_waiting_times(rn.Stable(0.999), 1.0, 1, 20_000, seed + 1, step=1e-3)
    w = ctrl.waiting_times
    sigma = w.std(ddof=1) / math.sqrt(w.size)
    dev = abs(w.mean() - 1.0)
    ok = dist < 0.02 and dev <= 3 * sigma
    return ok, f"sup distance {dist:.4f}, control mean {w.mean():.4f} (|dev| {dev:.4f} vs 3 sigma {3 * sigma:.4f})"


def log_kernel_asymptotics() -> tuple[bool, str]:
    beta = 0.5
    spec = kc.LogBernstein(beta)
    p0 = 1e-6
    r0 = float(kc.laplace_K(spec, p0) / p0 ** (beta - 1))
    p1 = 1e8
    r1 = float(p1 * kc.laplace_K(spec, p1) / (beta * math.log(p1)))
    ok = abs(r0 - 1) < 1e-3 and abs(r1 - 1) < 5e-2
    return ok, f"K/p^(beta-1) at 1e-6 = {r0:.6f}, pK/(beta log p) at 1e8 = {r1:.6f}"


CRITERIA: tuple[tuple[int, str, float, Callable[[], tuple[bool, str]]], ...] = (
    (1, "relaxation oracle", 1.0, relaxation_oracle),
    (2, "Mittag-Leffler equivalence", 5.0, mittag_leffler_equivalence),
    (3, "Sonine identity", 10.0, sonine_identity),
    (4, "D/I round trips", 30.0, roundtrip_residuals),
    (5, "complete monotonicity", 20.0, complete_monotonicity),
    (6, "admissibility gate and box kernel", 30.0, condition_gate_and_box),
    (7, "heat kernel mass and positivity", 60.0, heat_kernel_mass),
    (8, "LT-solution residual", 30.0, lt_solution_residual),
    (9, "renewal identity", 180.0, renewal_identity),
    (10, "log-kernel asymptotics", 5.0, log_kernel_asymptotics),
)


def run_criterion(number: int) -> CriterionResult:
    for num, name, budget, fn in CRITERIA:
        if num == number:
            start = time.perf_counter()
            try:
                ok, detail = fn()
            except Exception as exc:  # a crash is a failed criterion, reported as such
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            seconds = time.perf_counter() - start
            if ok and seconds >= budget:
                ok, detail = False, detail + "; over time budget"
            return CriterionResult(num, name, bool(ok), detail, seconds, budget)
    raise KeyError(f"no criterion {number}")


def run_all() -> list[CriterionResult]:
    return [run_criterion(num) for num, *_ in CRITERIA]
