from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import ADMISSIBLE, ADMISSIBLE_IDS, GRID_1E2, erfc_relaxation
from genfrac import kernels as kc
from genfrac import relaxation as rl
from genfrac import sonine as so
from genfrac.laplace import Stehfest
from genfrac.sampled import SampledFunction, uniform_grid


@pytest.mark.parametrize("t", [1e-6, 0.1, 1.0, 10.0, 100.0])
def test_caputo_half_matches_erfc(t):
    assert rl.relaxation_values(kc.Caputo(0.5), 1.0, t) == pytest.approx(erfc_relaxation(t), rel=1e-10)


def test_small_time_value():
    assert rl.relaxation_values(kc.Caputo(0.5), 1.0, 1e-6) == pytest.approx(0.998872, abs=1e-6)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_caputo_equals_mittag_leffler(alpha):
    t = GRID_1E2
    u = rl.relaxation_values(kc.Caputo(alpha), 2.0, t)
    assert np.allclose(u, rl.caputo_relaxation(alpha, 2.0, t), rtol=1e-8)


def test_lambda_zero_gives_one():
    sol = rl.solve_relaxation(kc.LogBernstein(0.5), 0.0, GRID_1E2)
    assert np.all(sol.samples.values == 1.0)


def test_value_at_zero_is_one():
    assert rl.relaxation_values(kc.Caputo(0.5), 3.0, 0.0) == 1.0


def test_negative_lambda_and_time_rejected():
    with pytest.raises(ValueError):
        rl.relaxation_values(kc.Caputo(0.5), -1.0, 1.0)
    with pytest.raises(ValueError):
        rl.relaxation_values(kc.Caputo(0.5), 1.0, -1.0)


def test_box_kernel_refused():
    with pytest.raises(kc.ConditionStarError):
        rl.solve_relaxation(kc.BoxKernel(), 1.0, GRID_1E2)
    with pytest.raises(kc.ConditionStarError):
        rl.renewal_survival(kc.BoxKernel(), 1.0, 1.0)


@pytest.mark.parametrize("spec", ADMISSIBLE, ids=ADMISSIBLE_IDS)
def test_solution_invariants(spec):
    sol = rl.solve_relaxation(spec, 1.0, GRID_1E2, strict=True)
    assert sol.ok
    u = sol.samples.values
    assert np.all((u > 0) & (u <= 1)) and np.all(np.diff(u) <= 0)
    assert kc.complete_monotonicity_check(sol.samples, 6)
    assert sol.to_dict()["violations"] == []


@pytest.mark.parametrize("spec", ADMISSIBLE, ids=ADMISSIBLE_IDS)
def test_ordering_in_lambda(spec):
    us = [rl.relaxation_values(spec, lam, GRID_1E2) for lam in (0.5, 1.0, 4.0)]
    assert np.all(us[0] >= us[1]) and np.all(us[1] >= us[2])


@pytest.mark.parametrize("spec", ADMISSIBLE, ids=ADMISSIBLE_IDS)
def test_talbot_and_stehfest_agree(spec):
    a = rl.relaxation_values(spec, 1.0, GRID_1E2)
    b = rl.relaxation_values(spec, 1.0, GRID_1E2, Stehfest())
    assert np.allclose(a, b, rtol=1e-5, atol=1e-8)


@pytest.mark.parametrize("spec", ADMISSIBLE, ids=ADMISSIBLE_IDS)
def test_solution_satisfies_equation(spec):
    lam = 1.0
    g = uniform_grid(10.0, 1e-3)
    u = SampledFunction(g, rl.relaxation_values(spec, lam, g))
    Du = so.apply_D(spec, u)
    sel = g >= 0.1
    assert np.max(np.abs(Du.values[sel] + lam * u.values[sel])) < 1e-2


def test_renewal_survival_equals_relaxation():
    spec = kc.LogBernstein(0.5)
    assert rl.renewal_survival(spec, 2.0, 0.0) == 1.0
    assert rl.renewal_survival(spec, 2.0, 1.5) == rl.relaxation_values(spec, 2.0, 1.5)


def test_strict_mode_raises_on_violation(monkeypatch):
    monkeypatch.setattr(rl, "relaxation_values", lambda *a, **k: np.linspace(1.0, 2.0, GRID_1E2.size))
    with pytest.raises(ArithmeticError):
        rl.solve_relaxation(kc.Caputo(0.5), 1.0, GRID_1E2, strict=True)
    sol = rl.solve_relaxation(kc.Caputo(0.5), 1.0, GRID_1E2)
    assert not sol.ok


def test_box_kernel_profile_values():
    lam = 1.0
    assert rl.box_kernel_solution(lam, 0.0) == 1.0
    assert rl.box_kernel_solution(lam, 0.5) == 0.5
    assert rl.box_kernel_solution(lam, 2.0) == pytest.approx(0.25)
    assert rl.box_kernel_solution(lam, 2.0, c=4.0) == pytest.approx(1.0)


def test_box_kernel_profile_solves_equation_beyond_two():
    lam = 0.7
    t = np.linspace(2.01, 6.0, 50)
    u = lambda s: rl.box_kernel_solution(lam, s)
    assert np.allclose(u(t) - u(t - 1.0), -lam * u(t), rtol=1e-13)
    # the exponential profile does not satisfy the equation on (1, 2)
    t = np.linspace(1.2, 1.8, 5)
    assert not np.allclose(u(t) - u(t - 1.0), -lam * u(t))


def test_box_kernel_recursive_solution_solves_equation():
    lam = 0.7
    t = np.linspace(1.01, 6.0, 80)
    u = lambda s: rl.box_kernel_recursive_solution(lam, s)
    assert np.allclose(u(t) - u(t - 1.0), -lam * u(t), rtol=1e-13)
    assert u(0.5) == rl.box_kernel_solution(lam, 0.5)
