from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special as sps

from conftest import ADMISSIBLE, ADMISSIBLE_IDS
from genfrac import kernels as kc
from genfrac import sonine as so
from genfrac.sampled import SampledFunction, graded_grid, uniform_grid


def test_caputo_kappa_closed_form():
    kappa = so.build_kappa(kc.Caputo(0.3))
    t = np.array([0.01, 1.0, 50.0])
    assert np.allclose(kappa(t), t**-0.7 / sps.gamma(0.3), rtol=1e-13)


def test_inverted_kappa_matches_closed_form():
    a = 0.4
    spec = kc.CustomKernel(lambda p: p ** (a - 1.0), name="power")
    kappa = so.build_kappa(spec)
    t = np.array([0.01, 1.0, 50.0])
    assert np.allclose(kappa(t), t ** (a - 1) / sps.gamma(a), rtol=1e-9)
    assert np.allclose(kappa.primitive(t, 1), t**a / sps.gamma(a + 1), rtol=1e-9)


def test_kappa_cache_returns_same_values():
    kappa = so.build_kappa(kc.LogBernstein(0.5))
    first = kappa(np.array([0.5, 1.0]))
    assert np.array_equal(kappa(np.array([1.0, 0.5])), first[::-1])
    assert kappa(1.0) == first[1]


@pytest.mark.parametrize("spec", ADMISSIBLE, ids=ADMISSIBLE_IDS)
def test_kappa_is_positive_decreasing_with_vanishing_primitive(spec):
    kappa = so.build_kappa(spec)
    t = np.geomspace(1e-6, 1e3, 10)
    v = kappa(t)
    assert np.all(v > 0) and np.all(np.diff(v) < 0)
    # ϰ itself is unbounded near 0; its primitive vanishes there
    j1 = kappa.primitive(np.array([1e-8, 1e-6, 1.0]), 1)
    assert j1[0] < j1[1] < 0.5 * j1[2]


def test_kappa_refused_for_box_kernel():
    with pytest.raises(kc.ConditionStarError):
        so.build_kappa(kc.BoxKernel())
    with pytest.raises(kc.ConditionStarError):
        so.sonine_residual(kc.BoxKernel(), 1.0)


@pytest.mark.parametrize(
    "spec, t",
    [
        (kc.Caputo(0.3), 1.0),
        (kc.Caputo(0.5), 1e-3),
        (kc.Caputo(0.9), 100.0),
        (kc.LogBernstein(0.5), 2.0),
        (kc.LogBernstein(0.2), 0.05),
        (kc.DistributedOrder(((0.3, 0.5), (0.8, 0.5))), 3.0),
    ],
)
def test_sonine_identity(spec, t):
    assert abs(so.sonine_residual(spec, t)) < 1e-6


def test_apply_D_of_constant_vanishes():
    g = uniform_grid(2.0, 0.01)
    Du = so.apply_D(kc.Caputo(0.5), SampledFunction(g, np.full(g.size, 3.0)))
    assert np.max(np.abs(Du.values)) == 0.0


def test_apply_D_of_linear_function_is_exact():
    g = uniform_grid(2.0, 0.01)
    Du = so.apply_D(kc.Caputo(0.5), SampledFunction(g, g.copy()))
    assert np.allclose(Du.values, g**0.5 / sps.gamma(1.5), rtol=1e-12, atol=1e-15)


def test_apply_D_on_nonuniform_grid_matches_uniform():
    g = graded_grid(1.0, 200)
    f = SampledFunction(g, np.sin(g))
    uni = uniform_grid(1.0, 1e-3)
    a = so.apply_D(kc.Caputo(0.5), f, out_grid=np.array([0.25, 0.5, 1.0]))
    b = so.apply_D(kc.Caputo(0.5), SampledFunction(uni, np.sin(uni)))
    assert np.allclose(a.values, b(np.array([0.25, 0.5, 1.0])), atol=2e-4)


def test_apply_D_box_kernel_is_a_lagged_difference():
    g = uniform_grid(4.0, 0.01)
    u = SampledFunction(g, np.exp(-g) + 0.1 * np.cos(5 * g))
    Du = so.apply_D(kc.BoxKernel(), u)
    late = g > 1.0
    assert np.allclose(Du.values[late], u.values[late] - u(g[late] - 1.0), atol=1e-12)


def test_apply_I_of_one():
    g = uniform_grid(2.0, 0.01)
    If = so.apply_I(kc.Caputo(0.5), SampledFunction(g, np.ones_like(g)))
    assert np.allclose(If.values, g**0.5 / sps.gamma(1.5), rtol=1e-12, atol=1e-15)


def test_apply_I_is_linear():
    g = uniform_grid(1.0, 0.02)
    spec = kc.LogBernstein(0.5)
    a, b = SampledFunction(g, np.cos(g)), SampledFunction(g, g**2)
    lhs = so.apply_I(spec, 2.0 * a + b)
    rhs = 2.0 * so.apply_I(spec, a) + so.apply_I(spec, b)
    assert np.allclose(lhs.values, rhs.values, atol=1e-13)


def test_apply_I_requires_grid_from_zero():
    with pytest.raises(ValueError):
        so.apply_I(kc.Caputo(0.5), SampledFunction(np.array([0.1, 0.2]), np.array([1.0, 1.0])))


@pytest.mark.parametrize("spec", ADMISSIBLE, ids=ADMISSIBLE_IDS)
def test_D_of_I_of_one_is_one(spec):
    g = uniform_grid(2.0, 0.01)
    DI = so.apply_DI(spec, SampledFunction(g, np.ones_like(g)))
    assert np.allclose(DI.values[1:], 1.0, atol=1e-8)


def test_roundtrips_converge_at_first_order():
    spec = kc.Caputo(0.5)
    out = []
    for h in (2e-3, 1e-3):
        g = uniform_grid(5.0, h)
        out.append(so.roundtrip_residuals(spec, SampledFunction(g, np.cos(g)), SampledFunction(g, 1 / (1 + g))))
    (di1, id1), (di2, id2) = out
    assert di2 < 1e-3 and id2 < 1e-3
    assert di1 / di2 > 1.5 and id1 / id2 > 1.5


def test_roundtrip_window_must_contain_points():
    g = uniform_grid(1.0, 0.1)
    f = SampledFunction(g, np.cos(g))
    with pytest.raises(ValueError):
        so.roundtrip_residuals(kc.Caputo(0.5), f, f, window=(2.0, 3.0))
