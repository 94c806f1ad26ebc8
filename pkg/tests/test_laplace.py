from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from genfrac import kernels as kc
from genfrac import laplace as lx
from genfrac.sampled import SampledFunction

from conftest import ADMISSIBLE, ADMISSIBLE_IDS, erfc_relaxation


def test_stehfest_weights_sum_to_zero():
    # the rule must annihilate the image of the zero function exactly and
    # reproduce constants: Σ V_k = 0 and Σ V_k / k = 1 / ln 2 · ln 2
    for order in (8, 12, 16, 20):
        w = lx.stehfest_weights(order)
        assert abs(w.sum()) < 1e-6 * np.abs(w).max()


@pytest.mark.parametrize("order", [7, 6, 22])
def test_stehfest_order_validation(order):
    with pytest.raises(ValueError):
        lx.Stehfest(order=order)


def test_talbot_node_validation():
    with pytest.raises(ValueError):
        lx.Talbot(nodes=10)


@pytest.mark.parametrize("t", [0.01, 1.0, 50.0])
def test_invert_cm_constant(t):
    assert lx.invert_cm(lambda p: 1.0 / p, t) == pytest.approx(1.0, rel=1e-9)


def test_invert_cm_exponential():
    assert lx.invert_cm(lambda p: 1.0 / (p + 1.0), 1.0) == pytest.approx(math.exp(-1), rel=1e-6)


def test_invert_cm_inverse_sqrt():
    assert lx.invert_cm(lambda p: p**-0.5, 1.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-7)


def test_invert_talbot_exponential():
    assert lx.invert_talbot(lambda p: 1.0 / (p + 1.0), 2.0) == pytest.approx(math.exp(-2), rel=1e-11)


def test_talbot_and_stehfest_agree_on_subordination_image():
    F = lambda p: p**-0.5 * np.exp(-(p**0.5))
    a = lx.invert_talbot(F, 1.0)
    b = lx.invert_cm(F, 1.0)
    # e^{-sqrt p} is hard for real-axis rules; order 16 reaches a few 1e-6
    assert a == pytest.approx(b, rel=1e-5)
    assert a == pytest.approx(math.exp(-0.25) / math.sqrt(math.pi), rel=1e-10)


def test_talbot_relaxation_image():
    F = lambda p: p**-0.5 / (p**0.5 + 1.0)
    assert lx.invert_talbot(F, 1.0) == pytest.approx(erfc_relaxation(1.0), abs=1e-12)
    assert lx.invert_talbot(F, 1.0) == pytest.approx(0.4275836, abs=5e-8)


def test_invert_vectorized_matches_scalar():
    t = np.array([0.1, 1.0, 10.0])
    F = lambda p: 1.0 / (p + 2.0)
    vec = lx.invert(F, t)
    assert np.allclose(vec, [lx.invert(F, v) for v in t], rtol=0, atol=1e-15)


def test_invert_rejects_nonpositive_times():
    with pytest.raises(ValueError):
        lx.invert_cm(lambda p: 1 / p, 0.0)
    with pytest.raises(ValueError):
        lx.invert_talbot(lambda p: 1 / p, [-1.0, 1.0])


def test_nonfinite_sum_is_reported():
    with pytest.raises(lx.InversionError):
        lx.invert_cm(lambda p: np.full_like(p, np.nan), 1.0)


def test_talbot_needs_complex_image():
    def real_only(p):
        if np.iscomplexobj(p):
            raise TypeError("real arguments only")
        return 1 / p

    with pytest.raises(lx.InversionError):
        lx.invert_talbot(real_only, 1.0)


def test_unknown_config_type():
    with pytest.raises(TypeError):
        lx.invert(lambda p: 1 / p, 1.0, cfg="talbot")


@pytest.mark.parametrize("spec", ADMISSIBLE, ids=ADMISSIBLE_IDS)
def test_method_agreement_on_stieltjes_targets(spec):
    t = np.geomspace(0.05, 20, 12)
    for F in (spec.laplace, lambda p: spec.laplace(p) / (p * spec.laplace(p) + 1.0)):
        a = lx.invert_talbot(F, t)
        b = lx.invert_cm(F, t)
        assert np.max(np.abs(a / b - 1)) < 1e-6


@pytest.mark.parametrize("spec", ADMISSIBLE, ids=ADMISSIBLE_IDS)
def test_stieltjes_inversion_is_monotone(spec):
    t = np.geomspace(1e-3, 1e3, 40)
    k = lx.invert_cm(spec.laplace, t)
    assert np.all(np.diff(k) <= 0)


def test_forward_constant():
    assert lx.forward_laplace(lambda t: 1.0, 2.0) == pytest.approx(0.5, rel=1e-10)


def test_forward_weak_singularity():
    f = lambda t: t**-0.5 / math.gamma(0.5)
    assert lx.forward_laplace(f, 1.0) == pytest.approx(1.0, rel=1e-8)


def test_forward_caputo_kernel_matches_K():
    f = lambda t: t**-0.5 / math.sqrt(math.pi)
    assert lx.forward_laplace(f, 4.0) == pytest.approx(kc.laplace_K(kc.Caputo(0.5), 4.0), rel=1e-8)


def test_forward_of_log_kernel():
    spec = kc.LogBernstein(0.5)
    f = lambda t: kc.eval_k(spec, t)
    assert lx.forward_laplace(f, 1.0, rel_tol=1e-8) == pytest.approx(math.log(2.0), rel=1e-5)


def test_forward_divergent_is_reported():
    with pytest.raises(lx.QuadratureError):
        lx.forward_laplace(lambda t: 1.0 / t, 1.0)


def test_forward_sampled_is_exact_for_linear():
    g = np.linspace(0, 40, 4001)
    f = SampledFunction(g, g)
    # ∫_0^40 t e^{-t} dt
    exact = 1.0 - 41.0 * math.exp(-40.0)
    assert lx.forward_laplace(f, 1.0) == pytest.approx(exact, rel=1e-13)


@pytest.mark.parametrize("spec", ADMISSIBLE, ids=ADMISSIBLE_IDS)
@pytest.mark.parametrize("p", [0.5, 1.0, 2.0])
def test_inversion_round_trip(spec, p):
    f = lambda t: lx.invert_cm(spec.laplace, t)
    assert lx.forward_laplace(f, p, rel_tol=1e-8) == pytest.approx(spec.laplace(p), rel=1e-4)


@settings(max_examples=25, deadline=None)
@given(rate=st.floats(0.1, 10.0), t=st.floats(0.05, 5.0))
def test_exponential_inversion_property(rate, t):
    F = lambda p: 1.0 / (p + rate)
    assert lx.invert_talbot(F, t) == pytest.approx(math.exp(-rate * t), rel=1e-9, abs=1e-12)


def test_single_time_rules_reproduce_inversion():
    F = lambda p: 1.0 / (p + 1.0)
    p, w = lx.talbot_rule(1.5)
    assert (w * F(p)).real.sum() == pytest.approx(lx.invert_talbot(F, 1.5), rel=1e-14)
    p, w = lx.stehfest_rule(1.5)
    # the rule is returned in double precision, invert_cm sums in extended precision
    assert np.dot(w, F(p)) == pytest.approx(lx.invert_cm(F, 1.5), rel=1e-6)


def test_erfc_oracle_consistency():
    # scipy's erfcx gives e^t erfc(√t) directly
    assert erfc_relaxation(10.0) == pytest.approx(special.erfcx(math.sqrt(10.0)), rel=1e-14)


def test_stehfest_falls_back_to_double_for_images_rejecting_extended_precision():
    def F(p):
        if np.asarray(p).dtype != np.float64:
            raise TypeError("double precision only")
        return 1.0 / (p + 1.0)

    assert lx.invert_cm(F, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-6)


def test_stehfest_extended_precision_accuracy():
    # ~1e-12 for 1/p in extended precision, against ~1e-7 in doubles
    assert lx.invert_cm(lambda p: 1.0 / p, 2.0) == pytest.approx(1.0, abs=1e-9)
