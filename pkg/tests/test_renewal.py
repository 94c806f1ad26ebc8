from __future__ import annotations

import math

import numpy as np
import pytest

from genfrac import kernels as kc
from genfrac import renewal as rn
from genfrac.relaxation import relaxation_values


def _rng(seed=0):
    return rn.path_generators(seed, 1)[0]


# -- stable sampler ---------------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9])
@pytest.mark.parametrize("s", [0.5, 2.0])
def test_stable_sampler_laplace_transform(alpha, s):
    n, dt = 200_000, 0.7
    x = rn.sample_stable_increment(alpha, dt, _rng(1), size=n)
    vals = np.exp(-s * x)
    exact = math.exp(-dt * s**alpha)
    assert abs(vals.mean() - exact) < 4 * vals.std() / math.sqrt(n)


def test_stable_sampler_near_one_is_nearly_deterministic():
    x = rn.sample_stable_increment(0.999, 1.0, _rng(2), size=20_000)
    assert np.all(np.isfinite(x)) and np.all(x > 0)
    assert np.median(x) == pytest.approx(1.0, abs=0.02)


def test_stable_sampler_scaling():
    a = rn.sample_stable_increment(0.6, 1.0, _rng(3), size=10)
    b = rn.sample_stable_increment(0.6, 8.0, _rng(3), size=10)
    assert np.allclose(b, a * 8.0 ** (1 / 0.6), rtol=1e-12)


def test_stable_sampler_rejects_bad_input():
    with pytest.raises(ValueError):
        rn.sample_stable_increment(1.0, 1.0, _rng())
    with pytest.raises(ValueError):
        rn.sample_stable_increment(0.5, 0.0, _rng())
    with pytest.raises(ValueError):
        rn.Stable(0.0)


# -- kernel-driven subordinator -------------------------------------------------------


def test_from_kernel_cutoff_meets_targets():
    sub = rn.FromKernel(kc.LogBernstein(0.5))
    assert sub.neglected_sd <= rn.SMALL_JUMP_SD * (1 + 1e-9)
    assert sub.rate <= rn.MAX_JUMP_RATE
    assert sub.rate == pytest.approx(kc.eval_k(sub.spec, sub.eps))
    assert sub.drift > 0
    d = sub.describe()
    assert d["type"] == "from_kernel" and d["kernel"] == {"family": "log_bernstein", "beta": 0.5}


def test_from_kernel_jump_law():
    # P[J > τ | J > ε] = k(τ)/k(ε)
    sub = rn.FromKernel(kc.Caputo(0.7))
    j = sub.jump_sizes(200_000, _rng(4))
    assert j.min() >= sub.eps * (1 - 1e-9)
    for tau in (10 * sub.eps, 1e3 * sub.eps, 1.0):
        p = (j > tau).mean()
        exact = (tau / sub.eps) ** -0.7
        assert abs(p - exact) < 4 * math.sqrt(exact * (1 - exact) / j.size) + 1e-4


def test_from_kernel_increment_laplace_transform():
    sub = rn.FromKernel(kc.Caputo(0.7))
    n, dt, s = 50_000, 0.5, 1.0
    x = sub.increments(np.full(n, dt), _rng(5))
    vals = np.exp(-s * x)
    assert abs(vals.mean() - math.exp(-dt * float(sub.psi(s)))) < 4 * vals.std() / math.sqrt(n) + 1e-3


def test_from_kernel_refuses_box():
    with pytest.raises(kc.ConditionStarError):
        rn.FromKernel(kc.BoxKernel())


# -- paths and inverse ---------------------------------------------------------------------


def test_path_and_first_passage():
    path = rn.simulate_path(rn.Stable(0.6), 5.0, 1e-3, seed=11)
    assert path.D_values[0] == 0.0 and np.all(np.diff(path.D_values) > 0)
    assert path.D_values[-1] >= 5.0
    t = np.linspace(0.0, 5.0, 200)
    e = path.E(t)
    el = path.E(t, mode="linear")
    assert np.all(np.diff(e) >= 0) and np.all(np.diff(el) >= 0)
    assert np.all(el <= e + 1e-15) and np.all(e - el <= 1e-3 + 1e-15)
    # D(E(t)) >= t  on the grid
    assert np.all(path.D(e) >= t - 1e-12)
    with pytest.raises(ValueError):
        path.E(path.D_values[-1] + 1.0)
    with pytest.raises(ValueError):
        path.E(1.0, mode="exact")


def test_inverse_laplace_transform_matches_relaxation():
    e = rn.sample_inverse(rn.Stable(0.5), 1.0, 4000, 1e-3, seed=12)
    vals = np.exp(-e)
    exact = relaxation_values(kc.Caputo(0.5), 1.0, 1.0)
    assert abs(vals.mean() - exact) < 4 * vals.std() / math.sqrt(e.size) + 1e-3


# -- waiting times ---------------------------------------------------------------------------


def test_waiting_times_are_deterministic_and_batch_independent():
    a = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 3, 20, seed=42)
    b = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 3, 20, seed=42)
    c = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 3, 10, seed=42)
    d = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 3, 20, seed=43)
    assert np.array_equal(a.waiting_times, b.waiting_times)
    assert np.array_equal(a.waiting_times[:30], c.waiting_times)
    assert not np.array_equal(a.waiting_times, d.waiting_times)


def test_waiting_time_survival_matches_relaxation():
    sample = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 1, 20_000, seed=7)
    assert rn.survival_distance(sample) < 0.02


def test_waiting_times_are_heavy_tailed():
    sample = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 1, 5000, seed=8)
    assert sample.survival(10.0) > 100 * math.exp(-10.0)


def test_multiple_jumps_per_path_share_the_law():
    sample = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 4, 5000, seed=9)
    assert sample.waiting_times.size == 20_000 and not sample.partial
    assert rn.survival_distance(sample) < 0.02


@pytest.mark.slow
@pytest.mark.parametrize(
    "spec", [kc.Caputo(0.7), kc.LogBernstein(0.5), kc.DistributedOrder(((0.3, 0.5), (0.8, 0.5)))], ids=lambda s: s.label
)
def test_kernel_driven_waiting_times(spec):
    sample = rn.simulate_waiting_times(rn.FromKernel(spec), 1.0, 1, 20_000, seed=10)
    assert rn.survival_distance(sample) < 0.02


def test_stable_and_kernel_driven_agree():
    a = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 1, 10_000, seed=13)
    b = rn.simulate_waiting_times(rn.FromKernel(kc.Caputo(0.7)), 1.0, 1, 10_000, seed=14)
    t = np.array([0.1, 0.5, 1.0, 3.0])
    # two-sample tolerance: 4 standard errors of a difference of proportions
    assert np.all(np.abs(a.survival(t) - b.survival(t)) < 4 * math.sqrt(2 * 0.25 / 10_000))


def test_horizon_marks_partial_sample():
    sample = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 5, 50, seed=15, horizon=0.5)
    assert sample.partial
    assert np.all(sample.counts <= 5) and np.any(sample.counts < 5)
    assert sample.waiting_times.size == sample.counts.sum()
    assert sample.to_dict()["partial"] is True


def test_control_near_alpha_one():
    sample = rn.simulate_waiting_times(rn.Stable(0.999), 1.0, 1, 20_000, seed=16)
    w = sample.waiting_times
    assert abs(w.mean() - 1.0) <= 3 * w.std(ddof=1) / math.sqrt(w.size)


def test_argument_validation():
    with pytest.raises(ValueError):
        rn.simulate_waiting_times(rn.Stable(0.7), 0.0, 1, 10, seed=0)
    with pytest.raises(ValueError):
        rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 0, 10, seed=0)
    with pytest.raises(ValueError):
        rn.path_generators(-1, 1)
    small = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 1, 100, seed=0)
    with pytest.raises(ValueError, match="at least"):
        rn.survival_distance(small)
    big = rn.simulate_waiting_times(rn.Stable(0.7), 1.0, 1, 10_000, seed=0)
    with pytest.raises(ValueError):
        rn.survival_distance(big, t_window=(1.0, 0.5))
    with pytest.raises(ValueError):
        rn.survival_distance(big, t_window=(1e300, 2e300))
