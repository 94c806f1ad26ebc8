"""Monte Carlo for the renewal process ``N(E(t))``.

``D`` is a subordinator with Laplace exponent ``Ψ(s) = s K(s)``, ``E`` its
first-passage inverse and ``N`` a Poisson process of rate λ run on the
operational clock. The waiting times of ``N(E(t))`` are i.i.d. with
``P[J > t] = E e^{-λ E(t)} = u_λ(t)``, the relaxation function of ``K``.

Since ``N`` jumps at operational times ``Γ_1 < Γ_2 < ...``, the real jump
times are ``D(Γ_n)``. On the grid ``r_k = kh`` they are bracketed linearly
between ``D(r_k)`` and ``D(r_{k+1})``; the increments of ``D`` between the
grid points that matter are drawn in aggregated form, which has the same
law as stepping the whole path.

Every path draws from its own counter-based stream (Philox keyed by a
child of ``SeedSequence(seed)``), so results do not depend on how paths are
batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import kernels as kc
from .kernels import Caputo, KernelSpec
from .relaxation import relaxation_values

__all__ = [
    "Stable",
    "FromKernel",
    "SubordinatorSpec",
    "SubordinatorPath",
    "WaitingTimeSample",
    "sample_stable_increment",
    "simulate_path",
    "sample_inverse",
    "simulate_waiting_times",
    "survival_distance",
    "path_generators",
]

# Target standard deviation of the neglected small jumps per unit of
# operational time, and a cap on the compound-Poisson rate.
SMALL_JUMP_SD = 1e-3
MAX_JUMP_RATE = 1e5


def path_generators(seed: int, n_paths: int) -> list[np.random.Generator]:
    """Independent Philox streams, one per path."""
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(n_paths)]


def sample_stable_increment(alpha: float, dt, rng: np.random.Generator, size=None):
    """Positive α-stable variates with ``E e^{-sX} = e^{-dt s^α}``.

    Kanter's representation: for ``U`` uniform on ``(0, π)`` and ``W``
    standard exponential,
    ``X = A(U)^{(1-α)/α} W^{-(1-α)/α}`` with
    ``A(u) = sin(αu)^{α/(1-α)} sin((1-α)u) / sin(u)^{1/(1-α)}``,
    scaled by ``dt^{1/α}``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    dt = np.asarray(dt, dtype=float)
    if np.any(dt <= 0):
        raise ValueError("dt must be positive")
    if size is None:
        size = dt.shape
    u = np.pi * rng.random(size)
    w = rng.standard_exponential(size)
    # guard U = 0, which has probability zero but is representable
    u = np.where(u > 0, u, np.pi * 0.5)
    # log space: the powers 1/(1-α) under- and overflow as α → 1
    log_a = (
        alpha / (1 - alpha) * np.log(np.sin(alpha * u))
        + np.log(np.sin((1 - alpha) * u))
        - np.log(np.sin(u)) / (1 - alpha)
    )
    return np.exp((1 - alpha) / alpha * (log_a - np.log(w)) + np.log(dt) / alpha)


# ---------------------------------------------------------------------------
# Subordinator specifications


@dataclass(frozen=True)
class Stable:
    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def kernel(self) -> KernelSpec:
        return Caputo(self.alpha)

    def psi(self, s):
        return np.asarray(s, dtype=float) ** self.alpha

    def increments(self, dt: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return sample_stable_increment(self.alpha, dt, rng)

    def describe(self) -> dict:
        return {"type": "stable", "alpha": self.alpha}


@dataclass(eq=False)
class FromKernel:
    """Subordinator with ``Ψ(s) = s K(s)``.

    The Lévy measure has tail ``ν(τ, ∞) = k(τ)`` and there is no drift
    because ``K(p) → 0`` at infinity. Jumps above a cutoff ``ε`` form a
    compound Poisson process of rate ``k(ε)``; jumps below it are replaced by
    their mean ``m_ε = ∫_0^ε k - ε k(ε)`` per unit time. ``ε`` is the
    largest value whose neglected fluctuation has standard deviation at most
    ``small_jump_sd`` per unit time, unless that makes the rate exceed
    ``max_rate``.
    """

    spec: KernelSpec
    small_jump_sd: float = SMALL_JUMP_SD
    max_rate: float = MAX_JUMP_RATE
    eps: float = field(init=False)
    rate: float = field(init=False)
    drift: float = field(init=False)
    neglected_sd: float = field(init=False)
    _log_tau: np.ndarray = field(init=False, repr=False)
    _log_tail: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        kc.require_condition_star(self.spec)
        self.eps = self._choose_cutoff()
        k_eps = float(kc.eval_k(self.spec, self.eps))
        ik = float(kc.k_primitive(self.spec, self.eps, 1))
        self.rate = k_eps
        self.drift = ik - self.eps * k_eps
        self.neglected_sd = math.sqrt(max(self._small_var(self.eps), 0.0))
        tau = np.geomspace(self.eps, self.eps * 1e16, 1600)
        tail = np.asarray(kc.eval_k(self.spec, tau), dtype=float)
        good = tail > 0
        tau, tail = tau[good], tail[good]
        # enforce monotonicity against inversion noise in the far tail
        tail = np.minimum.accumulate(tail)
        keep = np.concatenate([[True], np.diff(tail) < 0])
        self._log_tau = np.log(tau[keep])
        self._log_tail = np.log(tail[keep])

    def _small_var(self, eps: float) -> float:
        # ∫_0^ε τ² ν(dτ) = 2 ∫_0^ε τ (k(τ) - k(ε)) dτ
        k_eps = float(kc.eval_k(self.spec, eps))
        ik = float(kc.k_primitive(self.spec, eps, 1))
        i2k = float(kc.k_primitive(self.spec, eps, 2))
        return 2.0 * (eps * ik - i2k) - eps * eps * k_eps

    def _choose_cutoff(self) -> float:
        lo, hi = math.log(1e-14), math.log(1.0)
        target = self.small_jump_sd**2
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            eps = math.exp(mid)
            ok = self._small_var(eps) <= target and kc.eval_k(self.spec, eps) <= self.max_rate
            if ok:
                lo = mid
            else:
                hi = mid
        eps = math.exp(lo)
        if kc.eval_k(self.spec, eps) > self.max_rate:
            raise ArithmeticError("no small-jump cutoff satisfies the rate cap")
        return eps

    @property
    def kernel(self) -> KernelSpec:
        return self.spec

    def psi(self, s):
        s = np.asarray(s, dtype=float)
        return s * kc.laplace_K(self.spec, s)

    def jump_sizes(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Jumps above ``ε``: ``k(J) = k(ε) V`` for uniform ``V``."""
        y = self._log_tail[0] + np.log(rng.random(n))
        lt, lk = self._log_tau, self._log_tail
        inside = y >= lk[-1]
        out = np.empty(n)
        out[inside] = np.interp(y[inside], lk[::-1], lt[::-1])
        # power-law continuation past the tabulated range
        slope = (lk[-1] - lk[-2]) / (lt[-1] - lt[-2])
        out[~inside] = lt[-1] + (y[~inside] - lk[-1]) / slope
        return np.exp(out)

    def increments(self, dt: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        dt = np.asarray(dt, dtype=float)
        counts = rng.poisson(self.rate * dt)
        sizes = self.jump_sizes(int(counts.sum()), rng)
        owner = np.repeat(np.arange(dt.size), counts.ravel())
        jumps = np.bincount(owner, weights=sizes, minlength=dt.size).reshape(dt.shape)
        return self.drift * dt + jumps

    def describe(self) -> dict:
        return {
            "type": "from_kernel",
            "kernel": self.spec.to_dict(),
            "cutoff": self.eps,
            "jump_rate": self.rate,
            "small_jump_drift": self.drift,
            "neglected_sd_per_unit_time": self.neglected_sd,
        }


SubordinatorSpec = Union[Stable, FromKernel]


# ---------------------------------------------------------------------------
# Paths


@dataclass
class SubordinatorPath:
    r_grid: np.ndarray
    D_values: np.ndarray
    seed: int
    step: float

    def D(self, r):
        return np.interp(r, self.r_grid, self.D_values)

    def E(self, t, mode: str = "grid"):
        """First passage ``E(t) = inf{r : D(r) > t}``.

        ``mode="grid"`` returns the first grid point with ``D >= t`` (biased
        up by at most one step); ``mode="linear"`` brackets linearly inside
        that cell.
        """
        t = np.asarray(t, dtype=float)
        if np.any(t > self.D_values[-1]):
            raise ValueError("t beyond the simulated horizon")
        k = np.searchsorted(self.D_values, t, side="left")
        if mode == "grid":
            out = self.r_grid[k]
        elif mode == "linear":
            k = np.maximum(k, 1)
            d0, d1 = self.D_values[k - 1], self.D_values[k]
            frac = np.where(d1 > d0, (t - d0) / np.where(d1 > d0, d1 - d0, 1.0), 1.0)
            out = self.r_grid[k - 1] + self.step * np.clip(frac, 0.0, 1.0)
            out = np.where(t <= 0, 0.0, out)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return float(out) if out.ndim == 0 else out


def _path_until(sub: SubordinatorSpec, horizon: float, h: float, rng: np.random.Generator, chunk: int = 4096):
    blocks = []
    top = 0.0
    while top <= horizon:
        inc = sub.increments(np.full(chunk, h), rng)
        blocks.append(inc)
        top += inc.sum()
    D = np.concatenate([[0.0], np.cumsum(np.concatenate(blocks))])
    last = int(np.searchsorted(D, horizon, side="left"))
    return D[: last + 1]


def simulate_path(sub: SubordinatorSpec, horizon: float, step: float, seed: int) -> SubordinatorPath:
    """Subordinator on ``{0, h, 2h, ...}`` until it first reaches real time ``horizon``."""
    if not (horizon > 0 and step > 0):
        raise ValueError("horizon and step must be positive")
    rng = path_generators(seed, 1)[0]
    D = _path_until(sub, horizon, step, rng)
    return SubordinatorPath(step * np.arange(D.size), D, seed, step)


def sample_inverse(sub: SubordinatorSpec, t: float, n_paths: int, step: float, seed: int) -> np.ndarray:
    """First-passage times ``E(t)`` (grid rounding) on ``n_paths`` independent paths."""
    out = np.empty(n_paths)
    for i, rng in enumerate(path_generators(seed, n_paths)):
        D = _path_until(sub, t, step, rng, chunk=1024)
        out[i] = step * (D.size - 1)
    return out


# ---------------------------------------------------------------------------
# Waiting times


@dataclass
class WaitingTimeSample:
    waiting_times: np.ndarray
    lam: float
    sub: SubordinatorSpec
    n_paths: int
    n_jumps: int
    seed: int
    step: float
    counts: np.ndarray
    partial: bool = False

    def survival(self, t):
        """Empirical ``P[J > t]``."""
        srt = np.sort(self.waiting_times)
        t = np.asarray(t, dtype=float)
        return 1.0 - np.searchsorted(srt, t, side="right") / srt.size

    def to_dict(self) -> dict:
        return {
            "subordinator": self.sub.describe(),
            "lambda": self.lam,
            "n_paths": self.n_paths,
            "n_jumps": self.n_jumps,
            "seed": self.seed,
            "step": self.step,
            "n_waiting_times": int(self.waiting_times.size),
            "partial": self.partial,
            "mean": float(np.mean(self.waiting_times)) if self.waiting_times.size else None,
        }


def _path_waiting_times(sub, lam, n_jumps, h, horizon, rng) -> np.ndarray:
    gam = np.cumsum(rng.exponential(1.0 / lam, n_jumps))
    k = np.floor(gam / h).astype(np.int64)
    frac = gam / h - k
    idx = np.unique(np.concatenate([[0], k, k + 1]))
    inc = sub.increments(h * np.diff(idx).astype(float), rng)
    D = np.concatenate([[0.0], np.cumsum(inc)])
    pos = np.searchsorted(idx, k)
    lo, hi = D[pos], D[pos + 1]
    times = lo + frac * (hi - lo)
    times = times[times <= horizon]
    return np.diff(np.concatenate([[0.0], times]))


def simulate_waiting_times(
    sub: SubordinatorSpec,
    lam: float,
    n_jumps: int,
    n_paths: int,
    seed: int,
    *,
    step: float = 1e-3,
    horizon: float = math.inf,
) -> WaitingTimeSample:
    """First ``n_jumps`` waiting times of ``N(E(t))`` on each of ``n_paths`` paths.

    Jumps whose real time exceeds ``horizon`` are dropped; the sample is
    then flagged ``partial`` and the per-path ``counts`` show the shortfall.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if n_jumps < 1 or n_paths < 1:
        raise ValueError("n_jumps and n_paths must be positive")
    if not step > 0:
        raise ValueError("step must be positive")
    chunks, counts = [], np.empty(n_paths, dtype=np.int64)
    for i, rng in enumerate(path_generators(seed, n_paths)):
        w = _path_waiting_times(sub, lam, n_jumps, step, horizon, rng)
        chunks.append(w)
        counts[i] = w.size
    waits = np.concatenate(chunks) if chunks else np.empty(0)
    return WaitingTimeSample(
        waits, float(lam), sub, n_paths, n_jumps, seed, step, counts, partial=bool(np.any(counts < n_jumps))
    )


def oracle_survival(sample: WaitingTimeSample) -> Callable:
    """``t ↦ u_λ(t)`` for the kernel behind the sample's subordinator."""
    spec = sample.sub.kernel
    return lambda t: relaxation_values(spec, sample.lam, t)


def survival_distance(
    sample: WaitingTimeSample,
    oracle: Callable | None = None,
    t_window: tuple[float, float] = (0.05, 5.0),
    *,
    min_samples: int = 10_000,
) -> float:
    """``sup |P_emp[J > t] - u_λ(t)|`` over ``t_window``.

    The empirical survival is a step function, so the supremum is attained
    at a window edge or at one side of a sample point inside the window.
    """
    w = np.sort(sample.waiting_times)
    if w.size < min_samples:
        raise ValueError(f"need at least {min_samples} waiting times, got {w.size}")
    a, b = t_window
    if not 0 < a < b:
        raise ValueError("window must satisfy 0 < a < b")
    if a > w[-1] or b < w[0]:
        raise ValueError("window lies outside the sample support")
    if oracle is None:
        oracle = oracle_survival(sample)
    pts = np.unique(np.concatenate([[a, b], w[(w >= a) & (w <= b)]]))
    u = np.asarray(oracle(pts), dtype=float)
    n = w.size
    right = 1.0 - np.searchsorted(w, pts, side="right") / n
    left = 1.0 - np.searchsorted(w, pts, side="left") / n
    left = np.where(pts > a, left, right)
    return float(max(np.max(np.abs(right - u)), np.max(np.abs(left - u))))
