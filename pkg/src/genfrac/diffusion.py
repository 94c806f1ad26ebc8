"""Fundamental solution of ``D_t w = Δ w`` by subordination.

With ``q = pK(p)`` the function ``p ↦ e^{-s q}`` is completely monotone in
``p``, and ``K(p) e^{-s q}`` is the Laplace image of a probability density
``G(s, t)`` in ``s``. The fundamental solution is the Gaussian heat kernel
mixed over this operational time,

    Z(t, x) = ∫_0^∞ (4πs)^{-n/2} e^{-|x|²/4s} G(s, t) ds,

and its Laplace image is ``K (2π)^{-n/2} (√q/|x|)^{n/2-1} K_{n/2-1}(|x|√q)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special as sps

from . import kernels as kc
from . import laplace as lx
from .kernels import ConditionReport, KernelSpec
from .sampled import SampledFunction
from .special import bessel_K
from .sonine import SonineKernel

__all__ = [
    "SubordinationProfile",
    "HeatSolution",
    "g_sp",
    "G_profile",
    "subordination_profile",
    "Z_tilde",
    "Z_profile",
    "bessel_K",
    "solve_heat",
    "verify_LT_solution",
    "holder_constant",
]

log = logging.getLogger(__name__)

DIMENSIONS = (1, 2, 3)
# Relative size of G (times s) below which the s-integral is cut.
TAIL_CUT = 1e-14


def _check_n(n: int) -> None:
    if n not in DIMENSIONS:
        raise ValueError(f"dimension must be one of {DIMENSIONS}, got {n}")


def g_sp(spec: KernelSpec, s, p):
    """``K(p) e^{-s p K(p)}``: Laplace image in ``t`` of ``G(s, ·)``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    K = kc.laplace_K(spec, p)
    expo = -s * np.asarray(p, dtype=float) * K
    with np.errstate(under="ignore"):
        out = np.where(expo < -700.0, 0.0, K * np.exp(np.maximum(expo, -700.0)))
    return float(out) if out.ndim == 0 else out


def _saddle_scale(spec: KernelSpec, s: np.ndarray, t: float, cfg: lx.Talbot) -> np.ndarray:
    """Talbot scale per ``s`` so that the contour passes the real saddle of ``pt - s q(p)``.

    The saddle solves ``q'(p) = t/s``; ``q`` is a Bernstein function, so
    ``q'`` decreases and bisection in ``log p`` applies. Without this shift
    the fixed contour sees ``e^{-s q}`` grow where ``Re q < 0`` and the rule
    breaks down in the tail of ``G``.
    """
    base = cfg.scale * cfg.nodes / t
    scale = np.full(s.shape, cfg.scale)
    need = s > 0
    if not np.any(need):
        return scale

    def dq(p):
        a, b = p * 1.001, p / 1.001
        return (a * spec.laplace(a) - b * spec.laplace(b)) / (a - b)

    target = t / s[need]
    far = dq(np.full(target.shape, base)) > target
    if not np.any(far):
        return scale
    tgt = target[far]
    lo = np.full(tgt.shape, math.log(base))
    hi = np.full(tgt.shape, math.log(base) + 80.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        right = dq(np.exp(mid)) > tgt
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)
    idx = np.flatnonzero(need)[far]
    scale[idx] = np.exp(0.5 * (lo + hi)) * t / cfg.nodes
    return scale


def _G_at(spec: KernelSpec, s: np.ndarray, t: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    cfg = kc.inversion_config(spec)
    with np.errstate(under="ignore", over="ignore", invalid="ignore"):
        if isinstance(cfg, lx.Talbot):
            scale = _saddle_scale(spec, flat, t, cfg)
            p0, c0 = lx.talbot_contour(t, cfg)
            # the contour scales linearly with the Talbot scale parameter
            ratio = scale / cfg.scale
            p = ratio[:, None] * p0[None, :]
            c = ratio[:, None] * c0[None, :]
            K = spec.laplace(p)
            vals = (c * K * np.exp(p * t - flat[:, None] * p * K)).real.sum(axis=1)
        else:
            p, w = lx.stehfest_rule(t, cfg)
            K = spec.laplace(p)
            vals = np.exp(-np.multiply.outer(flat, p * K)) @ (w * K)
    if not np.all(np.isfinite(vals)):
        raise ArithmeticError(f"non-finite subordination density at t={t}")
    return vals.reshape(s.shape)


def G_profile(spec: KernelSpec, s, t: float):
    """Subordination density ``G(s, t)`` at operational times ``s >= 0``.

    The image ``K e^{-sq}`` shares its inversion nodes across ``s``, so the
    whole column is one matrix product.
    """
    kc.require_condition_star(spec)
    if not t > 0:
        raise ValueError("t must be positive")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    out = _G_at(spec, s, float(t))
    return float(out) if out.ndim == 0 else out


@dataclass
class SubordinationProfile:
    spec: KernelSpec
    s_grid: np.ndarray
    t_grid: np.ndarray
    G_values: np.ndarray  # shape (len(t_grid), len(s_grid))
    mass: np.ndarray
    mean: np.ndarray

    def min_value(self) -> float:
        return float(self.G_values.min())


# ---------------------------------------------------------------------------
# Quadrature in σ = √s


def _sigma_rule(spec: KernelSpec, t: float, sigma_min: float, *, ratio: float = 1.4, nodes: int = 16):
    """Gauss-Legendre panels in ``σ = √s`` covering the bulk of ``G(·, t)``.

    Panels are geometric from ``sigma_min`` up to a cut where ``s·G(s, t)``
    has fallen below ``TAIL_CUT`` of its largest value, plus one panel on
    ``[0, sigma_min]``. Returns nodes ``σ``, weights for ``dσ`` and ``G(σ², t)``.
    """
    scale = math.sqrt(float(SonineKernel(spec).primitive(t, 1)))
    hi = 6.0 * scale
    ref = None
    for _ in range(60):
        probe = np.linspace(0.0, hi, 65)
        g = _G_at(spec, probe**2, t)
        weight = np.abs(g) * np.maximum(probe, scale) ** 2
        ref = weight.max()
        if np.all(weight[-8:] < TAIL_CUT * ref):
            break
        hi *= 1.5
    else:
        raise ArithmeticError("subordination density does not decay")
    sigma_min = min(sigma_min, 1e-3 * scale)
    n_pan = max(1, int(math.ceil(math.log(hi / sigma_min) / math.log(ratio))))
    edges = np.concatenate([[0.0], np.geomspace(sigma_min, hi, n_pan + 1)])
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    sig = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return sig, wts, _G_at(spec, sig**2, t)


def subordination_profile(spec: KernelSpec, t_grid, s_grid=None) -> SubordinationProfile:
    """Tabulate ``G(s, t)`` and report its mass and mean for every ``t``.

    Mass and mean are computed on an internal adaptive rule, independent of
    ``s_grid``; the mean should equal ``∫_0^t ϰ``.
    """
    kc.require_condition_star(spec)
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(t_grid <= 0):
        raise ValueError("t must be positive")
    mass, mean = [], []
    for t in t_grid:
        sig, w, g = _sigma_rule(spec, t, 1.0)
        mass.append(float(np.sum(w * 2 * sig * g)))
        mean.append(float(np.sum(w * 2 * sig**3 * g)))
    if s_grid is None:
        top = max(10.0 * m for m in mean)
        s_grid = np.linspace(0.0, top, 201)
    s_grid = np.asarray(s_grid, dtype=float)
    G = np.vstack([_G_at(spec, s_grid, t) for t in t_grid])
    return SubordinationProfile(spec, s_grid, t_grid, G, np.array(mass), np.array(mean))


# ---------------------------------------------------------------------------
# Laplace-domain kernel


def _bessel_form(K, q, r: np.ndarray, n: int, complex_ok: bool):
    root = np.sqrt(q)
    z = r * root
    with np.errstate(under="ignore", over="ignore", invalid="ignore"):
        if n == 1:
            return K / (2.0 * root) * np.exp(-z)
        if n == 3:
            return K * np.exp(-z) / (4.0 * np.pi * r)
        kz = sps.kv(0, z) if complex_ok else bessel_K(0, z)
        return K / (2.0 * np.pi) * kz


def Z_tilde(spec: KernelSpec, p: float, x, n: int = 1, method: str = "closed"):
    """Laplace image ``Z̃(p, x)`` of the fundamental solution.

    Parameters
    ----------
    method : {"closed", "integral"}
        ``"closed"`` uses the McDonald-function form; ``"integral"``
        integrates ``K (4πs)^{-n/2} e^{-|x|²/4s - sq}`` over ``s``.
    """
    _check_n(n)
    kc.require_condition_star(spec)
    x = np.asarray(x, dtype=float)
    r = np.abs(x)
    if np.any(r == 0) and n > 1:
        raise ValueError("Z̃ is singular at x = 0 for n >= 2")
    if n == 1 and np.any(r == 0) and method == "integral":
        raise ValueError("the s-integral route needs x != 0")
    K = kc.laplace_K(spec, p)
    q = p * K
    if method == "closed":
        out = np.asarray(_bessel_form(K, q, r, n, False), dtype=float)
    elif method == "integral":
        def one(rv):
            # σ = √s; the integrand peaks near σ² = r/(2√q).
            f = lambda sg: 2 * sg * (4 * np.pi * sg * sg) ** (-n / 2) * math.exp(-rv * rv / (4 * sg * sg) - sg * sg * q)
            peak = math.sqrt(rv / (2 * math.sqrt(q)))
            a, _ = integrate.quad(f, 0.0, peak, epsabs=0.0, epsrel=1e-12, limit=200)
            b, _ = integrate.quad(f, peak, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
            return K * (a + b)

        out = np.array([one(v) for v in r.ravel()]).reshape(r.shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Fundamental solution


@dataclass
class HeatSolution:
    spec: KernelSpec
    n: int
    t: float
    x_grid: np.ndarray
    Z_values: np.ndarray
    report: ConditionReport | None = None
    w_values: np.ndarray | None = None
    w0: SampledFunction | None = None
    holder: tuple[float, float] | None = None
    mass: float | None = None
    coverage_deficiency: float | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kernel": self.spec.label,
            "n": self.n,
            "t": self.t,
            "mass": self.mass,
            "min_Z": float(np.min(self.Z_values)),
            "coverage_deficiency": self.coverage_deficiency,
            "holder": None if self.holder is None else {"C": self.holder[0], "gamma": self.holder[1]},
            "warnings": list(self.warnings),
            "condition_report": None if self.report is None else self.report.to_dict(),
        }


def _radial_mass(x: np.ndarray, Z: np.ndarray, n: int) -> float:
    """``∫ Z dx`` from samples on a 1-D grid (radial for ``n >= 2``)."""
    if n == 1:
        return float(np.trapezoid(Z, x))
    r = np.abs(x)
    order = np.argsort(r)
    r, Z = r[order], Z[order]
    surface = 2.0 * np.pi * r if n == 2 else 4.0 * np.pi * r**2
    return float(np.trapezoid(surface * Z, r))


def _Z_subordination(spec: KernelSpec, t: float, r: np.ndarray, n: int) -> np.ndarray:
    pos = r[r > 0]
    floor = 0.1 * pos.min() if pos.size else 1.0
    sig, w, g = _sigma_rule(spec, t, floor)
    # (4πs)^{-n/2} e^{-r²/4s} ds with s = σ², ds = 2σ dσ
    with np.errstate(under="ignore"):
        gauss = np.exp(-np.divide.outer(r**2, 4 * sig**2))
    factor = 2.0 * sig * (4.0 * np.pi * sig**2) ** (-n / 2)
    return gauss @ (w * factor * g)


def _Z_laplace(spec: KernelSpec, t: float, r: np.ndarray, n: int) -> np.ndarray:
    p, w = kc.inversion_rule(spec, t)
    K = spec.laplace(p)
    img = _bessel_form(K[None, :], (p * K)[None, :], r[:, None], n, np.iscomplexobj(p))
    return (img * w[None, :]).real.sum(axis=1)


def Z_profile(spec: KernelSpec, t: float, x_grid, n: int = 1, method: str = "subordination") -> HeatSolution:
    """Fundamental solution ``Z(t, ·)`` on ``x_grid``.

    ``x`` is the signed coordinate for ``n = 1`` and the radius for
    ``n >= 2``, where ``x = 0`` is rejected. ``method`` selects the
    subordination integral or inversion of the closed-form image.
    """
    _check_n(n)
    report = kc.require_condition_star(spec)
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.asarray(x_grid, dtype=float)
    r = np.abs(x)
    if n > 1 and np.any(r == 0):
        raise ValueError("x = 0 is a singular point for n >= 2")
    if method == "subordination":
        Z = _Z_subordination(spec, float(t), r, n)
    elif method == "laplace":
        Z = _Z_laplace(spec, float(t), r, n)
    else:
        raise ValueError(f"unknown method {method!r}")
    sol = HeatSolution(spec, n, float(t), x, Z, report)
    if x.size > 1:
        sol.mass = _radial_mass(x, Z, n)
    if np.min(Z) < -1e-8:
        sol.warnings.append(f"Z has negative values down to {np.min(Z):.3g}")
    return sol


# ---------------------------------------------------------------------------
# Cauchy problem, n = 1


def holder_constant(w0: SampledFunction, gamma: float = 1.0) -> float:
    """``max |w0(x) - w0(y)| / |x - y|^γ`` over all sample pairs."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    x, v = w0.grid, w0.values
    best = 0.0
    for lo in range(0, x.size, 512):
        dx = np.abs(x[lo : lo + 512, None] - x[None, :])
        dv = np.abs(v[lo : lo + 512, None] - v[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dx > 0, dv / dx**gamma, 0.0)
        best = max(best, float(ratio.max()))
    return best


def _ramp_gauss(d: np.ndarray, sd: np.ndarray) -> np.ndarray:
    """``E (d + sd·N)_+`` for a standard normal ``N``."""
    z = d / sd
    return d * sps.ndtr(z) + sd * np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)


def solve_heat(
    spec: KernelSpec,
    w0: SampledFunction,
    t: float,
    n: int = 1,
    *,
    holder: tuple[float, float] | None = None,
    gamma: float = 1.0,
    coverage_tol: float = 1e-3,
) -> HeatSolution:
    """``w(t, x) = ∫ Z(t, x-ξ) w0(ξ) dξ`` on the (uniform) grid of ``w0``.

    ``w0`` is read as piecewise linear and extended by constants beyond its
    grid. Writing it as ``w0(a) + Σ Δ_j L_j`` with unit ramps ``L_j`` over
    the cells, each ramp is smoothed by every Gaussian of the mixture in
    closed form, so constants are reproduced exactly and the result obeys
    ``min w0 ≤ w ≤ max w0`` up to quadrature error in ``s``.

    Only ``n = 1`` is supported. When less than ``1 - coverage_tol`` of the
    mass of ``Z(t, ·)`` lies within the half-width of the grid, the grid
    does not resolve the solution away from its edges and a warning is
    recorded.
    """
    if n != 1:
        raise ValueError("solve_heat supports n = 1 only")
    report = kc.require_condition_star(spec)
    if not t > 0:
        raise ValueError("t must be positive")
    x = w0.grid
    if not w0.is_uniform or x.size < 3:
        raise ValueError("solve_heat needs w0 on a uniform grid with at least 3 points")
    if not np.all(np.isfinite(w0.values)):
        raise ValueError("w0 must be bounded")
    h = x[1] - x[0]
    N = x.size
    sig, wts, g = _sigma_rule(spec, float(t), h)
    mix = wts * 2.0 * sig * g  # weights of the Gaussian mixture in s = σ²
    sd = np.sqrt(2.0) * sig  # the heat kernel at time s has variance 2s
    offsets = h * np.arange(-(N - 1), N)
    # Gaussian-smoothed unit ramp from 0 to h, centred at offset d
    with np.errstate(under="ignore"):
        ramp = (_ramp_gauss(offsets[:, None], sd[None, :]) - _ramp_gauss(offsets[:, None] - h, sd[None, :])) / h
    C = ramp @ mix
    delta = np.diff(w0.values)
    # w(x_i) = w0[0] + Σ_j Δ_j C(x_i - x_j)
    w = w0.values[0] + np.convolve(delta, C)[N - 1 : 2 * N - 1]
    Z_grid = _Z_subordination(spec, float(t), x - x[0] - 0.5 * (x[-1] - x[0]), 1)
    half = 0.5 * (x[-1] - x[0])
    inside = float(np.sum(mix * sps.erf(half / (2.0 * sig))))
    sol = HeatSolution(
        spec, 1, float(t), x, Z_grid, report, w_values=w, w0=w0,
        holder=holder or (holder_constant(w0, gamma), gamma),
        mass=float(np.sum(mix)), coverage_deficiency=1.0 - inside,
    )
    if sol.coverage_deficiency > coverage_tol:
        msg = f"grid half-width {half:g} holds only {inside:.6f} of the mass of Z(t, .)"
        sol.warnings.append(msg)
        log.warning(msg)
    lo, hi = w0.values.min(), w0.values.max()
    if np.any(w < lo - 1e-8 * max(1, abs(lo))) or np.any(w > hi + 1e-8 * max(1, abs(hi))):
        sol.warnings.append("maximum principle violated beyond quadrature tolerance")
    return sol


def _laplace_smoothed_ramp(d: np.ndarray, c: float) -> np.ndarray:
    """``E (d + Y)_+`` for ``Y`` with density ``(c/2) e^{-c|y|}``."""
    with np.errstate(over="ignore", under="ignore"):
        return np.where(d >= 0, d + np.exp(-c * np.abs(d)) / (2 * c), np.exp(-c * np.abs(d)) / (2 * c))


def lt_solution(spec: KernelSpec, w0: SampledFunction, p: float) -> np.ndarray:
    """``w̃(p, x) = ∫ Z̃(p, x-ξ) w0(ξ) dξ`` (n = 1) on the grid of ``w0``.

    For ``n = 1``, ``p Z̃(p, ·)`` is the two-sided exponential density with
    rate ``√q``; against piecewise-linear ``w0`` with constant extension the
    integral is evaluated in closed form.
    """
    K = kc.laplace_K(spec, p)
    c = math.sqrt(p * K)
    x = w0.grid
    hcell = np.diff(x)
    delta = np.diff(w0.values)
    out = np.full(x.size, w0.values[0], dtype=float)
    for lo in range(0, x.size, 512):
        d = x[lo : lo + 512, None] - x[None, :-1]
        ramp = (_laplace_smoothed_ramp(d, c) - _laplace_smoothed_ramp(d - hcell, c)) / hcell
        out[lo : lo + 512] += ramp @ delta
    return out / p


def verify_LT_solution(spec: KernelSpec, w0: SampledFunction, p: float, n: int = 1) -> float:
    """Normalized residual ``max |Δw̃ - pK w̃ + K w0| / max |K w0|`` at interior nodes.

    ``Δ`` is the three-point second difference on the grid of ``w0``.
    """
    if n != 1:
        raise ValueError("verify_LT_solution supports n = 1 only")
    kc.require_condition_star(spec)
    if not p > 0:
        raise ValueError("p must be positive")
    if len(w0) < 3:
        raise ValueError("need at least 3 samples")
    K = kc.laplace_K(spec, p)
    wt = lt_solution(spec, w0, p)
    x = w0.grid
    hl, hr = x[1:-1] - x[:-2], x[2:] - x[1:-1]
    lap = 2.0 * (hl * wt[2:] - (hl + hr) * wt[1:-1] + hr * wt[:-2]) / (hl * hr * (hl + hr))
    res = lap - p * K * wt[1:-1] + K * w0.values[1:-1]
    scale = np.max(np.abs(K * w0.values))
    if scale == 0:
        return float(np.max(np.abs(res)))
    return float(np.max(np.abs(res)) / scale)
