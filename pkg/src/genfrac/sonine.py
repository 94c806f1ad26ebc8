"""Conjugate Sonine kernel and the generalized derivative/integral pair.

For an admissible kernel ``k`` the function ``1/(pK(p))`` is again a
Stieltjes function, the Laplace image of a completely monotone ``ϰ`` with
``k * ϰ ≡ 1``. The operators

    D u(t) = d/dt ∫_0^t k(t-τ) u(τ) dτ - k(t) u(0)
    I f(t) = ∫_0^t ϰ(t-s) f(s) ds

are applied to piecewise-linear samples by product integration: on every
grid cell the sample is linear and the kernel enters only through its
iterated primitives, which are evaluated in closed form or by inversion.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from . import kernels as kc
from .kernels import KernelSpec
from .sampled import SampledFunction


@dataclass(eq=False)
class SonineKernel:
    """Conjugate kernel ϰ of an admissible ``parent``.

    Values are cached per time point. The representing measure of ϰ as a
    completely monotone function is not reconstructed; the kernel is only
    available pointwise through its Laplace image ``1/(pK(p))``.
    """

    parent: KernelSpec
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def primitive(self, t, order: int = 0):
        """``order``-fold primitive of ϰ vanishing at 0 (order 0 is ϰ itself)."""
        arr = np.asarray(t, dtype=float)
        if np.any(~(arr > 0)):
            raise ValueError("ϰ is evaluated at t > 0 only")
        closed = self.parent.kappa_integral(arr, order)
        if closed is not None:
            out = np.asarray(closed, dtype=float)
        else:
            spec = self.parent
            out = np.asarray(
                kc.invert_image(spec, lambda p: 1.0 / (p ** (order + 1) * spec.laplace(p)), arr),
                dtype=float,
            )
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        keys = arr.tolist()
        missing = sorted({x for x in keys if x not in self._cache})
        if missing:
            vals = np.atleast_1d(self.primitive(np.array(missing), 0))
            with self._lock:
                self._cache.update(zip(missing, vals.tolist()))
        out = np.array([self._cache[x] for x in keys])
        return float(out[0]) if np.ndim(t) == 0 else out.reshape(np.shape(t))


def build_kappa(spec: KernelSpec) -> SonineKernel:
    """Conjugate kernel of ``spec``; refuses kernels that fail the admissibility gate."""
    kc.require_condition_star(spec)
    return SonineKernel(spec)


def _primitive_with_zero(fn, x: np.ndarray) -> np.ndarray:
    """Evaluate a primitive that vanishes at 0 on ``x >= 0``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    if np.any(pos):
        out[pos] = fn(x[pos])
    return out


def _k_prim(spec: KernelSpec, order: int):
    return lambda x: np.atleast_1d(kc.k_primitive(spec, x, order))


def _kappa_prim(kappa: SonineKernel, order: int):
    return lambda x: np.atleast_1d(kappa.primitive(x, order))


# ---------------------------------------------------------------------------
# Sonine identity


def _log_panel_rule(a: float, b: float, *, width: float = 0.5, nodes: int = 12):
    """Gauss-Legendre rule for ``∫_a^b g(τ) dτ`` in the variable ``log τ``."""
    la, lb = np.log(a), np.log(b)
    n_pan = max(1, int(np.ceil((lb - la) / width)))
    edges = np.linspace(la, lb, n_pan + 1)
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wu = (half[:, None] * w[None, :]).ravel()
    tau = np.exp(u)
    return tau, wu * tau


def convolution_k_kappa(spec: KernelSpec, t: float, *, cut: float = 1e-10) -> float:
    """``(k * ϰ)(t)`` by split product integration.

    The interval is split at ``t/2``. Each half holds one endpoint
    singularity, which is integrated on a geometric grid in ``log τ`` down to
    ``cut·t``; the remaining sliver ``[0, cut·t]`` is taken from the exact
    primitive of the singular factor times the value of the smooth one.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    kappa = SonineKernel(spec)
    half = 0.5 * t
    delta = cut * t
    tau, w = _log_panel_rule(delta, half)
    k = lambda x: np.atleast_1d(kc.eval_k(spec, x))
    left = k(np.array([t]))[0] * kappa.primitive(delta, 1) + np.sum(w * k(t - tau) * kappa(tau))
    right = kappa(t) * kc.k_primitive(spec, delta, 1) + np.sum(w * k(tau) * kappa(t - tau))
    return float(left + right)


def sonine_residual(spec: KernelSpec, t: float) -> float:
    """``(k * ϰ)(t) - 1``; vanishes identically for an admissible kernel."""
    kc.require_condition_star(spec)
    return convolution_k_kappa(spec, t) - 1.0


# ---------------------------------------------------------------------------
# Operators on piecewise-linear samples


def _check_start(u: SampledFunction) -> None:
    if len(u) < 2:
        raise ValueError("need at least two samples")
    if u.grid[0] != 0.0:
        raise ValueError("operator input grid must start at t = 0")


def _out_grid(u: SampledFunction, out_grid) -> np.ndarray:
    if out_grid is None:
        return u.grid
    out = np.asarray(out_grid, dtype=float)
    if out.ndim != 1 or out.size == 0:
        raise ValueError("out_grid must be a non-empty 1-D array")
    if np.any(out < 0) or np.any(out > u.grid[-1] * (1 + 1e-12)):
        raise ValueError("out_grid must lie inside the input grid")
    return out


def _same_uniform(u: SampledFunction, out: np.ndarray) -> bool:
    return out is u.grid and u.is_uniform


def _cells_for(grid: np.ndarray, t: np.ndarray):
    """Cell geometry for outputs ``t``: distances to both cell ends, clipped at 0."""
    s0 = grid[:-1][None, :]
    s1 = np.minimum(grid[1:][None, :], t[:, None])
    active = s0 < t[:, None]
    sig0 = np.where(active, t[:, None] - s0, 0.0)
    sig1 = np.where(active, t[:, None] - s1, 0.0)
    return active, s0, s1, sig0, sig1


def apply_D(spec: KernelSpec, u: SampledFunction, out_grid=None, *, chunk: int = 256) -> SampledFunction:
    """Generalized derivative ``D u`` in the regularized form ``∫ k(t-τ) u'(τ) dτ``.

    ``u`` is read as piecewise linear; the result is exact for such ``u``
    up to the accuracy of ``∫ k``.
    """
    _check_start(u)
    out = _out_grid(u, out_grid)
    grid = u.grid
    slope = np.diff(u.values) / np.diff(grid)
    Ik = _k_prim(spec, 1)
    if _same_uniform(u, out):
        h = grid[1] - grid[0]
        n = grid.size - 1
        prim = np.concatenate([[0.0], Ik(h * np.arange(1, n + 1))])
        w = np.diff(prim)
        vals = np.concatenate([[0.0], np.convolve(slope, w)[:n]])
        return SampledFunction(out, vals, name="D")
    vals = np.empty(out.size)
    for lo in range(0, out.size, chunk):
        t = out[lo : lo + chunk]
        active, _, _, sig0, sig1 = _cells_for(grid, t)
        diff = _primitive_with_zero(Ik, sig0.ravel()) - _primitive_with_zero(Ik, sig1.ravel())
        vals[lo : lo + chunk] = np.sum(np.where(active, diff.reshape(sig0.shape), 0.0) * slope, axis=1)
    return SampledFunction(out, vals, name="D")


def apply_I(
    spec: KernelSpec, f: SampledFunction, out_grid=None, *, chunk: int = 256, kappa: SonineKernel | None = None
) -> SampledFunction:
    """Generalized integral ``I f(t) = ∫_0^t ϰ(t-s) f(s) ds`` for piecewise-linear ``f``.

    On a cell where ``f`` runs linearly from ``f0`` to ``f1`` the integral is
    ``f0·A + f1·B`` with ``A = J1(σ0) - ΔJ2/H`` and ``B = ΔJ2/H - J1(σ1)``,
    where ``J1, J2`` are the first two primitives of ϰ and ``σ`` the lag.
    """
    _check_start(f)
    if kappa is None:
        kappa = build_kappa(spec)
    out = _out_grid(f, out_grid)
    grid, fv = f.grid, f.values
    J1, J2 = _kappa_prim(kappa, 1), _kappa_prim(kappa, 2)
    if _same_uniform(f, out):
        h = grid[1] - grid[0]
        n = grid.size - 1
        x = h * np.arange(1, n + 1)
        j1 = np.concatenate([[0.0], J1(x)])
        j2 = np.concatenate([[0.0], J2(x)])
        dj2 = np.diff(j2) / h
        A = j1[1:] - dj2
        B = dj2 - j1[:-1]
        vals = np.concatenate([[0.0], np.convolve(fv[:-1], A)[:n] + np.convolve(fv[1:], B)[:n]])
        return SampledFunction(out, vals, name="I")
    vals = np.empty(out.size)
    for lo in range(0, out.size, chunk):
        t = out[lo : lo + chunk]
        active, s0, s1, sig0, sig1 = _cells_for(grid, t)
        H = np.where(active, s1 - s0, 1.0)
        f0 = np.broadcast_to(fv[:-1], sig0.shape)
        f1 = f(s1)
        j1a = _primitive_with_zero(J1, sig0.ravel()).reshape(sig0.shape)
        j1b = _primitive_with_zero(J1, sig1.ravel()).reshape(sig0.shape)
        dj2 = (
            _primitive_with_zero(J2, sig0.ravel()) - _primitive_with_zero(J2, sig1.ravel())
        ).reshape(sig0.shape) / H
        cell = f0 * (j1a - dj2) + f1 * (dj2 - j1b)
        vals[lo : lo + chunk] = np.sum(np.where(active, cell, 0.0), axis=1)
    return SampledFunction(out, vals, name="I")


def apply_DI(spec: KernelSpec, f: SampledFunction, *, kappa: SonineKernel | None = None) -> SampledFunction:
    """``D I f`` on the grid of ``f`` with the weak singularity taken out.

    ``I f = f(0) J1 + I(f - f(0))`` where ``J1 = ∫_0^t ϰ`` behaves like ϰ's
    primitive near 0 and is badly represented by a piecewise-linear
    interpolant. Since ``D J1 = d/dt (k * ϰ * 1) = 1`` exactly, only the regular
    remainder goes through the discrete ``D``.
    """
    _check_start(f)
    if kappa is None:
        kappa = build_kappa(spec)
    g = apply_I(spec, f, kappa=kappa)
    f0 = f.values[0]
    j1 = _primitive_with_zero(_kappa_prim(kappa, 1), f.grid)
    rest = apply_D(spec, SampledFunction(f.grid, g.values - f0 * j1))
    return SampledFunction(f.grid, rest.values + f0, name="DI")


def roundtrip_residuals(
    spec: KernelSpec,
    f: SampledFunction,
    u: SampledFunction,
    *,
    window: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """Residuals ``max|D I f - f|`` and ``max|I D u - (u - u(0))|`` over ``window``.

    ``D I f`` is formed by :func:`apply_DI`. The default window is the whole
    grid except ``t = 0``, where both sides vanish or agree by construction.
    """
    kc.require_condition_star(spec)
    kappa = build_kappa(spec)
    if window is None:
        window = (0.0, f.grid[-1])
    di = apply_DI(spec, f, kappa=kappa)
    idu = apply_I(spec, apply_D(spec, u), kappa=kappa)
    mask_f = (f.grid >= window[0]) & (f.grid <= window[1]) & (f.grid > 0)
    mask_u = (u.grid >= window[0]) & (u.grid <= window[1]) & (u.grid > 0)
    if not mask_f.any() or not mask_u.any():
        raise ValueError("residual window contains no grid points")
    res_di = float(np.max(np.abs(di.values - f.values)[mask_f]))
    res_id = float(np.max(np.abs(idu.values - (u.values - u.values[0]))[mask_u]))
    return res_di, res_id
