"""Memory kernels, their Laplace transforms, and admissibility certificates.

A kernel ``k`` enters the calculus only through its Laplace transform
``K(p) = ∫ e^{-pt} k(t) dt``. The built-in families carry closed forms for
``K`` (real and complex ``p``) and, where known, for ``k`` and its iterated
primitives; everything else is recovered by numerical inversion.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from . import laplace as lx
from .sampled import SampledFunction


class ConditionStarError(ValueError):
    """The kernel fails the admissibility condition required by an operation."""


class KernelSpec:
    """Base class of all memory kernels.

    Subclasses implement :meth:`laplace` and optionally the closed forms
    :meth:`k_integral` / :meth:`kappa_integral`, which return ``None`` when
    no closed form exists.
    """

    family: str = "abstract"
    supports_complex: bool = True

    @property
    def label(self) -> str:
        return self.family

    def laplace(self, p):
        raise NotImplementedError

    def k_integral(self, t: np.ndarray, order: int = 0):
        """``order``-fold primitive of ``k`` vanishing at 0 (order 0 is ``k``)."""
        return None

    def kappa_integral(self, t: np.ndarray, order: int = 0):
        """Same for the conjugate kernel ϰ."""
        return None

    def to_dict(self) -> dict:
        raise TypeError(f"{type(self).__name__} kernels are not serializable")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _check_open_unit(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class Caputo(KernelSpec):
    """``k(t) = t^{-α}/Γ(1-α)``, ``K(p) = p^{α-1}``."""

    alpha: float
    family = "caputo"

    def __post_init__(self) -> None:
        _check_open_unit("alpha", self.alpha)

    @property
    def label(self) -> str:
        return f"caputo:{self.alpha:g}"

    def laplace(self, p):
        return np.asarray(p) ** (self.alpha - 1.0)

    def k_integral(self, t, order=0):
        e = order - self.alpha
        return np.asarray(t, dtype=float) ** e / special.gamma(e + 1.0)

    def kappa_integral(self, t, order=0):
        e = self.alpha - 1.0 + order
        return np.asarray(t, dtype=float) ** e / special.gamma(e + 1.0)

    def to_dict(self):
        return {"family": "caputo", "alpha": self.alpha}


@dataclass(frozen=True)
class DistributedOrder(KernelSpec):
    """Finite mixture ``K(p) = Σ w_i p^{α_i - 1}`` of Caputo kernels."""

    atoms: tuple[tuple[float, float], ...]
    family = "distributed"

    def __post_init__(self) -> None:
        atoms = tuple((float(a), float(w)) for a, w in self.atoms)
        if not atoms:
            raise ValueError("distributed-order kernel needs at least one atom")
        for a, w in atoms:
            _check_open_unit("alpha", a)
            if not w > 0:
                raise ValueError(f"atom weights must be positive, got {w}")
        object.__setattr__(self, "atoms", atoms)

    @property
    def label(self) -> str:
        return "dist:" + ",".join(f"{a:g}@{w:g}" for a, w in self.atoms)

    def laplace(self, p):
        p = np.asarray(p)
        return sum(w * p ** (a - 1.0) for a, w in self.atoms)

    def k_integral(self, t, order=0):
        t = np.asarray(t, dtype=float)
        return sum(w * t ** (order - a) / special.gamma(order - a + 1.0) for a, w in self.atoms)

    def to_dict(self):
        return {"family": "distributed", "atoms": [list(a) for a in self.atoms]}


@dataclass(frozen=True)
class LogBernstein(KernelSpec):
    """``K(p) = log(1 + p^β)/p``; ``p K(p)`` is a complete Bernstein function."""

    beta: float
    family = "log_bernstein"

    def __post_init__(self) -> None:
        _check_open_unit("beta", self.beta)

    @property
    def label(self) -> str:
        return f"log:{self.beta:g}"

    def laplace(self, p):
        p = np.asarray(p)
        return np.log1p(p**self.beta) / p

    def to_dict(self):
        return {"family": "log_bernstein", "beta": self.beta}


@dataclass(frozen=True)
class BoxKernel(KernelSpec):
    """Indicator of ``[0, 1]``. Fails the admissibility condition; kept as a control."""

    family = "box"

    @property
    def label(self) -> str:
        return "box"

    def laplace(self, p):
        p = np.asarray(p)
        return -np.expm1(-p) / p

    def k_integral(self, t, order=0):
        t = np.asarray(t, dtype=float)
        if order == 0:
            return np.where(t <= 1.0, 1.0, 0.0)
        if order == 1:
            return np.minimum(t, 1.0)
        if order == 2:
            return np.where(t <= 1.0, 0.5 * t * t, t - 0.5)
        return None

    def to_dict(self):
        return {"family": "box"}


@dataclass(frozen=True, eq=False)
class CustomKernel(KernelSpec):
    """Kernel given by a user-supplied Laplace transform (in-process only).

    ``closed_k`` optionally gives ``k(t)`` directly. Complex support is
    probed once; without it inversions fall back to Gaver-Stehfest.
    """

    laplace_K: Callable
    closed_k: Callable | None = None
    name: str = "custom"
    family = "custom"
    supports_complex: bool = field(init=False, default=False)

    def __post_init__(self) -> None:
        try:
            with np.errstate(all="ignore"), warnings.catch_warnings():
                warnings.simplefilter("ignore")
                z = np.asarray(self.laplace_K(np.array([1.0 + 1.0j, 2.0 - 0.5j])), dtype=complex)
            ok = z.shape == (2,) and bool(np.all(np.isfinite(z))) and abs(z[0].imag) > 0
        except Exception:
            ok = False
        object.__setattr__(self, "supports_complex", ok)

    @property
    def label(self) -> str:
        return self.name

    def laplace(self, p):
        return np.asarray(self.laplace_K(p))

    def k_integral(self, t, order=0):
        if order == 0 and self.closed_k is not None:
            return np.asarray(self.closed_k(np.asarray(t, dtype=float)), dtype=float)
        return None


BUILTIN_ADMISSIBLE: tuple[KernelSpec, ...] = (
    Caputo(0.5),
    LogBernstein(0.5),
    DistributedOrder(((0.3, 0.5), (0.8, 0.5))),
)


def kernel_from_dict(data: dict) -> KernelSpec:
    """Build a kernel from its JSON object form.

    Schema: ``{"family": "caputo", "alpha": a}``,
    ``{"family": "distributed", "atoms": [[alpha, weight], ...]}``,
    ``{"family": "log_bernstein", "beta": b}``, ``{"family": "box"}``.
    """
    if not isinstance(data, dict) or "family" not in data:
        raise ValueError("kernel object must contain a 'family' field")
    fam = data["family"]
    allowed = {
        "caputo": {"alpha"},
        "distributed": {"atoms"},
        "log_bernstein": {"beta"},
        "box": set(),
    }
    if fam == "custom":
        raise ValueError("custom kernels are in-process only and cannot be deserialized")
    if fam not in allowed:
        raise ValueError(f"unknown kernel family {fam!r}")
    extra = set(data) - allowed[fam] - {"family"}
    missing = allowed[fam] - set(data)
    if extra:
        raise ValueError(f"unknown field(s) for {fam}: {sorted(extra)}")
    if missing:
        raise ValueError(f"missing field(s) for {fam}: {sorted(missing)}")
    if fam == "caputo":
        return Caputo(float(data["alpha"]))
    if fam == "log_bernstein":
        return LogBernstein(float(data["beta"]))
    if fam == "box":
        return BoxKernel()
    return DistributedOrder(tuple((float(a), float(w)) for a, w in data["atoms"]))


def parse_kernel(text: str) -> KernelSpec:
    """Parse ``caputo:0.5``, ``log:0.5``, ``dist:0.3@1,0.8@2``, ``box`` or a JSON object."""
    text = text.strip()
    if text.startswith("{"):
        return kernel_from_dict(json.loads(text))
    head, _, arg = text.partition(":")
    head = head.lower()
    try:
        if head == "caputo":
            return Caputo(float(arg))
        if head in ("log", "log_bernstein"):
            return LogBernstein(float(arg))
        if head == "box" and not arg:
            return BoxKernel()
        if head in ("dist", "distributed"):
            atoms = []
            for item in arg.split(","):
                a, _, w = item.partition("@")
                atoms.append((float(a), float(w) if w else 1.0))
            return DistributedOrder(tuple(atoms))
    except ValueError as exc:
        raise ValueError(f"bad kernel {text!r}: {exc}") from None
    raise ValueError(f"unrecognised kernel {text!r}")


def laplace_K(spec: KernelSpec, p):
    """Evaluate ``K(p)`` for real ``p > 0`` (scalar or array)."""
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("K(p) is defined for p > 0 only")
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        val = np.asarray(spec.laplace(arr), dtype=float)
    if np.any(~np.isfinite(val)) or np.any(val <= 0):
        raise ValueError(f"K(p) of {spec.label} is not finite and positive on the probe points")
    return float(val) if val.ndim == 0 else val


def inversion_config(spec: KernelSpec) -> lx.InversionConfig:
    return lx.DEFAULT_TALBOT if spec.supports_complex else lx.DEFAULT_STEHFEST


def invert_image(spec: KernelSpec, F: Callable, t, cfg: lx.InversionConfig | None = None):
    """Invert an image built from ``spec``, picking a rule the kernel supports."""
    if cfg is None:
        cfg = inversion_config(spec)
    if isinstance(cfg, lx.Talbot) and not spec.supports_complex:
        raise lx.InversionError(f"{spec.label} cannot be evaluated at complex points")
    return lx.invert(F, t, cfg)


def inversion_rule(spec: KernelSpec, t: float, cfg: lx.InversionConfig | None = None):
    """Nodes and weights ``(p, w)`` with ``f(t) ≈ Re Σ w F(p)`` for images built from ``spec``."""
    if cfg is None:
        cfg = inversion_config(spec)
    if isinstance(cfg, lx.Talbot):
        if not spec.supports_complex:
            raise lx.InversionError(f"{spec.label} cannot be evaluated at complex points")
        return lx.talbot_rule(t, cfg)
    return lx.stehfest_rule(t, cfg)


def _positive_times(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("kernel evaluation needs t > 0")
    return arr


def k_primitive(spec: KernelSpec, t, order: int = 0, cfg=None):
    """``order``-fold primitive of ``k`` at ``t > 0`` (inverts ``K(p)/p^order``)."""
    arr = _positive_times(t)
    closed = spec.k_integral(arr, order)
    if closed is not None:
        out = np.asarray(closed, dtype=float)
    else:
        out = np.asarray(
            invert_image(spec, lambda p: spec.laplace(p) / p**order, arr, cfg), dtype=float
        )
    return float(out) if out.ndim == 0 else out


def eval_k(spec: KernelSpec, t, cfg=None):
    """Kernel values ``k(t)``, closed form when available, else by inversion."""
    return k_primitive(spec, t, 0, cfg)


# ---------------------------------------------------------------------------
# Certificates


def divided_differences(x: np.ndarray, y: np.ndarray, max_order: int, eps: float):
    """Divided-difference tables with matching rounding envelopes.

    The envelope of order ``n`` bounds how relative perturbations of size
    ``eps·max|y|`` in the samples propagate into the order-``n`` table.
    """
    x = np.asarray(x, dtype=float)
    table = [np.asarray(y, dtype=float)]
    noise = [np.full(x.size, eps * np.max(np.abs(y)))]
    for n in range(1, max_order + 1):
        span = x[n:] - x[:-n]
        table.append(np.diff(table[-1]) / span)
        noise.append((noise[-1][1:] + noise[-1][:-1]) / span)
    return table, noise


def _cm_violation(x, y, max_order, eps) -> tuple[int, float] | None:
    table, noise = divided_differences(x, y, max_order, eps)
    for n, (d, e) in enumerate(zip(table, noise)):
        signed = (-1) ** n * d
        bad = signed < -e
        if np.any(bad):
            i = int(np.argmax(bad))
            return n, float(signed[i])
    return None


def complete_monotonicity_check(
    f: SampledFunction, max_order: int = 6, *, eps: float = 1e-9
) -> bool:
    """Sign test ``(-1)^n f[x_i..x_{i+n}] >= -tol`` for ``n = 0..max_order``."""
    if not 0 <= max_order <= 8:
        raise ValueError("max_order must be in [0, 8]")
    if len(f) < max_order + 1:
        raise ValueError(f"grid of {len(f)} points is too short for order {max_order}")
    return _cm_violation(f.grid, f.values, max_order, eps) is None


@dataclass(frozen=True)
class Probe:
    quantity: str
    p: float
    observed: float
    expected: str
    passed: bool

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "p": self.p,
            "observed": self.observed,
            "expected": self.expected,
            "passed": self.passed,
        }


@dataclass
class ConditionReport:
    passed: bool
    probes: list[Probe]
    monotonicity_orders_checked: int
    notes: str = ""
    kernel: str = ""

    def failures(self) -> list[Probe]:
        return [pr for pr in self.probes if not pr.passed]

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "passed": self.passed,
            "monotonicity_orders_checked": self.monotonicity_orders_checked,
            "notes": self.notes,
            "probes": [pr.to_dict() for pr in self.probes],
        }


def _tends_to_infinity(values: Sequence[float], min_ratio: float = 0.1) -> bool:
    """Trend test on samples ordered towards the limit point.

    Increments must stay positive and must not shrink faster than
    ``min_ratio`` between the first and last step; a sequence converging
    to a finite limit at a power rate shrinks its increments geometrically.
    """
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return bool(np.all(np.diff(v[np.isfinite(v)]) > 0)) and not np.isfinite(v[-1])
    d = np.diff(v)
    return bool(np.all(d > 0) and d[-1] >= min_ratio * d[0])


def check_condition_star(
    spec: KernelSpec,
    *,
    decades: int = 8,
    tail: int = 4,
    monotonicity_order: int = 6,
    points_per_decade: int = 4,
) -> ConditionReport:
    """Numerical certificate of the admissibility condition.

    Checks on ``p ∈ [10^-decades, 10^decades]``: ``K`` positive and
    nonincreasing; ``K → ∞`` and ``pK → 0`` as ``p → 0``; ``K → 0`` and
    ``pK → ∞`` as ``p → ∞`` (trend tests over the last ``tail`` decades);
    ``K`` completely monotone by divided differences; ``pK``
    nondecreasing. Failures are recorded, never raised.
    """
    if decades < 8:
        raise ValueError("probe grid must span at least 8 decades on each side of 1")
    if tail < 4:
        raise ValueError("trend tests need at least 4 decades")
    probes: list[Probe] = []
    dec = 10.0 ** np.arange(-decades, decades + 1)
    fine = np.logspace(-decades, decades, 2 * decades * points_per_decade + 1)
    with np.errstate(all="ignore"):
        K = np.asarray(spec.laplace(fine), dtype=float)
        Kd = np.asarray(spec.laplace(dec), dtype=float)
    finite = bool(np.all(np.isfinite(K)) and np.all(K > 0))
    worst = int(np.argmin(np.where(np.isfinite(K), K, -np.inf)))
    probes.append(Probe("K(p) finite and positive", float(fine[worst]), float(K[worst]), "> 0", finite))
    if not finite:
        return ConditionReport(False, probes, 0, "K(p) not finite/positive; remaining probes skipped", spec.label)

    pK = fine * K
    pKd = dec * Kd
    slack = 1e-12
    d = np.diff(K) / K[:-1]
    i = int(np.argmax(d))
    probes.append(Probe("K(p) nonincreasing", float(fine[i]), float(d[i]), "<= 0", bool(np.all(d <= slack))))
    d = np.diff(pK) / pK[1:]
    i = int(np.argmin(d))
    probes.append(Probe("pK(p) nondecreasing", float(fine[i]), float(d[i]), ">= 0", bool(np.all(d >= -slack))))

    lo_idx = np.arange(tail, -1, -1)
    hi_idx = np.arange(dec.size - 1 - tail, dec.size)
    probes.append(
        Probe("K(p) as p->0", float(dec[0]), float(Kd[0]), "-> infinity", _tends_to_infinity(Kd[lo_idx]))
    )
    probes.append(
        Probe("pK(p) as p->0", float(dec[0]), float(pKd[0]), "-> 0", _tends_to_infinity(1.0 / pKd[lo_idx]))
    )
    probes.append(
        Probe("K(p) as p->inf", float(dec[-1]), float(Kd[-1]), "-> 0", _tends_to_infinity(1.0 / Kd[hi_idx]))
    )
    probes.append(
        Probe("pK(p) as p->inf", float(dec[-1]), float(pKd[-1]), "-> infinity", _tends_to_infinity(pKd[hi_idx]))
    )

    # K varies over many decades; certify log-decade windows so the rounding
    # envelope tracks the local scale.
    cm_ok = True
    cm_p, cm_obs = float(fine[0]), 0.0
    window = 2 * points_per_decade + monotonicity_order
    for start in range(0, fine.size - window + 1, points_per_decade):
        sl = slice(start, start + window)
        bad = _cm_violation(fine[sl], K[sl], monotonicity_order, 1e-9)
        if bad is not None:
            cm_ok = False
            cm_p, cm_obs = float(fine[start]), bad[1]
            break
    probes.append(
        Probe(
            f"K completely monotone (orders 0..{monotonicity_order})",
            cm_p,
            cm_obs,
            "(-1)^n Δ^n K >= 0",
            cm_ok,
        )
    )

    if spec.supports_complex:
        # Stieltjes functions map the upper half-plane into the closed lower one.
        rad = np.logspace(-decades / 2, decades / 2, 33)
        ang = np.linspace(0.05, 0.95, 7) * math.pi
        z = (rad[:, None] * np.exp(1j * ang[None, :])).ravel()
        with np.errstate(all="ignore"):
            kz = np.asarray(spec.laplace(z), dtype=complex)
            ratio = np.where(np.isfinite(kz), kz.imag / np.abs(kz), np.inf)
        i = int(np.argmax(ratio))
        probes.append(
            Probe(
                "Im K(z) <= 0 on upper half-plane",
                float(abs(z[i])),
                float(ratio[i]),
                "<= 1e-12",
                bool(np.all(np.isfinite(kz)) and ratio[i] <= 1e-12),
            )
        )

    notes = (
        f"limit trends over the outer {tail} decades of [1e-{decades}, 1e{decades}]; "
        "the rate at which the limits are attained is not known a priori"
    )
    passed = all(pr.passed for pr in probes)
    return ConditionReport(passed, probes, monotonicity_order, notes, spec.label)


_GATE_CACHE: dict = {}


def require_condition_star(spec: KernelSpec) -> ConditionReport:
    """Return the (cached) report, raising :class:`ConditionStarError` on failure."""
    try:
        report = _GATE_CACHE[spec]
    except (KeyError, TypeError):
        report = check_condition_star(spec)
        try:
            _GATE_CACHE[spec] = report
        except TypeError:
            pass
    if not report.passed:
        names = ", ".join(pr.quantity for pr in report.failures())
        raise ConditionStarError(f"kernel {spec.label} fails the admissibility condition: {names}")
    return report


# ---------------------------------------------------------------------------
# Conjugation and Bernstein/Stieltjes representations


def _limit_estimate(values: np.ndarray) -> float:
    """Limit of samples ordered towards a limit point: 0, inf, or the last value."""
    v = np.asarray(values, dtype=float)
    if _tends_to_infinity(v):
        return math.inf
    with np.errstate(divide="ignore"):
        if np.all(v > 0) and _tends_to_infinity(1.0 / v):
            return 0.0
    return float(v[-1])


@dataclass(frozen=True)
class Conjugate:
    value: float
    a_star: float
    b_star: float


def star_conjugate(f: Callable, lam: float, *, decades: int = 8) -> Conjugate:
    """``f*(λ) = λ/f(λ)`` with its constants ``a* = f*(0+)``, ``b* = lim f*(λ)/λ``."""
    def conj(x):
        x = np.asarray(x, dtype=float)
        fx = np.asarray(f(x), dtype=float)
        if np.any(fx == 0) or np.any(~np.isfinite(fx)):
            raise ZeroDivisionError("f vanishes (or is not finite) at a probe point")
        return x / fx

    value = float(conj(lam))
    lo = 10.0 ** np.arange(-decades + 4, -decades - 1, -1.0)
    hi = 10.0 ** np.arange(decades - 4, decades + 1.0)
    a_star = _limit_estimate(conj(lo))
    b_star = _limit_estimate(conj(hi) / hi)
    return Conjugate(value, a_star, b_star)


@dataclass(frozen=True)
class BernsteinTriple:
    """Representation ``(a, b, measure)`` of a Bernstein or Stieltjes function.

    ``kind="bernstein"``: ``f(λ) = a + bλ + ∫ (1 - e^{-λt}) μ(dt)``.
    ``kind="stieltjes"``: ``φ(λ) = a/λ + b + ∫ σ(dt)/(λ + t)``.
    The measure is a list of atoms ``(location, mass)`` plus an optional
    density sampled on a log grid (integrated by the trapezoid rule in
    ``log t``).
    """

    a: float = 0.0
    b: float = 0.0
    atoms: tuple[tuple[float, float], ...] = ()
    density_grid: np.ndarray | None = None
    density: np.ndarray | None = None
    kind: str = "bernstein"

    def __post_init__(self) -> None:
        if self.a < 0 or self.b < 0:
            raise ValueError("a and b must be nonnegative")
        if self.kind not in ("bernstein", "stieltjes"):
            raise ValueError("kind must be 'bernstein' or 'stieltjes'")
        for loc, mass in self.atoms:
            if not (loc > 0 and mass > 0):
                raise ValueError("atoms need positive location and mass")
        if (self.density_grid is None) != (self.density is None):
            raise ValueError("density grid and values go together")

    def _measure_integral(self, g: Callable, lam) -> np.ndarray:
        """``∫ g(λ, t) measure(dt)`` broadcast over ``λ``."""
        lam = np.asarray(lam, dtype=float)
        total = np.zeros_like(lam)
        for loc, mass in self.atoms:
            total = total + mass * g(lam, loc)
        if self.density is not None:
            t = np.asarray(self.density_grid, dtype=float)
            vals = g(lam[..., None], t) * np.asarray(self.density) * t
            total = total + integrate.trapezoid(vals, np.log(t), axis=-1)
        return total

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.kind == "bernstein":
            body = self._measure_integral(lambda x, t: -np.expm1(-x * t), lam)
            return self.a + self.b * lam + body
        body = self._measure_integral(lambda x, t: 1.0 / (x + t), lam)
        return self.a / lam + self.b + body

    def integrability(self) -> float:
        """``∫ min(1,t) dμ`` (Bernstein) or ``∫ (1+t)^{-1} dσ`` (Stieltjes)."""
        if self.kind == "bernstein":
            return float(self._measure_integral(lambda _, t: np.minimum(1.0, t), 0.0))
        return float(self._measure_integral(lambda _, t: 1.0 / (1.0 + t), 0.0))

    def limits(self, decades: int = 8) -> tuple[float, float]:
        """Probe estimates of ``(f(0+), lim f(λ)/λ)`` for comparison with ``(a, b)``."""
        lo = 10.0 ** np.arange(-decades + 4, -decades - 1, -1.0)
        hi = 10.0 ** np.arange(decades - 4, decades + 1.0)
        if self.kind == "stieltjes":
            return _limit_estimate(lo * self(lo)), _limit_estimate(self(hi))
        return _limit_estimate(self(lo)), _limit_estimate(self(hi) / hi)
