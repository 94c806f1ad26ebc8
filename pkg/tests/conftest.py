from __future__ import annotations

import mpmath
import numpy as np
import pytest

from genfrac import kernels as kc


@pytest.fixture(scope="session")
def caputo_half():
    return kc.Caputo(0.5)


def erfc_relaxation(t: float) -> float:
    """``e^t erfc(√t)`` in extended precision."""
    with mpmath.workdps(40):
        return float(mpmath.exp(t) * mpmath.erfc(mpmath.sqrt(t)))


def m_wright(nu: float, z: float) -> float:
    """``M_ν(z) = Σ (-z)^j / (j! Γ(1 - ν - νj))`` summed in extended precision.

    The terms peak near ``exp(z^{1/(1-ν)})`` while the sum decays like its
    reciprocal, so the working precision grows with that exponent.
    """
    expo = z ** (1.0 / (1.0 - nu)) if z > 0 else 0.0
    with mpmath.workdps(int(40 + expo / 1.5)):
        z = mpmath.mpf(z)
        nu = mpmath.mpf(nu)
        total, j, quiet = mpmath.mpf(0), 0, 0
        tiny = mpmath.mpf(10) ** (-mpmath.mp.dps + 5)
        while quiet < 8 or j <= 2 * expo:
            # terms vanish exactly at gamma poles, so wait for a run of small ones
            term = (-z) ** j * mpmath.rgamma(1 - nu - nu * j) / mpmath.factorial(j)
            total += term
            quiet = quiet + 1 if abs(term) < tiny * max(abs(total), tiny) else 0
            j += 1
        return float(total)


def mittag_leffler_oracle(alpha: float, x: float) -> float:
    """``E_α(x)``, ``x <= 0``, as ``u(t)`` with image ``p^{α-1}/(p^α+1)`` at ``t = (-x)^{1/α}``.

    Inverted by mpmath's Talbot rule at 40 digits, independently of the
    series and integral used by the package.
    """
    if x == 0:
        return 1.0
    with mpmath.workdps(40):
        a = mpmath.mpf(alpha)
        t = (-mpmath.mpf(x)) ** (1 / a)
        return float(mpmath.invertlaplace(lambda p: p ** (a - 1) / (p**a + 1), t, method="talbot"))


ADMISSIBLE = kc.BUILTIN_ADMISSIBLE
ADMISSIBLE_IDS = [s.label for s in ADMISSIBLE]
GRID_1E2 = np.geomspace(1e-2, 1e2, 20)
