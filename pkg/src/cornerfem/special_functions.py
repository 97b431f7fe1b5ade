"""Complementary error function and the erfc-type corner functions.

The corner functions solve the heat equation ``S_t = nu * S_xx`` on the half
line with a unit (resp. linear) boundary trace and zero initial data:

    S0(x, t) = erfc(x / (2 sqrt(nu t)))
    S1(x, t) = int_0^t S0(x, tau) dtau

All evaluators accept scalars or numpy arrays and broadcast.
"""
from __future__ import annotations

import functools
import math

import numpy as np

try:
    from scipy.special import erfc as _platform_erfc
except ImportError:  # pragma: no cover - scipy is a declared dependency
    _platform_erfc = None

__all__ = [
    "CornerPointError",
    "XI_UNDERFLOW",
    "erfc",
    "erfc_fallback",
    "s0",
    "s0_dt",
    "s1",
    "validate_s1_closed_form",
]

# erfc(27) ~ 5e-319: below this only denormals remain.
XI_UNDERFLOW = 27.0

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


class CornerPointError(ValueError):
    """Raised when S0 is requested at the singular corner x = 0, t = 0."""


def _erfc_series(z: float) -> float:
    # Maclaurin series of erf; used for |z| < 2 where cancellation is mild.
    z2 = z * z
    term = z
    total = z
    k = 0
    while True:
        k += 1
        term *= -z2 / k
        contrib = term / (2 * k + 1)
        total += contrib
        if abs(contrib) <= 1e-17 * abs(total):
            break
    return 1.0 - _TWO_OVER_SQRT_PI * total


def _erfc_contfrac(z: float) -> float:
    # Continued fraction for z >= 2, evaluated with the modified Lentz method:
    # erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    tiny = 1e-300
    f = z
    c = z
    d = 0.0
    for n in range(1, 500):
        a = 0.5 * n
        d = z + a * d
        d = tiny if d == 0.0 else d
        c = z + a / c
        c = tiny if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-z * z) / (math.sqrt(math.pi) * f)


def _erfc_scalar(z: float) -> float:
    if not math.isfinite(z):
        if math.isnan(z):
            return math.nan
        return 0.0 if z > 0 else 2.0
    if z < 0.0:
        return 2.0 - _erfc_scalar(-z)
    if z < 2.0:
        return _erfc_series(z)
    if z > XI_UNDERFLOW:
        return 0.0
    return _erfc_contfrac(z)


def erfc_fallback(z):
    """Pure-Python erfc (series below 2, continued fraction above).

    Used when no platform special-function library is importable. Absolute
    error is below 1e-14 on [-6, 27].
    """
    arr = np.asarray(z, dtype=float)
    if arr.ndim == 0:
        return _erfc_scalar(float(arr))
    out = np.empty_like(arr)
    flat = out.reshape(-1)
    for i, zi in enumerate(arr.reshape(-1)):
        flat[i] = _erfc_scalar(float(zi))
    return out


def erfc(z):
    """Complementary error function, 1 - erf(z)."""
    if _platform_erfc is None:
        return erfc_fallback(z)
    out = _platform_erfc(z)
    return float(out) if np.ndim(out) == 0 else out


def _xi(x, t, nu):
    return np.asarray(x, dtype=float) / (2.0 * np.sqrt(nu * np.asarray(t, dtype=float)))


def _check_nu(nu: float) -> None:
    if not nu > 0:
        raise ValueError(f"diffusivity must be positive, got {nu!r}")


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


def s0(x, t, nu: float):
    """First corner function ``erfc(x / (2 sqrt(nu t)))``.

    The limit value 0 is returned on t = 0 for x > 0. Requesting the corner
    point itself raises :class:`CornerPointError`.
    """
    _check_nu(nu)
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any((x == 0.0) & (t == 0.0)):
        raise CornerPointError("S0 is singular at the corner (x, t) = (0, 0)")
    if np.any(t < 0.0):
        raise ValueError("S0 is defined for t >= 0 only")
    pos = t > 0.0
    out = np.zeros(x.shape)
    if np.any(pos):
        xi = _xi(x[pos], t[pos], nu)
        val = np.where(xi > XI_UNDERFLOW, 0.0, erfc(np.minimum(xi, XI_UNDERFLOW)))
        out[pos] = val
    return _scalar_or_array(out)


def s0_dt(x, t, nu: float):
    """Time derivative of S0: ``x exp(-x^2/(4 nu t)) / (2 sqrt(pi nu) t^1.5)``."""
    _check_nu(nu)
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any(t <= 0.0):
        raise ValueError("s0_dt requires t > 0")
    out = x * np.exp(-x * x / (4.0 * nu * t)) / (2.0 * np.sqrt(np.pi * nu) * t**1.5)
    return _scalar_or_array(out)


def s1(x, t, nu: float):
    """Second corner function, the time integral of S0 from 0 to t.

    Closed form ``t * ((1 + 2 xi^2) erfc(xi) - 2/sqrt(pi) xi exp(-xi^2))``
    with ``xi = x / (2 sqrt(nu t))``; continuous at the corner with value 0.
    """
    _check_nu(nu)
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any(t < 0.0):
        raise ValueError("S1 is defined for t >= 0 only")
    out = np.zeros(x.shape)
    pos = t > 0.0
    if np.any(pos):
        tp = t[pos]
        xi = _xi(x[pos], tp, nu)
        xi_c = np.minimum(xi, XI_UNDERFLOW)
        val = tp * ((1.0 + 2.0 * xi_c**2) * erfc(xi_c) - _TWO_OVER_SQRT_PI * xi_c * np.exp(-xi_c**2))
        # cancellation near the underflow threshold can leave tiny negatives
        val = np.clip(val, 0.0, tp)
        out[pos] = np.where(xi > XI_UNDERFLOW, 0.0, val)
    return _scalar_or_array(out)


@functools.lru_cache(maxsize=None)
def validate_s1_closed_form(nu: float, tol: float = 1e-8) -> float:
    """Check the S1 closed form against adaptive quadrature of S0 in time.

    Returns the largest absolute deviation found; raises ``RuntimeError`` when
    it exceeds ``tol``. Results are cached per diffusivity.
    """
    from scipy.integrate import quad

    worst = 0.0
    for x in (0.0, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0):
        for t in (1e-4, 1e-3, 0.01, 0.05, 0.2):
            if x == 0.0:
                ref = t
            else:
                # substitute tau = s^2 to remove the sqrt behaviour at tau = 0
                ref, _ = quad(lambda s: 2.0 * s * s0(x, s * s, nu), 0.0, math.sqrt(t),
                              epsabs=1e-13, epsrel=1e-12, limit=200)
            worst = max(worst, abs(s1(x, t, nu) - ref))
    if worst > tol:
        raise RuntimeError(f"S1 closed form deviates from quadrature by {worst:.3e}")
    return worst
