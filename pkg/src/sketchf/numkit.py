"""Scalar special functions: normal, F and noncentral-F distribution support.

Conventions
-----------
``std_normal_quantile(q)`` is lower-tail: it returns ``z`` with ``Phi(z) = q``,
so the upper ``alpha`` normal quantile is ``std_normal_quantile(1 - alpha)``.
``f_quantile(alpha, d1, d2)`` is upper-tail: it returns ``x`` with
``P(F_{d1,d2} >= x) = alpha``.

Everything here is pure Python on floats and safe to call from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import ConvergenceError, DomainError

__all__ = [
    "QuantileSpec",
    "std_normal_cdf",
    "std_normal_sf",
    "std_normal_quantile",
    "upper_normal_quantile",
    "reg_inc_beta",
    "f_pdf",
    "f_cdf",
    "f_sf",
    "f_quantile",
    "f_quantile_bai",
    "noncentral_f_moments",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_EPS = 1e-15
_TINY = 1e-300
_CF_MAXITER = 20000
_SERIES_MAXITER = 200000


@dataclass(frozen=True)
class QuantileSpec:
    """Level and degrees of freedom of an upper F quantile."""

    alpha: float
    d1: int
    d2: int

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.d1 < 1 or self.d2 < 1:
            raise DomainError(f"degrees of freedom must be >= 1, got ({self.d1}, {self.d2})")

    def threshold(self) -> float:
        return f_quantile(self.alpha, self.d1, self.d2)


# ---------------------------------------------------------------------------
# Normal distribution
# ---------------------------------------------------------------------------


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF; saturates to 0/1 for extreme arguments."""
    if math.isnan(x):
        raise DomainError("x is NaN")
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_sf(x: float) -> float:
    """Upper tail ``1 - Phi(x)`` without cancellation."""
    if math.isnan(x):
        raise DomainError("x is NaN")
    return 0.5 * math.erfc(x / _SQRT2)


# Acklam's rational approximation, refined below with Halley steps.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


def _acklam_lower(q: float) -> float:
    # valid for 0 < q <= 0.5
    if q < 0.02425:
        t = math.sqrt(-2.0 * math.log(q))
        num = ((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]
        den = (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        return num / den
    u = q - 0.5
    r = u * u
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def std_normal_quantile(q: float) -> float:
    """Return ``z`` with ``Phi(z) = q`` (lower-tail convention)."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {q}")
    if q > 0.5:
        # 1 - q is exact for q >= 0.5
        return -std_normal_quantile(1.0 - q)
    if q == 0.5:
        return 0.0
    x = _acklam_lower(q)
    for _ in range(3):
        err = std_normal_cdf(x) - q
        u = err * _SQRT2PI * math.exp(0.5 * x * x)
        step = u / (1.0 + 0.5 * x * u)
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


def upper_normal_quantile(alpha: float) -> float:
    """``z_alpha``: the upper ``alpha`` quantile of N(0, 1)."""
    return std_normal_quantile(1.0 - alpha) if alpha >= 0.5 else -std_normal_quantile(alpha)


# ---------------------------------------------------------------------------
# Incomplete beta
# ---------------------------------------------------------------------------


def _lbeta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a: float, b: float, x: float) -> float | None:
    """Continued fraction for I_x(a, b) (modified Lentz). None if not converged."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    return None


def _beta_series(a: float, b: float, x: float) -> float | None:
    """Power series x^a sum_n (1-b)_n x^n / (n! (a+n)) / B(a, b)."""
    total = 1.0 / a
    coef = 1.0
    for n in range(1, _SERIES_MAXITER + 1):
        coef *= (n - b) / n * x
        term = coef / (a + n)
        total += term
        if abs(term) < _EPS * abs(total):
            return math.exp(a * math.log(x) - _lbeta(a, b)) * total
    return None


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``.

    Continued fraction on whichever tail converges fastest, with a power
    series fallback when the fraction does not settle.
    """
    if not (a > 0.0 and b > 0.0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"shape parameters must be positive and finite, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - _lbeta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        cf = _betacf(a, b, x)
        if cf is not None:
            return min(1.0, math.exp(log_front) * cf / a)
        val = _beta_series(a, b, x)
    else:
        cf = _betacf(b, a, 1.0 - x)
        if cf is not None:
            return max(0.0, 1.0 - math.exp(log_front) * cf / b)
        tail = _beta_series(b, a, 1.0 - x)
        val = None if tail is None else 1.0 - tail
    if val is None:
        raise ConvergenceError(f"incomplete beta did not converge at x={x}, a={a}, b={b}")
    return min(1.0, max(0.0, val))


# ---------------------------------------------------------------------------
# F distribution
# ---------------------------------------------------------------------------


def _check_df(d1: float, d2: float) -> None:
    if not (d1 > 0 and d2 > 0):
        raise DomainError(f"degrees of freedom must be positive, got ({d1}, {d2})")


def f_pdf(x: float, d1: float, d2: float) -> float:
    _check_df(d1, d2)
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        if d1 < 2:
            return math.inf
        return 1.0 if d1 == 2 else 0.0
    log_pdf = (
        0.5 * d1 * math.log(d1 * x)
        + 0.5 * d2 * math.log(d2)
        - 0.5 * (d1 + d2) * math.log(d1 * x + d2)
        - math.log(x)
        - _lbeta(0.5 * d1, 0.5 * d2)
    )
    return math.exp(log_pdf)


def f_cdf(x: float, d1: float, d2: float) -> float:
    """``P(F_{d1,d2} <= x)``."""
    _check_df(d1, d2)
    if math.isnan(x) or x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if math.isinf(x):
        return 1.0
    return reg_inc_beta(d1 * x / (d1 * x + d2), 0.5 * d1, 0.5 * d2)


def f_sf(x: float, d1: float, d2: float) -> float:
    """``P(F_{d1,d2} > x)``, evaluated on the upper tail directly."""
    _check_df(d1, d2)
    if math.isnan(x) or x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if math.isinf(x):
        return 0.0
    return reg_inc_beta(d2 / (d2 + d1 * x), 0.5 * d2, 0.5 * d1)


@lru_cache(maxsize=4096)
def f_quantile(alpha: float, d1: float, d2: float) -> float:
    """Upper ``alpha`` quantile ``q_{alpha,d1,d2}`` of the F distribution.

    Bisection on a geometrically grown bracket, then a single Newton polish
    that is kept only if it improves the residual.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    _check_df(d1, d2)
    lo, hi = 0.0, 1.0
    grow = 0
    while f_sf(hi, d1, d2) > alpha:
        lo = hi
        hi *= 2.0
        grow += 1
        if grow > 1100 or math.isinf(hi):
            raise ConvergenceError(f"could not bracket F quantile alpha={alpha}, df=({d1}, {d2})")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f_sf(mid, d1, d2) > alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    x = 0.5 * (lo + hi)
    resid = f_sf(x, d1, d2) - alpha
    dens = f_pdf(x, d1, d2) if x > 0 else 0.0
    if dens > 0 and math.isfinite(dens):
        polished = x + resid / dens
        if lo <= polished <= hi:
            new_resid = f_sf(polished, d1, d2) - alpha
            if abs(new_resid) < abs(resid):
                x = polished
    return x


def f_quantile_bai(alpha: float, n: int, delta: float) -> float:
    """Two-term approximation ``1 + sqrt(2 / (n delta (1 - delta))) z_alpha``
    of ``q_{alpha, delta n, (1 - delta) n}``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if n * delta < 1 or n * (1.0 - delta) < 1:
        raise DomainError(f"n*delta and n*(1-delta) must be >= 1 (n={n}, delta={delta})")
    return 1.0 + math.sqrt(2.0 / (n * delta * (1.0 - delta))) * upper_normal_quantile(alpha)


def noncentral_f_moments(d1: float, d2: float, lam: float) -> tuple[float, float]:
    """Mean and variance of the noncentral F distribution ``F_{d1,d2}(lam)``."""
    if d1 <= 0:
        raise DomainError(f"d1 must be positive, got {d1}")
    if d2 <= 4:
        raise DomainError(f"variance requires d2 > 4, got {d2}")
    if lam < 0:
        raise DomainError(f"noncentrality must be nonnegative, got {lam}")
    mean = d2 * (d1 + lam) / (d1 * (d2 - 2.0))
    var = (
        2.0
        * ((d1 + lam) ** 2 + (d1 + 2.0 * lam) * (d2 - 2.0))
        / ((d2 - 2.0) ** 2 * (d2 - 4.0))
        * (d2 / d1) ** 2
    )
    return mean, var
