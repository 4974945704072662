"""Classical and sketched F-tests for the global null ``beta = 0``.

The sketched test projects the design onto ``k`` random directions,
``A = X S``, and runs the ordinary F-test on ``(A, y)`` with ``(k, n - k)``
degrees of freedom. Under the null the statistic is exactly ``F(k, n - k)``
for any fixed ``X`` and ``S`` with ``X S`` of full column rank.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionError, DimensionMismatch, DomainError, SingularDesign, SingularSketch
from .models import SketchMatrix
from .numkit import f_quantile, f_sf

__all__ = ["TestReport", "least_squares", "classical_f", "sketched_f", "projected_f", "MAX_COND"]

# conditioning cliff for double precision
MAX_COND = 1e12
# residual sum of squares below this fraction of |y|^2 counts as an exact fit
_PERFECT_FIT_RTOL = 1e-24


@dataclass(frozen=True)
class TestReport:
    """Outcome of one F-test.

    ``reject`` is decided as ``p_value <= alpha``; away from a 1e-9 band
    around the threshold this is the same as ``statistic >= threshold``.
    A perfect fit with a nonzero numerator is reported with
    ``statistic = inf``, ``p_value = 0`` and ``reject = True``.
    """

    __test__ = False  # not a pytest class

    statistic: float
    d1: int
    d2: int
    threshold: float
    p_value: float
    reject: bool
    alpha: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def least_squares(
    A: NDArray[np.float64], y: NDArray[np.float64], max_cond: float = MAX_COND
) -> tuple[NDArray[np.float64], float]:
    """Least-squares coefficients and residual sum of squares via thin QR.

    Raises :class:`SingularDesign` when the condition number of ``A``
    exceeds ``max_cond``.
    """
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if A.ndim != 2 or y.ndim != 1 or A.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"A {A.shape} and y {y.shape} do not conform")
    n, m = A.shape
    if not n > m >= 1:
        raise DimensionError(f"least squares needs n > m >= 1, got n={n}, m={m}")
    q, r = np.linalg.qr(A)
    sv = np.linalg.svd(r, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > max_cond:
        raise SingularDesign(f"design is numerically rank deficient (condition > {max_cond:g})")
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - A @ coef
    return coef, float(resid @ resid)


def _report(A: NDArray[np.float64], y: NDArray[np.float64], alpha: float, max_cond: float) -> TestReport:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    n, m = A.shape
    coef, rss = least_squares(A, y, max_cond=max_cond)
    d1, d2 = m, n - m
    threshold = f_quantile(alpha, d1, d2)
    explained = float(y @ (A @ coef))
    yy = float(y @ y)
    if rss <= _PERFECT_FIT_RTOL * yy or yy == 0.0:
        if explained <= 0.0:
            return TestReport(0.0, d1, d2, threshold, 1.0, False, alpha)
        return TestReport(math.inf, d1, d2, threshold, 0.0, True, alpha)
    stat = (explained / d1) / (rss / d2)
    stat = max(stat, 0.0)
    p_value = f_sf(stat, d1, d2)
    return TestReport(stat, d1, d2, threshold, p_value, p_value <= alpha, alpha)


def classical_f(X: NDArray[np.float64], y: NDArray[np.float64], alpha: float = 0.05) -> TestReport:
    """Ordinary F-test of ``beta = 0`` with ``(p, n - p)`` degrees of freedom."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X {X.shape} and y {y.shape} do not conform")
    n, p = X.shape
    if n <= p:
        raise DimensionError(f"the F-test needs n > p, got n={n}, p={p}")
    return _report(X, y, alpha, MAX_COND)


def sketched_f(
    X: NDArray[np.float64],
    y: NDArray[np.float64],
    S: SketchMatrix | NDArray[np.float64],
    alpha: float = 0.05,
) -> TestReport:
    """Sketched F-test: the ordinary F-test on the projected design ``X S``.

    The statistic is ``(y^T X S b / k) / (|y - X S b|^2 / (n - k))`` with
    ``b`` the least-squares fit of ``y`` on ``X S``; the null is rejected when
    it exceeds the upper ``alpha`` quantile of ``F(k, n - k)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    entries = S.entries if isinstance(S, SketchMatrix) else np.asarray(S, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X {X.shape} and y {y.shape} do not conform")
    if entries.ndim != 2 or entries.shape[0] != X.shape[1]:
        raise DimensionMismatch(f"sketch {entries.shape} does not match p={X.shape[1]}")
    n = X.shape[0]
    k = entries.shape[1]
    if not 1 <= k < n:
        raise DimensionError(f"sketch dimension must satisfy 1 <= k < n, got k={k}, n={n}")
    return projected_f(X @ entries, y, alpha)


def projected_f(A: NDArray[np.float64], y: NDArray[np.float64], alpha: float = 0.05) -> TestReport:
    """Sketched F-test given the already projected design ``A = X S``."""
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if A.ndim != 2 or y.ndim != 1 or A.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"A {A.shape} and y {y.shape} do not conform")
    if not 1 <= A.shape[1] < A.shape[0]:
        raise DimensionError(f"sketch dimension must satisfy 1 <= k < n, got k={A.shape[1]}, n={A.shape[0]}")
    # cond(S^T X^T X S) = cond(X S)^2
    try:
        return _report(A, y, alpha, math.sqrt(MAX_COND))
    except SingularDesign as exc:
        raise SingularSketch(str(exc)) from exc
