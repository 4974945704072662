"""Sketched signal strength, asymptotic power formulas and efficiency comparisons."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .errors import DegenerateInput, DimensionMismatch, DomainError, SingularSketch
from .ftest import MAX_COND
from .models import CovFactor, SketchMatrix
from .numkit import f_quantile, noncentral_f_moments, std_normal_cdf, upper_normal_quantile

__all__ = [
    "PowerProfile",
    "delta_k_sq",
    "delta_k_sq_rotated",
    "sigma_beta_norm_sq",
    "power_classical",
    "power_sketched",
    "power_sketched_intrinsic",
    "power_zc",
    "are",
    "are_upper_bound",
    "zc_condition_ratio",
    "type2_chebyshev_bound",
    "power_profile",
]

_NEG_TOL = 1e-8


@dataclass(frozen=True)
class PowerProfile:
    delta_sq: float
    nu_sq: float
    signal: float
    sigma_sq: float
    n: int
    k: int
    p: int

    @classmethod
    def build(cls, delta_sq: float, signal: float, sigma_sq: float, n: int, k: int, p: int) -> "PowerProfile":
        if sigma_sq <= 0:
            raise DomainError(f"noise variance must be positive, got {sigma_sq}")
        return cls(delta_sq, sigma_sq + signal - delta_sq, signal, sigma_sq, n, k, p)

    @property
    def rho(self) -> float:
        return self.k / self.n

    @property
    def delta(self) -> float:
        return self.p / self.n

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _as_sketch(S: SketchMatrix | NDArray[np.float64]) -> NDArray[np.float64]:
    return S.entries if isinstance(S, SketchMatrix) else np.asarray(S, dtype=np.float64)


def delta_k_sq_rotated(
    beta_rot: NDArray[np.float64], spectrum: NDArray[np.float64], sketch_rot: NDArray[np.float64]
) -> float:
    """``Delta_k^2`` in the eigenbasis of Sigma.

    With ``B = Lambda^{1/2} U^T S`` and ``v = Lambda^{1/2} U^T beta`` this is
    the squared length of the orthogonal projection of ``v`` onto ``range(B)``.
    """
    lam = np.asarray(spectrum, dtype=np.float64)
    beta_rot = np.asarray(beta_rot, dtype=np.float64)
    sketch_rot = np.asarray(sketch_rot, dtype=np.float64)
    if sketch_rot.ndim != 2 or sketch_rot.shape[0] != lam.shape[0] or beta_rot.shape != lam.shape:
        raise DimensionMismatch("beta, spectrum and sketch dimensions disagree")
    root = np.sqrt(lam)
    B = root[:, None] * sketch_rot
    v = root * beta_rot
    q, r = np.linalg.qr(B)
    sv = np.linalg.svd(r, compute_uv=False)
    # cond(S^T Sigma S) = cond(B)^2
    if sv[-1] == 0 or (sv[0] / sv[-1]) ** 2 > MAX_COND:
        raise SingularSketch("S^T Sigma S is numerically singular")
    proj = q.T @ v
    value = float(proj @ proj)
    # same expression as CovFactor.signal so the upper clamp is consistent
    signal = float(np.sum(lam * beta_rot**2))
    if value < -_NEG_TOL * signal:
        raise SingularSketch(f"projected signal is negative beyond roundoff ({value})")
    return min(max(value, 0.0), signal)


def delta_k_sq(beta: NDArray[np.float64], cov: CovFactor, S: SketchMatrix | NDArray[np.float64]) -> float:
    """``beta^T Sigma S (S^T Sigma S)^{-1} S^T Sigma beta``."""
    entries = _as_sketch(S)
    return delta_k_sq_rotated(cov.rotate(beta), cov.spectrum, cov.basis.T @ entries)


def sigma_beta_norm_sq(beta: NDArray[np.float64], cov: CovFactor) -> float:
    """``|Sigma beta|_2^2``."""
    rot = cov.rotate(beta)
    return float(np.sum((cov.spectrum * rot) ** 2))


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def _check_signal(value: float) -> None:
    if value < 0 or math.isnan(value):
        raise DomainError(f"signal must be nonnegative, got {value}")


def _local_power(n: int, m: int, snr: float, alpha: float) -> float:
    _check_alpha(alpha)
    _check_signal(snr)
    if not 0 < m < n:
        raise DomainError(f"need 0 < m < n, got m={m}, n={n}")
    ratio = m / n
    return std_normal_cdf(-upper_normal_quantile(alpha) + math.sqrt((1.0 - ratio) * n / (2.0 * ratio)) * snr)


def power_classical(n: int, p: int, signal_over_sigma_sq: float, alpha: float = 0.05) -> float:
    """Asymptotic power of the classical F-test, ``delta = p/n``."""
    return _local_power(n, p, signal_over_sigma_sq, alpha)


def power_sketched(n: int, k: int, delta_sq_over_sigma_sq: float, alpha: float = 0.05) -> float:
    """Asymptotic power of the sketched F-test given ``Delta_k^2 / sigma^2``."""
    return _local_power(n, k, delta_sq_over_sigma_sq, alpha)


def power_sketched_intrinsic(n: int, k: int, signal_over_sigma_sq: float, alpha: float = 0.05) -> float:
    """Deterministic power when ``k`` is proportional to the intrinsic dimension:
    the full signal ``beta^T Sigma beta`` replaces ``Delta_k^2``."""
    _check_alpha(alpha)
    _check_signal(signal_over_sigma_sq)
    if not 0 < k < n:
        raise DomainError(f"need 0 < k < n, got k={k}, n={n}")
    shift = math.sqrt(n) * signal_over_sigma_sq * math.sqrt((1.0 - k / n) / (2.0 * k / n))
    return std_normal_cdf(-upper_normal_quantile(alpha) + shift)


def _spectrum_moments(spectrum: NDArray[np.float64]) -> NDArray[np.float64]:
    lam = np.asarray(spectrum, dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0 or not np.any(lam != 0):
        raise DegenerateInput("spectrum must contain a nonzero eigenvalue")
    return lam


def power_zc(
    n: int, spectrum: NDArray[np.float64], sigma_beta_norm_sq: float, sigma_sq: float, alpha: float = 0.05
) -> float:
    """Local asymptotic power of the fourth-order U-statistic (ZC) test."""
    _check_alpha(alpha)
    _check_signal(sigma_beta_norm_sq)
    lam = _spectrum_moments(spectrum)
    if sigma_sq <= 0:
        raise DomainError(f"noise variance must be positive, got {sigma_sq}")
    tr2 = float(np.sum(lam**2))
    shift = n * sigma_beta_norm_sq / (sigma_sq * math.sqrt(2.0 * tr2))
    return std_normal_cdf(-upper_normal_quantile(alpha) + shift)


def are(
    n: int, rho: float, spectrum: NDArray[np.float64], delta_sq: float, sigma_beta_norm_sq: float
) -> float:
    """Asymptotic relative efficiency of the ZC test to the sketched F-test.

    Values below one favour the sketched test.
    """
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    if delta_sq <= 0:
        raise DegenerateInput("ARE is undefined when the sketched signal is zero")
    lam = _spectrum_moments(spectrum)
    tr2 = float(np.sum(lam**2))
    zc_rate = math.sqrt(n) / math.sqrt(tr2)
    sketch_rate = math.sqrt((1.0 - rho) / rho) * delta_sq / sigma_beta_norm_sq
    return zc_rate / sketch_rate


def are_upper_bound(n: int, rho: float, spectrum: NDArray[np.float64]) -> float:
    """``4 / sqrt(rho (1 - rho)) * tr(Sigma) / sqrt(tr(Sigma^2)) / sqrt(n)``."""
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    lam = _spectrum_moments(spectrum)
    return 4.0 / math.sqrt(rho * (1.0 - rho)) * float(np.sum(lam)) / math.sqrt(float(np.sum(lam**2))) / math.sqrt(n)


def zc_condition_ratio(spectrum: NDArray[np.float64]) -> float:
    """``tr(Sigma^4) / tr(Sigma^2)^2``; small values mean the ZC regularity holds."""
    lam = _spectrum_moments(spectrum)
    # normalise first so tiny spectra do not underflow in the fourth power
    lam = lam / float(np.max(np.abs(lam)))
    tr2 = float(np.sum(lam**2))
    return float(np.sum(lam**4)) / (tr2 * tr2)


def type2_chebyshev_bound(n: int, k: int, lambda_ncp: float, alpha: float = 0.05) -> float:
    """Chebyshev bound on ``P(F < q_{alpha,k,n-k})`` for ``F ~ F_{k,n-k}(lambda)``.

    Returns the trivial bound 1 whenever the mean does not exceed the threshold.
    """
    _check_alpha(alpha)
    if lambda_ncp < 0:
        raise DomainError(f"noncentrality must be nonnegative, got {lambda_ncp}")
    if not 1 <= k or n - k <= 4:
        raise DomainError(f"need k >= 1 and n - k > 4, got n={n}, k={k}")
    mean, var = noncentral_f_moments(k, n - k, lambda_ncp)
    q = f_quantile(alpha, k, n - k)
    if mean <= q:
        return 1.0
    return min(1.0, var / (mean - q) ** 2)


def power_profile(
    beta: NDArray[np.float64],
    cov: CovFactor,
    S: SketchMatrix | NDArray[np.float64],
    n: int,
    sigma_sq: float = 1.0,
    alpha: float = 0.05,
) -> dict[str, Any]:
    """Signal quantities, predicted powers and ARE numbers for one instance."""
    entries = _as_sketch(S)
    k = entries.shape[1]
    d2 = delta_k_sq(beta, cov, entries)
    signal = cov.signal(beta)
    prof = PowerProfile.build(d2, signal, sigma_sq, n, k, cov.p)
    sbn = sigma_beta_norm_sq(beta, cov)
    out: dict[str, Any] = {"profile": prof.to_dict()}
    out["power_sketched"] = power_sketched(n, k, d2 / sigma_sq, alpha)
    out["power_sketched_intrinsic"] = power_sketched_intrinsic(n, k, signal / sigma_sq, alpha)
    out["power_classical"] = power_classical(n, cov.p, signal / sigma_sq, alpha) if cov.p < n else None
    out["power_zc"] = power_zc(n, cov.spectrum, sbn, sigma_sq, alpha)
    out["are"] = are(n, k / n, cov.spectrum, d2, sbn) if d2 > 0 else None
    out["are_upper_bound"] = are_upper_bound(n, k / n, cov.spectrum)
    out["zc_condition_ratio"] = zc_condition_ratio(cov.spectrum)
    out["alpha"] = alpha
    return out
