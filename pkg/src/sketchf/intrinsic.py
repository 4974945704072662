"""Intrinsic dimension of a (beta, Sigma) pair and sketch-size selection.

A pair has intrinsic dimension up to ``r`` at tolerance ``eta`` when, in the
eigenbasis of Sigma (``beta_rot = U^T beta``, ``lam`` descending),

* ``mean(beta_rot[:r]**2) * sum(lam[r:]) + sum(beta_rot[r:]**2 * lam[r:])``
* ``(mean(beta_rot[:r]**2) + mean(beta_rot[r:]**2)) * r * lam[r]``

are both at most ``eta * beta^T Sigma beta``. Comparisons are non-strict.
Logarithms are natural throughout.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, DegenerateInput, DimensionMismatch, DomainError

__all__ = [
    "IntrinsicDimReport",
    "intrinsic_conditions",
    "min_intrinsic_dim",
    "default_eta",
    "recommend_k",
    "example_k_formula",
    "example_rate",
    "minimax_radius",
    "K_MULTIPLIER",
]

K_MULTIPLIER = 3


@dataclass(frozen=True)
class IntrinsicDimReport:
    r: int
    eta: float
    cond1_lhs: float
    cond2_lhs: float
    signal: float
    radius_sq: float | None = None

    @property
    def holds(self) -> bool:
        bound = self.eta * self.signal
        return self.cond1_lhs <= bound and self.cond2_lhs <= bound

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["holds"] = self.holds
        return out


def default_eta(p: int) -> float:
    """``1 / log p``."""
    if p < 2:
        raise DomainError(f"default eta needs p >= 2, got {p}")
    return 1.0 / math.log(p)


def _prepare(beta_rot: NDArray[np.float64], spectrum: NDArray[np.float64]) -> tuple[NDArray, NDArray, float]:
    b2 = np.asarray(beta_rot, dtype=np.float64) ** 2
    lam = np.asarray(spectrum, dtype=np.float64)
    if b2.shape != lam.shape or lam.ndim != 1:
        raise DimensionMismatch(f"beta_rot {b2.shape} and spectrum {lam.shape} disagree")
    signal = float(np.sum(b2 * lam))
    if signal <= 0:
        raise DegenerateInput("beta^T Sigma beta must be positive")
    return b2, lam, signal


def _all_conditions(b2: NDArray, lam: NDArray) -> tuple[NDArray, NDArray]:
    """Both left-hand sides for r = 1 .. p-1 (index r-1)."""
    p = lam.shape[0]
    r = np.arange(1, p, dtype=np.float64)
    head_b2 = np.cumsum(b2)[:-1]
    tail_b2 = np.sum(b2) - head_b2
    weighted = b2 * lam
    tail_weighted = np.sum(weighted) - np.cumsum(weighted)[:-1]
    tail_lam = np.sum(lam) - np.cumsum(lam)[:-1]
    head_mean = head_b2 / r
    cond1 = head_mean * tail_lam + tail_weighted
    cond2 = (head_mean + tail_b2 / (p - r)) * r * lam[1:]
    # cumulative-difference roundoff can go slightly negative on zero tails
    return np.maximum(cond1, 0.0), np.maximum(cond2, 0.0)


def intrinsic_conditions(
    beta_rot: NDArray[np.float64],
    spectrum: NDArray[np.float64],
    r: int,
    eta: float,
    n: int | None = None,
) -> IntrinsicDimReport:
    """Evaluate both intrinsic-dimension conditions at a given ``r``."""
    b2, lam, signal = _prepare(beta_rot, spectrum)
    p = lam.shape[0]
    if not 1 <= r < p:
        raise DomainError(f"r must satisfy 1 <= r < p, got r={r}, p={p}")
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    head_mean = float(np.sum(b2[:r])) / r
    tail_mean = float(np.sum(b2[r:])) / (p - r)
    cond1 = head_mean * float(np.sum(lam[r:])) + float(np.sum(b2[r:] * lam[r:]))
    cond2 = (head_mean + tail_mean) * r * float(lam[r])
    radius = minimax_radius(r, n) if n is not None else None
    return IntrinsicDimReport(r, eta, cond1, cond2, signal, radius)


def min_intrinsic_dim(
    beta_rot: NDArray[np.float64], spectrum: NDArray[np.float64], eta: float | None = None
) -> int | None:
    """Smallest ``r`` in ``[1, p-1]`` at which both conditions hold, else ``None``.

    Exhaustive scan over all ``r`` using prefix sums.
    """
    b2, lam, signal = _prepare(beta_rot, spectrum)
    p = lam.shape[0]
    if eta is None:
        eta = default_eta(p)
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    if p < 2:
        return None
    cond1, cond2 = _all_conditions(b2, lam)
    # prefix sums only screen candidates; the verdict comes from the direct sums
    loose = eta * signal * (1.0 + 1e-9) + 1e-300
    candidates = np.flatnonzero((cond1 <= loose) & (cond2 <= loose)) + 1
    for r in candidates:
        if intrinsic_conditions(beta_rot, lam, int(r), eta).holds:
            return int(r)
    return None


def recommend_k(n: int, r_hint: int | None = None) -> int:
    """Sketch dimension: ``min(3 r, floor(n/2))`` with a hint, else ``floor(n/2)``."""
    if n < 4:
        raise DomainError(f"n must be >= 4, got {n}")
    half = n // 2
    if r_hint is None:
        return half
    if r_hint < 1:
        raise DomainError(f"r_hint must be positive, got {r_hint}")
    return max(1, min(K_MULTIPLIER * r_hint, half))


def example_k_formula(p: int, n: int, alpha_decay: float) -> int:
    """``floor(min(3 (log p)^{1/(alpha-1)}, n/2))`` for polynomial eigen-decay."""
    if not alpha_decay > 1:
        raise DomainError(f"alpha_decay must exceed 1, got {alpha_decay}")
    if p < 2 or n < 2:
        raise DomainError(f"need p >= 2 and n >= 2, got p={p}, n={n}")
    k = math.floor(min(3.0 * math.log(p) ** (1.0 / (alpha_decay - 1.0)), n / 2.0))
    return max(1, k)


def example_rate(kind: str, p: int | float | None = None, *, alpha: float | None = None,
                 gamma: float | None = None, m: int | None = None) -> float:
    """Predicted scale of the intrinsic dimension for the standard examples.

    ``polynomial``: ``(log p)^{1/(alpha-1)}``; ``exponential``:
    ``(log log p)^{1/gamma}``; ``block``: ``m``; ``structured_coef``: ``(log p)^3``.
    No hidden constant is applied.
    """
    if kind == "block":
        if m is None or m < 1:
            raise ConfigError("block rate needs m >= 1")
        return float(m)
    if p is None or p <= 1:
        raise ConfigError(f"rate for {kind!r} needs p > 1")
    logp = math.log(p)
    if kind == "polynomial":
        if alpha is None or not alpha > 1:
            raise ConfigError("polynomial rate needs alpha > 1")
        return logp ** (1.0 / (alpha - 1.0))
    if kind == "exponential":
        if gamma is None or not gamma > 0:
            raise ConfigError("exponential rate needs gamma > 0")
        if logp <= 1:
            raise ConfigError("exponential rate needs log p > 1")
        return math.log(logp) ** (1.0 / gamma)
    if kind == "structured_coef":
        return logp**3
    raise ConfigError(f"unknown example kind {kind!r}")


def minimax_radius(r: int, n: int) -> float:
    """Squared minimax testing radius ``sqrt(r) / n``."""
    if r < 1 or n < 1:
        raise DomainError(f"need r >= 1 and n >= 1, got r={r}, n={n}")
    return math.sqrt(r) / n
