"""Executable checks of the signal-capture argument and its concentration lemmas.

Two groups live here. The deterministic group works in the eigenbasis of
Sigma: the constrained minimiser ``xi*`` that matches the leading ``r``
rotated coordinates of ``beta`` while minimising the tail energy, and the
``L1 + L2`` bound on that tail energy. The Monte Carlo group estimates
failure frequencies of Gaussian concentration inequalities and compares
them with the stated bounds (pass if ``freq <= bound + 3 SE``, the standard
error taken at the bound).

Monte Carlo draws are split into fixed-size chunks, each with its own seed
derived from ``(seed, chunk index)``, so tallies do not depend on ``workers``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Callable

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, DegenerateInput, DomainError, InfeasibleConstraint, SingularSketch
from .ftest import MAX_COND
from .models import CovFactor, SketchMatrix, derive_seed

__all__ = [
    "SplitSketch",
    "BoundCertificate",
    "McCheck",
    "xi_star",
    "xi_star_split",
    "xi_star_closed_form",
    "tail_objective",
    "l1_l2_bound",
    "eigen_lifting",
    "quadratic_tail_check",
    "lambda_sketch_singular_check",
    "wishart_eigen_check",
    "matrix_norm_ineq_check",
    "spectral_spot_check",
    "LEMMA_C1",
    "LEMMA_C2",
]

# checker instantiations of the existential constants
LEMMA_C1 = 1.0 / 12.0
LEMMA_C2 = 16.0

_CHUNK = 2000
_RANK_TOL = 1e-12


@dataclass
class SplitSketch:
    """Sketch and coefficients split along the leading ``r`` eigen-directions."""

    s1: NDArray[np.float64]
    s2: NDArray[np.float64]
    beta1: NDArray[np.float64]
    beta2: NDArray[np.float64]
    lam_tail: NDArray[np.float64]

    @classmethod
    def from_cov(
        cls, beta: NDArray[np.float64], cov: CovFactor, r: int, S: SketchMatrix | NDArray[np.float64]
    ) -> "SplitSketch":
        entries = S.entries if isinstance(S, SketchMatrix) else np.asarray(S, dtype=np.float64)
        if not 1 <= r < cov.p:
            raise DomainError(f"need 1 <= r < p, got r={r}, p={cov.p}")
        rot_s = cov.basis.T @ entries
        rot_b = cov.rotate(beta)
        return cls(rot_s[:r], rot_s[r:], rot_b[:r], rot_b[r:], cov.spectrum[r:].copy())

    @property
    def r(self) -> int:
        return int(self.s1.shape[0])

    @property
    def k(self) -> int:
        return int(self.s1.shape[1])


@dataclass(frozen=True)
class BoundCertificate:
    l1: float
    l2: float
    residual: float

    @property
    def holds(self) -> bool:
        return self.residual <= 2.0 * self.l1 + 2.0 * self.l2 + 1e-8 * (self.l1 + self.l2 + 1.0)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["holds"] = self.holds
        return out


@dataclass(frozen=True)
class McCheck:
    """Monte Carlo frequency of one or more bad events against their bounds."""

    name: str
    freqs: tuple[float, ...]
    bounds: tuple[float, ...]
    reps: int

    @property
    def margins(self) -> tuple[float, ...]:
        return tuple(b + 3.0 * math.sqrt(b * (1.0 - b) / self.reps) for b in self.bounds)

    @property
    def passed(self) -> bool:
        return all(f <= m for f, m in zip(self.freqs, self.margins))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "freqs": list(self.freqs),
            "bounds": list(self.bounds),
            "margins": list(self.margins),
            "reps": self.reps,
            "pass": self.passed,
        }


# ---------------------------------------------------------------------------
# Constrained minimiser
# ---------------------------------------------------------------------------


def tail_objective(split: SplitSketch, xi: NDArray[np.float64]) -> float:
    """``(beta - S xi)^T Sigma_{p-r} (beta - S xi)``."""
    diff = split.beta2 - split.s2 @ xi
    return float(np.sum(split.lam_tail * diff**2))


def xi_star_split(split: SplitSketch) -> NDArray[np.float64]:
    """Minimise the tail energy subject to ``beta1 = s1 xi``.

    The constraint is parameterised as a particular solution plus the null
    space of ``s1``; the free part is a plain least-squares problem.
    """
    r, k = split.r, split.k
    if k < r:
        raise InfeasibleConstraint(f"need k >= r, got k={k}, r={r}")
    u_a, sv, vt = np.linalg.svd(split.s1, full_matrices=True)
    if sv[-1] <= _RANK_TOL * max(sv[0], 1.0):
        raise InfeasibleConstraint("U_r^T S has rank below r")
    xi0 = vt[:r].T @ ((u_a.T @ split.beta1) / sv)
    if k == r or not np.any(split.lam_tail > 0):
        return xi0
    root = np.sqrt(split.lam_tail)
    M = root[:, None] * split.s2
    msv = np.linalg.svd(M, compute_uv=False)
    # cond(S^T Sigma_{p-r} S) = cond(M)^2
    if msv[-1] == 0 or (msv[0] / msv[-1]) ** 2 > MAX_COND:
        raise SingularSketch("S^T Sigma_{p-r} S is numerically singular")
    null = vt[r:].T
    target = root * split.beta2 - M @ xi0
    w, *_ = np.linalg.lstsq(M @ null, target, rcond=None)
    return xi0 + null @ w


def xi_star(
    beta: NDArray[np.float64], cov: CovFactor, r: int, S: SketchMatrix | NDArray[np.float64]
) -> NDArray[np.float64]:
    """Constrained minimiser ``xi*`` (length ``k``) for a full problem instance."""
    return xi_star_split(SplitSketch.from_cov(beta, cov, r, S))


def xi_star_closed_form(split: SplitSketch) -> NDArray[np.float64]:
    """Lagrange-multiplier closed form, written in the rotated frame.

    ``xi* = (S^T Sig S)^{-1} S^T (Sig beta - U_r lam*)`` with
    ``lam* = (U_r^T H U_r)^{-1} (U_r^T H Sig - U_r^T) beta`` and
    ``H = S (S^T Sig S)^{-1} S^T``, where ``Sig = Sigma_{p-r}``.
    Kept as an independent route for cross-checking :func:`xi_star_split`.
    """
    r = split.r
    S = np.vstack([split.s1, split.s2])
    beta = np.concatenate([split.beta1, split.beta2])
    sig_diag = np.concatenate([np.zeros(r), split.lam_tail])
    gram = S.T @ (sig_diag[:, None] * S)
    gram_inv = np.linalg.inv(gram)
    H = S @ gram_inv @ S.T
    Ur = np.zeros((S.shape[0], r))
    Ur[:r, :r] = np.eye(r)
    lam_star = np.linalg.solve(Ur.T @ H @ Ur, (Ur.T @ H @ (sig_diag * beta)) - Ur.T @ beta)
    return gram_inv @ S.T @ (sig_diag * beta - Ur @ lam_star)


def _sym_extremes(mat: NDArray[np.float64]) -> tuple[float, float]:
    eig = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    return float(eig[0]), float(eig[-1])


def l1_l2_bound(split: SplitSketch) -> BoundCertificate:
    """Certificate comparing the attained tail energy with ``2 L1 + 2 L2``."""
    g2 = split.s2.T @ (split.lam_tail[:, None] * split.s2)
    g1 = split.s1 @ split.s1.T
    lo2, hi2 = _sym_extremes(g2)
    lo1, hi1 = _sym_extremes(g1)
    if lo2 <= 0 or hi2 / lo2 > MAX_COND:
        raise SingularSketch("S2^T Lambda_{p-r} S2 is numerically singular")
    if lo1 <= 0 or hi1 / lo1 > MAX_COND:
        raise SingularSketch("S1 S1^T is numerically singular")
    l1 = hi2 / lo1 * float(split.beta1 @ split.beta1)
    l2 = (1.0 + (hi2 / lo2) * (hi1 / lo1)) * float(np.sum(split.lam_tail * split.beta2**2))
    residual = tail_objective(split, xi_star_split(split))
    return BoundCertificate(l1, l2, residual)


def eigen_lifting(spectrum: NDArray[np.float64], r: int, b: float, c1_const: float = LEMMA_C1) -> NDArray[np.float64]:
    """Lifted tail ``lam_i + (b / C1) * r * lam_{r+1} / (p - r)`` for ``i > r``."""
    lam = np.asarray(spectrum, dtype=np.float64)
    p = lam.shape[0]
    if not 1 <= r < p:
        raise DomainError(f"need 1 <= r < p, got r={r}, p={p}")
    if not (b > 0 and c1_const > 0):
        raise DomainError("b and C1 must be positive")
    return lam[r:] + (b / c1_const) * r * lam[r] / (p - r)


# ---------------------------------------------------------------------------
# Monte Carlo concentration checks
# ---------------------------------------------------------------------------


def _tally(
    count_chunk: Callable[[np.random.Generator, int], NDArray[np.int64]],
    reps: int,
    seed: int,
    workers: int = 1,
) -> NDArray[np.int64]:
    sizes = [min(_CHUNK, reps - start) for start in range(0, reps, _CHUNK)]

    def run(idx: int) -> NDArray[np.int64]:
        rng = np.random.default_rng(derive_seed(seed, idx))
        return np.asarray(count_chunk(rng, sizes[idx]), dtype=np.int64)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    return np.sum(parts, axis=0)


def quadratic_tail_check(
    spectrum: NDArray[np.float64], t: float, reps: int = 10_000, seed: int = 0, workers: int = 1
) -> McCheck:
    """Upper and lower tails of ``Z^T A Z`` for PSD ``A = diag(spectrum)``.

    Bad events: ``Z^T A Z > tr A + 2 |A|_F sqrt(t) + 2 |A| t`` and
    ``Z^T A Z < tr A - 2 |A|_F sqrt(t)``, each bounded by ``exp(-t)``.
    """
    lam = np.asarray(spectrum, dtype=np.float64)
    if lam.ndim != 1 or np.any(lam < 0):
        raise ConfigError("A must be given by a nonnegative spectrum")
    if not t > 0:
        raise ConfigError(f"t must be positive, got {t}")
    if reps < 1000:
        raise ConfigError(f"need at least 1000 replications, got {reps}")
    tr = float(lam.sum())
    frob = float(np.sqrt(np.sum(lam**2)))
    op = float(lam.max()) if lam.size else 0.0
    upper = tr + 2.0 * frob * math.sqrt(t) + 2.0 * op * t
    lower = tr - 2.0 * frob * math.sqrt(t)

    def count(rng: np.random.Generator, m: int) -> NDArray[np.int64]:
        q = (rng.standard_normal((m, lam.size)) ** 2) @ lam
        return np.array([np.count_nonzero(q > upper), np.count_nonzero(q < lower)])

    hits = _tally(count, reps, seed, workers)
    bound = min(1.0, math.exp(-t))
    return McCheck("quadratic_tail", (float(hits[0]) / reps, float(hits[1]) / reps), (bound, bound), reps)


def lambda_sketch_singular_check(
    spectrum: NDArray[np.float64], n_cols: int, t: float, reps: int = 10_000, seed: int = 0, workers: int = 1
) -> McCheck:
    """Frequency of ``s_min(Lambda S)`` or ``s_max(Lambda S)`` leaving
    ``[(1 - t) |lam|_2, (1 + t) |lam|_2]`` for Gaussian ``S`` (N x n_cols)."""
    lam = np.asarray(spectrum, dtype=np.float64)
    if lam.ndim != 1 or np.any(lam < 0) or not np.any(lam > 0):
        raise ConfigError("spectrum must be nonnegative with a positive entry")
    if not 0 < t < 1:
        raise ConfigError(f"t must lie in (0, 1), got {t}")
    if not 1 <= n_cols <= lam.size:
        raise ConfigError(f"need 1 <= n_cols <= N, got n_cols={n_cols}, N={lam.size}")
    if reps < 1:
        raise ConfigError("reps must be positive")
    l2 = float(np.sqrt(np.sum(lam**2)))
    l4 = float(np.sum(lam**4)) ** 0.25
    linf = float(lam.max())
    expo = min(l2**4 * t * t / (16.0 * l4**4), l2**2 * t / (4.0 * linf**2))
    log_bound = n_cols * math.log(9.0) + math.log(2.0) - expo
    bound = 1.0 if log_bound >= 0 else math.exp(log_bound)
    lo, hi = (1.0 - t) * l2, (1.0 + t) * l2

    def count(rng: np.random.Generator, m: int) -> NDArray[np.int64]:
        S = rng.standard_normal((m, lam.size, n_cols))
        sv = np.linalg.svd(lam[None, :, None] * S, compute_uv=False)
        bad = (sv[:, -1] < lo) | (sv[:, 0] > hi)
        return np.array([np.count_nonzero(bad)])

    hits = _tally(count, reps, seed, workers)
    return McCheck("lambda_sketch_singular", (float(hits[0]) / reps,), (bound,), reps)


def wishart_eigen_check(k: int, p: int, t: float, reps: int = 5000, seed: int = 0, workers: int = 1) -> McCheck:
    """Extreme eigenvalues of ``P P^T / p`` for a Gaussian ``k x p`` matrix ``P``.

    Bad events ``lam_max >= (1 + sqrt(k/p) + t)^2`` and
    ``lam_min <= (1 - sqrt(k/p) - t)^2``, each bounded by ``exp(-p t^2 / 2)``.
    The lower event is impossible when ``1 - sqrt(k/p) - t <= 0``.
    """
    if not 1 <= k <= p:
        raise ConfigError(f"need 1 <= k <= p, got k={k}, p={p}")
    if not t > 0:
        raise ConfigError(f"t must be positive, got {t}")
    if reps < 1:
        raise ConfigError("reps must be positive")
    ratio = math.sqrt(k / p)
    upper = (1.0 + ratio + t) ** 2
    base = 1.0 - ratio - t

    def count(rng: np.random.Generator, m: int) -> NDArray[np.int64]:
        P = rng.standard_normal((m, k, p))
        ev = np.linalg.svd(P, compute_uv=False) ** 2 / p
        hi = np.count_nonzero(ev[:, 0] >= upper)
        lo = np.count_nonzero(ev[:, -1] <= base * base) if base > 0 else 0
        return np.array([hi, lo])

    hits = _tally(count, reps, seed, workers)
    bound = min(1.0, math.exp(-p * t * t / 2.0))
    return McCheck("wishart_eigen", (float(hits[0]) / reps, float(hits[1]) / reps), (bound, bound), reps)


def matrix_norm_ineq_check(spectrum: NDArray[np.float64]) -> tuple[float, float, bool]:
    """``tr(S) / |S|_F`` against ``(tr(S^2)^2 / tr(S^4))^{1/8}``."""
    lam = np.abs(np.asarray(spectrum, dtype=np.float64))
    if lam.ndim != 1 or not np.any(lam > 0):
        raise DegenerateInput("spectrum must contain a nonzero eigenvalue")
    lam = lam / lam.max()
    s1 = float(lam.sum())
    s2 = float(np.sum(lam**2))
    s4 = float(np.sum(lam**4))
    lhs = s1 / math.sqrt(s2)
    rhs = (s2 * s2 / s4) ** 0.125
    return lhs, rhs, lhs >= rhs * (1.0 - 1e-10)


def spectral_spot_check(
    spectrum: NDArray[np.float64],
    r: int,
    k: int,
    reps: int = 1000,
    seed: int = 0,
    c2_const: float = LEMMA_C2,
) -> dict[str, float]:
    """Empirical frequencies of ``kappa(S2^T Lam S2) <= 4`` and
    ``kappa(S1 S1^T) <= C2`` for Gaussian rotated sketches."""
    lam = np.asarray(spectrum, dtype=np.float64)
    p = lam.size
    if not 1 <= r < p or k < r:
        raise ConfigError(f"need 1 <= r < p and k >= r, got r={r}, k={k}, p={p}")
    tail = lam[r:]
    applicable = k <= LEMMA_C1 * float(tail.sum()) / float(tail[0]) if tail[0] > 0 else False

    def count(rng: np.random.Generator, m: int) -> NDArray[np.int64]:
        s1 = rng.standard_normal((m, r, k))
        s2 = rng.standard_normal((m, p - r, k))
        sv2 = np.linalg.svd(np.sqrt(tail)[None, :, None] * s2, compute_uv=False) ** 2
        sv1 = np.linalg.svd(s1, compute_uv=False) ** 2
        ok2 = np.count_nonzero(sv2[:, 0] <= 4.0 * sv2[:, -1])
        ok1 = np.count_nonzero(sv1[:, 0] <= c2_const * sv1[:, -1])
        return np.array([ok2, ok1])

    hits = _tally(count, reps, seed)
    return {
        "kappa_tail_le_4": float(hits[0]) / reps,
        "kappa_head_le_c2": float(hits[1]) / reps,
        "applicable": bool(applicable),
        "reps": reps,
    }
