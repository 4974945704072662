"""Synthetic problem generators: spectra, bases, coefficients, designs, sketches.

Every generator is a pure function of its parameters and an integer seed.
Independent substreams for parallel Monte Carlo are derived with
:func:`derive_seed`, which hashes ``(master_seed, *keys)`` through
:class:`numpy.random.SeedSequence`; the result does not depend on which
worker draws it or in what order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, DegenerateInput, DimensionMismatch

__all__ = [
    "SPECTRUM_KINDS",
    "SpectrumModel",
    "CovFactor",
    "CoefficientVector",
    "SketchMatrix",
    "EntryDistribution",
    "derive_seed",
    "rng_from",
    "build_spectrum",
    "random_orthobasis",
    "draw_coefficients",
    "rescale_pair",
    "draw_design",
    "draw_response",
    "draw_sketch",
]

SPECTRUM_KINDS = ("explicit", "polynomial", "exponential", "invsqrt", "block", "logsquare", "fastmix")
COEFFICIENT_TAGS = ("zeros", "binom_mix", "gaussian")


def derive_seed(master_seed: int, *keys: int) -> int:
    """64-bit seed for the substream addressed by ``keys`` under ``master_seed``."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def rng_from(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumModel:
    """A family of covariance eigenvalues of dimension ``p``.

    Only the parameters relevant to ``kind`` are read: ``values`` for
    ``explicit``, ``alpha`` for ``polynomial``, ``gamma`` for ``exponential``
    and ``(m, d, rho)`` for ``block``.
    """

    kind: str
    p: int
    values: tuple[float, ...] | None = None
    alpha: float | None = None
    gamma: float | None = None
    m: int | None = None
    d: int | None = None
    rho: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in SPECTRUM_KINDS:
            raise ConfigError(f"unknown spectrum kind {self.kind!r}; expected one of {SPECTRUM_KINDS}")
        if self.p < 1:
            raise ConfigError(f"dimension p must be >= 1, got {self.p}")
        if self.kind == "explicit":
            if self.values is None or len(self.values) != self.p:
                raise ConfigError("explicit spectrum needs exactly p values")
            if any((not math.isfinite(v)) or v < 0 for v in self.values):
                raise ConfigError("explicit spectrum values must be finite and nonnegative")
        elif self.kind == "polynomial":
            if self.alpha is None or not self.alpha > 1:
                raise ConfigError(f"polynomial decay needs alpha > 1, got {self.alpha}")
        elif self.kind == "exponential":
            if self.gamma is None or not self.gamma > 0:
                raise ConfigError(f"exponential decay needs gamma > 0, got {self.gamma}")
        elif self.kind == "block":
            if self.m is None or self.d is None or self.rho is None:
                raise ConfigError("block spectrum needs m, d and rho")
            if self.m < 1 or self.d < 1 or self.m * self.d != self.p:
                raise ConfigError(f"block spectrum needs p = m*d, got p={self.p}, m={self.m}, d={self.d}")
            if not 0 <= self.rho < 1:
                raise ConfigError(f"block correlation must satisfy 0 <= rho < 1, got {self.rho}")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SpectrumModel":
        data = dict(data)
        if data.get("values") is not None:
            data["values"] = tuple(float(v) for v in data["values"])
            data.setdefault("p", len(data["values"]))
        unknown = set(data) - {"kind", "p", "values", "alpha", "gamma", "m", "d", "rho"}
        if unknown:
            raise ConfigError(f"unknown spectrum fields: {sorted(unknown)}")
        if "kind" not in data or "p" not in data:
            raise ConfigError("spectrum needs 'kind' and 'p'")
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "p": self.p}
        for name in ("values", "alpha", "gamma", "m", "d", "rho"):
            val = getattr(self, name)
            if val is not None:
                out[name] = list(val) if name == "values" else val
        return out

    def with_p(self, p: int) -> "SpectrumModel":
        return SpectrumModel(self.kind, p, self.values, self.alpha, self.gamma, self.m, self.d, self.rho)


@dataclass
class CovFactor:
    """Eigendecomposition ``Sigma = U diag(spectrum) U^T`` with descending spectrum."""

    basis: NDArray[np.float64]
    spectrum: NDArray[np.float64]

    def __post_init__(self) -> None:
        self.basis = np.asarray(self.basis, dtype=np.float64)
        self.spectrum = np.asarray(self.spectrum, dtype=np.float64)
        p = self.spectrum.shape[0]
        if self.basis.shape != (p, p):
            raise DimensionMismatch(f"basis shape {self.basis.shape} does not match spectrum length {p}")
        if np.any(self.spectrum < 0):
            raise ConfigError("spectrum must be nonnegative")
        if np.any(np.diff(self.spectrum) > 0):
            raise ConfigError("spectrum must be sorted in descending order")

    @property
    def p(self) -> int:
        return int(self.spectrum.shape[0])

    def covariance(self) -> NDArray[np.float64]:
        cov = (self.basis * self.spectrum) @ self.basis.T
        return 0.5 * (cov + cov.T)

    def sqrt(self) -> NDArray[np.float64]:
        """Symmetric square root ``U diag(sqrt(lambda)) U^T``."""
        root = (self.basis * np.sqrt(self.spectrum)) @ self.basis.T
        return 0.5 * (root + root.T)

    def apply_sqrt(self, mat: NDArray[np.float64]) -> NDArray[np.float64]:
        """``Sigma^{1/2} @ mat`` without forming the p x p root."""
        return self.basis @ (np.sqrt(self.spectrum)[:, None] * (self.basis.T @ mat))

    def rotate(self, beta: NDArray[np.float64]) -> NDArray[np.float64]:
        """``U^T beta``."""
        return self.basis.T @ np.asarray(beta, dtype=np.float64)

    def frobenius(self) -> float:
        return float(np.sqrt(np.sum(self.spectrum**2)))

    def signal(self, beta: NDArray[np.float64]) -> float:
        """Mahalanobis signal ``beta^T Sigma beta``."""
        rot = self.rotate(beta)
        return float(np.sum(self.spectrum * rot**2))


@dataclass
class CoefficientVector:
    beta: NDArray[np.float64]
    rotated: NDArray[np.float64] | None = None

    def rotate_against(self, cov: CovFactor) -> NDArray[np.float64]:
        self.rotated = cov.rotate(self.beta)
        return self.rotated


@dataclass
class SketchMatrix:
    """``p x k`` sketch with i.i.d. N(0, 1) entries, reproducible from ``seed``."""

    entries: NDArray[np.float64]
    seed: int | None = None

    @property
    def p(self) -> int:
        return int(self.entries.shape[0])

    @property
    def k(self) -> int:
        return int(self.entries.shape[1])

    def leading(self, k: int) -> "SketchMatrix":
        """Nested sub-sketch made of the first ``k`` columns."""
        if not 1 <= k <= self.k:
            raise ConfigError(f"cannot take {k} leading columns of a {self.k}-column sketch")
        return SketchMatrix(self.entries[:, :k], self.seed)


@dataclass(frozen=True)
class EntryDistribution:
    """Law of i.i.d. design or noise entries.

    ``student_t`` entries are used raw; with ``df <= 2`` their variance is
    infinite and :attr:`infinite_variance` reports it.
    """

    kind: str = "gaussian"
    df: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "student_t", "lognormal_standardized"):
            raise ConfigError(f"unknown entry distribution {self.kind!r}")
        if self.kind == "student_t" and (self.df is None or not self.df > 0):
            raise ConfigError(f"student_t needs df > 0, got {self.df}")

    @property
    def infinite_variance(self) -> bool:
        return self.kind == "student_t" and self.df is not None and self.df <= 2

    @property
    def unit_variance(self) -> bool:
        return self.kind in ("gaussian", "lognormal_standardized")

    def sample(self, rng: np.random.Generator, size: tuple[int, ...]) -> NDArray[np.float64]:
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        if self.kind == "student_t":
            return rng.standard_t(self.df, size)
        raw = rng.standard_normal(size)
        mean = math.exp(0.5)
        sd = math.sqrt((math.e - 1.0) * math.e)
        return (np.exp(raw) - mean) / sd

    @classmethod
    def from_dict(cls, data: dict[str, Any] | str) -> "EntryDistribution":
        if isinstance(data, str):
            return cls(data)
        return cls(data.get("kind", "gaussian"), data.get("df"))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.df is not None:
            out["df"] = self.df
        return out


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def build_spectrum(model: SpectrumModel) -> NDArray[np.float64]:
    """Eigenvalues of ``model`` in descending order."""
    p = model.p
    j = np.arange(1, p + 1, dtype=np.float64)
    if model.kind == "explicit":
        lam = np.asarray(model.values, dtype=np.float64)
    elif model.kind == "polynomial":
        lam = j ** (-model.alpha)
    elif model.kind == "exponential":
        lam = np.exp(-(j**model.gamma))
    elif model.kind == "invsqrt":
        lam = j**-0.5
    elif model.kind == "logsquare":
        lam = np.log(j + 1.0) ** -2
    elif model.kind == "fastmix":
        lam = j ** (-2.0 / 3.0) / np.log(j + 1.0)
    else:  # block
        rho = float(model.rho)
        lam = np.full(p, 1.0 - rho)
        lam[: model.m] = (1.0 - rho) + rho * model.d
    return np.sort(lam)[::-1].copy()


def random_orthobasis(p: int, seed: int | np.random.Generator) -> NDArray[np.float64]:
    """Haar-distributed orthogonal ``p x p`` matrix (QR of a Gaussian matrix,
    columns sign-corrected so that ``R`` has a positive diagonal)."""
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    rng = rng_from(seed)
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def draw_coefficients(p: int, dist_tag: str, seed: int | np.random.Generator) -> CoefficientVector:
    """I.i.d. coefficients: ``zeros``, ``gaussian``, or ``binom_mix``
    (Binomial(3, 0.3) + 0.3 N(0, 1), the binomial drawn as three Bernoulli trials)."""
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    if dist_tag not in COEFFICIENT_TAGS:
        raise ConfigError(f"unknown coefficient distribution {dist_tag!r}; expected one of {COEFFICIENT_TAGS}")
    if dist_tag == "zeros":
        return CoefficientVector(np.zeros(p))
    rng = rng_from(seed)
    if dist_tag == "gaussian":
        return CoefficientVector(rng.standard_normal(p))
    trials = (rng.random((p, 3)) < 0.3).sum(axis=1).astype(np.float64)
    return CoefficientVector(trials + 0.3 * rng.standard_normal(p))


def rescale_pair(
    beta: NDArray[np.float64], cov: CovFactor, c1: float, c2: float
) -> tuple[NDArray[np.float64], CovFactor]:
    """Scale ``beta`` to Euclidean norm ``c1`` and the spectrum to Frobenius norm ``c2``."""
    beta = np.asarray(beta, dtype=np.float64)
    if c1 < 0 or c2 < 0:
        raise ConfigError("target norms must be nonnegative")
    if c1 == 0:
        new_beta = np.zeros_like(beta)
    else:
        norm = float(np.linalg.norm(beta))
        if norm == 0:
            raise DegenerateInput("cannot rescale a zero coefficient vector to a positive norm")
        new_beta = beta * (c1 / norm)
    if c2 == 0:
        new_spec = np.zeros_like(cov.spectrum)
    else:
        frob = cov.frobenius()
        if frob == 0:
            raise DegenerateInput("cannot rescale a zero spectrum to a positive Frobenius norm")
        new_spec = cov.spectrum * (c2 / frob)
    return new_beta, CovFactor(cov.basis, new_spec)


def draw_design(
    n: int, cov: CovFactor, dist: EntryDistribution, seed: int | np.random.Generator
) -> NDArray[np.float64]:
    """``n x p`` design with rows ``Sigma^{1/2} z_i``, ``z_i`` i.i.d. from ``dist``."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    rng = rng_from(seed)
    z = dist.sample(rng, (n, cov.p))
    # rows x_i = root z_i with a symmetric root, i.e. X = Z root
    return cov.apply_sqrt(z.T).T


def draw_response(
    X: NDArray[np.float64],
    beta: NDArray[np.float64],
    sigma: float,
    noise_dist: EntryDistribution,
    seed: int | np.random.Generator,
) -> NDArray[np.float64]:
    """``y = X beta + sigma z``."""
    X = np.asarray(X, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if X.ndim != 2 or beta.ndim != 1 or X.shape[1] != beta.shape[0]:
        raise DimensionMismatch(f"X {X.shape} and beta {beta.shape} do not conform")
    rng = rng_from(seed)
    z = noise_dist.sample(rng, (X.shape[0],))
    return X @ beta + sigma * z


def draw_sketch(p: int, k: int, seed: int) -> SketchMatrix:
    """Gaussian sketching matrix of shape ``p x k``."""
    if k < 1:
        raise ConfigError(f"sketch dimension k must be >= 1, got {k}")
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    rng = np.random.default_rng(int(seed))
    return SketchMatrix(rng.standard_normal((p, k)), int(seed))
