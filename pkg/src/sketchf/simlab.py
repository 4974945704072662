"""Monte Carlo experiment runner for the sketched F-test.

Four experiments are supported:

``table1``
    Rejection frequencies of the sketched test over a grid of coefficient
    norms ``c1`` and covariance Frobenius norms ``c2``.
``signal_stability``
    The retained signal fraction ``Delta_k^2 / beta^T Sigma beta`` across
    a grid of dimensions and nested sketch sizes.
``error_curve``
    Type II error of the sketched test with ``n = floor(10 log^2 p)``.
``null_calibration``
    Kolmogorov-Smirnov distance between the statistic, for a fixed design
    and sketch, and its exact ``F(k, n - k)`` null law.

Each replication draws from its own substream, seeded by
``derive_seed(master_seed, case, grid index, replication)``, so the output
is a pure function of the configuration and does not depend on the number
of workers.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ConfigError, SingularSketch
from .ftest import projected_f
from .intrinsic import example_k_formula
from .models import (
    CovFactor,
    EntryDistribution,
    SpectrumModel,
    build_spectrum,
    derive_seed,
    draw_coefficients,
    draw_design,
    random_orthobasis,
)
from .numkit import f_cdf
from .power import delta_k_sq_rotated, power_zc

__all__ = [
    "EXPERIMENTS",
    "CONFIG_SCHEMA",
    "KPolicy",
    "SimulationConfig",
    "ExperimentResult",
    "preset",
    "run_experiment",
    "ks_statistic",
    "emit",
    "to_csv",
    "main",
]

EXPERIMENTS = ("table1", "signal_stability", "error_curve", "null_calibration")
SEED_ENV = "SKETCHF_SEED"
_BLOCK = 50
_FIXED_KEY = 2**31 - 1
_MIN_VERDICT_REPS = 100

_DIST_SCHEMA: dict[str, Any] = {
    "oneOf": [
        {"type": "string", "enum": ["gaussian", "student_t", "lognormal_standardized"]},
        {
            "type": "object",
            "properties": {
                "kind": {"type": "string", "enum": ["gaussian", "student_t", "lognormal_standardized"]},
                "df": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
    ]
}

_SPECTRUM_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "kind": {"type": "string"},
        "values": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "alpha": {"type": "number"},
        "gamma": {"type": "number"},
        "m": {"type": "integer"},
        "d": {"type": "integer"},
        "rho": {"type": "number"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_K_POLICY_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "kind": {"type": "string", "enum": ["half_n", "formula", "fixed", "log_p"]},
        "alpha_decay": {"type": "number", "exclusiveMinimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "multiplier": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_CASE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "spectrum": _SPECTRUM_SCHEMA,
        "k_policy": _K_POLICY_SCHEMA,
        "design_entries": _DIST_SCHEMA,
        "noise": _DIST_SCHEMA,
    },
    "required": ["name"],
    "additionalProperties": False,
}

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "SimulationConfig",
    "type": "object",
    "properties": {
        "experiment": {"type": "string", "enum": list(EXPERIMENTS)},
        "n": {"type": "integer", "minimum": 2, "description": "sample size; derived from p when omitted"},
        "p": {"type": "integer", "minimum": 1},
        "p_grid": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "reps": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "k_policy": _K_POLICY_SCHEMA,
        "spectrum": _SPECTRUM_SCHEMA,
        "design_entries": _DIST_SCHEMA,
        "noise": _DIST_SCHEMA,
        "coefficients": {"type": "string", "enum": ["binom_mix", "gaussian"]},
        "scalings": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2, "maxItems": 2},
        },
        "cases": {"type": "array", "items": _CASE_SCHEMA, "minItems": 1},
        "sigma_sq": {"type": "number", "minimum": 0},
        "signal": {"type": "number", "minimum": 0, "description": "beta^T Sigma beta for error_curve"},
        "k_multipliers": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "workers": {"type": "integer", "minimum": 1},
    },
    "required": ["experiment", "reps", "master_seed"],
    "additionalProperties": False,
}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KPolicy:
    """Rule for the sketch dimension given ``(n, p)``.

    ``half_n``: ``min(floor(n/2), p - 1)``; ``formula``: ``floor(min(3 (log p)^{1/(a-1)}, n/2))``;
    ``fixed``: a given ``k``; ``log_p``: ``floor(multiplier * log p)``.
    """

    kind: str = "half_n"
    alpha_decay: float | None = None
    k: int | None = None
    multiplier: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "formula" and (self.alpha_decay is None or not self.alpha_decay > 1):
            raise ConfigError("k_policy 'formula' needs alpha_decay > 1")
        if self.kind == "fixed" and (self.k is None or self.k < 1):
            raise ConfigError("k_policy 'fixed' needs k >= 1")
        if self.kind == "log_p" and (self.multiplier is None or not self.multiplier > 0):
            raise ConfigError("k_policy 'log_p' needs a positive multiplier")
        if self.kind not in ("half_n", "formula", "fixed", "log_p"):
            raise ConfigError(f"unknown k_policy {self.kind!r}")

    def resolve(self, n: int, p: int) -> int:
        if self.kind == "half_n":
            # n = 10 log^2 p exceeds p on small grids; a sketch wider than p is pointless
            k = min(n // 2, p - 1)
        elif self.kind == "formula":
            k = example_k_formula(p, n, float(self.alpha_decay))
        elif self.kind == "fixed":
            k = int(self.k)
        else:
            k = math.floor(float(self.multiplier) * math.log(p))
        if not 1 <= k < n or k > p:
            raise ConfigError(f"sketch dimension k={k} invalid for n={n}, p={p}")
        return k

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "KPolicy":
        return cls(data["kind"], data.get("alpha_decay"), data.get("k"), data.get("multiplier"))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        for name in ("alpha_decay", "k", "multiplier"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        return out


@dataclass(frozen=True)
class Case:
    name: str
    spectrum: dict[str, Any]
    k_policy: KPolicy
    design: EntryDistribution
    noise: EntryDistribution

    def spectrum_model(self, p: int) -> SpectrumModel:
        return SpectrumModel.from_dict({**self.spectrum, "p": p})


def sample_size(p: int) -> int:
    """``floor(10 log^2 p)``."""
    return math.floor(10.0 * math.log(p) ** 2)


@dataclass
class SimulationConfig:
    experiment: str
    reps: int
    master_seed: int
    n: int | None = None
    p: int | None = None
    p_grid: list[int] | None = None
    alpha: float = 0.05
    k_policy: dict[str, Any] = field(default_factory=lambda: {"kind": "half_n"})
    spectrum: dict[str, Any] = field(default_factory=lambda: {"kind": "polynomial", "alpha": 2.0})
    design_entries: Any = "gaussian"
    noise: Any = "gaussian"
    coefficients: str = "binom_mix"
    scalings: list[list[float]] | None = None
    cases: list[dict[str, Any]] | None = None
    sigma_sq: float = 1.0
    signal: float = 1.0
    k_multipliers: list[int] = field(default_factory=lambda: [1, 2, 4])
    workers: int = 1

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.experiment in ("table1", "null_calibration"):
            if self.n is None or self.p is None:
                raise ConfigError(f"{self.experiment} needs n and p")
        else:
            if not self.p_grid:
                raise ConfigError(f"{self.experiment} needs a p_grid")
        if self.experiment == "table1" and not self.scalings:
            raise ConfigError("table1 needs scalings")
        if sorted(set(self.k_multipliers)) != list(self.k_multipliers):
            raise ConfigError("k_multipliers must be strictly increasing")
        # validate every case eagerly so errors surface before any work
        self.resolved_cases()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimulationConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid simulation config: {exc.message}") from exc
        return cls(**data)

    @classmethod
    def load(cls, path: str | os.PathLike[str]) -> "SimulationConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for name in self.__dataclass_fields__:
            val = getattr(self, name)
            if val is not None:
                out[name] = val
        return out

    def resolved_cases(self) -> list[Case]:
        raw = self.cases or [{"name": "default"}]
        cases = []
        for entry in raw:
            cases.append(
                Case(
                    entry["name"],
                    dict(entry.get("spectrum", self.spectrum)),
                    KPolicy.from_dict(entry.get("k_policy", self.k_policy)),
                    EntryDistribution.from_dict(entry.get("design_entries", self.design_entries)),
                    EntryDistribution.from_dict(entry.get("noise", self.noise)),
                )
            )
        return cases

    def grid(self) -> list[int]:
        return list(self.p_grid) if self.p_grid else [int(self.p)]  # type: ignore[arg-type]

    def n_for(self, p: int) -> int:
        return int(self.n) if self.n is not None else sample_size(p)


def preset(name: str) -> SimulationConfig:
    """Configurations matching the standard simulation protocol."""
    if name == "table1":
        return SimulationConfig(
            experiment="table1",
            n=50,
            p=500,
            reps=500,
            master_seed=20240601,
            coefficients="binom_mix",
            scalings=[[c1, c2] for c2 in (50.0, 100.0, 300.0) for c1 in (0.0, 1.0, 5.0)],
            cases=[
                {
                    "name": "slow",
                    "spectrum": {"kind": "logsquare"},
                    "k_policy": {"kind": "half_n"},
                    "design_entries": "gaussian",
                },
                {
                    "name": "fast",
                    "spectrum": {"kind": "fastmix"},
                    "k_policy": {"kind": "log_p", "multiplier": 2.0},
                    "design_entries": {"kind": "student_t", "df": 2.0},
                },
            ],
        )
    if name == "signal_stability":
        return SimulationConfig(
            experiment="signal_stability",
            p_grid=[100, 300, 1000, 2000, 5000, 10000],
            reps=1000,
            master_seed=20240602,
            cases=[
                {
                    "name": f"poly{a}",
                    "spectrum": {"kind": "polynomial", "alpha": float(a)},
                    "k_policy": {"kind": "formula", "alpha_decay": float(a)},
                }
                for a in (2, 4)
            ],
        )
    if name == "error_curve":
        return SimulationConfig(
            experiment="error_curve",
            p_grid=[100, 300, 1000, 2000],
            reps=200,
            master_seed=20240603,
            signal=1.0,
            cases=[{"name": f"poly{a}", "spectrum": {"kind": "polynomial", "alpha": float(a)}} for a in (2, 4)],
        )
    if name == "null_calibration":
        return SimulationConfig(
            experiment="null_calibration",
            n=100,
            p=300,
            reps=2000,
            master_seed=20240604,
            spectrum={"kind": "invsqrt"},
            k_policy={"kind": "fixed", "k": 40},
            cases=[
                {"name": "gaussian", "design_entries": "gaussian"},
                {"name": "t5", "design_entries": {"kind": "student_t", "df": 5.0}},
            ],
        )
    raise ConfigError(f"unknown preset {name!r}; expected one of {EXPERIMENTS}")


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    experiment: str
    key_names: tuple[str, ...]
    value_names: tuple[str, ...]
    rows: list[tuple[tuple[Any, ...], tuple[Any, ...]]]
    verdicts: dict[str, bool]
    seed: int

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def row_dicts(self) -> list[dict[str, Any]]:
        return [dict(zip(self.key_names + self.value_names, keys + vals)) for keys, vals in self.rows]

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "key_names": list(self.key_names),
            "value_names": list(self.value_names),
            "rows": [[list(k), list(v)] for k, v in self.rows],
            "verdicts": self.verdicts,
            "seed": self.seed,
        }
        return json.dumps(payload, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentResult":
        data = json.loads(text)
        return cls(
            data["experiment"],
            tuple(data["key_names"]),
            tuple(data["value_names"]),
            [(tuple(k), tuple(v)) for k, v in data["rows"]],
            dict(data["verdicts"]),
            int(data["seed"]),
        )


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(result: ExperimentResult) -> str:
    """Header ``experiment,<keys>,<values>,seed`` then one line per row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["experiment", *result.key_names, *result.value_names, "seed"])
    for keys, vals in result.rows:
        writer.writerow([result.experiment, *map(_cell, keys), *map(_cell, vals), str(result.seed)])
    return buf.getvalue()


def emit(result: ExperimentResult, fmt: str, path: str | os.PathLike[str]) -> Path:
    """Write ``result`` as UTF-8 CSV or JSON; ``path`` may be a directory."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {fmt!r}")
    target = Path(path)
    if target.is_dir():
        target = target / f"{result.experiment}.{fmt}"
    text = to_csv(result) if fmt == "csv" else result.to_json()
    target.write_text(text, encoding="utf-8")
    return target


# ---------------------------------------------------------------------------
# Replication kernels
# ---------------------------------------------------------------------------


def _unit_direction(rng: np.random.Generator, p: int) -> np.ndarray:
    v = rng.standard_normal(p)
    return v / np.linalg.norm(v)


def _rep_table1(cfg: SimulationConfig, case: Case, p: int, rng: np.random.Generator) -> list[int | None]:
    n = cfg.n_for(p)
    k = case.k_policy.resolve(n, p)
    lam0 = build_spectrum(case.spectrum_model(p))
    frob0 = float(np.linalg.norm(lam0))
    cov0 = CovFactor(random_orthobasis(p, rng), lam0)
    beta0 = draw_coefficients(p, cfg.coefficients, rng).beta
    Z = case.design.sample(rng, (n, p))
    z = case.noise.sample(rng, (n,))
    S = rng.standard_normal((p, k))
    # one draw serves every (c1, c2) cell: rescaling Sigma scales X S by a
    # constant, which leaves the test unchanged, so only y needs rebuilding
    cols = Z @ cov0.apply_sqrt(np.column_stack([S, beta0 / np.linalg.norm(beta0)]))
    A, xb = cols[:, :k], cols[:, k]
    sigma = math.sqrt(cfg.sigma_sq)
    out: list[int | None] = []
    for c1, c2 in cfg.scalings or []:
        y = math.sqrt(c2 / frob0) * c1 * xb + sigma * z
        try:
            out.append(int(projected_f(A, y, cfg.alpha).reject))
        except SingularSketch:
            out.append(None)
    return out


def _rep_signal(cfg: SimulationConfig, case: Case, p: int, rng: np.random.Generator) -> list[float | None]:
    n = cfg.n_for(p)
    k = case.k_policy.resolve(n, p)
    lam = build_spectrum(case.spectrum_model(p))
    # with a Haar basis independent of S and beta, U^T S is Gaussian and
    # U^T beta is a uniform direction, independent of each other
    beta_rot = _unit_direction(rng, p)
    G = rng.standard_normal((p, k * cfg.k_multipliers[-1]))
    signal = float(np.sum(lam * beta_rot**2))
    out: list[float | None] = []
    for mult in cfg.k_multipliers:
        try:
            out.append(delta_k_sq_rotated(beta_rot, lam, G[:, : mult * k]) / signal)
        except SingularSketch:
            out.append(None)
    return out


def _rep_error_curve(cfg: SimulationConfig, case: Case, p: int, rng: np.random.Generator) -> tuple[int | None, float]:
    n = cfg.n_for(p)
    k = case.k_policy.resolve(n, p)
    lam = build_spectrum(case.spectrum_model(p))
    beta_rot = _unit_direction(rng, p)
    beta_rot *= math.sqrt(cfg.signal / float(np.sum(lam * beta_rot**2)))
    sigma = math.sqrt(cfg.sigma_sq)
    if case.design.kind == "gaussian":
        # Gaussian rows are rotation invariant: work in the eigenbasis
        W = case.design.sample(rng, (n, p)) * np.sqrt(lam)
        G = rng.standard_normal((p, k))
        A, xb = W @ G, W @ beta_rot
    else:
        cov = CovFactor(random_orthobasis(p, rng), lam)
        X = draw_design(n, cov, case.design, rng)
        A, xb = X @ rng.standard_normal((p, k)), X @ (cov.basis @ beta_rot)
    y = xb + sigma * case.noise.sample(rng, (n,))
    zc = power_zc(n, lam, float(np.sum((lam * beta_rot) ** 2)), cfg.sigma_sq, cfg.alpha) if cfg.sigma_sq > 0 else 1.0
    try:
        return int(projected_f(A, y, cfg.alpha).reject), zc
    except SingularSketch:
        return None, zc


_FIXED_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def _fixed_projection(cfg: SimulationConfig, seed: int, case_idx: int, case: Case, p: int) -> np.ndarray:
    key = (seed, case_idx, p)
    if key not in _FIXED_CACHE:
        n = cfg.n_for(p)
        k = case.k_policy.resolve(n, p)
        rng = np.random.default_rng(derive_seed(seed, case_idx, 0, _FIXED_KEY))
        cov = CovFactor(random_orthobasis(p, rng), build_spectrum(case.spectrum_model(p)))
        X = draw_design(n, cov, case.design, rng)
        _FIXED_CACHE.clear()
        _FIXED_CACHE[key] = X @ rng.standard_normal((p, k))
    return _FIXED_CACHE[key]


def _rep_null(
    cfg: SimulationConfig, case: Case, p: int, rng: np.random.Generator, A: np.ndarray
) -> tuple[float, int]:
    y = math.sqrt(cfg.sigma_sq) * case.noise.sample(rng, (A.shape[0],))
    report = projected_f(A, y, cfg.alpha)
    return report.statistic, int(report.reject)


def _run_block(task: tuple[dict[str, Any], int, int, int, int, int]) -> list[Any]:
    cfg_dict, seed, case_idx, p_idx, start, stop = task
    cfg = SimulationConfig(**cfg_dict)
    case = cfg.resolved_cases()[case_idx]
    p = cfg.grid()[p_idx]
    out = []
    with threadpool_limits(limits=1):
        fixed = _fixed_projection(cfg, seed, case_idx, case, p) if cfg.experiment == "null_calibration" else None
        for rep in range(start, stop):
            rng = np.random.default_rng(derive_seed(seed, case_idx, p_idx, rep))
            if cfg.experiment == "table1":
                out.append(_rep_table1(cfg, case, p, rng))
            elif cfg.experiment == "signal_stability":
                out.append(_rep_signal(cfg, case, p, rng))
            elif cfg.experiment == "error_curve":
                out.append(_rep_error_curve(cfg, case, p, rng))
            else:
                out.append(_rep_null(cfg, case, p, rng, fixed))
    return out


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def ks_statistic(sample: Sequence[float], cdf) -> float:
    """One-sample Kolmogorov-Smirnov distance between ``sample`` and ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    m = x.size
    if m == 0:
        raise ConfigError("KS statistic needs a nonempty sample")
    F = np.array([cdf(v) for v in x])
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - F), np.max(F - (i - 1) / m)))


def _rate(hits: list[int | None]) -> tuple[float, float, int, int]:
    valid = [h for h in hits if h is not None]
    reps = len(valid)
    skipped = len(hits) - reps
    if reps == 0:
        return None, None, 0, skipped  # type: ignore[return-value]
    rate = sum(valid) / reps
    return rate, math.sqrt(rate * (1.0 - rate) / reps), reps, skipped


def _aggregate(
    cfg: SimulationConfig, seed: int, outcomes: dict[tuple[int, int], list[Any]]
) -> ExperimentResult:
    cases = cfg.resolved_cases()
    grid = cfg.grid()
    rows: list[tuple[tuple[Any, ...], tuple[Any, ...]]] = []
    verdicts: dict[str, bool] = {}
    exp = cfg.experiment

    if exp == "table1":
        keys = ("case", "c2", "c1")
        values = ("rate", "stderr", "reps", "skipped", "k")
        p = grid[0]
        for ci, case in enumerate(cases):
            reps_out = outcomes[(ci, 0)]
            k = case.k_policy.resolve(cfg.n_for(p), p)
            for j, (c1, c2) in enumerate(cfg.scalings or []):
                rate, se, reps, skipped = _rate([r[j] for r in reps_out])
                rows.append(((case.name, float(c2), float(c1)), (rate, se, reps, skipped, k)))
                if c1 == 0 and reps >= _MIN_VERDICT_REPS:
                    verdicts[f"type1:{case.name}:c2={c2:g}"] = abs(rate - cfg.alpha) <= 0.03
    elif exp == "signal_stability":
        keys = ("case", "p", "k_mult")
        values = ("mean", "stderr", "reps", "skipped", "q025", "q975", "n", "k")
        for ci, case in enumerate(cases):
            for pi, p in enumerate(grid):
                n = cfg.n_for(p)
                k = case.k_policy.resolve(n, p)
                means = []
                for j, mult in enumerate(cfg.k_multipliers):
                    vals = np.array([r[j] for r in outcomes[(ci, pi)] if r[j] is not None])
                    skipped = len(outcomes[(ci, pi)]) - vals.size
                    if vals.size:
                        mean = float(vals.mean())
                        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
                        q025, q975 = (float(v) for v in np.quantile(vals, [0.025, 0.975]))
                    else:
                        mean = se = q025 = q975 = None  # type: ignore[assignment]
                    rows.append(((case.name, p, mult), (mean, se, int(vals.size), skipped, q025, q975, n, mult * k)))
                    means.append(mean)
                    if vals.size:
                        verdicts.setdefault(f"bounded:{case.name}", True)
                        verdicts[f"bounded:{case.name}"] &= bool(np.all((vals >= 0) & (vals <= 1)))
                known = [m for m in means if m is not None]
                verdicts[f"nested:{case.name}:p={p}"] = all(a <= b for a, b in zip(known, known[1:]))
    elif exp == "error_curve":
        keys = ("case", "p")
        values = ("rate", "stderr", "reps", "skipped", "n", "k", "zc_theoretical_power")
        for ci, case in enumerate(cases):
            for pi, p in enumerate(grid):
                n = cfg.n_for(p)
                k = case.k_policy.resolve(n, p)
                res = outcomes[(ci, pi)]
                rate, se, reps, skipped = _rate([None if r is None else 1 - r for r, _ in res])
                zc = float(np.mean([z for _, z in res]))
                rows.append(((case.name, p), (rate, se, reps, skipped, n, k, zc)))
    else:
        keys = ("case",)
        values = ("ks", "ks_threshold", "rate", "stderr", "reps", "n", "p", "k")
        p = grid[0]
        n = cfg.n_for(p)
        for ci, case in enumerate(cases):
            k = case.k_policy.resolve(n, p)
            res = outcomes[(ci, 0)]
            stats = [s for s, _ in res]
            ks = ks_statistic(stats, lambda v: f_cdf(v, k, n - k))
            threshold = 1.36 / math.sqrt(len(res)) + 0.01
            rate, se, reps, _ = _rate([r for _, r in res])
            rows.append(((case.name,), (ks, threshold, rate, se, reps, n, p, k)))
            if reps >= _MIN_VERDICT_REPS:
                verdicts[f"ks:{case.name}"] = ks < threshold
    return ExperimentResult(exp, keys, values, rows, verdicts, seed)


def resolve_seed(cfg: SimulationConfig) -> int:
    """``master_seed``, overridden by the ``SKETCHF_SEED`` environment variable."""
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return int(cfg.master_seed)
    try:
        seed = int(raw, 0)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from exc
    if not 0 <= seed < 2**64:
        raise ConfigError(f"{SEED_ENV} must fit in 64 bits")
    return seed


def run_experiment(cfg: SimulationConfig, workers: int | None = None) -> ExperimentResult:
    """Run every replication of ``cfg`` and reduce them to an :class:`ExperimentResult`."""
    workers = int(workers if workers is not None else cfg.workers)
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    seed = resolve_seed(cfg)
    cfg_dict = cfg.to_dict()
    cases = cfg.resolved_cases()
    grid = cfg.grid()
    tasks = []
    for ci in range(len(cases)):
        for pi in range(len(grid)):
            for start in range(0, cfg.reps, _BLOCK):
                tasks.append((cfg_dict, seed, ci, pi, start, min(start + _BLOCK, cfg.reps)))
    if workers == 1:
        results = [_run_block(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, tasks))
    outcomes: dict[tuple[int, int], list[Any]] = {}
    for task, res in zip(tasks, results):
        outcomes.setdefault((task[2], task[3]), []).extend(res)
    return _aggregate(cfg, seed, outcomes)


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------


def build_parser(prog: str = "simlab") -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=prog, description="Monte Carlo experiments for the sketched F-test")
    add_subcommands(parser)
    return parser


def add_subcommands(parser: argparse.ArgumentParser) -> None:
    sub = parser.add_subparsers(dest="simlab_cmd", required=True)
    run = sub.add_parser("run", help="run one experiment")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON configuration file")
    src.add_argument("--preset", choices=EXPERIMENTS, help="built-in configuration")
    run.add_argument("--out", required=True, help="output directory or file")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--reps", type=int, default=None, help="override the replication count")
    sub.add_parser("schema", help="print the configuration JSON schema")
    pre = sub.add_parser("preset", help="print a built-in configuration")
    pre.add_argument("name", choices=EXPERIMENTS)


def run_cli(args: argparse.Namespace) -> int:
    if args.simlab_cmd == "schema":
        print(json.dumps(CONFIG_SCHEMA, indent=2))
        return 0
    if args.simlab_cmd == "preset":
        print(json.dumps(preset(args.name).to_dict(), indent=2))
        return 0
    cfg = SimulationConfig.load(args.config) if args.config else preset(args.preset)
    if args.reps is not None:
        cfg = SimulationConfig(**{**cfg.to_dict(), "reps": args.reps})
    out = Path(args.out)
    if args.out.endswith(os.sep) or not out.suffix:
        out.mkdir(parents=True, exist_ok=True)
    result = run_experiment(cfg, args.workers)
    path = emit(result, args.format, out)
    for name, ok in result.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}", file=sys.stderr)
    print(str(path))
    return 0 if result.passed else 1


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run_cli(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
