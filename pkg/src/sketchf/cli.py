"""``sketchf`` command line: run tests, power calculations, dimension checks and oracles."""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import oracles, simlab
from .errors import SketchFError
from .ftest import classical_f, sketched_f
from .intrinsic import default_eta, intrinsic_conditions, min_intrinsic_dim, recommend_k
from .models import (
    CovFactor,
    SpectrumModel,
    build_spectrum,
    derive_seed,
    draw_coefficients,
    draw_sketch,
    random_orthobasis,
)
from .power import power_profile

_PROBLEM_HELP = """\
Problem JSON fields:
  spectrum     {"kind": ..., "p": ..., ...} spectrum model
  basis        "identity" (default) or "haar"
  beta         explicit coefficient list, or
  coefficients {"dist": "binom_mix"|"gaussian"}
  signal       optional target for beta^T Sigma beta
  n, k         sample size and sketch size (k defaults to floor(n/2))
  sigma_sq, alpha, seed
"""


def _load_json(arg: str) -> dict[str, Any]:
    """Parse ``arg`` as a JSON document, a file path, or ``-`` for stdin."""
    if arg == "-":
        return json.load(sys.stdin)
    text = arg.strip()
    if text.startswith("{"):
        return json.loads(text)
    with open(arg, encoding="utf-8") as fh:
        return json.load(fh)


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dump(obj: Any) -> None:
    def clean(v: Any) -> Any:
        if isinstance(v, float) and not math.isfinite(v):
            return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v

    print(json.dumps(clean(obj), indent=2, default=_json_default))


def build_problem(doc: dict[str, Any]) -> tuple[np.ndarray, CovFactor, int]:
    """Coefficients, covariance factor and seed from a problem document."""
    seed = int(doc.get("seed", 0))
    model = SpectrumModel.from_dict(doc["spectrum"])
    lam = build_spectrum(model)
    if doc.get("basis", "identity") == "haar":
        basis = random_orthobasis(model.p, derive_seed(seed, 0))
    else:
        basis = np.eye(model.p)
    cov = CovFactor(basis, lam)
    if "beta" in doc:
        beta = np.asarray(doc["beta"], dtype=np.float64)
    else:
        dist = doc.get("coefficients", {}).get("dist", "gaussian")
        beta = draw_coefficients(model.p, dist, derive_seed(seed, 1)).beta
    if "signal" in doc:
        current = cov.signal(beta)
        if current > 0:
            beta = beta * math.sqrt(float(doc["signal"]) / current)
    return beta, cov, seed


def cmd_test(args: argparse.Namespace) -> int:
    X = np.loadtxt(args.X, delimiter=",", ndmin=2)
    y = np.loadtxt(args.y, delimiter=",", ndmin=1)
    if args.classical:
        report = classical_f(X, y, args.alpha)
    else:
        n, p = X.shape
        k = args.k if args.k is not None else min(recommend_k(n), p - 1)
        report = sketched_f(X, y, draw_sketch(p, k, args.seed), args.alpha)
    _dump(report.to_dict())
    return 0


def cmd_power(args: argparse.Namespace) -> int:
    doc = _load_json(args.problem)
    beta, cov, seed = build_problem(doc)
    n = int(doc["n"])
    k = int(doc.get("k", n // 2))
    S = draw_sketch(cov.p, k, derive_seed(seed, 2))
    _dump(power_profile(beta, cov, S, n, float(doc.get("sigma_sq", 1.0)), float(doc.get("alpha", 0.05))))
    return 0


def cmd_dim(args: argparse.Namespace) -> int:
    doc = _load_json(args.problem)
    beta, cov, _ = build_problem(doc)
    rot = cov.rotate(beta)
    eta = float(doc["eta"]) if "eta" in doc else default_eta(cov.p)
    n = int(doc["n"]) if "n" in doc else None
    r = doc.get("r")
    if r is None:
        r = min_intrinsic_dim(rot, cov.spectrum, eta)
    out: dict[str, Any] = {"min_r": r}
    if r is not None:
        out["report"] = intrinsic_conditions(rot, cov.spectrum, int(r), eta, n).to_dict()
        if n is not None:
            out["recommended_k"] = recommend_k(n, int(r))
    _dump(out)
    return 0


def _spectrum_arg(args: argparse.Namespace) -> np.ndarray:
    doc = _load_json(args.spectrum)
    return build_spectrum(SpectrumModel.from_dict(doc))


def cmd_oracle(args: argparse.Namespace) -> int:
    lemma = args.lemma
    if lemma == "quadratic-tail":
        res = oracles.quadratic_tail_check(_spectrum_arg(args), args.t, args.reps, args.seed, args.workers)
        _dump(res.to_dict())
        return 0 if res.passed else 1
    if lemma == "lambda-sketch":
        res = oracles.lambda_sketch_singular_check(
            _spectrum_arg(args), args.n_cols, args.t, args.reps, args.seed, args.workers
        )
        _dump(res.to_dict())
        return 0 if res.passed else 1
    if lemma == "wishart":
        res = oracles.wishart_eigen_check(args.k, args.p, args.t, args.reps, args.seed, args.workers)
        _dump(res.to_dict())
        return 0 if res.passed else 1
    if lemma == "norm-ineq":
        lhs, rhs, ok = oracles.matrix_norm_ineq_check(_spectrum_arg(args))
        _dump({"lhs": lhs, "rhs": rhs, "pass": ok})
        return 0 if ok else 1
    # l1-l2 and xi-star share a problem document
    doc = _load_json(args.problem)
    beta, cov, seed = build_problem(doc)
    r = int(doc["r"])
    k = int(doc.get("k", 2 * r))
    S = draw_sketch(cov.p, k, derive_seed(seed, 2))
    split = oracles.SplitSketch.from_cov(beta, cov, r, S)
    if lemma == "xi-star":
        xi = oracles.xi_star_split(split)
        _dump(
            {
                "xi": xi,
                "residual": oracles.tail_objective(split, xi),
                "constraint_error": float(np.linalg.norm(split.beta1 - split.s1 @ xi)),
            }
        )
        return 0
    cert = oracles.l1_l2_bound(split)
    _dump(cert.to_dict())
    return 0 if cert.holds else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sketchf", description="Sketched F-test toolkit")
    sub = parser.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("test", help="run the sketched (or classical) F-test on CSV data")
    t.add_argument("X", help="design CSV, rows are observations")
    t.add_argument("y", help="response CSV, one value per line")
    t.add_argument("--k", type=int, default=None, help="sketch dimension (default floor(n/2))")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--seed", type=int, default=0, help="sketch seed")
    t.add_argument("--classical", action="store_true", help="run the ordinary F-test instead")
    t.set_defaults(func=cmd_test)

    fmt = argparse.RawDescriptionHelpFormatter
    pw = sub.add_parser("power", help="predicted power and ARE for a problem", epilog=_PROBLEM_HELP, formatter_class=fmt)
    pw.add_argument("problem", help="problem JSON (file, inline document, or '-')")
    pw.set_defaults(func=cmd_power)

    dm = sub.add_parser("dim", help="intrinsic dimension report", epilog=_PROBLEM_HELP, formatter_class=fmt)
    dm.add_argument("problem", help="problem JSON; optional r, eta, n")
    dm.set_defaults(func=cmd_dim)

    orc = sub.add_parser("oracle", help="numerical checks of the supporting lemmas")
    osub = orc.add_subparsers(dest="lemma", required=True)
    for name in ("quadratic-tail", "lambda-sketch", "norm-ineq"):
        o = osub.add_parser(name)
        o.add_argument("--spectrum", required=True, help="spectrum model JSON")
        if name != "norm-ineq":
            o.add_argument("--t", type=float, required=True)
            o.add_argument("--reps", type=int, default=10_000)
            o.add_argument("--seed", type=int, default=0)
            o.add_argument("--workers", type=int, default=1)
        if name == "lambda-sketch":
            o.add_argument("--n-cols", type=int, default=1)
    w = osub.add_parser("wishart")
    w.add_argument("--k", type=int, required=True)
    w.add_argument("--p", type=int, required=True)
    w.add_argument("--t", type=float, required=True)
    w.add_argument("--reps", type=int, default=5000)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--workers", type=int, default=1)
    for name in ("l1-l2", "xi-star"):
        o = osub.add_parser(name, epilog=_PROBLEM_HELP + "  r            split rank (k defaults to 2r)\n", formatter_class=fmt)
        o.add_argument("problem")
    orc.set_defaults(func=cmd_oracle)

    sl = sub.add_parser("simlab", help="Monte Carlo experiments")
    simlab.add_subcommands(sl)
    sl.set_defaults(func=simlab.run_cli)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except (SketchFError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
