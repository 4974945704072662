from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from sketchf.errors import DimensionError, DimensionMismatch, DomainError, SingularDesign, SingularSketch
from sketchf.ftest import classical_f, least_squares, projected_f, sketched_f
from sketchf.models import EntryDistribution, draw_sketch
from sketchf.numkit import f_cdf


def test_least_squares_examples():
    A = np.eye(3)[:, :2]
    coef, rss = least_squares(A, np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(coef, [1.0, 2.0], atol=1e-14)
    assert rss == pytest.approx(9.0, abs=1e-12)
    rng = np.random.default_rng(0)
    B = rng.standard_normal((20, 4))
    y = B @ rng.standard_normal(4)
    _, rss = least_squares(B, y)
    assert rss <= 1e-18 * float(y @ y)


def test_least_squares_matches_normal_equations():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((50, 10))
    y = rng.standard_normal(50)
    coef, rss = least_squares(A, y)
    oracle = np.linalg.inv(A.T @ A) @ A.T @ y
    np.testing.assert_allclose(coef, oracle, atol=1e-8)
    assert rss == pytest.approx(float(np.sum((y - A @ oracle) ** 2)), rel=1e-10)


def test_least_squares_errors():
    A = np.ones((5, 2))
    with pytest.raises(SingularDesign):
        least_squares(A, np.ones(5))
    with pytest.raises(DimensionError):
        least_squares(np.ones((2, 2)), np.ones(2))
    with pytest.raises(DimensionMismatch):
        least_squares(np.ones((4, 2)), np.ones(3))


def test_classical_degenerate_and_identity():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((30, 5))
    rep = classical_f(X, np.zeros(30))
    assert rep.statistic == 0.0 and not rep.reject and rep.p_value == 1.0
    y = X @ rng.standard_normal(5) + rng.standard_normal(30)
    rep = classical_f(X, y)
    coef, rss = least_squares(X, y)
    num = coef @ (X.T @ X) @ coef
    assert float(y @ (X @ coef)) == pytest.approx(num, rel=1e-8)
    assert rep.statistic == pytest.approx((num / 5) / (rss / 25), rel=1e-8)
    assert rep.d1 == 5 and rep.d2 == 25
    assert rep.p_value == pytest.approx(stats.f.sf(rep.statistic, 5, 25), abs=1e-12)
    with pytest.raises(DimensionError):
        classical_f(rng.standard_normal((5, 5)), np.ones(5))


def test_classical_calibration():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((100, 20))
    rejects = sum(classical_f(X, rng.standard_normal(100)).reject for _ in range(2000))
    assert abs(rejects / 2000 - 0.05) <= 0.02


def test_sketched_equals_classical_for_invertible_sketch():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((40, 6))
    y = X @ rng.standard_normal(6) * 0.2 + rng.standard_normal(40)
    perm = np.eye(6)[:, rng.permutation(6)]
    a, b = sketched_f(X, y, perm), classical_f(X, y)
    assert a.statistic == pytest.approx(b.statistic, rel=1e-8)
    assert (a.d1, a.d2) == (b.d1, b.d2)


def test_sketched_perfect_fit_convention():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((20, 30))
    S = draw_sketch(30, 5, 1)
    y = X @ S.entries @ rng.standard_normal(5)
    rep = sketched_f(X, y, S)
    assert math.isinf(rep.statistic) and rep.reject and rep.p_value == 0.0


def test_sketched_errors():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((10, 30))
    with pytest.raises(DimensionError):
        sketched_f(X, np.ones(10), draw_sketch(30, 10, 0))
    with pytest.raises(DimensionMismatch):
        sketched_f(X, np.ones(10), draw_sketch(29, 3, 0))
    S = np.ones((30, 2))
    with pytest.raises(SingularSketch):
        sketched_f(X, rng.standard_normal(10), S)
    with pytest.raises(DomainError):
        sketched_f(X, rng.standard_normal(10), draw_sketch(30, 3, 0), alpha=1.5)


def test_sketched_invariances():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((60, 200))
    S = draw_sketch(200, 15, 3).entries
    y = X[:, :3] @ np.ones(3) * 0.1 + rng.standard_normal(60)
    base = sketched_f(X, y, S)
    for _ in range(5):
        M = rng.standard_normal((15, 15)) + 3 * np.eye(15)
        assert sketched_f(X, y, S @ M).statistic == pytest.approx(base.statistic, rel=1e-8)
    for c in (1e-3, 7.0, 1e4):
        assert sketched_f(X, c * y, S).statistic == pytest.approx(base.statistic, rel=1e-10)
    assert projected_f(X @ S, y).statistic == base.statistic


def _null_sample(X, S, reps, rng):
    A = X @ S
    return [projected_f(A, rng.standard_normal(X.shape[0])) for _ in range(reps)]


@pytest.mark.parametrize("design", [EntryDistribution(), EntryDistribution("student_t", 5.0)])
def test_sketched_exact_null(design):
    rng = np.random.default_rng(8)
    X = design.sample(rng, (100, 300))
    S = draw_sketch(300, 40, 9).entries
    reports = _null_sample(X, S, 2000, rng)
    rate = np.mean([r.reject for r in reports])
    assert abs(rate - 0.05) <= 0.02
    ks = stats.kstest([r.statistic for r in reports], lambda v: stats.f.cdf(v, 40, 60)).statistic
    assert ks < 0.04


def test_reject_iff_pvalue_below_alpha():
    rng = np.random.default_rng(10)
    X = rng.standard_normal((30, 50))
    S = draw_sketch(50, 8, 2)
    for i in range(300):
        y = X[:, 0] * rng.uniform(0, 0.5) + rng.standard_normal(30)
        rep = sketched_f(X, y, S, alpha=0.1)
        assert rep.reject == (rep.p_value <= 0.1)
        assert rep.p_value == pytest.approx(1.0 - f_cdf(rep.statistic, 8, 22), abs=1e-12)
        if abs(rep.statistic - rep.threshold) > 1e-9:
            assert rep.reject == (rep.statistic >= rep.threshold)
