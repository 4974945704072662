from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from sketchf.errors import ConfigError, DegenerateInput, DomainError, InfeasibleConstraint, SingularSketch
from sketchf.models import CovFactor, SpectrumModel, build_spectrum, random_orthobasis
from sketchf.oracles import (
    LEMMA_C1,
    LEMMA_C2,
    SplitSketch,
    eigen_lifting,
    l1_l2_bound,
    lambda_sketch_singular_check,
    matrix_norm_ineq_check,
    quadratic_tail_check,
    spectral_spot_check,
    tail_objective,
    wishart_eigen_check,
    xi_star,
    xi_star_closed_form,
    xi_star_split,
)
from sketchf.power import delta_k_sq

CHI2_1_TAIL_5 = 0.025347318677468252  # P(chi2_1 > 5)


def _instance(rng, p, r, k, decay=1.0):
    lam = np.sort(rng.exponential(size=p) ** decay)[::-1]
    cov = CovFactor(random_orthobasis(p, rng), lam)
    return rng.standard_normal(p), cov, rng.standard_normal((p, k))


def test_split_invariants():
    rng = np.random.default_rng(0)
    beta, cov, S = _instance(rng, 15, 4, 6)
    split = SplitSketch.from_cov(beta, cov, 4, S)
    np.testing.assert_allclose(np.vstack([split.s1, split.s2]), cov.basis.T @ S, atol=1e-10)
    assert split.beta1 @ split.beta1 + split.beta2 @ split.beta2 == pytest.approx(beta @ beta, rel=1e-8)
    np.testing.assert_array_equal(split.lam_tail, cov.spectrum[4:])


def test_xi_star_constraint_and_closed_form():
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = int(rng.integers(6, 40))
        r = int(rng.integers(1, min(8, p // 2) + 1))
        k = int(rng.integers(r, min(2 * r + 3, p - r) + 1))
        beta, cov, S = _instance(rng, p, r, k)
        xi = xi_star(beta, cov, r, S)
        Ur = cov.basis[:, :r]
        assert np.linalg.norm(Ur.T @ (beta - S @ xi)) <= 1e-8 * np.linalg.norm(beta)
        split = SplitSketch.from_cov(beta, cov, r, S)
        if k > r:
            np.testing.assert_allclose(xi_star_closed_form(split), xi, atol=1e-7 * max(1.0, np.abs(xi).max()))


def test_xi_star_exact_representation():
    rng = np.random.default_rng(2)
    p, r = 20, 4
    lam = np.zeros(p)
    lam[:r] = [4.0, 3.0, 2.0, 1.0]
    cov = CovFactor(random_orthobasis(p, rng), lam)
    beta, S = rng.standard_normal(p), rng.standard_normal((p, r))
    split = SplitSketch.from_cov(beta, cov, r, S)
    assert tail_objective(split, xi_star_split(split)) == 0.0
    assert delta_k_sq(beta, cov, S) == pytest.approx(cov.signal(beta), rel=1e-8)


def test_xi_star_random_search_minimality():
    rng = np.random.default_rng(3)
    beta, cov, S = _instance(rng, 12, 3, 5)
    split = SplitSketch.from_cov(beta, cov, 3, S)
    xi = xi_star_split(split)
    best = tail_objective(split, xi)
    null = np.linalg.svd(split.s1)[2][3:].T
    for _ in range(500):
        cand = xi + null @ (rng.standard_normal(2) * rng.exponential())
        assert np.linalg.norm(split.s1 @ cand - split.beta1) < 1e-8
        assert tail_objective(split, cand) >= best - 1e-10


def test_xi_star_errors():
    rng = np.random.default_rng(4)
    beta, cov, S = _instance(rng, 10, 3, 2)
    with pytest.raises(InfeasibleConstraint):
        xi_star(beta, cov, 3, S)
    S = rng.standard_normal((10, 4))
    S = cov.basis @ np.vstack([np.zeros((3, 4)), (cov.basis.T @ S)[3:]])
    with pytest.raises(InfeasibleConstraint):
        xi_star(beta, cov, 3, S)


def test_l1_l2_examples():
    rng = np.random.default_rng(5)
    _, cov, S = _instance(rng, 12, 3, 6)
    cert = l1_l2_bound(SplitSketch.from_cov(np.zeros(12), cov, 3, S))
    assert (cert.l1, cert.l2, cert.residual) == (0.0, 0.0, 0.0) and cert.holds
    lam = np.zeros(12)
    lam[:3] = 1.0
    with pytest.raises(SingularSketch):
        l1_l2_bound(SplitSketch.from_cov(np.ones(12), CovFactor(cov.basis, lam), 3, S))


def test_l1_l2_certificate_on_random_instances():
    rng = np.random.default_rng(6)
    for _ in range(200):
        p = int(rng.integers(12, 41))
        r = int(rng.integers(1, 9))
        k = 2 * r
        if p - r < k:
            continue
        beta, cov, S = _instance(rng, p, r, k, decay=2.0)
        split = SplitSketch.from_cov(beta, cov, r, S)
        cert = l1_l2_bound(split)
        assert cert.holds
        feasible = np.linalg.pinv(split.s1) @ split.beta1
        assert cert.residual <= tail_objective(split, feasible) * (1 + 1e-8) + 1e-10
        sig = cov.signal(beta)
        assert delta_k_sq(beta, cov, S) >= sig - 2 * cert.l1 - 2 * cert.l2 - 1e-6 * sig


def test_eigen_lifting():
    lam = np.array([3.0, 2.0, 0.0, 0.0, 0.0])
    np.testing.assert_array_equal(eigen_lifting(lam, 2, 1.5), lam[2:])
    flat = np.full(10, 0.7)
    lifted = eigen_lifting(flat, 4, 2.0, 0.5)
    np.testing.assert_allclose(lifted, 0.7 + (2.0 / 0.5) * 4 * 0.7 / 6)
    lam = build_spectrum(SpectrumModel("polynomial", 500, alpha=2.0))
    for r in (1, 5, 40):
        for b in (0.5, 2.0):
            lifted = eigen_lifting(lam, r, b)
            assert np.all(lifted >= lam[r:])
            assert (lifted - lam[r:]).sum() == pytest.approx((b / LEMMA_C1) * r * lam[r])
    with pytest.raises(DomainError):
        eigen_lifting(lam, 500, 1.0)


def test_quadratic_tail_examples():
    res = quadratic_tail_check(np.ones(1), 1.0, reps=100_000, seed=1)
    se = math.sqrt(CHI2_1_TAIL_5 * (1 - CHI2_1_TAIL_5) / 100_000)
    assert abs(res.freqs[0] - CHI2_1_TAIL_5) < 4 * se
    assert res.passed
    assert quadratic_tail_check(np.zeros(3), 1.0, reps=1000, seed=0).passed
    rng = np.random.default_rng(7)
    lam = rng.exponential(size=20)
    for t in (0.5, 2.0):
        assert quadratic_tail_check(lam, t, reps=100_000, seed=3).passed
    with pytest.raises(ConfigError):
        quadratic_tail_check(lam, 1.0, reps=999)
    with pytest.raises(ConfigError):
        quadratic_tail_check(lam, 0.0)


def test_quadratic_tail_worker_independent():
    lam = np.linspace(2, 0.1, 15)
    a = quadratic_tail_check(lam, 1.0, reps=9000, seed=5, workers=1)
    b = quadratic_tail_check(lam, 1.0, reps=9000, seed=5, workers=3)
    assert a == b


def test_lambda_sketch_examples():
    res = lambda_sketch_singular_check(np.ones(400), 1, 0.3, reps=10_000, seed=2)
    assert res.passed and res.freqs[0] < 0.01
    near_one = lambda_sketch_singular_check(np.ones(50), 3, 0.999, reps=200, seed=0)
    assert near_one.bounds[0] == 1.0 and near_one.passed
    spiky = np.array([10.0] + [0.01] * 99)
    res = lambda_sketch_singular_check(spiky, 1, 0.5, reps=2000, seed=0)
    assert res.bounds[0] == 1.0 and res.passed
    with pytest.raises(ConfigError):
        lambda_sketch_singular_check(np.ones(5), 6, 0.5)
    with pytest.raises(ConfigError):
        lambda_sketch_singular_check(np.ones(5), 1, 1.0)


def test_wishart_examples():
    p, t = 50, 0.4
    res = wishart_eigen_check(1, p, t, reps=20_000, seed=3)
    hi = (1 + math.sqrt(1 / p) + t) ** 2
    lo = (1 - math.sqrt(1 / p) - t) ** 2
    # with k = 1 both eigenvalues are chi2_p / p
    assert abs(res.freqs[0] - stats.chi2.sf(hi * p, p)) < 4 * math.sqrt(0.25 / 20_000)
    assert abs(res.freqs[1] - stats.chi2.cdf(lo * p, p)) < 4 * math.sqrt(0.25 / 20_000)
    assert res.passed
    wide = wishart_eigen_check(10, 40, 0.9, reps=500, seed=1)
    assert wide.freqs[1] == 0.0 and wide.passed
    assert wishart_eigen_check(20, 200, 0.3, reps=5000, seed=4).passed
    with pytest.raises(ConfigError):
        wishart_eigen_check(30, 20, 0.1)


def test_matrix_norm_ineq():
    lhs, rhs, ok = matrix_norm_ineq_check(np.array([1.0, 0, 0, 0]))
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0) and ok
    lhs, rhs, ok = matrix_norm_ineq_check(np.ones(64))
    assert lhs == pytest.approx(8.0) and rhs == pytest.approx(64 ** 0.125) and ok
    with pytest.raises(DegenerateInput):
        matrix_norm_ineq_check(np.zeros(3))


def test_matrix_norm_ineq_random():
    rng = np.random.default_rng(8)
    for _ in range(10_000):
        p = int(rng.integers(1, 60))
        lam = rng.exponential(size=p) ** rng.uniform(0.1, 8)
        lam[rng.random(p) < 0.3] = 0.0
        if not np.any(lam > 0):
            lam[0] = 1.0
        assert matrix_norm_ineq_check(lam)[2]


def test_spectral_spot_frequencies():
    lam = np.ones(2000)
    for r in (5, 8, 10):
        out = spectral_spot_check(lam, r, 4 * r, reps=300, seed=r)
        assert out["applicable"]
        assert out["kappa_tail_le_4"] > 0.9
        assert out["kappa_head_le_c2"] > 0.9
    assert LEMMA_C2 == 16.0
