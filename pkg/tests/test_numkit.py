from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from sketchf.errors import DomainError
from sketchf.numkit import (
    QuantileSpec,
    f_cdf,
    f_pdf,
    f_quantile,
    f_quantile_bai,
    f_sf,
    noncentral_f_moments,
    reg_inc_beta,
    std_normal_cdf,
    std_normal_quantile,
    upper_normal_quantile,
)

# frozen oracle values: quadrature (normal), mpmath (beta), scipy (F, noncentral F)
PHI_03551 = 0.6387426616755825
IBETA_03_25_40 = 0.3521975859067672
FCDF_15_10_90 = 0.8476213451641459
FQ_005_10_90 = 1.9375667908827283
NCF_10_100_5 = (1.530612244897959, 0.47397785644870194)


def test_normal_cdf_examples():
    assert std_normal_cdf(0.0) == 0.5
    assert abs(std_normal_cdf(40.0) - 1.0) <= 1e-15
    assert abs(std_normal_cdf(0.3551) - PHI_03551) <= 1e-12
    assert std_normal_cdf(-40.0) >= 0.0


def test_normal_cdf_matches_scipy_on_grid():
    xs = np.linspace(-12, 12, 2001)
    ours = np.array([std_normal_cdf(x) for x in xs])
    assert np.max(np.abs(ours - stats.norm.cdf(xs))) <= 1e-12
    assert np.all(np.diff(ours[(xs > -8) & (xs < 5)]) > 0)


def test_normal_quantile_examples():
    assert std_normal_quantile(0.5) == pytest.approx(0.0, abs=1e-15)
    assert std_normal_quantile(0.95) == pytest.approx(1.6448536269514722, abs=1e-12)
    assert abs(std_normal_cdf(std_normal_quantile(0.123)) - 0.123) <= 1e-10
    assert upper_normal_quantile(0.05) == pytest.approx(1.6448536269514722, abs=1e-12)


@pytest.mark.parametrize("q", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_normal_quantile_domain(q):
    with pytest.raises(DomainError):
        std_normal_quantile(q)


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=1e-12, max_value=1 - 1e-12))
def test_normal_roundtrip(q):
    assert abs(std_normal_cdf(std_normal_quantile(q)) - q) <= 1e-10


def test_reg_inc_beta_examples():
    assert reg_inc_beta(1.0, 2.0, 3.0) == 1.0
    assert reg_inc_beta(0.0, 2.0, 3.0) == 0.0
    assert reg_inc_beta(0.5, 1.0, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert abs(reg_inc_beta(0.3, 2.5, 4.0) - IBETA_03_25_40) <= 1e-12


def test_reg_inc_beta_against_scipy():
    rng = np.random.default_rng(3)
    a = rng.uniform(0.1, 200, 400)
    b = rng.uniform(0.1, 200, 400)
    x = rng.uniform(0, 1, 400)
    ours = np.array([reg_inc_beta(*t) for t in zip(x, a, b)])
    assert np.max(np.abs(ours - special.betainc(a, b, x))) <= 1e-12


@pytest.mark.parametrize("args", [(-0.1, 1, 1), (1.1, 1, 1), (0.5, 0, 1), (0.5, 1, -2)])
def test_reg_inc_beta_domain(args):
    with pytest.raises(DomainError):
        reg_inc_beta(*args)


def test_f_cdf_examples():
    assert f_cdf(0.0, 3, 5) == 0.0
    assert f_cdf(1.0, 7, 7) == pytest.approx(0.5, abs=1e-14)
    assert abs(f_cdf(1.5, 10, 90) - FCDF_15_10_90) <= 3e-4
    assert f_cdf(1.5, 10, 90) == pytest.approx(FCDF_15_10_90, abs=1e-12)
    with pytest.raises(DomainError):
        f_cdf(-1.0, 3, 5)


def test_f_sf_and_pdf_against_scipy():
    for x, d1, d2 in [(0.2, 3, 8), (2.5, 40, 60), (30.0, 1, 2), (1.1, 500, 700)]:
        assert f_sf(x, d1, d2) == pytest.approx(stats.f.sf(x, d1, d2), abs=1e-12)
        assert f_pdf(x, d1, d2) == pytest.approx(stats.f.pdf(x, d1, d2), rel=1e-9)
    assert f_pdf(0.0, 2, 9) == 1.0


def test_f_quantile_examples():
    assert f_quantile(0.5, 12, 12) == pytest.approx(1.0, abs=1e-10)
    assert f_quantile(0.05, 10, 90) == pytest.approx(FQ_005_10_90, abs=1e-9)
    q = f_quantile(0.05, 25, 25)
    assert abs(1.0 - f_cdf(q, 25, 25) - 0.05) <= 1e-9
    with pytest.raises(DomainError):
        f_quantile(1.0, 3, 3)


@settings(max_examples=150, deadline=None)
@given(
    st.floats(min_value=1e-4, max_value=0.999),
    st.integers(min_value=1, max_value=2000),
    st.integers(min_value=1, max_value=2000),
)
def test_f_quantile_roundtrip(alpha, d1, d2):
    q = f_quantile(alpha, d1, d2)
    assert abs(f_sf(q, d1, d2) - alpha) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3), st.integers(min_value=1, max_value=300))
def test_f_reciprocal_symmetry(x, d):
    assert abs(f_cdf(x, d, d) + f_cdf(1.0 / x, d, d) - 1.0) <= 1e-10


def test_quantile_spec():
    spec = QuantileSpec(0.05, 10, 90)
    assert spec.threshold() == pytest.approx(FQ_005_10_90, abs=1e-9)
    for bad in [(0.0, 1, 1), (0.5, 0, 1), (0.5, 1, 0)]:
        with pytest.raises(DomainError):
            QuantileSpec(*bad)


def test_bai_examples():
    assert f_quantile_bai(0.5, 300, 0.3) == 1.0
    assert abs(f_quantile_bai(0.05, 2000, 0.5) - f_quantile(0.05, 1000, 1000)) < 0.01
    coef = [f_quantile_bai(0.05, 400, d) - 1.0 for d in np.linspace(0.05, 0.95, 19)]
    assert int(np.argmin(coef)) == 9
    with pytest.raises(DomainError):
        f_quantile_bai(0.05, 100, 1.0)


def test_bai_error_shrinks_with_n():
    errs = []
    for n in (200, 800, 3200):
        errs.append(max(abs(f_quantile_bai(a, n, 0.5) - f_quantile(a, n // 2, n // 2)) for a in (0.01, 0.05, 0.1)))
    assert errs[0] > errs[1] > errs[2]


def test_noncentral_moments():
    mean, _ = noncentral_f_moments(10, 100, 0.0)
    assert mean == pytest.approx(100 / 98, rel=1e-14)
    mean, var = noncentral_f_moments(10, 100, 5.0)
    assert mean == pytest.approx(NCF_10_100_5[0], rel=1e-12)
    assert var == pytest.approx(NCF_10_100_5[1], rel=1e-12)
    m1, _ = noncentral_f_moments(10, 100, 1.0)
    m2, _ = noncentral_f_moments(10, 100, 2.0)
    assert m2 - m1 == pytest.approx(100 / (10 * 98), rel=1e-12)
    with pytest.raises(DomainError):
        noncentral_f_moments(10, 4, 1.0)


def test_noncentral_moments_monte_carlo():
    rng = np.random.default_rng(11)
    draws = stats.ncf.rvs(10, 100, 5.0, size=2_000_000, random_state=rng)
    mean, var = noncentral_f_moments(10, 100, 5.0)
    assert abs(draws.mean() / mean - 1) < 1e-2
    assert abs(draws.var() / var - 1) < 2e-2
