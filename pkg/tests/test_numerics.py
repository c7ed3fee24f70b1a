"""Covariance, SPD inversion, Mahalanobis decomposition, chi-square."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hexstyle.errors import SingularMatrixError
from hexstyle.numerics import (
    TargetDistribution,
    build_distribution,
    chi2_sf,
    contribution_vector,
    invert_spd,
    mahalanobis_sq,
    mean_and_covariance,
    pearson_r,
)

# quadrature oracle for the chi-square survival function, kept fully
# independent of the implementation under test
from scipy.integrate import quad


def _chi2_sf_by_quadrature(x, df):
    from math import exp, lgamma, log

    def pdf(t):
        if t <= 0:
            return 0.0
        return exp((df / 2 - 1) * log(t) - t / 2 - lgamma(df / 2) - (df / 2) * log(2.0))

    value, _ = quad(pdf, x, np.inf, limit=300)
    return value


def _two_pass_covariance(X):
    n, d = X.shape
    mu = [sum(X[i][j] for i in range(n)) / n for j in range(d)]
    cov = [[0.0] * d for _ in range(d)]
    for j in range(d):
        for k in range(d):
            cov[j][k] = sum(
                (X[i][j] - mu[j]) * (X[i][k] - mu[k]) for i in range(n)
            ) / (n - 1)
    return np.array(mu), np.array(cov)


def test_mean_cov_two_points():
    X = np.zeros((2, 16))
    X[1, 0] = 2.0
    mu, cov = mean_and_covariance(X)
    assert mu[0] == 1.0 and np.all(mu[1:] == 0.0)
    assert cov[0, 0] == 2.0
    assert np.count_nonzero(cov) == 1


def test_mean_cov_identical_rows():
    X = np.tile(np.arange(16.0), (5, 1))
    _, cov = mean_and_covariance(X)
    assert np.all(cov == 0.0)


def test_mean_cov_against_two_pass_oracle():
    X = np.random.default_rng(2).random((5, 16))
    mu, cov = mean_and_covariance(X)
    mu_o, cov_o = _two_pass_covariance(X)
    assert np.allclose(mu, mu_o, atol=1e-12)
    assert np.allclose(cov, cov_o, atol=1e-12)


def test_mean_cov_needs_two_rows():
    with pytest.raises(ValueError):
        mean_and_covariance(np.ones((1, 16)))


def test_invert_identity():
    inv, ridge = invert_spd(np.eye(16))
    assert ridge == 0.0
    assert np.allclose(inv, np.eye(16))


def test_invert_diagonal():
    inv, ridge = invert_spd(np.diag([4.0] + [1.0] * 15))
    assert ridge == 0.0
    assert inv[0, 0] == pytest.approx(0.25)
    assert np.allclose(np.diag(inv)[1:], 1.0)


def test_invert_rank_deficient_uses_ridge():
    rng = np.random.default_rng(0)
    X = rng.random((60, 5))
    X = np.c_[X, X[:, 0]]  # duplicated feature column
    _, cov = mean_and_covariance(X)
    inv, ridge = invert_spd(cov)
    assert ridge > 0.0
    eye = np.eye(6)
    assert np.abs(inv @ (cov + ridge * eye) - eye).max() <= 1e-8


def test_invert_indefinite_matrix_fails():
    # eigenvalues -1 and 3: no ridge on the ladder fixes it
    with pytest.raises(SingularMatrixError, match="collinear"):
        invert_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_invert_rejects_asymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        invert_spd(np.array([[1.0, 0.5], [0.1, 1.0]]))


def _dist(mu, cov, df=None):
    inv, ridge = invert_spd(cov)
    return TargetDistribution(np.asarray(mu, float), np.asarray(cov, float),
                              inv, ridge, df or len(mu) - 1)


def test_mahalanobis_at_mean_is_zero():
    dist = _dist(np.ones(4), np.eye(4))
    assert mahalanobis_sq(np.ones(4), dist) == 0.0
    assert np.all(contribution_vector(np.ones(4), dist) == 0.0)


def test_mahalanobis_identity_cov_is_euclidean():
    dist = _dist(np.zeros(4), np.eye(4))
    x = np.array([1.0, -2.0, 3.0, 0.5])
    assert mahalanobis_sq(x, dist) == pytest.approx(float((x ** 2).sum()))
    assert np.allclose(contribution_vector(x, dist), x ** 2)


def test_mahalanobis_correlated_hand_case():
    dist = _dist([0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]])
    x = np.array([1.0, 1.0])
    assert mahalanobis_sq(x, dist) == pytest.approx(4.0 / 3.0, abs=1e-12)
    contrib = contribution_vector(x, dist)
    assert contrib.sum() == pytest.approx(4.0 / 3.0, abs=1e-12)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=80, deadline=None)
def test_contribution_sum_equals_m2(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 17))
    A = rng.normal(size=(d, d))
    cov = A @ A.T + 1e-3 * np.eye(d)
    dist = _dist(rng.normal(size=d), cov)
    x = rng.normal(size=d)
    contrib = contribution_vector(x, dist)
    m2 = mahalanobis_sq(x, dist)
    assert abs(contrib.sum() - m2) <= 1e-9 * max(m2, 1.0)
    assert m2 >= 0.0


def test_mahalanobis_affine_invariance():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(500, 16))
    x = rng.normal(size=16)
    base = build_distribution(X)
    m2 = mahalanobis_sq(x, base)
    for _ in range(5):
        T = rng.normal(size=(16, 16)) + 4.0 * np.eye(16)
        shift = rng.normal(size=16)
        Xt = X @ T.T + shift
        dist_t = build_distribution(Xt)
        m2_t = mahalanobis_sq(T @ x + shift, dist_t)
        assert m2_t == pytest.approx(m2, rel=1e-6)


def test_chi2_sf_at_zero():
    for df in (1, 2, 15, 40):
        assert chi2_sf(0.0, df) == 1.0


def test_chi2_sf_reference_values():
    # df = 15 reproduces the reference p-values for these statistics
    assert chi2_sf(36.82, 15) == pytest.approx(0.0013, abs=2e-4)
    assert chi2_sf(39.36, 15) == pytest.approx(0.0006, abs=2e-4)
    assert chi2_sf(15.88, 15) == pytest.approx(0.39, abs=1e-2)


def test_chi2_sf_against_quadrature_oracle():
    for df in (1, 3, 15, 16, 40):
        for x in np.linspace(0.05, 4.0 * df, 20):
            assert chi2_sf(float(x), df) == pytest.approx(
                _chi2_sf_by_quadrature(float(x), df), abs=1e-9
            )


def test_chi2_sf_strictly_decreasing():
    # strictly decreasing wherever the value is representable away from
    # the saturated endpoints (near x=0 at high df the true value is
    # within 1e-18 of 1, which float64 rounds to exactly 1.0)
    for df in (1, 15, 29):
        xs = np.linspace(0.0, 6.0 * df, 200)
        vals = [chi2_sf(float(x), df) for x in xs]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert all(a > b for a, b in zip(vals, vals[1:]) if a < 1.0 and b > 0.0)


def test_chi2_sf_input_validation():
    with pytest.raises(ValueError):
        chi2_sf(-1.0, 15)
    with pytest.raises(ValueError):
        chi2_sf(1.0, 0)


def test_pearson_exact_cases():
    a = np.array([1.0, 2.0, 3.0])
    assert pearson_r(a, a) == pytest.approx(1.0)
    assert pearson_r(a, -a) == pytest.approx(-1.0)
    assert pearson_r(a, np.array([6.0, 4.0, 2.0])) == pytest.approx(-1.0)


def test_pearson_constant_is_undefined():
    assert pearson_r(np.ones(5), np.arange(5.0)) is None
    assert pearson_r(np.arange(5.0), np.ones(5)) is None


def test_pearson_needs_two_points():
    with pytest.raises(ValueError):
        pearson_r(np.array([1.0]), np.array([2.0]))


def test_build_distribution_df_default():
    X = np.random.default_rng(1).normal(size=(100, 16))
    dist = build_distribution(X)
    assert dist.df == 15
    assert build_distribution(X, df=16).df == 16
