"""Statistical primitives: covariance, SPD inversion, Mahalanobis
distance with its per-feature decomposition, the chi-square survival
function, and Pearson correlation.

The chi-square survival function is computed directly (regularized upper
incomplete gamma, series / continued fraction) rather than pulled from a
stats library, because its accuracy is load-bearing for the p-values the
novelty pipeline reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrixError

# Ridge ladder for near-singular covariance: plain Cholesky first, then
# increasing diagonal loading.  Exhausting the ladder is an error.
RIDGE_LADDER = (0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2)
_INVERSE_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class TargetDistribution:
    """Mean, covariance and its inverse for a reference distribution."""

    mu: np.ndarray
    cov: np.ndarray
    cov_inv: np.ndarray
    ridge_used: float
    df: int


def mean_and_covariance(X) -> tuple[np.ndarray, np.ndarray]:
    """Column means and sample covariance (denominator n - 1)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(X) < 2:
        raise ValueError(f"need at least 2 rows for a covariance, got {len(X)}")
    mu = X.mean(axis=0)
    centered = X - mu
    cov = centered.T @ centered / (len(X) - 1)
    return mu, cov


def invert_spd(cov) -> tuple[np.ndarray, float]:
    """Cholesky-based inverse, retrying up the ridge ladder on failure.

    Returns (inverse, ridge_used) where the inverse is of cov plus
    ridge_used times the identity.  A candidate only counts as a success
    when || inv @ (cov + ridge I) - I ||_inf <= 1e-8.
    """
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[0]
    if cov.shape != (d, d):
        raise ValueError(f"covariance must be square, got shape {cov.shape}")
    asym = float(np.abs(cov - cov.T).max()) if d else 0.0
    if asym > 1e-8:
        raise ValueError(f"covariance is not symmetric (max asymmetry {asym:.3g})")
    cov = (cov + cov.T) / 2.0

    eye = np.eye(d)
    for ridge in RIDGE_LADDER:
        target = cov + ridge * eye
        try:
            chol = np.linalg.cholesky(target)
        except np.linalg.LinAlgError:
            continue
        # A^-1 = L^-T L^-1 from A = L L^T
        chol_inv = np.linalg.solve(chol, eye)
        inv = chol_inv.T @ chol_inv
        residual = float(np.abs(inv @ target - eye).max())
        if residual <= _INVERSE_RESIDUAL_TOL:
            return inv, ridge
    raise SingularMatrixError(
        "covariance not invertible even with ridge 1e-2; features are "
        "perfectly collinear, remove one of each duplicated pair"
    )


def build_distribution(X, df: int | None = None) -> TargetDistribution:
    """Fit a TargetDistribution to sample rows.

    df defaults to d - 1 (15 for the usual 16 features), the calibration
    the pipeline's p-values are read against; it is configurable, and
    every report states the df it used.
    """
    mu, cov = mean_and_covariance(X)
    cov_inv, ridge = invert_spd(cov)
    d = len(mu)
    return TargetDistribution(
        mu=mu, cov=cov, cov_inv=cov_inv, ridge_used=ridge,
        df=int(df) if df is not None else d - 1,
    )


def mahalanobis_sq(x, dist: TargetDistribution) -> float:
    """Squared Mahalanobis distance (x - mu)^T C^-1 (x - mu), >= 0."""
    return max(float(contribution_vector(x, dist).sum()), 0.0)


def contribution_vector(x, dist: TargetDistribution) -> np.ndarray:
    """Per-feature addends of the squared distance.

    With d = x - mu and y = C^-1 d, entry i is d_i * y_i.  Entries may be
    negative; they sum to the squared Mahalanobis distance.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != dist.mu.shape:
        raise ValueError(f"query shape {x.shape} != distribution shape {dist.mu.shape}")
    d = x - dist.mu
    return d * (dist.cov_inv @ d)


def _lower_gamma_series(a: float, s: float) -> float:
    # regularized lower incomplete gamma P(a, s) by series expansion
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(1000):
        denom += 1.0
        term *= s / denom
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-s + a * math.log(s) - math.lgamma(a))


def _upper_gamma_cf(a: float, s: float) -> float:
    # regularized upper incomplete gamma Q(a, s) by modified Lentz
    # continued fraction
    tiny = 1e-300
    b = s + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-s + a * math.log(s) - math.lgamma(a))


def chi2_sf(x: float, df: int) -> float:
    """Survival function of the chi-square distribution.

    Series expansion below x = df + 1, continued fraction above; both
    regimes are accurate to well under 1e-12 absolute.
    """
    if df < 1:
        raise ValueError(f"df must be a positive integer, got {df}")
    if x < 0:
        raise ValueError(f"chi-square statistic must be >= 0, got {x}")
    if x == 0.0:
        return 1.0
    a = df / 2.0
    s = x / 2.0
    if x < df + 1.0:
        return min(max(1.0 - _lower_gamma_series(a, s), 0.0), 1.0)
    return min(max(_upper_gamma_cf(a, s), 0.0), 1.0)


def pearson_r(a, b) -> float | None:
    """Sample Pearson correlation; None when either vector is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-d vectors of equal length")
    if len(a) < 2:
        raise ValueError("need at least 2 observations")
    da = a - a.mean()
    db = b - b.mean()
    na = float(np.sqrt(da @ da))
    nb = float(np.sqrt(db @ db))
    if na == 0.0 or nb == 0.0:
        return None
    r = float(da @ db) / (na * nb)
    return min(max(r, -1.0), 1.0)
