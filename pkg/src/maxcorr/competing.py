"""Competitor white noise tests sharing the bootstrap machinery.

Included:

* standardized portmanteau with a normal reference (asymptotic), and its
  bootstrapped version -- which, with shared draws, makes decisions
  identical to a bootstrapped Ljung-Box Q-test because the statistic is a
  strictly increasing affine map of the weighted portmanteau;
* spectral Cramer-von Mises statistic, integrated by midpoint rule, with
  wild / dependent wild bootstrap p-values built on the expansion;
* orthogonalized Q-test with either an identity or Bartlett-kernel long-run
  variance. The exact recursive transform this test historically uses is
  not reproduced here; the variant below standardizes the correlation
  vector by the Cholesky factor of the long-run variance and projects out
  the span of the estimated expansion directions, keeping the first
  ``L - k_theta`` coordinates. It reduces to the raw correlations (and the
  Q-statistic to a Box-Pierce sum) when there is no plug-in and the
  identity variance is used.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, ndtr

from .bootstrap import (
    BootstrapSpec,
    TestResult,
    auxiliary_matrix,
    bootstrap_correlations,
    counting_p_value,
    make_blocks,
)
from .core_stats import (
    CorrelationSet,
    LagRule,
    LagWeights,
    Series,
    autocovariances,
    resolve_lag_rule,
    sample_correlations,
)
from .errors import DegenerateSeriesError, SingularLrvWarning
from .filters import FilterSpec, FittedFilter, compute_expansion, fit_filter
from .spectral import SpectralGrid, cvm_from_gamma, psi_basis, psi_matrix  # noqa: F401  (re-exported)

_RIDGE_SCALE = 1e-8


def ljung_box_weights(n: int, max_lag: int) -> np.ndarray:
    """Per-lag weights ``(n + 2) / (n - h)`` for ``h = 1..max_lag``."""
    h = np.arange(1, max_lag + 1, dtype=np.float64)
    return (n + 2.0) / (n - h)


def weighted_portmanteau(corrs: CorrelationSet) -> float:
    """Ljung-Box Q-statistic ``n * sum_h (n+2)/(n-h) * rho(h)^2``."""
    w = ljung_box_weights(corrs.n, corrs.max_lag)
    return float(corrs.n * np.sum(w * corrs.rho**2))


def hong_statistic(corrs: CorrelationSet) -> float:
    """Standardized portmanteau ``(2L)^{-1/2} sum_h w(h) {n rho(h)^2 - 1}``.

    The weights are ``(n + 2)/(n - h)``; under suitable conditions the
    statistic is asymptotically standard normal, and it is an affine map of
    the Ljung-Box Q-statistic.
    """
    w = ljung_box_weights(corrs.n, corrs.max_lag)
    return float(np.sum(w * (corrs.n * corrs.rho**2 - 1.0)) / math.sqrt(2.0 * corrs.max_lag))


def _hong_from_portmanteau(q: "float | np.ndarray", n: int, max_lag: int) -> "float | np.ndarray":
    w_sum = float(np.sum(ljung_box_weights(n, max_lag)))
    return (q - w_sum) / math.sqrt(2.0 * max_lag)


def hong_test(
    series: Series,
    filter_spec: "str | FilterSpec",
    lag_rule: "int | float | str | LagRule",
    mode: str = "asymptotic",
    spec: "BootstrapSpec | None" = None,
    fitted: "FittedFilter | None" = None,
) -> TestResult:
    """Standardized portmanteau test, asymptotic or bootstrapped.

    The asymptotic version uses the one-sided normal p-value. The
    bootstrapped version resamples the weighted portmanteau through the
    expansion and maps draws through the same affine transform, so its
    p-value equals that of a bootstrapped Ljung-Box test with shared draws.
    """
    if fitted is None:
        fitted = fit_filter(filter_spec, series)
    n = fitted.n
    max_lag = resolve_lag_rule(LagRule.of(lag_rule), n)
    corrs = sample_correlations(fitted.residuals, max_lag)
    observed = hong_statistic(corrs)
    if mode == "asymptotic":
        return TestResult(
            statistic=observed,
            draws=np.zeros(0),
            p_value=float(1.0 - ndtr(observed)),
            method="asymptotic",
            statistic_kind="hong",
            max_lag=max_lag,
            block_length=0,
            n_draws=0,
            seed=0,
            n=n,
            filter_kind=fitted.spec.kind,
        )
    if mode != "bootstrap":
        raise ValueError(f"unknown mode {mode!r}")
    if spec is None:
        raise ValueError("bootstrap mode needs a BootstrapSpec")
    q = ljung_box_test(series, filter_spec, lag_rule, mode="bootstrap", spec=spec, fitted=fitted)
    draws = _hong_from_portmanteau(q.draws, n, max_lag)
    return TestResult(
        statistic=observed,
        draws=draws,
        p_value=q.p_value,
        method=spec.method,
        statistic_kind="hong",
        max_lag=max_lag,
        block_length=q.block_length,
        n_draws=spec.draws,
        seed=spec.seed,
        n=n,
        filter_kind=fitted.spec.kind,
    )


def ljung_box_test(
    series: Series,
    filter_spec: "str | FilterSpec",
    lag_rule: "int | float | str | LagRule",
    mode: str = "bootstrap",
    spec: "BootstrapSpec | None" = None,
    fitted: "FittedFilter | None" = None,
) -> TestResult:
    """Ljung-Box Q-test with chi-squared or bootstrap p-value."""
    if fitted is None:
        fitted = fit_filter(filter_spec, series)
    n = fitted.n
    max_lag = resolve_lag_rule(LagRule.of(lag_rule), n)
    corrs = sample_correlations(fitted.residuals, max_lag)
    observed = weighted_portmanteau(corrs)
    if mode == "asymptotic":
        return TestResult(
            statistic=observed,
            draws=np.zeros(0),
            p_value=chi2_sf(observed, max_lag),
            method="asymptotic",
            statistic_kind="ljung_box",
            max_lag=max_lag,
            block_length=0,
            n_draws=0,
            seed=0,
            n=n,
            filter_kind=fitted.spec.kind,
        )
    if spec is None:
        raise ValueError("bootstrap mode needs a BootstrapSpec")
    from .bootstrap import bootstrap_test

    # The Q-statistic is the portmanteau with squared weights (n+2)/(n-h),
    # i.e. per-lag weights sqrt((n+2)/(n-h)) in the generic statistic.
    w = np.sqrt(ljung_box_weights(n, max_lag))
    result = bootstrap_test(
        series,
        filter_spec,
        max_lag,
        spec,
        weights=w,
        statistic_kind="portmanteau",
        fitted=fitted,
    )
    return TestResult(
        statistic=observed,
        draws=result.draws,
        p_value=result.p_value,
        method=spec.method,
        statistic_kind="ljung_box",
        max_lag=max_lag,
        block_length=result.block_length,
        n_draws=spec.draws,
        seed=spec.seed,
        n=n,
        filter_kind=fitted.spec.kind,
    )


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-squared distribution via the regularized incomplete gamma."""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    return float(gammaincc(df / 2.0, max(x, 0.0) / 2.0))


# ----------------------------------------------------------------------
# Spectral Cramer-von Mises test
# ----------------------------------------------------------------------


def cvm_statistic(
    series: Series,
    filter_spec: "str | FilterSpec" = "none",
    grid: "SpectralGrid | None" = None,
    fitted: "FittedFilter | None" = None,
) -> float:
    """CvM functional of the residual spectral distribution process.

    Sums all lags ``1..n-1`` of the residual autocovariances against the
    sine basis and integrates the squared process over (0, pi).
    """
    if grid is None:
        grid = SpectralGrid()
    if fitted is None:
        fitted = fit_filter(filter_spec, series)
    eps = fitted.residuals.values
    n = eps.size
    gamma = autocovariances(eps, n - 1)
    if gamma[0] <= 0.0:
        raise DegenerateSeriesError("residuals carry no variation")
    return cvm_from_gamma(gamma[1:], n, grid)


def cvm_bootstrap(
    series: Series,
    filter_spec: "str | FilterSpec",
    spec: BootstrapSpec,
    grid: "SpectralGrid | None" = None,
    fitted: "FittedFilter | None" = None,
) -> TestResult:
    """Wild / dependent wild bootstrap p-value for the CvM statistic.

    Draws replace the autocovariances with auxiliary-weighted, recentered
    expansion sums (the numerator of the bootstrapped correlation, not
    normalized by the lag-0 autocovariance) and share auxiliary streams
    with the max-correlation bootstrap for the same seed.
    """
    if spec.method == "brwb":
        raise ValueError("use brwb_test for the block-wise random weighting bootstrap")
    if grid is None:
        grid = SpectralGrid()
    if fitted is None:
        fitted = fit_filter(filter_spec, series)
    eps = fitted.residuals.values
    n = eps.size
    max_lag = n - 1
    gamma = autocovariances(eps, max_lag)
    if gamma[0] <= 0.0:
        raise DegenerateSeriesError("residuals carry no variation")
    psi = psi_matrix(max_lag, grid)
    observed = cvm_from_gamma(gamma[1:], n, grid, psi)

    expansion = compute_expansion(fitted, max_lag)
    scheme = make_blocks(n, spec.block_length(n))
    phi = auxiliary_matrix(scheme, spec)
    # (L, draws) matrix of phi-weighted recentered expansion sums, times the
    # lag-0 autocovariance to undo the correlation normalization.
    gamma_star = bootstrap_correlations(expansion, phi, recenter=spec.recenter)
    gamma_star *= expansion.gamma0_hat
    s_star = math.sqrt(n) * (psi.T @ gamma_star)
    draws = grid.integrate(s_star**2)
    return TestResult(
        statistic=observed,
        draws=draws,
        p_value=counting_p_value(draws, observed),
        method=spec.method,
        statistic_kind="cvm",
        max_lag=max_lag,
        block_length=scheme.block_length,
        n_draws=spec.draws,
        seed=spec.seed,
        n=n,
        filter_kind=fitted.spec.kind,
        extra={"theta_hat": fitted.theta_hat},
    )


# ----------------------------------------------------------------------
# Long-run variance and the orthogonalized Q-test
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LrvEstimate:
    """Long-run variance of residual cross-products for lags ``1..L``."""

    kind: str
    S_hat: np.ndarray
    V_hat: np.ndarray
    bandwidth: float


def default_bandwidth(n: int) -> float:
    """Bartlett bandwidth ``2 (n/100)^{1/3}``."""
    return 2.0 * (n / 100.0) ** (1.0 / 3.0)


def identity_lrv(max_lag: int) -> LrvEstimate:
    """Identity variance, appropriate when the test variable is iid."""
    eye = np.eye(max_lag)
    return LrvEstimate(kind="identity", S_hat=eye.copy(), V_hat=eye, bandwidth=0.0)


def bartlett_lrv(residuals: "Series | np.ndarray", max_lag: int, bandwidth: "float | None" = None) -> LrvEstimate:
    """Bartlett-kernel long-run variance of centered residual cross-products.

    The cross-product series ``eps_t eps_{t-i}`` for ``i = 1..L`` are put on
    the common frame ``t = L+1..n``, centered at their frame means, and
    accumulated with Bartlett weights ``1 - |l|/bw``, which keeps the
    estimate positive semidefinite by construction. ``V_hat`` divides by the
    squared lag-0 autocovariance. No prewhitening is applied.
    """
    eps = residuals.values if isinstance(residuals, Series) else np.asarray(residuals, dtype=np.float64)
    n = eps.size
    if not 1 <= max_lag < n:
        raise ValueError("need 1 <= L < n")
    if bandwidth is None:
        bandwidth = default_bandwidth(n)
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    frame = np.column_stack([eps[max_lag - i : n - i] for i in range(1, max_lag + 1)])
    frame = frame * eps[max_lag:, None]
    frame -= frame.mean(axis=0)
    t_eff = frame.shape[0]
    S = frame.T @ frame / t_eff
    for lag in range(1, min(int(bandwidth), t_eff - 1) + 1):
        w = 1.0 - lag / bandwidth
        if w <= 0.0:
            break
        g = frame[lag:].T @ frame[:-lag] / t_eff
        S += w * (g + g.T)
    gamma0 = float(eps @ eps) / n
    return LrvEstimate(kind="bartlett", S_hat=S, V_hat=S / gamma0**2, bandwidth=bandwidth)


def _safe_cholesky(v_hat: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(v_hat)
    except np.linalg.LinAlgError:
        ridge = _RIDGE_SCALE * np.trace(v_hat) / v_hat.shape[0]
        warnings.warn(
            "long-run variance is numerically singular; applying ridge",
            SingularLrvWarning,
            stacklevel=3,
        )
        return np.linalg.cholesky(v_hat + ridge * np.eye(v_hat.shape[0]))


@dataclass(frozen=True)
class _DvTransform:
    """Linear map taking a correlation vector to the transformed coordinates."""

    matrix: np.ndarray  # (L - k_theta, L)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return self.matrix @ rho


def _dv_transform(v_hat: np.ndarray, D_hat: np.ndarray, k_theta: int) -> _DvTransform:
    """Build the standardize-then-orthogonalize reduction to ``L - k_theta`` coordinates.

    Correlations are standardized by the inverse Cholesky factor of the
    long-run variance; when a plug-in was estimated, the span of the
    standardized expansion-direction columns is projected out and the first
    ``L - k_theta`` coordinates of the complement basis are kept.
    """
    L = v_hat.shape[0]
    chol = _safe_cholesky(v_hat)
    cinv = np.linalg.inv(chol)
    if k_theta == 0:
        return _DvTransform(matrix=cinv)
    W = cinv @ D_hat
    u, sv, _ = np.linalg.svd(W, full_matrices=True)
    tol = max(W.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    rank = int(np.sum(sv > tol))
    basis = u[:, rank:]
    return _DvTransform(matrix=(basis.T @ cinv)[: L - k_theta])


def dv_q_test(
    series: Series,
    filter_spec: "str | FilterSpec",
    lag_rule: "int | float | str | LagRule",
    lrv_kind: str = "bartlett",
    mode: str = "asymptotic",
    spec: "BootstrapSpec | None" = None,
    bandwidth: "float | None" = None,
    fitted: "FittedFilter | None" = None,
) -> TestResult:
    """Orthogonalized Q-test on transformed correlations of length ``L - k_theta``.

    ``Q = n * sum(rho_bar^2)`` is referred to the upper chi-squared
    ``(L - k_theta)`` tail in asymptotic mode; in bootstrapped mode the
    bootstrapped correlation vectors are passed through the identical
    transform and the p-value counts draws at or above the observed Q.
    """
    if fitted is None:
        fitted = fit_filter(filter_spec, series)
    n = fitted.n
    max_lag = resolve_lag_rule(LagRule.of(lag_rule), n)
    k_theta = fitted.k_theta
    if max_lag <= k_theta:
        raise ValueError(f"need max lag above k_theta = {k_theta}")
    corrs = sample_correlations(fitted.residuals, max_lag)
    expansion = compute_expansion(fitted, max_lag)
    if lrv_kind == "identity":
        lrv = identity_lrv(max_lag)
    elif lrv_kind == "bartlett":
        lrv = bartlett_lrv(fitted.residuals, max_lag, bandwidth)
    else:
        raise ValueError(f"unknown long-run variance kind {lrv_kind!r}")
    transform = _dv_transform(lrv.V_hat, expansion.D_hat, k_theta)
    rho_bar = transform(corrs.rho)
    observed = float(n * rho_bar @ rho_bar)
    df = max_lag - k_theta
    if mode == "asymptotic":
        return TestResult(
            statistic=observed,
            draws=np.zeros(0),
            p_value=chi2_sf(observed, df),
            method="asymptotic",
            statistic_kind="dv_q",
            max_lag=max_lag,
            block_length=0,
            n_draws=0,
            seed=0,
            n=n,
            filter_kind=fitted.spec.kind,
            extra={"rho_bar": rho_bar, "df": df, "lrv": lrv.kind},
        )
    if mode != "bootstrap":
        raise ValueError(f"unknown mode {mode!r}")
    if spec is None:
        raise ValueError("bootstrap mode needs a BootstrapSpec")
    if spec.method == "brwb":
        raise ValueError("the Q-test supports wb/dwb bootstraps only")
    scheme = make_blocks(n, spec.block_length(n))
    phi = auxiliary_matrix(scheme, spec)
    rho_star = bootstrap_correlations(expansion, phi, max_lag, recenter=spec.recenter)
    rho_bar_star = transform.matrix @ rho_star
    draws = n * np.sum(rho_bar_star**2, axis=0)
    return TestResult(
        statistic=observed,
        draws=draws,
        p_value=counting_p_value(draws, observed),
        method=spec.method,
        statistic_kind="dv_q",
        max_lag=max_lag,
        block_length=scheme.block_length,
        n_draws=spec.draws,
        seed=spec.seed,
        n=n,
        filter_kind=fitted.spec.kind,
        extra={"rho_bar": rho_bar, "df": df, "lrv": lrv.kind},
    )
