"""Plug-in filters, their score processes, and the residual cross-product expansion.

A filter produces residuals plus everything the bootstrap needs to account
for the sampling error of the estimated parameters: per-observation level
gradients ``G_t``, half log-variance gradients ``s_t``, estimating equations
``m_t`` with ``theta_hat - theta0 ~ A_hat * mean(m_t)``, and the matrix
``A_hat`` itself.

From those the expansion builds, for each lag ``h``,

    D_hat(h) = (1/n) * sum_{t=h+1}^n [ (eps_t s_t + G_t / sigma_t) eps_{t-h}
                                      + eps_t (eps_{t-h} s_{t-h} + G_{t-h} / sigma_{t-h}) ]

and the per-observation expansion variables

    E_hat[t, h] = eps_t eps_{t-h} - D_hat(h)' A_hat m_t,

which are what the dependent wild bootstrap resamples. Without a filter the
expansion reduces to the raw residual cross-products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .core_stats import Series
from .errors import DegenerateSeriesError, NonConvergenceError, RankDeficientError

_GRAM_COND_MAX = 1e12
_GARCH_BOUNDARY_TOL = 1e-6
# Bounds on the unconstrained GARCH parameterization, wide enough to reach
# effectively-boundary fits without overflowing exp().
_GARCH_TRANSFORM_BOUND = 35.0


@dataclass(frozen=True)
class FilterSpec:
    """Which plug-in to estimate: ``none``, ``mean``, ``ar`` (order p) or ``garch11``."""

    kind: str
    p: int = 0
    intercept: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("none", "mean", "ar", "garch11"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.kind == "ar" and self.p < 1:
            raise ValueError("AR filter needs order p >= 1; use the mean filter for p = 0")

    @property
    def k_theta(self) -> int:
        if self.kind == "none":
            return 0
        if self.kind == "mean":
            return 1
        if self.kind == "ar":
            return self.p + (1 if self.intercept else 0)
        return 3

    @classmethod
    def of(cls, spec: "str | FilterSpec") -> "FilterSpec":
        """Coerce ``'none'``, ``'mean'``, ``'ar:2'`` or ``'garch11'``."""
        if isinstance(spec, FilterSpec):
            return spec
        kind, _, arg = spec.strip().lower().partition(":")
        if kind == "ar":
            return cls("ar", p=int(arg))
        if kind in ("garch", "garch11"):
            return cls("garch11")
        return cls(kind)


@dataclass(frozen=True)
class FittedFilter:
    """A fitted plug-in with residuals and the objects the expansion needs.

    All per-observation arrays share the residual sample length; for an AR
    filter that is ``n - p`` (the first ``p`` observations condition the
    regression and carry no residual).
    """

    spec: FilterSpec
    theta_hat: np.ndarray
    residuals: Series
    sigma: np.ndarray
    G: np.ndarray
    s: np.ndarray
    m: np.ndarray
    A_hat: np.ndarray
    converged: bool = True
    boundary: bool = False

    @property
    def n(self) -> int:
        return len(self.residuals)

    @property
    def k_theta(self) -> int:
        return self.G.shape[1]


@dataclass(frozen=True)
class ExpansionSet:
    """Per-lag ``D_hat`` vectors and per-(t, h) expansion variables.

    ``E`` is an ``(L, n)`` matrix whose row ``h - 1`` holds
    ``E_hat[t, h]`` at positions ``t = h..n-1`` (0-indexed) and zeros where
    the lagged product does not exist. ``means[h - 1]`` is
    ``(1/n) * sum_t E_hat[t, h]`` (divisor ``n`` over the ``n - h`` valid
    terms, matching the bootstrap recentering).
    """

    D_hat: np.ndarray
    E: np.ndarray
    means: np.ndarray
    gamma0_hat: float
    n: int
    max_lag: int
    k_theta: int

    def values_at_lag(self, h: int) -> np.ndarray:
        """Expansion variables for lag ``h``, for ``t = h+1..n`` (1-indexed)."""
        if not 1 <= h <= self.max_lag:
            raise ValueError(f"lag {h} out of range")
        return self.E[h - 1, h:]


def fit_filter(spec: "str | FilterSpec", series: Series) -> FittedFilter:
    """Fit the requested plug-in to ``series``."""
    spec = FilterSpec.of(spec)
    if spec.kind == "none":
        return fit_none(series)
    if spec.kind == "mean":
        return fit_mean(series)
    if spec.kind == "ar":
        return fit_ar_ols(series, spec.p, intercept=spec.intercept)
    return fit_garch_qml(series)


def fit_none(series: Series) -> FittedFilter:
    """No plug-in: the data are the test variable, assumed zero mean."""
    n = len(series)
    empty = np.zeros((n, 0))
    return FittedFilter(
        spec=FilterSpec("none"),
        theta_hat=np.zeros(0),
        residuals=series,
        sigma=np.ones(n),
        G=empty,
        s=empty,
        m=empty,
        A_hat=np.zeros((0, 0)),
    )


def fit_mean(series: Series) -> FittedFilter:
    """Mean filter: residuals are deviations from the sample mean.

    ``G_t = 1``, ``s_t = 0``, ``m_t = eps_t`` and ``A_hat = 1``, so the
    estimating equations sum to zero exactly.
    """
    y = series.values
    n = y.size
    phi = float(y.mean())
    eps = y - phi
    if np.all(eps == 0.0):
        raise DegenerateSeriesError("all observations equal; mean filter leaves no variation")
    return FittedFilter(
        spec=FilterSpec("mean"),
        theta_hat=np.array([phi]),
        residuals=Series(eps, label=series.label),
        sigma=np.ones(n),
        G=np.ones((n, 1)),
        s=np.zeros((n, 1)),
        m=eps[:, None].copy(),
        A_hat=np.ones((1, 1)),
    )


def fit_ar_ols(series: Series, p: int, intercept: bool = True) -> FittedFilter:
    """AR(p) filter by least squares, conditioning on the first ``p`` values.

    The design vector is ``(1, y_{t-1}, ..., y_{t-p})`` (the constant is
    dropped when ``intercept`` is off). Residuals run over ``t = p+1..n``,
    so the effective sample has ``n - p`` observations. ``m_t = x_t eps_t``
    and ``A_hat`` is the inverse sample Gram matrix.
    """
    if p < 1:
        raise ValueError("AR filter needs order p >= 1; use the mean filter for p = 0")
    y = series.values
    n = y.size
    if n <= p + 1:
        raise ValueError(f"need n > p + 1 = {p + 1}, got n = {n}")
    cols = [y[p - j - 1 : n - j - 1] for j in range(p)]
    if intercept:
        cols.insert(0, np.ones(n - p))
    X = np.column_stack(cols)
    resp = y[p:]
    n_eff = n - p
    gram = X.T @ X / n_eff
    if np.linalg.cond(gram) > _GRAM_COND_MAX:
        raise RankDeficientError("AR design Gram matrix is numerically singular")
    phi = np.linalg.solve(gram * n_eff, X.T @ resp)
    eps = resp - X @ phi
    return FittedFilter(
        spec=FilterSpec("ar", p=p, intercept=intercept),
        theta_hat=phi,
        residuals=Series(eps, label=series.label),
        sigma=np.ones(n_eff),
        G=X,
        s=np.zeros_like(X),
        m=X * eps[:, None],
        A_hat=np.linalg.inv(gram),
    )


# ----------------------------------------------------------------------
# GARCH(1,1) quasi-maximum likelihood
# ----------------------------------------------------------------------


def garch_variance(y: np.ndarray, omega: float, alpha: float, beta: float) -> np.ndarray:
    """Iterated conditional variance: ``v_1 = omega``, ``v_t = omega + alpha y_{t-1}^2 + beta v_{t-1}``."""
    x = np.empty(y.size)
    x[0] = omega
    x[1:] = omega + alpha * y[:-1] ** 2
    return lfilter([1.0], [1.0, -beta], x)


def garch_variance_grad(
    y: np.ndarray, omega: float, alpha: float, beta: float, sig2: np.ndarray
) -> np.ndarray:
    """Derivatives of the variance recursion w.r.t. (omega, alpha, beta).

    Each component obeys the same AR(1)-in-beta recursion as the variance,
    seeded at ``(1, 0, 0)`` consistent with ``v_1 = omega``.
    """
    n = y.size
    x_omega = np.ones(n)
    x_alpha = np.empty(n)
    x_alpha[0] = 0.0
    x_alpha[1:] = y[:-1] ** 2
    x_beta = np.empty(n)
    x_beta[0] = 0.0
    x_beta[1:] = sig2[:-1]
    a = [1.0, -beta]
    return np.column_stack(
        [lfilter([1.0], a, x_omega), lfilter([1.0], a, x_alpha), lfilter([1.0], a, x_beta)]
    )


def garch_negloglik(y: np.ndarray, theta: np.ndarray) -> float:
    """Negative Gaussian quasi-log-likelihood ``(1/2) sum(log v_t + y_t^2 / v_t)``."""
    sig2 = garch_variance(y, *theta)
    return 0.5 * float(np.sum(np.log(sig2) + y**2 / sig2))


def _garch_negloglik_grad(y: np.ndarray, theta: np.ndarray) -> tuple[float, np.ndarray]:
    sig2 = garch_variance(y, *theta)
    dsig2 = garch_variance_grad(y, *theta, sig2)
    eps2 = y**2 / sig2
    nll = 0.5 * float(np.sum(np.log(sig2) + eps2))
    grad = 0.5 * ((1.0 - eps2) / sig2) @ dsig2
    return nll, grad


def _from_unconstrained(v: np.ndarray) -> np.ndarray:
    u, pa, pb = v
    den = 1.0 + np.exp(pa) + np.exp(pb)
    return np.array([np.exp(u), np.exp(pa) / den, np.exp(pb) / den])


def _to_unconstrained(theta: np.ndarray) -> np.ndarray:
    omega, alpha, beta = theta
    gap = 1.0 - alpha - beta
    return np.array([np.log(omega), np.log(alpha / gap), np.log(beta / gap)])


def _transform_jacobian(theta: np.ndarray) -> np.ndarray:
    omega, alpha, beta = theta
    return np.array(
        [
            [omega, 0.0, 0.0],
            [0.0, alpha * (1.0 - alpha), -alpha * beta],
            [0.0, -alpha * beta, beta * (1.0 - beta)],
        ]
    )


_GARCH_START_FRACS = ((0.5, 0.1, 0.8), (0.3, 0.2, 0.5), (0.8, 0.05, 0.9))


def fit_garch_qml(series: Series, weights: "np.ndarray | None" = None) -> FittedFilter:
    """GARCH(1,1) filter by Gaussian QML with positivity and alpha+beta <= 1.

    The constraints are enforced through a log/logit reparameterization and
    the (optionally observation-weighted) objective is minimized by L-BFGS-B
    with analytic gradients, from three fixed starting points scaled by the
    sample variance. Residuals are ``y_t / sigma_t(theta_hat)``, the
    estimating equations are ``m_t = s_t (eps_t^2 - 1)``, and ``A_hat``
    solves the QML expansion ``theta_hat - theta0 ~ A_hat * mean(m_t)``,
    i.e. ``A_hat = (2/n sum s_t s_t')^{-1}``.
    """
    y = series.values
    n = y.size
    if n < 50:
        raise ValueError(f"GARCH QML needs n >= 50, got {n}")
    wts = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    if wts.shape != (n,) or np.any(wts < 0):
        raise ValueError("weights must be a nonnegative array of length n")

    def objective(v: np.ndarray) -> tuple[float, np.ndarray]:
        theta = _from_unconstrained(v)
        sig2 = garch_variance(y, *theta)
        dsig2 = garch_variance_grad(y, *theta, sig2)
        eps2 = y**2 / sig2
        nll = 0.5 * float(np.sum(wts * (np.log(sig2) + eps2)))
        grad_theta = 0.5 * (wts * (1.0 - eps2) / sig2) @ dsig2
        return nll, _transform_jacobian(theta) @ grad_theta

    vy = float(np.var(y))
    if vy <= 0.0:
        raise DegenerateSeriesError("zero-variance series cannot carry a GARCH filter")
    bounds = [(-_GARCH_TRANSFORM_BOUND, _GARCH_TRANSFORM_BOUND)] * 3
    best = None
    any_converged = False
    for frac, a0, b0 in _GARCH_START_FRACS:
        v0 = _to_unconstrained(np.array([vy * frac, a0, b0]))
        res = minimize(objective, v0, jac=True, method="L-BFGS-B", bounds=bounds)
        any_converged = any_converged or bool(res.success)
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None or not np.isfinite(best.fun):
        raise NonConvergenceError("GARCH QML failed from every starting point")
    if not any_converged:
        raise NonConvergenceError("GARCH QML hit the iteration cap from every starting point")

    theta = _from_unconstrained(best.x)
    sig2 = garch_variance(y, *theta)
    dsig2 = garch_variance_grad(y, *theta, sig2)
    s = 0.5 * dsig2 / sig2[:, None]
    eps = y / np.sqrt(sig2)
    m = s * (eps**2 - 1.0)[:, None]
    A_hat = np.linalg.inv(2.0 * (s.T @ s) / n)
    return FittedFilter(
        spec=FilterSpec("garch11"),
        theta_hat=theta,
        residuals=Series(eps, label=series.label),
        sigma=np.sqrt(sig2),
        G=np.zeros((n, 3)),
        s=s,
        m=m,
        A_hat=A_hat,
        converged=True,
        boundary=bool(theta[1] + theta[2] > 1.0 - _GARCH_BOUNDARY_TOL),
    )


# ----------------------------------------------------------------------
# First-order expansion
# ----------------------------------------------------------------------


def compute_expansion(fitted: FittedFilter, max_lag: int) -> ExpansionSet:
    """Lagwise ``D_hat`` vectors and expansion variables up to ``max_lag``."""
    eps = fitted.residuals.values
    n = eps.size
    if not 1 <= max_lag <= n - 1:
        raise ValueError(f"max lag {max_lag} out of range for n = {n}")
    gamma0 = float(eps @ eps) / n
    if gamma0 <= 0.0:
        raise DegenerateSeriesError("residuals carry no variation")

    k = fitted.k_theta
    u = eps[:, None] * fitted.s + fitted.G / fitted.sigma[:, None]
    # W[t] = A_hat' applied to m_t, so the lag-h correction is W @ D_hat(h).
    W = fitted.m @ fitted.A_hat.T if k else np.zeros((n, 0))

    D_hat = np.zeros((max_lag, k))
    E = np.zeros((max_lag, n))
    means = np.zeros(max_lag)
    for h in range(1, max_lag + 1):
        products = eps[h:] * eps[:-h]
        if k:
            D_hat[h - 1] = (u[h:] * eps[:-h, None] + eps[h:, None] * u[:-h]).sum(axis=0) / n
            E[h - 1, h:] = products - W[h:] @ D_hat[h - 1]
        else:
            E[h - 1, h:] = products
        means[h - 1] = E[h - 1, h:].sum() / n
    return ExpansionSet(
        D_hat=D_hat, E=E, means=means, gamma0_hat=gamma0, n=n, max_lag=max_lag, k_theta=k
    )
