"""Dependent wild bootstrap, wild bootstrap, and block-wise random weighting bootstrap.

The dependent wild bootstrap multiplies recentered expansion variables by an
auxiliary series that is constant within blocks and standard normal across
blocks:

    rho*(h) = [ (1/n) sum_{t=1+h}^n phi_t { E_hat[t,h] - (1/n) sum_s E_hat[s,h] } ]
              / [ (1/n) sum_t eps_t^2 ]

Resampling raw residual products instead of the expansion variables would
scrub the plug-in estimator's contribution out of the draws, so the
expansion set is a required input. The wild bootstrap is the special case
of block length 1 with no recentering.

Draw ``i`` always consumes the stream ``(seed, DOMAIN_BOOTSTRAP, i)``, so
results are independent of evaluation order and identical across thread
counts, and tests that share a seed (and block length) see identical
auxiliary draws.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .core_stats import (
    LagRule,
    LagWeights,
    Series,
    autocovariances,
    resolve_lag_rule,
    resolve_weights,
    sample_correlations,
    statistic_from_rho,
)
from .errors import DegenerateSeriesError, NonConvergenceError
from .filters import ExpansionSet, FilterSpec, FittedFilter, compute_expansion, fit_filter
from .spectral import SpectralGrid, cvm_from_gamma, psi_matrix

# Two-point distribution with mean 1 and variance 1 used for the block-wise
# random weighting bootstrap: values (3 -+ sqrt(5))/2.
BRWB_LOW = 0.5 * (3.0 - math.sqrt(5.0))
BRWB_HIGH = 0.5 * (3.0 + math.sqrt(5.0))
BRWB_P_LOW = (1.0 + math.sqrt(5.0)) / (2.0 * math.sqrt(5.0))

_BRWB_MAX_DISCARD = 0.05


@dataclass(frozen=True)
class BlockScheme:
    """A partition of ``1..n`` into consecutive blocks of length ``block_length``.

    The final block may be short when ``n`` is not a multiple of the block
    length; it still receives its own auxiliary draw.
    """

    n: int
    block_length: int

    def __post_init__(self) -> None:
        if not 1 <= self.block_length < self.n:
            raise ValueError(f"block length must satisfy 1 <= b < n = {self.n}")

    @property
    def n_blocks(self) -> int:
        return -(-self.n // self.block_length)

    def bounds(self) -> list[tuple[int, int]]:
        """Half-open (start, stop) index ranges of each block, 0-indexed."""
        b = self.block_length
        return [(s * b, min((s + 1) * b, self.n)) for s in range(self.n_blocks)]


@dataclass(frozen=True)
class BootstrapSpec:
    """Bootstrap configuration: method, block rule, draw count, seed, recentering.

    ``block`` is either the string ``"sqrt"`` (block length ``int(sqrt(n))``)
    or a fixed positive integer. Constructing a ``wb`` spec forces block
    length 1 and no recentering.
    """

    method: str = "dwb"
    block: "str | int" = "sqrt"
    draws: int = 500
    seed: int = 0
    recenter: bool = True

    def __post_init__(self) -> None:
        if self.method not in ("dwb", "wb", "brwb"):
            raise ValueError(f"unknown bootstrap method {self.method!r}")
        if self.draws < 1:
            raise ValueError("need at least one bootstrap draw")
        if isinstance(self.block, str):
            if self.block != "sqrt":
                raise ValueError(f"unknown block rule {self.block!r}")
        elif self.block < 1:
            raise ValueError("fixed block length must be >= 1")
        if self.method == "wb":
            object.__setattr__(self, "block", 1)
            object.__setattr__(self, "recenter", False)

    def block_length(self, n: int) -> int:
        b = int(math.sqrt(n)) if self.block == "sqrt" else int(self.block)
        if b >= n:
            raise ValueError(f"block length {b} must be below n = {n}")
        return b


def reduce_to_wild(spec: BootstrapSpec) -> BootstrapSpec:
    """Degenerate a spec to the wild bootstrap: block length 1, no recentering."""
    return dataclasses.replace(spec, block=1, recenter=False)


@dataclass(frozen=True)
class TestResult:
    """Observed statistic, bootstrap draws, and the counting p-value."""

    statistic: float
    draws: np.ndarray
    p_value: float
    method: str
    statistic_kind: str
    max_lag: int
    block_length: int
    n_draws: int
    seed: int
    n: int
    filter_kind: str
    extra: dict = field(default_factory=dict)

    def reject(self, alpha: float) -> bool:
        return self.p_value < alpha


def counting_p_value(draws: np.ndarray, statistic: float) -> float:
    """Proportion of draws at or above the observed statistic."""
    return float(np.mean(draws >= statistic))


def make_blocks(n: int, block_length: int) -> BlockScheme:
    return BlockScheme(n=n, block_length=block_length)


def draw_auxiliary(scheme: BlockScheme, rng: np.random.Generator) -> np.ndarray:
    """Auxiliary multipliers: iid standard normal per block, constant within."""
    xi = rng.standard_normal(scheme.n_blocks)
    return np.repeat(xi, scheme.block_length)[: scheme.n]


def draw_brwb_weights(scheme: BlockScheme, rng: np.random.Generator) -> np.ndarray:
    """Positive block weights from the two-point mean-1 variance-1 distribution."""
    low = rng.random(scheme.n_blocks) < BRWB_P_LOW
    delta = np.where(low, BRWB_LOW, BRWB_HIGH)
    return np.repeat(delta, scheme.block_length)[: scheme.n]


def auxiliary_matrix(scheme: BlockScheme, spec: BootstrapSpec) -> np.ndarray:
    """All ``draws`` auxiliary series as a ``(draws, n)`` matrix, one stream per draw."""
    phi = np.empty((spec.draws, scheme.n))
    for i in range(spec.draws):
        gen = rngmod.stream(spec.seed, rngmod.DOMAIN_BOOTSTRAP, i)
        phi[i] = draw_auxiliary(scheme, gen)
    return phi


def _centered_expansion(expansion: ExpansionSet, recenter: bool) -> np.ndarray:
    if not recenter:
        return expansion.E
    mask = np.triu(np.ones((expansion.max_lag, expansion.n)), k=1)
    return expansion.E - expansion.means[:, None] * mask


def bootstrap_correlations(
    expansion: ExpansionSet, phi: np.ndarray, max_lag: "int | None" = None, recenter: bool = True
) -> np.ndarray:
    """Bootstrapped correlations from one auxiliary series or a matrix of them.

    ``phi`` is either a length-``n`` vector (returns a length-``L`` vector)
    or a ``(draws, n)`` matrix (returns ``(L, draws)``).
    """
    if max_lag is None:
        max_lag = expansion.max_lag
    if max_lag > expansion.max_lag:
        raise ValueError("expansion does not cover the requested lags")
    if expansion.gamma0_hat <= 0.0:
        raise DegenerateSeriesError("degenerate bootstrap denominator")
    ec = _centered_expansion(expansion, recenter)[:max_lag]
    scale = expansion.n * expansion.gamma0_hat
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim == 1:
        return ec @ phi / scale
    return ec @ phi.T / scale


def bootstrap_test(
    series: Series,
    filter_spec: "str | FilterSpec",
    lag_rule: "int | float | str | LagRule",
    spec: BootstrapSpec,
    weights: "str | np.ndarray" = "constant",
    statistic_kind: str = "max",
    fitted: "FittedFilter | None" = None,
) -> TestResult:
    """Bootstrap p-value test of the white noise hypothesis.

    Fits the filter (unless a pre-fitted one is supplied), computes the
    observed statistic from the residual correlations, then compares it with
    ``spec.draws`` bootstrapped statistics built from the expansion
    variables. Reject at level ``alpha`` when ``p_value < alpha``.
    """
    if spec.method == "brwb":
        raise ValueError("use brwb_test for the block-wise random weighting bootstrap")
    if fitted is None:
        fitted = fit_filter(filter_spec, series)
    n = fitted.n
    max_lag = resolve_lag_rule(LagRule.of(lag_rule), n)
    corrs = sample_correlations(fitted.residuals, max_lag)
    w = resolve_weights(weights, n, max_lag)
    observed = statistic_from_rho(corrs.rho, n, w, statistic_kind)

    expansion = compute_expansion(fitted, max_lag)
    scheme = make_blocks(n, spec.block_length(n))
    phi = auxiliary_matrix(scheme, spec)
    rho_star = bootstrap_correlations(expansion, phi, max_lag, recenter=spec.recenter)
    draws = statistic_from_rho(rho_star, n, w, statistic_kind)
    return TestResult(
        statistic=float(observed),
        draws=draws,
        p_value=counting_p_value(draws, float(observed)),
        method=spec.method,
        statistic_kind=statistic_kind,
        max_lag=max_lag,
        block_length=scheme.block_length,
        n_draws=spec.draws,
        seed=spec.seed,
        n=n,
        filter_kind=fitted.spec.kind,
        extra={"theta_hat": fitted.theta_hat, "weights": w.scheme, "rho": corrs.rho},
    )


# ----------------------------------------------------------------------
# Block-wise random weighting bootstrap (for the spectral CvM statistic)
# ----------------------------------------------------------------------


def _weighted_refit(series: Series, fitted: FittedFilter, wts: np.ndarray) -> FittedFilter:
    """Re-estimate the filter with observation weights on its objective."""
    kind = fitted.spec.kind
    y = series.values
    if kind == "none":
        return fitted
    if kind == "mean":
        phi = float(np.sum(wts * y) / np.sum(wts))
        eps = y - phi
        return dataclasses.replace(
            fitted, theta_hat=np.array([phi]), residuals=Series(eps), m=eps[:, None].copy()
        )
    if kind == "ar":
        X = fitted.G
        resp = y[fitted.spec.p :]
        xtw = X.T * wts
        phi = np.linalg.solve(xtw @ X, xtw @ resp)
        eps = resp - X @ phi
        return dataclasses.replace(
            fitted, theta_hat=phi, residuals=Series(eps), m=X * eps[:, None]
        )
    refit = fit_garch_qml_weighted(series, wts)
    return refit


def fit_garch_qml_weighted(series: Series, wts: np.ndarray) -> FittedFilter:
    from .filters import fit_garch_qml

    return fit_garch_qml(series, weights=wts)


def brwb_test(
    series: Series,
    filter_spec: "str | FilterSpec",
    spec: BootstrapSpec,
    grid: "SpectralGrid | None" = None,
    fitted: "FittedFilter | None" = None,
) -> TestResult:
    """Block-wise random weighting bootstrap of the spectral CvM statistic.

    Each draw re-estimates the filter under positive block-constant weights
    on the estimation objective, rebuilds the weighted expansion
    autocovariances, and recenters the spectral process by both the observed
    process and the weight-drift term before integrating its square. Draws
    whose weighted re-fit fails to converge are discarded (at most 5% of the
    requested draws, else the test aborts).
    """
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
    sqrt_n = math.sqrt(n)
    # Weighted series for the refit: AR objectives weight the n - p
    # regression rows, so the auxiliary blocks are drawn on the residual
    # sample frame shared by every other quantity here.
    draws = []
    n_discarded = 0
    for i in range(spec.draws):
        gen = rngmod.stream(spec.seed, rngmod.DOMAIN_BOOTSTRAP, i)
        wts = draw_brwb_weights(scheme, gen)
        try:
            refit = _weighted_refit(series, fitted, wts)
        except NonConvergenceError:
            n_discarded += 1
            if n_discarded > _BRWB_MAX_DISCARD * spec.draws:
                raise NonConvergenceError(
                    "more than 5% of weighted re-fits failed to converge"
                ) from None
            continue
        eps_star = refit.residuals.values
        corr = refit.m @ fitted.A_hat.T @ expansion.D_hat.T if fitted.k_theta else None
        gamma_star = np.empty(max_lag)
        for h in range(1, max_lag + 1):
            vals = eps_star[h:] * eps_star[:-h]
            if corr is not None:
                vals = vals - corr[h:, h - 1]
            gamma_star[h - 1] = np.sum(wts[h:] * vals) / n
        # Weight-drift recentering: sum_{t=h+1}^n w_t - (n - h) per lag.
        csum = np.cumsum(wts)
        tail_sums = csum[-1] - csum[:max_lag]
        drift = (tail_sums - (n - np.arange(1, max_lag + 1))) / sqrt_n
        delta = sqrt_n * (gamma_star - gamma[1:]) @ psi - drift * gamma[1:] @ psi
        draws.append(grid.integrate(delta**2))
    draws = np.asarray(draws)
    return TestResult(
        statistic=observed,
        draws=draws,
        p_value=counting_p_value(draws, observed),
        method="brwb",
        statistic_kind="cvm",
        max_lag=max_lag,
        block_length=scheme.block_length,
        n_draws=draws.size,
        seed=spec.seed,
        n=n,
        filter_kind=fitted.spec.kind,
        extra={"theta_hat": fitted.theta_hat, "n_discarded": n_discarded},
    )
