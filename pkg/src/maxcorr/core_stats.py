"""Sample autocovariances and the statistics built from them.

Conventions used throughout the package:

* the lag-``h`` sample autocovariance divides by ``n`` (never ``n - h``) and
  does not demean internally -- the input is treated as an already-centered
  test variable;
* lag 0 is excluded from every test statistic (its correlation is
  identically 1);
* the maximum-lag schedule is either fixed or ``int(delta * n / ln(n))``
  with truncation toward zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ClippedLagWarning, DegenerateSeriesError

# Relative floor below which a lag-0 autocovariance is treated as zero
# (covers residuals that are pure floating-point roundoff).
_GAMMA0_FLOOR = 1e-28


@dataclass(frozen=True)
class Series:
    """An ordered finite sequence of real observations.

    ``values`` is coerced to a read-only float64 array. All values must be
    finite and the length must be at least 2.
    """

    values: np.ndarray
    label: str = ""
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("series must be one-dimensional")
        if v.size < 2:
            raise ValueError("series must contain at least 2 observations")
        if not np.all(np.isfinite(v)):
            raise ValueError("series contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class CorrelationSet:
    """Sample autocovariances ``gamma[0..L]`` and autocorrelations ``rho[1..L]``.

    ``gamma[h]`` is stored at index ``h``; ``rho`` is stored for lags
    ``1..L`` so ``rho[h - 1]`` is the lag-``h`` autocorrelation.
    """

    gamma: np.ndarray
    rho: np.ndarray
    n: int
    max_lag: int

    def __post_init__(self) -> None:
        if self.gamma.shape != (self.max_lag + 1,) or self.rho.shape != (self.max_lag,):
            raise ValueError("inconsistent correlation set shapes")


@dataclass(frozen=True)
class LagWeights:
    """Per-lag weights, strictly positive, for lags ``1..L``."""

    scheme: str
    resolved: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.resolved, dtype=np.float64)
        if r.ndim != 1 or not np.all(r > 0):
            raise ValueError("lag weights must be a 1-d array of positive reals")
        object.__setattr__(self, "resolved", r)


@dataclass(frozen=True)
class LagRule:
    """Maximum-lag schedule: ``fixed(L)`` or ``proportional(delta)``.

    The proportional rule resolves to ``int(delta * n / ln(n))``, truncating
    toward zero.
    """

    kind: str
    fixed: int = 0
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == "fixed":
            if self.fixed < 1:
                raise ValueError("fixed lag rule needs L >= 1")
        elif self.kind == "proportional":
            if not 0.0 < self.delta <= 1.0:
                raise ValueError("proportional lag rule needs delta in (0, 1]")
        else:
            raise ValueError(f"unknown lag rule kind: {self.kind!r}")

    @classmethod
    def of(cls, spec: "int | float | str | LagRule") -> "LagRule":
        """Coerce ``5``, ``'fixed:5'``, ``'prop:0.5'`` or a LagRule."""
        if isinstance(spec, LagRule):
            return spec
        if isinstance(spec, int):
            return cls("fixed", fixed=spec)
        if isinstance(spec, float):
            return cls("proportional", delta=spec)
        kind, _, arg = spec.partition(":")
        kind = kind.strip().lower()
        if kind in ("fixed", "l"):
            return cls("fixed", fixed=int(arg))
        if kind in ("prop", "proportional"):
            return cls("proportional", delta=float(arg))
        raise ValueError(f"cannot parse lag rule {spec!r}")


def resolve_lag_rule(rule: LagRule, n: int) -> int:
    """Resolve a lag rule to a concrete maximum lag for sample size ``n``.

    Requires ``n >= 8``. A resolved lag above ``n - 1`` is clipped to
    ``n - 1`` with a :class:`ClippedLagWarning`.
    """
    if n < 8:
        raise ValueError("need n >= 8 to resolve a lag rule")
    if rule.kind == "fixed":
        lag = rule.fixed
    else:
        lag = int(rule.delta * n / math.log(n))
    lag = max(lag, 1)
    if lag > n - 1:
        warnings.warn(
            f"resolved max lag {lag} exceeds n - 1 = {n - 1}; clipping",
            ClippedLagWarning,
            stacklevel=2,
        )
        lag = n - 1
    return lag


def resolve_weights(scheme: "str | np.ndarray", n: int, max_lag: int) -> LagWeights:
    """Resolve a weighting scheme to per-lag weights for lags ``1..max_lag``.

    ``constant`` gives 1 at every lag; ``ljung_box`` gives ``(n + 2)/(n - h)``;
    an array is taken as custom weights.
    """
    if max_lag >= n:
        raise ValueError("max lag must be below n")
    if isinstance(scheme, str):
        name = scheme.lower()
        if name == "constant":
            return LagWeights("constant", np.ones(max_lag))
        if name == "ljung_box":
            h = np.arange(1, max_lag + 1, dtype=np.float64)
            return LagWeights("ljung_box", (n + 2.0) / (n - h))
        raise ValueError(f"unknown weight scheme {scheme!r}")
    custom = np.asarray(scheme, dtype=np.float64)
    if custom.shape != (max_lag,):
        raise ValueError("custom weights must have one entry per lag")
    return LagWeights("custom", custom)


def sample_autocovariance(series: Series, h: int) -> float:
    """Lag-``h`` sample autocovariance ``(1/n) * sum_{t=1+h}^n x_t x_{t-h}``."""
    x = series.values
    n = x.size
    if not 0 <= h <= n - 1:
        raise ValueError(f"lag {h} out of range for n = {n}")
    if h == 0:
        return float(x @ x) / n
    return float(x[h:] @ x[:-h]) / n


def autocovariances(values: np.ndarray, max_lag: int) -> np.ndarray:
    """Autocovariances for lags ``0..max_lag`` of an array, divisor ``n``."""
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    out = np.empty(max_lag + 1)
    out[0] = (x @ x) / n
    for h in range(1, max_lag + 1):
        out[h] = (x[h:] @ x[:-h]) / n
    return out


def sample_correlations(series: Series, max_lag: int) -> CorrelationSet:
    """Autocovariances and autocorrelations of ``series`` up to ``max_lag``.

    Raises :class:`DegenerateSeriesError` when the lag-0 autocovariance is
    zero (to floating-point noise), which signals that a filter absorbed all
    variation in the data.
    """
    n = len(series)
    if max_lag < 1:
        raise ValueError("need at least one testable lag")
    if max_lag > n - 1:
        raise ValueError(f"max lag {max_lag} exceeds n - 1 = {n - 1}")
    gamma = autocovariances(series.values, max_lag)
    scale = float(np.max(np.abs(series.values)))
    if gamma[0] <= _GAMMA0_FLOOR * (1.0 + scale) ** 2:
        raise DegenerateSeriesError("lag-0 autocovariance is numerically zero")
    return CorrelationSet(gamma=gamma, rho=gamma[1:] / gamma[0], n=n, max_lag=max_lag)


def max_corr_statistic(corrs: CorrelationSet, weights: LagWeights) -> float:
    """``sqrt(n) * max_h |w(h) * rho(h)|`` over lags ``1..L``."""
    if weights.resolved.shape != corrs.rho.shape:
        raise ValueError("weights and correlations must cover the same lags")
    return float(np.sqrt(corrs.n) * np.max(np.abs(weights.resolved * corrs.rho)))


def portmanteau_statistic(corrs: CorrelationSet, weights: LagWeights) -> float:
    """``n * sum_h w(h)^2 * rho(h)^2`` over lags ``1..L``."""
    if weights.resolved.shape != corrs.rho.shape:
        raise ValueError("weights and correlations must cover the same lags")
    return float(corrs.n * np.sum((weights.resolved * corrs.rho) ** 2))


def statistic_from_rho(rho: np.ndarray, n: int, weights: LagWeights, kind: str) -> "float | np.ndarray":
    """Evaluate the test statistic on one rho vector or a matrix of draws.

    ``rho`` may be a vector of length L or an ``(L, M)`` matrix, in which
    case one statistic per column is returned. Supported kinds: ``max``
    (scaled max absolute weighted correlation) and ``portmanteau``
    (weighted sum of squares).
    """
    rho = np.asarray(rho, dtype=np.float64)
    w = weights.resolved if rho.ndim == 1 else weights.resolved[:, None]
    if kind == "max":
        out = np.sqrt(n) * np.max(np.abs(w * rho), axis=0)
    elif kind == "portmanteau":
        out = n * np.sum((w * rho) ** 2, axis=0)
    else:
        raise ValueError(f"unknown statistic kind {kind!r}")
    return float(out) if rho.ndim == 1 else out


STATISTIC_KINDS = ("max", "portmanteau")
