import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from maxcorr import (
    CorrelationSet,
    DegenerateSeriesError,
    LagRule,
    Series,
    max_corr_statistic,
    portmanteau_statistic,
    resolve_lag_rule,
    resolve_weights,
    sample_autocovariance,
    sample_correlations,
)
from maxcorr.core_stats import statistic_from_rho
from maxcorr.errors import ClippedLagWarning


def acov_oracle(x, h):
    """Straight-line direct summation with divisor n."""
    n = len(x)
    total = 0.0
    for t in range(h, n):
        total += x[t] * x[t - h]
    return total / n


series_values = hnp.arrays(
    np.float64,
    st.integers(min_value=2, max_value=60),
    elements=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
)


def test_autocovariance_zero_series():
    assert sample_autocovariance(Series(np.zeros(4)), 1) == 0.0


def test_autocovariance_hand_values():
    s = Series(np.array([1.0, -1.0, 2.0, -2.0]))
    assert sample_autocovariance(s, 0) == pytest.approx(2.5, rel=1e-15)
    assert sample_autocovariance(s, 1) == pytest.approx(-1.75, rel=1e-15)


def test_autocovariance_lag_out_of_range():
    s = Series(np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        sample_autocovariance(s, 3)
    with pytest.raises(ValueError):
        sample_autocovariance(s, -1)


def test_series_rejects_bad_input():
    with pytest.raises(ValueError):
        Series(np.array([1.0]))
    with pytest.raises(ValueError):
        Series(np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        Series(np.array([1.0, np.inf]))


@given(series_values, st.data())
@settings(max_examples=100, deadline=None)
def test_autocovariance_matches_oracle(values, data):
    h = data.draw(st.integers(min_value=0, max_value=len(values) - 1))
    got = sample_autocovariance(Series(values), h)
    want = acov_oracle(values, h)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_correlations_hand_value():
    c = sample_correlations(Series(np.array([1.0, -1.0, 1.0, -1.0])), 1)
    assert c.rho[0] == pytest.approx(-0.75, rel=1e-15)
    assert c.gamma[0] == pytest.approx(1.0, rel=1e-15)


def test_correlations_rejects_no_lags():
    with pytest.raises(ValueError):
        sample_correlations(Series(np.array([1.0, 2.0, 3.0])), 0)


def test_correlations_degenerate_series():
    with pytest.raises(DegenerateSeriesError):
        sample_correlations(Series(np.zeros(10)), 2)
    # roundoff-level residue from a filtered noise-free series
    with pytest.raises(DegenerateSeriesError):
        sample_correlations(Series(np.full(10, 1e-17) * np.arange(10)), 2)


def test_correlations_white_noise_sanity():
    rng = np.random.default_rng(7)
    c = sample_correlations(Series(rng.standard_normal(10_000)), 10)
    assert np.all(np.abs(c.rho) < 0.1)


@given(series_values)
@settings(max_examples=60, deadline=None)
def test_correlation_scale_invariance(values):
    if np.sum(values**2) == 0.0 or np.max(np.abs(values)) > 1e5:
        return
    L = min(3, len(values) - 1)
    try:
        base = sample_correlations(Series(values), L)
    except DegenerateSeriesError:
        return
    scaled = sample_correlations(Series(values * -3.7), L)
    np.testing.assert_allclose(scaled.rho, base.rho, rtol=1e-10, atol=1e-12)


@given(series_values)
@settings(max_examples=60, deadline=None)
def test_reversal_checked_against_oracle(values):
    rev = values[::-1].copy()
    s_rev = Series(rev)
    assert sample_autocovariance(s_rev, 0) == pytest.approx(
        sample_autocovariance(Series(values), 0), rel=1e-12, abs=1e-12
    )
    h = min(2, len(values) - 1)
    assert sample_autocovariance(s_rev, h) == pytest.approx(acov_oracle(rev, h), rel=1e-12, abs=1e-12)


def test_lag_rule_paper_values():
    assert resolve_lag_rule(LagRule.of("prop:0.5"), 100) == 10
    assert resolve_lag_rule(LagRule.of("prop:1.0"), 500) == 80
    assert resolve_lag_rule(LagRule.of("prop:0.5"), 250) == 22
    assert resolve_lag_rule(LagRule.of("prop:1.0"), 1000) == 144
    assert resolve_lag_rule(LagRule.of(5), 1000) == 5


def test_lag_rule_clipping_warns():
    with pytest.warns(ClippedLagWarning):
        assert resolve_lag_rule(LagRule.of(50), 10) == 9


def test_lag_rule_validation():
    with pytest.raises(ValueError):
        LagRule.of("prop:1.5")
    with pytest.raises(ValueError):
        LagRule.of("fixed:0")
    with pytest.raises(ValueError):
        resolve_lag_rule(LagRule.of(5), 7)


def test_weights_constant():
    w = resolve_weights("constant", 100, 5)
    np.testing.assert_array_equal(w.resolved, np.ones(5))


def test_weights_ljung_box_values():
    w = resolve_weights("ljung_box", 100, 5)
    assert w.resolved[4] == pytest.approx(102.0 / 95.0, rel=1e-15)
    assert w.resolved[0] == pytest.approx(102.0 / 99.0, rel=1e-15)


def test_weights_must_be_positive():
    with pytest.raises(ValueError):
        resolve_weights(np.array([1.0, 0.0]), 10, 2)


def _corrs(rho, n):
    rho = np.asarray(rho, dtype=np.float64)
    gamma = np.concatenate([[1.0], rho])
    return CorrelationSet(gamma=gamma, rho=rho, n=n, max_lag=rho.size)


def test_max_corr_statistic_examples():
    w3 = resolve_weights("constant", 100, 3)
    assert max_corr_statistic(_corrs([0.0, 0.0, 0.0], 100), w3) == 0.0
    assert max_corr_statistic(_corrs([0.1, -0.3, 0.2], 100), w3) == pytest.approx(3.0, rel=1e-14)


def test_portmanteau_examples():
    w2 = resolve_weights("constant", 100, 2)
    assert portmanteau_statistic(_corrs([0.0, 0.0], 100), w2) == 0.0
    assert portmanteau_statistic(_corrs([0.1, -0.3], 100), w2) == pytest.approx(10.0, rel=1e-14)


@given(series_values)
@settings(max_examples=60, deadline=None)
def test_statistics_monotone_in_max_lag(values):
    if len(values) < 4:
        return
    try:
        big = sample_correlations(Series(values), 3)
    except DegenerateSeriesError:
        return
    small = sample_correlations(Series(values), 2)
    for stat in (max_corr_statistic, portmanteau_statistic):
        lo = stat(small, resolve_weights("constant", small.n, 2))
        hi = stat(big, resolve_weights("constant", big.n, 3))
        assert hi >= lo - 1e-12


def test_portmanteau_weight_override_reduces_to_plain_sum():
    rng = np.random.default_rng(5)
    c = sample_correlations(Series(rng.standard_normal(80)), 6)
    unit = resolve_weights("constant", c.n, 6)
    assert portmanteau_statistic(c, unit) == pytest.approx(c.n * np.sum(c.rho**2), rel=1e-14)


def test_statistic_from_rho_matrix_agrees_with_vector():
    rng = np.random.default_rng(6)
    rho = rng.uniform(-0.5, 0.5, size=(4, 7))
    w = resolve_weights("ljung_box", 50, 4)
    for kind in ("max", "portmanteau"):
        cols = statistic_from_rho(rho, 50, w, kind)
        for j in range(rho.shape[1]):
            assert cols[j] == pytest.approx(statistic_from_rho(rho[:, j], 50, w, kind), rel=1e-14)
