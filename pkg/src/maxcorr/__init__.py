"""Bootstrapped max-correlation white noise tests for (filtered) time series.

The primary test statistic is the scaled maximum absolute weighted residual
autocorrelation over lags ``1..L``. P-values come from a dependent wild
bootstrap applied to a first-order expansion of the residual cross-products,
which keeps the bootstrap valid when the tested series are residuals from an
estimated filter (mean, autoregression, or GARCH(1,1) by QML). Competitor
tests (standardized portmanteau, Ljung-Box, spectral Cramer-von Mises,
orthogonalized Q-test) and a reproducible Monte Carlo harness are included.
"""

from .bootstrap import (
    BlockScheme,
    BootstrapSpec,
    TestResult,
    bootstrap_correlations,
    bootstrap_test,
    brwb_test,
    draw_auxiliary,
    make_blocks,
    reduce_to_wild,
)
from .competing import (
    LrvEstimate,
    bartlett_lrv,
    chi2_sf,
    cvm_bootstrap,
    cvm_statistic,
    dv_q_test,
    hong_statistic,
    hong_test,
    identity_lrv,
    ljung_box_test,
)
from .core_stats import (
    CorrelationSet,
    LagRule,
    LagWeights,
    Series,
    max_corr_statistic,
    portmanteau_statistic,
    resolve_lag_rule,
    resolve_weights,
    sample_autocovariance,
    sample_correlations,
)
from .errors import (
    CellFailureError,
    DegenerateSeriesError,
    MaxcorrError,
    NonConvergenceError,
    RankDeficientError,
    SimulationOverflowError,
)
from .filters import (
    ExpansionSet,
    FilterSpec,
    FittedFilter,
    compute_expansion,
    fit_ar_ols,
    fit_filter,
    fit_garch_qml,
    fit_mean,
    fit_none,
)
from .montecarlo import (
    DgpSpec,
    ErrorSpec,
    McCell,
    McConfig,
    RejectionTable,
    gen_error,
    gen_process,
    run_cell,
    run_table,
)
from .spectral import SpectralGrid, psi_basis

__version__ = "0.1.0"

__all__ = [
    "BlockScheme",
    "BootstrapSpec",
    "CellFailureError",
    "CorrelationSet",
    "DegenerateSeriesError",
    "DgpSpec",
    "ErrorSpec",
    "ExpansionSet",
    "FilterSpec",
    "FittedFilter",
    "LagRule",
    "LagWeights",
    "LrvEstimate",
    "MaxcorrError",
    "McCell",
    "McConfig",
    "NonConvergenceError",
    "RankDeficientError",
    "RejectionTable",
    "Series",
    "SimulationOverflowError",
    "SpectralGrid",
    "TestResult",
    "bartlett_lrv",
    "bootstrap_correlations",
    "bootstrap_test",
    "brwb_test",
    "chi2_sf",
    "compute_expansion",
    "cvm_bootstrap",
    "cvm_statistic",
    "draw_auxiliary",
    "dv_q_test",
    "fit_ar_ols",
    "fit_filter",
    "fit_garch_qml",
    "fit_mean",
    "fit_none",
    "gen_error",
    "gen_process",
    "hong_statistic",
    "hong_test",
    "identity_lrv",
    "ljung_box_test",
    "make_blocks",
    "max_corr_statistic",
    "portmanteau_statistic",
    "psi_basis",
    "reduce_to_wild",
    "resolve_lag_rule",
    "resolve_weights",
    "run_cell",
    "run_table",
    "sample_autocovariance",
    "sample_correlations",
]
