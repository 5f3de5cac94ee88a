"""Exception and warning types shared across the package."""


class MaxcorrError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateSeriesError(MaxcorrError):
    """A series has no usable variation (e.g. the filter absorbed everything)."""


class RankDeficientError(MaxcorrError):
    """A regression design matrix is numerically singular."""


class NonConvergenceError(MaxcorrError):
    """An iterative fit hit its iteration cap without converging."""


class SimulationOverflowError(MaxcorrError):
    """A simulated path produced non-finite values."""


class CellFailureError(MaxcorrError):
    """Too many replications of a Monte Carlo cell failed."""


class ClippedLagWarning(RuntimeWarning):
    """A resolved maximum lag exceeded n - 1 and was clipped."""


class BoundaryEstimateWarning(RuntimeWarning):
    """A constrained estimate landed on (or within tolerance of) the boundary."""


class SingularLrvWarning(RuntimeWarning):
    """A long-run variance estimate required ridge regularization."""
