"""Spectral distribution basis and midpoint-rule integration on (0, pi)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SpectralGrid:
    """Midpoint grid on (0, pi) with a fixed frequency increment."""

    delta: float = 0.01
    midpoints: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < math.pi:
            raise ValueError("increment must lie in (0, pi)")
        k = int(math.pi / self.delta)
        mids = (np.arange(k) + 0.5) * self.delta
        mids.setflags(write=False)
        object.__setattr__(self, "midpoints", mids)

    def integrate(self, values: np.ndarray) -> "float | np.ndarray":
        """Midpoint-rule integral of values sampled on the grid.

        ``values`` has the grid on its first axis; any trailing axes are
        integrated column-wise.
        """
        out = self.delta * np.sum(values, axis=0)
        return float(out) if np.ndim(out) == 0 else out


def psi_basis(h: int, lam: "float | np.ndarray") -> "float | np.ndarray":
    """Spectral distribution basis: ``sin(h * lam) / (h * pi)``, and ``lam / (2 * pi)`` at h = 0."""
    if h < 0:
        raise ValueError("lag must be nonnegative")
    if h == 0:
        out = np.asarray(lam, dtype=np.float64) / (2.0 * math.pi)
    else:
        out = np.sin(h * np.asarray(lam, dtype=np.float64)) / (h * math.pi)
    return float(out) if np.ndim(out) == 0 else out


def psi_matrix(max_lag: int, grid: SpectralGrid) -> np.ndarray:
    """Basis values ``psi_h(lam)`` for ``h = 1..max_lag`` as a ``(max_lag, K)`` matrix."""
    h = np.arange(1, max_lag + 1, dtype=np.float64)[:, None]
    return np.sin(h * grid.midpoints[None, :]) / (h * math.pi)


def cvm_from_gamma(gamma: np.ndarray, n: int, grid: SpectralGrid, psi: "np.ndarray | None" = None) -> float:
    """Cramer-von Mises functional of autocovariances ``gamma[1..H]``.

    Integrates the squared process ``sum_h sqrt(n) * gamma(h) * psi_h(lam)``
    over (0, pi) by the midpoint rule.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    if psi is None:
        psi = psi_matrix(gamma.size, grid)
    s = math.sqrt(n) * (gamma @ psi)
    return float(grid.integrate(s**2))
