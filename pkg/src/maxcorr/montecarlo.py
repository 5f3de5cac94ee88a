"""Monte Carlo engine: data generating processes, cells, and rejection tables.

Reproducibility contract: every random stream is derived from the master
seed plus stable digests of the cell definition and the replication index,
so results are bitwise identical for any thread count, any cell ordering,
and any scheduling of replications. Cells that share a process/error/sample
size draw the same data paths, which makes test comparisons on a table
paired rather than independent.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import rng as rngmod
from .bootstrap import BootstrapSpec, bootstrap_test, brwb_test
from .competing import cvm_bootstrap, dv_q_test, hong_test, ljung_box_test
from .core_stats import LagRule, Series
from .errors import (
    CellFailureError,
    DegenerateSeriesError,
    MaxcorrError,
    NonConvergenceError,
    RankDeficientError,
    SimulationOverflowError,
)
from .filters import FilterSpec

_FAILURE_CAP = 0.02
_OVERFLOW_GUARD = 1e12

# Unconditional standard deviations of the error processes, used when a
# design calls for unit-variance errors.
_ERROR_SD = {
    "iid": 1.0,
    "garch": float(np.sqrt(1.0 / (1.0 - 0.2 - 0.5))),
    "ma2": float(np.sqrt(1.0 + 0.5**2 + 0.25**2)),
    "ar1": float(np.sqrt(1.0 / (1.0 - 0.7**2))),
    "remote_ma": float(np.sqrt(1.0 + 0.25**2)),
}


@dataclass(frozen=True)
class ErrorSpec:
    """Error process for a simulated design.

    Kinds: ``iid`` standard normal; ``garch`` with ARCH/GARCH coefficients
    (.2, .5); ``ma2`` with coefficients (.5, .25); ``ar1`` with coefficient
    .7; ``remote_ma`` with a single extra coefficient .25 at lag ``q``.
    ``standardize=None`` defers to the process default (errors are scaled
    to unit variance inside the GARCH process).
    """

    kind: str
    q: int = 0
    standardize: "bool | None" = None

    def __post_init__(self) -> None:
        if self.kind not in _ERROR_SD:
            raise ValueError(f"unknown error kind {self.kind!r}")
        if self.kind == "remote_ma" and self.q < 1:
            raise ValueError("remote MA error needs q >= 1")

    @property
    def sd(self) -> float:
        return _ERROR_SD[self.kind]

    @classmethod
    def of(cls, spec: "str | ErrorSpec") -> "ErrorSpec":
        """Coerce ``'iid'``, ``'ma2'``, ``'remote_ma:24'`` etc."""
        if isinstance(spec, ErrorSpec):
            return spec
        kind, _, arg = spec.strip().lower().partition(":")
        if kind in ("remote_ma", "ma"):
            return cls("remote_ma", q=int(arg))
        return cls(kind)


@dataclass(frozen=True)
class DgpSpec:
    """A simulated design: process, error, and retained sample size.

    Twice the sample size is drawn and the last ``n`` observations are
    retained, washing out the zero / unconditional-variance initializations.
    """

    process: str
    error: ErrorSpec
    n: int

    def __post_init__(self) -> None:
        if self.process not in ("simple", "bilinear", "ar2", "garch11"):
            raise ValueError(f"unknown process {self.process!r}")
        if self.n < 8:
            raise ValueError("sample size too small")

    def ident(self) -> str:
        e = self.error
        std = "auto" if e.standardize is None else str(e.standardize).lower()
        return f"{self.process}|{e.kind}:{e.q}|std={std}|n={self.n}"


def gen_error(spec: ErrorSpec, length: int, rng: np.random.Generator, default_standardize: bool = False) -> np.ndarray:
    """Simulate ``length`` error observations.

    The GARCH error recursion starts at unit variance; the MA errors use
    pre-sample innovations so they are stationary from the first
    observation; the AR(1) error starts from zero.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    standardize = default_standardize if spec.standardize is None else spec.standardize
    if spec.kind == "iid":
        e = rng.standard_normal(length)
    elif spec.kind == "garch":
        nu = rng.standard_normal(length)
        e = np.empty(length)
        w2 = 1.0
        for t in range(length):
            if t > 0:
                w2 = 1.0 + 0.2 * e[t - 1] ** 2 + 0.5 * w2
            e[t] = nu[t] * np.sqrt(w2)
    elif spec.kind == "ma2":
        nu = rng.standard_normal(length + 2)
        e = nu[2:] + 0.5 * nu[1:-1] + 0.25 * nu[:-2]
    elif spec.kind == "ar1":
        nu = rng.standard_normal(length)
        e = lfilter([1.0], [1.0, -0.7], nu)
    else:
        nu = rng.standard_normal(length + spec.q)
        e = nu[spec.q :] + 0.25 * nu[: -spec.q]
    if standardize:
        e = e / spec.sd
    return e


def gen_process(spec: DgpSpec, rng: np.random.Generator) -> Series:
    """Simulate a path of the design, retaining the last ``n`` observations."""
    total = 2 * spec.n
    e = gen_error(spec.error, total, rng, default_standardize=(spec.process == "garch11"))
    if spec.process == "simple":
        y = e
    elif spec.process == "ar2":
        y = lfilter([1.0], [1.0, -0.3, 0.15], e)
    elif spec.process == "bilinear":
        y = np.empty(total)
        y[0] = e[0]
        y[1] = e[1]
        for t in range(2, total):
            y[t] = 0.5 * e[t - 1] * y[t - 2] + e[t]
    else:
        y = np.empty(total)
        s2 = 1.0 / (1.0 - 0.2 - 0.5)
        for t in range(total):
            if t > 0:
                s2 = 1.0 + 0.2 * y[t - 1] ** 2 + 0.5 * s2
            y[t] = np.sqrt(s2) * e[t]
    tail = y[spec.n :]
    if not np.all(np.isfinite(tail)):
        raise SimulationOverflowError(f"non-finite values in simulated {spec.process} path")
    flags = ("overflow_guard",) if np.max(np.abs(tail)) > _OVERFLOW_GUARD else ()
    return Series(tail, label=spec.process, flags=flags)


# ----------------------------------------------------------------------
# Cells and the replication engine
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class McCell:
    """One table cell: design x filter x test x lag rule x bootstrap."""

    dgp: DgpSpec
    filter_spec: FilterSpec
    test: str
    lag_rule: "LagRule | None"
    bootstrap: BootstrapSpec
    lrv_kind: str = "bartlett"
    weights: str = "constant"
    name: str = ""

    def ident(self) -> str:
        lag = "-" if self.lag_rule is None else f"{self.lag_rule.kind}:{self.lag_rule.fixed or self.lag_rule.delta}"
        b = self.bootstrap
        return (
            f"{self.dgp.ident()}|filter={self.filter_spec.kind}:{self.filter_spec.p}"
            f"|test={self.test}|lag={lag}|boot={b.method}:{b.block}:{b.draws}:rc={b.recenter}"
            f"|lrv={self.lrv_kind}|w={self.weights}"
        )

    def label(self) -> str:
        return self.name or self.ident()


def _p_maxcorr(cell: McCell, series: Series, seed: int) -> float:
    spec = dataclasses.replace(cell.bootstrap, seed=seed)
    return bootstrap_test(
        series, cell.filter_spec, cell.lag_rule, spec, weights=cell.weights, statistic_kind="max"
    ).p_value


def _p_portmanteau(cell: McCell, series: Series, seed: int) -> float:
    spec = dataclasses.replace(cell.bootstrap, seed=seed)
    return bootstrap_test(
        series, cell.filter_spec, cell.lag_rule, spec, weights=cell.weights, statistic_kind="portmanteau"
    ).p_value


def _p_hong_asym(cell: McCell, series: Series, seed: int) -> float:
    return hong_test(series, cell.filter_spec, cell.lag_rule, mode="asymptotic").p_value


def _p_hong_boot(cell: McCell, series: Series, seed: int) -> float:
    spec = dataclasses.replace(cell.bootstrap, seed=seed)
    return hong_test(series, cell.filter_spec, cell.lag_rule, mode="bootstrap", spec=spec).p_value


def _p_lb_asym(cell: McCell, series: Series, seed: int) -> float:
    return ljung_box_test(series, cell.filter_spec, cell.lag_rule, mode="asymptotic").p_value


def _p_lb_boot(cell: McCell, series: Series, seed: int) -> float:
    spec = dataclasses.replace(cell.bootstrap, seed=seed)
    return ljung_box_test(series, cell.filter_spec, cell.lag_rule, mode="bootstrap", spec=spec).p_value


def _p_dv_asym(cell: McCell, series: Series, seed: int) -> float:
    return dv_q_test(series, cell.filter_spec, cell.lag_rule, lrv_kind=cell.lrv_kind, mode="asymptotic").p_value


def _p_dv_boot(cell: McCell, series: Series, seed: int) -> float:
    spec = dataclasses.replace(cell.bootstrap, seed=seed)
    return dv_q_test(
        series, cell.filter_spec, cell.lag_rule, lrv_kind=cell.lrv_kind, mode="bootstrap", spec=spec
    ).p_value


def _p_cvm(cell: McCell, series: Series, seed: int) -> float:
    spec = dataclasses.replace(cell.bootstrap, seed=seed)
    return cvm_bootstrap(series, cell.filter_spec, spec).p_value


def _p_cvm_brwb(cell: McCell, series: Series, seed: int) -> float:
    spec = dataclasses.replace(cell.bootstrap, seed=seed, method="brwb")
    return brwb_test(series, cell.filter_spec, spec).p_value


TEST_RUNNERS = {
    "maxcorr": _p_maxcorr,
    "portmanteau": _p_portmanteau,
    "hong-asym": _p_hong_asym,
    "hong-boot": _p_hong_boot,
    "lb-asym": _p_lb_asym,
    "lb-boot": _p_lb_boot,
    "dv-asym": _p_dv_asym,
    "dv-boot": _p_dv_boot,
    "cvm": _p_cvm,
    "cvm-brwb": _p_cvm_brwb,
}


def register_test(name: str, runner) -> None:
    """Register a custom test runner ``(cell, series, seed) -> p_value``."""
    TEST_RUNNERS[name] = runner


_FAILURE_KINDS = (
    NonConvergenceError,
    DegenerateSeriesError,
    RankDeficientError,
    SimulationOverflowError,
)


def _replication(cell: McCell, master_seed: int, rep: int) -> tuple[float, bool]:
    """P-value and overflow flag for one replication; raises on fit failure."""
    data_rng = rngmod.stream(master_seed, rngmod.DOMAIN_MC, *rngmod.digest_words(cell.dgp.ident()), rep)
    series = gen_process(cell.dgp, data_rng)
    test_seed = int(
        rngmod.child_seed(
            master_seed, rngmod.DOMAIN_MC, *rngmod.digest_words(cell.ident()), rep
        ).generate_state(1, dtype=np.uint64)[0]
    )
    runner = TEST_RUNNERS[cell.test]
    return runner(cell, series, test_seed), bool(series.flags)


def _rep_range(cell: McCell, master_seed: int, start: int, stop: int) -> list[tuple[int, float, bool, str]]:
    out = []
    for rep in range(start, stop):
        try:
            p, flagged = _replication(cell, master_seed, rep)
            out.append((rep, p, flagged, ""))
        except _FAILURE_KINDS as exc:
            out.append((rep, np.nan, False, type(exc).__name__))
    return out


@dataclass
class CellResult:
    """Aggregated rejection frequencies for one cell."""

    cell: McCell
    p_values: np.ndarray
    frequencies: dict[float, float]
    mc_se: dict[float, float]
    n_failures: int
    n_flagged: int
    replications: int
    elapsed: float
    error: str = ""


def run_cell(
    cell: McCell,
    replications: int,
    master_seed: int,
    levels: tuple[float, ...] = (0.01, 0.05, 0.10),
    threads: int = 1,
) -> CellResult:
    """Run all replications of one cell and aggregate rejection frequencies.

    Replications that fail (non-convergent fits, degenerate or overflowing
    paths) are excluded from the frequencies; more than 2% of them fails the
    cell with :class:`CellFailureError`.
    """
    if replications < 1:
        raise ValueError("need at least one replication")
    if cell.test not in TEST_RUNNERS:
        raise ValueError(f"unknown test {cell.test!r}")
    t0 = time.perf_counter()
    if threads > 1 and replications > 1:
        bounds = np.linspace(0, replications, min(threads, replications) + 1, dtype=int)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_rep_range, cell, master_seed, int(a), int(b))
                for a, b in zip(bounds[:-1], bounds[1:])
                if b > a
            ]
            rows = [row for fut in futures for row in fut.result()]
    else:
        rows = _rep_range(cell, master_seed, 0, replications)
    rows.sort(key=lambda row: row[0])
    p_values = np.array([row[1] for row in rows])
    n_flagged = sum(1 for row in rows if row[2])
    n_failures = int(np.sum(np.isnan(p_values)))
    if n_failures > _FAILURE_CAP * replications:
        raise CellFailureError(
            f"{n_failures}/{replications} replications failed in cell {cell.label()}"
        )
    kept = p_values[~np.isnan(p_values)]
    freqs = {lvl: float(np.mean(kept < lvl)) for lvl in levels}
    se = {lvl: float(np.sqrt(f * (1.0 - f) / kept.size)) for lvl, f in freqs.items()}
    return CellResult(
        cell=cell,
        p_values=p_values,
        frequencies=freqs,
        mc_se=se,
        n_failures=n_failures,
        n_flagged=n_flagged,
        replications=replications,
        elapsed=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class McConfig:
    """A full table: cells, replication count, levels, master seed."""

    cells: tuple[McCell, ...]
    replications: int
    levels: tuple[float, ...] = (0.01, 0.05, 0.10)
    master_seed: int = 0
    name: str = "table"

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "levels", tuple(self.levels))


@dataclass
class RejectionTable:
    """Per-cell rejection frequencies plus run metadata."""

    config: McConfig
    results: list[CellResult]
    elapsed: float = 0.0

    def to_text(self) -> str:
        lines = [
            f"# rejection frequencies: {self.config.name}",
            f"# replications={self.config.replications} seed={self.config.master_seed}",
            "\t".join(
                ["cell", "test", "n", "lag", "filter"]
                + [f"{lvl:g}" for lvl in self.config.levels]
                + [f"se@{lvl:g}" for lvl in self.config.levels]
                + ["failures"]
            ),
        ]
        for res in self.results:
            cell = res.cell
            lag = "-" if cell.lag_rule is None else str(cell.lag_rule.fixed or cell.lag_rule.delta)
            row = [cell.label(), cell.test, str(cell.dgp.n), lag, cell.filter_spec.kind]
            if res.error:
                row += ["failed"] * (2 * len(self.config.levels)) + [res.error]
            else:
                row += [f"{res.frequencies[lvl]:.3f}" for lvl in self.config.levels]
                row += [f"{res.mc_se[lvl]:.4f}" for lvl in self.config.levels]
                row += [str(res.n_failures)]
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        """Frequencies and metadata; timings are reported separately so the
        payload is identical across thread counts."""
        return {
            "name": self.config.name,
            "replications": self.config.replications,
            "levels": list(self.config.levels),
            "master_seed": self.config.master_seed,
            "cells": [
                {
                    "label": res.cell.label(),
                    "ident": res.cell.ident(),
                    "test": res.cell.test,
                    "frequencies": {str(lvl): res.frequencies.get(lvl) for lvl in self.config.levels}
                    if not res.error
                    else None,
                    "mc_se": {str(lvl): res.mc_se.get(lvl) for lvl in self.config.levels}
                    if not res.error
                    else None,
                    "failures": res.n_failures,
                    "flagged_paths": res.n_flagged,
                    "error": res.error,
                }
                for res in self.results
            ],
        }

    def cell_timings(self) -> dict:
        return {res.cell.label(): res.elapsed for res in self.results}


def run_table(config: McConfig, threads: int = 1, progress=None) -> RejectionTable:
    """Evaluate every cell of a table. Cell failures are recorded, not fatal."""
    t0 = time.perf_counter()
    results = []
    for cell in config.cells:
        try:
            res = run_cell(cell, config.replications, config.master_seed, config.levels, threads)
        except MaxcorrError as exc:
            res = CellResult(
                cell=cell,
                p_values=np.zeros(0),
                frequencies={},
                mc_se={},
                n_failures=config.replications,
                n_flagged=0,
                replications=config.replications,
                elapsed=0.0,
                error=f"{type(exc).__name__}: {exc}",
            )
        results.append(res)
        if progress is not None:
            progress(res)
    return RejectionTable(config=config, results=results, elapsed=time.perf_counter() - t0)
