"""Command-line interface: test a series from a file, or run Monte Carlo tables.

Reports on stdout are byte-identical across runs for a fixed seed; timing
information lives only in the manifest sidecar written next to ``--out``
files, so thread counts and wall-clock never change emitted numbers.

Exit codes: 0 success, 2 input/configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import os
import sys
import time
from importlib import resources

import numpy as np

from . import __version__
from .bootstrap import BootstrapSpec, bootstrap_test, brwb_test
from .competing import cvm_bootstrap, cvm_statistic, dv_q_test, hong_test, ljung_box_test
from .core_stats import LagRule, Series, resolve_lag_rule, resolve_weights, sample_correlations
from .errors import MaxcorrError
from .filters import FilterSpec, fit_filter
from .montecarlo import DgpSpec, ErrorSpec, McCell, McConfig, run_table

_EXIT_INPUT = 2
_EXIT_NUMERIC = 3

_MISSING_TOKENS = {"", "na", "nan", "null", "none", "."}


class InputError(Exception):
    """Unusable input file, flag combination, or configuration."""


def read_series(path: str) -> Series:
    """Read a single-column numeric series; optional header, no missing values."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    values = []
    for i, raw in enumerate(lines):
        token = raw.split(",")[0].strip() if "," in raw else raw.strip()
        if not token and not values and i == 0:
            continue
        if token.lower() in _MISSING_TOKENS:
            raise InputError(f"{path}:{i + 1}: missing value")
        try:
            values.append(float(token))
        except ValueError:
            if i == 0 and not values:
                continue  # header row
            raise InputError(f"{path}:{i + 1}: non-numeric row {raw!r}") from None
    if len(values) < 2:
        raise InputError(f"{path}: need at least 2 numeric observations")
    arr = np.asarray(values)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{path}: non-finite values in input")
    return Series(arr, label=os.path.basename(path))


def _manifest(command: str, resolved: dict, seed: int, wall_clock: float, timings: dict) -> dict:
    return {
        "command": command,
        "resolved_config": resolved,
        "seed": seed,
        "version": __version__,
        "wall_clock_s": wall_clock,
        "stage_timings_s": timings,
    }


# ----------------------------------------------------------------------
# maxcorr test
# ----------------------------------------------------------------------


def _run_single(args: argparse.Namespace, series: Series):
    filter_spec = FilterSpec.of(args.filter)
    fitted = fit_filter(filter_spec, series)
    lag_rule = LagRule.of(args.lag)
    block: "str | int" = args.block if args.block == "sqrt" else int(args.block)
    spec = BootstrapSpec(
        method=args.bootstrap if args.bootstrap != "none" else "dwb",
        block=block,
        draws=args.draws,
        seed=args.seed,
    )
    test = args.test
    if args.bootstrap == "none":
        if test == "hong":
            return hong_test(series, filter_spec, lag_rule, mode="asymptotic", fitted=fitted), fitted
        if test == "lb":
            return ljung_box_test(series, filter_spec, lag_rule, mode="asymptotic", fitted=fitted), fitted
        if test == "dv":
            return (
                dv_q_test(series, filter_spec, lag_rule, lrv_kind=args.lrv, mode="asymptotic", fitted=fitted),
                fitted,
            )
        raise InputError(f"test {test!r} has no asymptotic reference; pick a bootstrap")
    if test in ("maxcorr", "portmanteau"):
        if args.bootstrap == "brwb":
            raise InputError("the max-correlation and portmanteau tests use wb/dwb bootstraps")
        kind = "max" if test == "maxcorr" else "portmanteau"
        return (
            bootstrap_test(series, filter_spec, lag_rule, spec, weights=args.weights, statistic_kind=kind, fitted=fitted),
            fitted,
        )
    if test == "hong":
        return hong_test(series, filter_spec, lag_rule, mode="bootstrap", spec=spec, fitted=fitted), fitted
    if test == "lb":
        return ljung_box_test(series, filter_spec, lag_rule, mode="bootstrap", spec=spec, fitted=fitted), fitted
    if test == "dv":
        return (
            dv_q_test(series, filter_spec, lag_rule, lrv_kind=args.lrv, mode="bootstrap", spec=spec, fitted=fitted),
            fitted,
        )
    if test == "cvm":
        if args.bootstrap == "brwb":
            return brwb_test(series, filter_spec, spec, fitted=fitted), fitted
        return cvm_bootstrap(series, filter_spec, spec, fitted=fitted), fitted
    raise InputError(f"unknown test {test!r}")


def cmd_test(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    series = read_series(args.input)
    t_read = time.perf_counter()
    result, fitted = _run_single(args, series)
    t_run = time.perf_counter()

    corr_lag = min(result.max_lag if result.max_lag else 20, fitted.n - 1, 20)
    corrs = sample_correlations(fitted.residuals, corr_lag)
    weights = resolve_weights(args.weights, fitted.n, corr_lag)
    payload = {
        "input": {"path": args.input, "n": len(series), "n_effective": fitted.n},
        "filter": {
            "kind": fitted.spec.kind,
            "theta_hat": [float(v) for v in fitted.theta_hat],
            "converged": fitted.converged,
        },
        "test": {
            "name": args.test,
            "statistic_kind": result.statistic_kind,
            "bootstrap": result.method,
            "block_length": result.block_length,
            "draws": result.n_draws,
            "seed": args.seed,
            "max_lag": result.max_lag,
            "weights": args.weights,
        },
        "statistic": result.statistic,
        "p_value": result.p_value,
        "alpha": args.alpha,
        "reject": bool(result.p_value < args.alpha),
        "correlogram": {
            "lags": list(range(1, corr_lag + 1)),
            "rho": [float(v) for v in corrs.rho],
            "weighted_rho": [float(v) for v in weights.resolved * corrs.rho],
        },
    }
    if args.json:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        dec = "reject white noise" if payload["reject"] else "fail to reject white noise"
        lines = [
            "white noise test report",
            f"input: {args.input} (n = {len(series)}, effective n = {fitted.n})",
            f"filter: {fitted.spec.kind}  theta_hat = {np.array2string(fitted.theta_hat, precision=6)}",
            f"test: {args.test}  bootstrap = {result.method}  b = {result.block_length}  M = {result.n_draws}  seed = {args.seed}",
            f"max lag: {result.max_lag} (rule {args.lag})",
            f"statistic: {result.statistic:.6g}",
            f"p-value: {result.p_value:.6g}",
            f"decision at alpha = {args.alpha:g}: {dec}",
            "correlogram (lag, rho, weighted):",
        ]
        for lag, r, wr in zip(payload["correlogram"]["lags"], payload["correlogram"]["rho"], payload["correlogram"]["weighted_rho"]):
            lines.append(f"  {lag:3d}  {r: .6f}  {wr: .6f}")
        text = "\n".join(lines) + "\n"

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(f"# manifest: {args.out}.manifest.json\n" if not args.json else "")
            fh.write(text)
        manifest = _manifest(
            "test",
            {k: v for k, v in vars(args).items() if k != "func"},
            args.seed,
            time.perf_counter() - t0,
            {"read_input": t_read - t0, "run_test": t_run - t_read},
        )
        with open(f"{args.out}.manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        sys.stdout.write(text)
    return 0


# ----------------------------------------------------------------------
# maxcorr simulate
# ----------------------------------------------------------------------


def _parse_bool(text: str) -> bool:
    val = text.strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise InputError(f"cannot parse boolean {text!r}")


_CELL_KEYS = {
    "process",
    "error",
    "n",
    "filter",
    "test",
    "lag",
    "bootstrap",
    "block",
    "draws",
    "recenter",
    "lrv",
    "weights",
    "standardize",
}


def _parse_cell(name: str, section: configparser.SectionProxy) -> McCell:
    unknown = set(section.keys()) - _CELL_KEYS
    if unknown:
        raise InputError(f"[{name}]: unknown keys {sorted(unknown)}")
    try:
        n = section.getint("n")
        error = ErrorSpec.of(section.get("error", "iid"))
        if "standardize" in section:
            std = section.get("standardize").strip().lower()
            if std != "auto":
                error = dataclasses.replace(error, standardize=_parse_bool(std))
        dgp = DgpSpec(process=section.get("process", "simple"), error=error, n=n)
        filter_spec = FilterSpec.of(section.get("filter", "mean"))
        test = section.get("test", "maxcorr")
        lag = section.get("lag", "")
        lag_rule = LagRule.of(lag) if lag else None
        block = section.get("block", "sqrt")
        spec = BootstrapSpec(
            method=section.get("bootstrap", "dwb"),
            block=block if block == "sqrt" else int(block),
            draws=section.getint("draws", 500),
            seed=0,
            recenter=_parse_bool(section.get("recenter", "true")),
        )
    except (ValueError, MaxcorrError) as exc:
        raise InputError(f"[{name}]: {exc}") from exc
    if lag_rule is not None and lag_rule.kind == "fixed" and lag_rule.fixed >= n:
        raise InputError(f"[{name}]: infeasible cell, max lag {lag_rule.fixed} >= n = {n}")
    if lag_rule is None and test not in ("cvm", "cvm-brwb"):
        raise InputError(f"[{name}]: test {test!r} needs a lag rule")
    return McCell(
        dgp=dgp,
        filter_spec=filter_spec,
        test=test,
        lag_rule=lag_rule,
        bootstrap=spec,
        lrv_kind=section.get("lrv", "bartlett"),
        weights=section.get("weights", "constant"),
        name=name.removeprefix("cell:"),
    )


def parse_config(text: str) -> McConfig:
    """Parse the flat key-value table configuration format."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InputError(f"malformed config: {exc}") from exc
    if "table" not in parser:
        raise InputError("config needs a [table] section")
    table = parser["table"]
    levels = tuple(float(tok) for tok in table.get("levels", "0.01 0.05 0.10").replace(",", " ").split())
    cells = []
    for name in parser.sections():
        if name == "table":
            continue
        if not name.startswith("cell:"):
            raise InputError(f"unexpected section [{name}]; cells are named [cell:<label>]")
        cells.append(_parse_cell(name, parser[name]))
    if not cells:
        raise InputError("config declares no cells")
    try:
        return McConfig(
            cells=tuple(cells),
            replications=table.getint("replications", 1000),
            levels=levels,
            master_seed=table.getint("seed", 0),
            name=table.get("name", "table"),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def load_preset(name: str) -> str:
    ref = resources.files("maxcorr").joinpath("presets", f"{name}.cfg")
    if not ref.is_file():
        raise InputError(f"unknown preset {name!r}")
    return ref.read_text(encoding="utf-8")


def cmd_simulate(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    if bool(args.config) == bool(args.preset):
        raise InputError("pass exactly one of --config or --preset")
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {args.config}: {exc}") from exc
    else:
        text = load_preset(args.preset)
    config = parse_config(text)
    if args.reps is not None:
        if args.reps < 1:
            raise InputError("--reps must be >= 1")
        config = dataclasses.replace(config, replications=args.reps)
    if args.seed is not None:
        config = dataclasses.replace(config, master_seed=args.seed)
    t_parse = time.perf_counter()

    def progress(res) -> None:
        status = res.error or ", ".join(
            f"{lvl:g}: {res.frequencies[lvl]:.3f}" for lvl in config.levels
        )
        print(f"[cell {res.cell.label()}] {status}", file=sys.stderr, flush=True)

    table = run_table(config, threads=args.threads, progress=progress if not args.quiet else None)
    t_run = time.perf_counter()

    manifest = _manifest(
        "simulate",
        {
            "config_source": args.config or f"preset:{args.preset}",
            "replications": config.replications,
            "levels": list(config.levels),
            "seed": config.master_seed,
            "threads": args.threads,
        },
        config.master_seed,
        time.perf_counter() - t0,
        {"parse_config": t_parse - t0, "run_table": t_run - t_parse, "cells": table.cell_timings()},
    )
    failed = [res for res in table.results if res.error]
    if args.out:
        text_path = f"{args.out}.txt"
        json_path = f"{args.out}.json"
        with open(text_path, "w", encoding="utf-8") as fh:
            fh.write(f"# manifest: see {os.path.basename(json_path)}\n")
            fh.write(table.to_text())
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump({"results": table.to_dict(), "manifest": manifest}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {text_path} and {json_path}", file=sys.stderr)
    else:
        sys.stdout.write(table.to_text())
    return _EXIT_NUMERIC if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maxcorr", description=__doc__)
    parser.add_argument("--version", action="version", version=f"maxcorr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="white noise test on a single-column numeric file")
    p_test.add_argument("input", help="path to a single-column numeric series (optional header)")
    p_test.add_argument("--filter", default="mean", help="none | mean | ar:P | garch11")
    p_test.add_argument("--test", default="maxcorr", choices=["maxcorr", "portmanteau", "hong", "lb", "cvm", "dv"])
    p_test.add_argument("--bootstrap", default="dwb", choices=["dwb", "wb", "brwb", "none"],
                        help="'none' uses the asymptotic reference where one exists")
    p_test.add_argument("--lag", default="fixed:5", help="fixed:L or prop:DELTA")
    p_test.add_argument("--weights", default="constant", choices=["constant", "ljung_box"])
    p_test.add_argument("--M", dest="draws", type=int, default=500, help="bootstrap draw count")
    p_test.add_argument("--block", default="sqrt", help="block length: 'sqrt' or an integer")
    p_test.add_argument("--lrv", default="bartlett", choices=["identity", "bartlett"])
    p_test.add_argument("--seed", type=int, default=0)
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--json", action="store_true", help="emit the structured report")
    p_test.add_argument("--out", default="", help="write the report (plus manifest sidecar) here")
    p_test.set_defaults(func=cmd_test)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo rejection-frequency table")
    p_sim.add_argument("--config", default="", help="table configuration file")
    p_sim.add_argument("--preset", default="", help="bundled configuration name (e.g. table2)")
    p_sim.add_argument("--reps", type=int, default=None, help="override replication count")
    p_sim.add_argument("--seed", type=int, default=None, help="override master seed")
    p_sim.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("MAXCORR_THREADS", "1")),
        help="worker processes (never changes emitted numbers)",
    )
    p_sim.add_argument("--out", default="", help="output prefix for the .txt table and .json dump")
    p_sim.add_argument("--quiet", action="store_true", help="suppress per-cell progress on stderr")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv: "list[str] | None" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"maxcorr: {exc}", file=sys.stderr)
        return _EXIT_INPUT
    except MaxcorrError as exc:
        print(f"maxcorr: numeric failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
