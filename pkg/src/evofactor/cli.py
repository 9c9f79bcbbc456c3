"""Command-line surface.

Five subcommands: ``estimate`` (per-time eigen analysis of a panel),
``test`` (static-loadings test), ``tune`` (tuning curves), ``simulate``
(Monte-Carlo studies on the built-in designs), and ``predict`` (rolling
one-step forecasts).  Every command reads CSV panels, writes a JSON report
validated against the schema shipped with the package, and exits nonzero
with a machine-readable error JSON on stdout if anything fails.

Centering and differencing are explicit flags, never applied implicitly.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .basis import BasisSpec, FAMILIES
from .covariance import fit_sieve, gamma_hat, lambda_path
from .factors import (
    eigen_path,
    estimate_num_factors,
    factor_structure,
    num_factors_path,
    stable_intervals,
    sym_eigen,
)
from .forecast import ForecastConfig, rolling_forecast
from .panel import PanelSeries, center, difference, load_csv
from .pipelines import (
    estimation_pipeline,
    forecast_pipeline,
    rank_recovery_pipeline,
    static_test_pipeline,
)
from .simulate import DESIGNS, SimulationSpec, monte_carlo
from .statictest import TestConfig, build_z, kernel_basis, run_static_test
from .tuning import TuningGrid, cv_select_jn, default_window_grid, mv_select_blocks, mv_select_window

__all__ = ["main", "RunConfig", "run"]

COMMANDS = ("estimate", "test", "tune", "simulate", "predict")
PIPELINES = ("estimation", "test", "rank", "forecast")


@dataclass
class RunConfig:
    """Validated invocation: one command plus every knob it needs."""

    command: str
    input: Optional[str] = None
    output: Optional[str] = None
    has_header: bool = False
    do_center: bool = False
    do_difference: bool = False
    basis: str = "legendre"
    jn: str = "cv"                   # integer literal or "cv"
    k0: int = 3
    c0: Optional[float] = None
    eta: str = "scan"                # number literal or "scan"
    j_grid: tuple[int, ...] = tuple(range(1, 9))
    nn: str = "mv"                   # integer literal or "mv"
    wn: str = "mv"
    block_grid: tuple[int, ...] = tuple(range(2, 7))
    window_grid: Optional[tuple[int, ...]] = None
    n_boot: int = 1000
    alpha: float = 0.05
    seed: int = 0
    d_override: Optional[int] = None
    what: str = "all"
    design: Optional[str] = None
    n: int = 0
    p: int = 0
    replicates: int = 1
    deviation: Optional[float] = None
    pipeline: str = "test"
    threads: Optional[int] = None
    d_max: Optional[int] = None
    eval_start: Optional[int] = None
    ar_max: int = 6
    emit_plot_data: Optional[str] = None
    dump_draws: Optional[str] = None
    table: Optional[str] = None
    with_spans: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.basis not in FAMILIES:
            raise ValueError(f"--basis must be one of {FAMILIES}")
        if not 1 <= self.k0 <= 10:
            raise ValueError("--k0 must be in 1..10")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("--alpha must be in (0, 1)")
        if self.command in ("estimate", "test", "tune", "predict") and not self.input:
            raise ValueError(f"{self.command} requires --input")
        if self.command != "tune" and not self.output:
            raise ValueError(f"{self.command} requires --output")
        if self.command == "tune" and not self.output:
            raise ValueError("tune requires --output")
        if self.jn != "cv":
            if int(self.jn) < 1:
                raise ValueError("--jn must be a positive integer or 'cv'")
        if self.nn != "mv" and int(self.nn) < 1:
            raise ValueError("--nn must be a positive integer or 'mv'")
        if self.wn != "mv" and int(self.wn) < 1:
            raise ValueError("--wn must be a positive integer or 'mv'")
        if self.eta != "scan":
            if float(self.eta) <= 0:
                raise ValueError("--eta must be positive or 'scan'")
        if self.command == "simulate":
            if self.design not in DESIGNS:
                raise ValueError(f"--design must be one of {DESIGNS}")
            if self.n < 2 or self.p < 2:
                raise ValueError("simulate requires --n >= 2 and --p >= 2")
            if self.pipeline not in PIPELINES:
                raise ValueError(f"--pipeline must be one of {PIPELINES}")
        if self.command == "predict" and self.eval_start is None:
            raise ValueError("predict requires --eval-start")


def _load_schema(name: str) -> dict:
    with resources.files("evofactor.schemas").joinpath(f"{name}.schema.json").open() as fh:
        return json.load(fh)


def _validate_output(name: str, payload: dict) -> None:
    import jsonschema

    jsonschema.validate(payload, _load_schema(name))


def _write_json(path: str, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _load_panel(cfg: RunConfig) -> PanelSeries:
    X = load_csv(cfg.input, has_header=cfg.has_header)
    if cfg.do_difference:
        X = difference(X)
    if cfg.do_center:
        X = center(X)
    return X


def _resolve_eta(cfg: RunConfig, n: int) -> float:
    return math.log(n) ** -4 if cfg.eta == "scan" else float(cfg.eta)


def _cmd_estimate(cfg: RunConfig) -> dict:
    X = _load_panel(cfg)
    eta = _resolve_eta(cfg, X.n)
    c0 = cfg.c0 if cfg.c0 is not None else 0.1
    cv_payload = None
    if cfg.jn == "cv":
        sel = cv_select_jn(X, TuningGrid(cfg.j_grid), cfg.k0, family=cfg.basis, c0=c0, eta=eta)
        jn = sel.selected
        cv_payload = {
            "candidates": list(sel.candidates),
            "scores": [float(s) for s in sel.scores],
            "clipped_terms": sel.clipped_terms,
        }
    else:
        jn = int(cfg.jn)
    model = fit_sieve(X, BasisSpec(cfg.basis, jn), cfg.k0)
    fs = factor_structure(model, c0=c0, eta=eta, keep_spans=cfg.with_spans)
    records = []
    for i, t in enumerate(fs.grid):
        rec = {
            "t": float(t),
            "d_hat": int(fs.d_hat[i]),
            "explained": float(fs.explained[i]),
            "eigenvalues": [float(v) for v in fs.eigenvalues[i, : min(X.p, 20)]],
        }
        records.append(rec)
    intervals = stable_intervals(list(zip(fs.grid, fs.d_hat)), X.n)
    payload = {
        "basis": cfg.basis,
        "jn": jn,
        "k0": cfg.k0,
        "n": X.n,
        "p": X.p,
        "c0": c0,
        "eta": eta,
        "records": records,
        "stable_intervals": [[float(a), float(b)] for a, b in intervals],
        "cv": cv_payload,
    }
    _validate_output("estimate", payload)
    _write_json(cfg.output, payload)
    if cfg.emit_plot_data:
        with open(cfg.emit_plot_data, "w", newline="\n") as fh:
            fh.write("t,d_hat,explained,lambda1,lambda2\n")
            for i, t in enumerate(fs.grid):
                lam = fs.eigenvalues[i]
                l2 = lam[1] if X.p > 1 else 0.0
                fh.write(
                    f"{t:.17g},{fs.d_hat[i]},{fs.explained[i]:.17g},{lam[0]:.17g},{l2:.17g}\n"
                )
    return payload


def _cmd_test(cfg: RunConfig) -> dict:
    X = _load_panel(cfg)
    n = X.n
    c0 = cfg.c0 if cfg.c0 is not None else 0.1
    eta = 1.0 if cfg.eta == "scan" else float(cfg.eta)
    tuning_payload: dict = {}
    if cfg.nn == "mv":
        sel_n = mv_select_blocks(X, TuningGrid(cfg.block_grid), cfg.k0,
                                 c0=c0, eta=eta, d_override=cfg.d_override)
        n_blocks = sel_n.selected
        tuning_payload["block_candidates"] = list(sel_n.candidates)
        tuning_payload["block_statistics"] = [float(v) for v in sel_n.values]
    else:
        n_blocks = int(cfg.nn)
    m = (n - cfg.k0) // n_blocks
    if cfg.wn == "mv":
        gamma = gamma_hat(X, cfg.k0)
        d_hat = cfg.d_override or estimate_num_factors(
            sym_eigen(gamma.matrix), n, c0=c0, eta=eta
        ).d_hat
        F = kernel_basis(gamma, d_hat)
        probe = TestConfig(n_blocks=n_blocks, window=1, k0=cfg.k0, seed=cfg.seed)
        grid = TuningGrid(cfg.window_grid) if cfg.window_grid else default_window_grid(m)
        sel_w = mv_select_window(build_z(X, F, probe), grid)
        window = sel_w.selected
        tuning_payload["window_candidates"] = list(sel_w.candidates)
    else:
        window = int(cfg.wn)
    test_cfg = TestConfig(
        n_blocks=n_blocks,
        window=window,
        k0=cfg.k0,
        n_boot=cfg.n_boot,
        alpha=cfg.alpha,
        seed=cfg.seed,
        d_override=cfg.d_override,
    )
    result = run_static_test(X, test_cfg, c0=c0, eta=eta)
    payload = result.to_dict()
    payload["tuning"] = tuning_payload or None
    _validate_output("test", payload)
    _write_json(cfg.output, payload)
    if cfg.dump_draws:
        with open(cfg.dump_draws, "w", newline="\n") as fh:
            fh.write("k_order_stat\n")
            for v in result.bootstrap_draws:
                fh.write(f"{v:.17g}\n")
    return payload


def _cmd_tune(cfg: RunConfig) -> dict:
    X = _load_panel(cfg)
    payload: dict = {"jn": None, "nn": None, "wn": None}
    do = ("jn", "nn", "wn") if cfg.what == "all" else (cfg.what,)
    if "jn" in do:
        sel = cv_select_jn(X, TuningGrid(cfg.j_grid), cfg.k0, family=cfg.basis)
        payload["jn"] = {
            "selected": sel.selected,
            "candidates": list(sel.candidates),
            "scores": [float(s) for s in sel.scores],
            "clipped_terms": sel.clipped_terms,
        }
    if "nn" in do or "wn" in do:
        sel_n = mv_select_blocks(X, TuningGrid(cfg.block_grid), cfg.k0,
                                 d_override=cfg.d_override)
        if "nn" in do:
            payload["nn"] = {
                "selected": sel_n.selected,
                "candidates": list(sel_n.candidates),
                "values": [float(v) for v in sel_n.values],
                "se": [float(v) for v in sel_n.se],
                "dropped": list(sel_n.dropped),
            }
        if "wn" in do:
            n_blocks = int(cfg.nn) if cfg.nn != "mv" else sel_n.selected
            gamma = gamma_hat(X, cfg.k0)
            d_hat = cfg.d_override or estimate_num_factors(
                sym_eigen(gamma.matrix), X.n, c0=0.1
            ).d_hat
            F = kernel_basis(gamma, d_hat)
            probe = TestConfig(n_blocks=n_blocks, window=1, k0=cfg.k0, seed=cfg.seed)
            m = (X.n - cfg.k0) // n_blocks
            grid = TuningGrid(cfg.window_grid) if cfg.window_grid else default_window_grid(m)
            sel_w = mv_select_window(build_z(X, F, probe), grid)
            payload["wn"] = {
                "selected": sel_w.selected,
                "candidates": list(sel_w.candidates),
                "values": [float(v) for v in sel_w.values],
                "dropped": list(sel_w.dropped),
            }
    _validate_output("tune", payload)
    _write_json(cfg.output, payload)
    return payload


def _cmd_simulate(cfg: RunConfig) -> dict:
    spec = SimulationSpec(
        design=cfg.design,
        n=cfg.n,
        p=cfg.p,
        seed=cfg.seed,
        replicates=cfg.replicates,
        deviation=cfg.deviation,
    )
    if cfg.pipeline == "estimation":
        pipe = estimation_pipeline(j_grid=cfg.j_grid, k0=cfg.k0, family=cfg.basis)
    elif cfg.pipeline == "test":
        pipe = static_test_pipeline(
            k0=cfg.k0,
            block_grid=cfg.block_grid,
            window_grid=cfg.window_grid,
            n_boot=cfg.n_boot,
            alphas=(cfg.alpha, 0.10) if cfg.alpha != 0.10 else (cfg.alpha,),
        )
    elif cfg.pipeline == "rank":
        pipe = rank_recovery_pipeline(
            jn=None if cfg.jn == "cv" else int(cfg.jn), j_grid=cfg.j_grid, k0=cfg.k0
        )
    else:
        pipe = forecast_pipeline(
            jn=3 if cfg.jn == "cv" else int(cfg.jn), k0=cfg.k0, ar_order_max=cfg.ar_max
        )
    report = monte_carlo(spec, pipe, threads=cfg.threads)
    payload = report.to_dict()
    _validate_output("simulate", payload)
    _write_json(cfg.output, payload)
    if cfg.table:
        keys = sorted(report.metrics)
        with open(cfg.table, "w", newline="\n") as fh:
            fh.write("design,n,p," + ",".join(f"{k}_mean,{k}_se" for k in keys) + "\n")
            cells = [cfg.design, str(cfg.n), str(cfg.p)]
            for k in keys:
                cells += [f"{report.metrics[k].mean:.17g}", f"{report.metrics[k].se:.17g}"]
            fh.write(",".join(cells) + "\n")
    return payload


def _cmd_predict(cfg: RunConfig) -> dict:
    X = _load_panel(cfg)
    if cfg.jn == "cv":
        jn = cv_select_jn(X, TuningGrid(cfg.j_grid), cfg.k0, family=cfg.basis).selected
    else:
        jn = int(cfg.jn)
    model = fit_sieve(X, BasisSpec(cfg.basis, jn), cfg.k0)
    if cfg.d_max is None:
        values, _ = eigen_path(lambda_path(model, X.times))
        d_max = int(num_factors_path(values, X.n).max())
    else:
        d_max = cfg.d_max
    fc = ForecastConfig(d_max=d_max, eval_start=cfg.eval_start, ar_order_max=cfg.ar_max)
    report = rolling_forecast(X, model, fc)
    payload = report.to_dict()
    payload.update(d_max=d_max, jn=jn, k0=cfg.k0)
    _validate_output("predict", payload)
    _write_json(cfg.output, payload)
    if cfg.emit_plot_data:
        with open(cfg.emit_plot_data, "w", newline="\n") as fh:
            fh.write("origin,squared_error_per_series\n")
            for i, e in zip(report.origins, report.per_origin_error):
                fh.write(f"{i},{e:.17g}\n")
    return payload


_HANDLERS = {
    "estimate": _cmd_estimate,
    "test": _cmd_test,
    "tune": _cmd_tune,
    "simulate": _cmd_simulate,
    "predict": _cmd_predict,
}


def run(cfg: RunConfig) -> int:
    """Validate and execute; returns a process exit status."""
    operation = "validate"
    try:
        cfg.validate()
        operation = cfg.command
        _HANDLERS[cfg.command](cfg)
        return 0
    except Exception as exc:  # noqa: BLE001 - converted to the error contract
        payload = {
            "error": {
                "module": type(exc).__module__,
                "operation": operation,
                "message": f"{type(exc).__name__}: {exc}",
            }
        }
        print(json.dumps(payload, sort_keys=True))
        return 1


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="evofactor",
        description="Time-varying factor models: estimation, testing, tuning, simulation, forecasting.",
    )
    ap.add_argument("--threads", type=int, default=None,
                    help="worker cap for Monte-Carlo runs (default: EVOFACTOR_THREADS or 1)")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_panel_args(p):
        p.add_argument("--input", required=True, help="CSV panel, rows = time points")
        p.add_argument("--header", action="store_true", dest="has_header")
        p.add_argument("--center", action="store_true", dest="do_center",
                       help="subtract column means before estimation")
        p.add_argument("--difference", action="store_true", dest="do_difference",
                       help="first-difference the panel before estimation")

    pe = sub.add_parser("estimate", help="per-time eigen analysis of the loading structure")
    add_panel_args(pe)
    pe.add_argument("--basis", default="legendre", choices=FAMILIES)
    pe.add_argument("--jn", default="cv", help="sieve order, or 'cv'")
    pe.add_argument("--k0", type=int, default=3)
    pe.add_argument("--c0", type=float, default=None)
    pe.add_argument("--eta", default="scan", help="threshold scale, or 'scan' for log(n)^-4")
    pe.add_argument("--j-grid", type=_int_list, default=tuple(range(1, 9)), dest="j_grid")
    pe.add_argument("--with-spans", action="store_true", dest="with_spans")
    pe.add_argument("--emit-plot-data", dest="emit_plot_data")
    pe.add_argument("--output", required=True)

    pt = sub.add_parser("test", help="bootstrap test of static factor loadings")
    add_panel_args(pt)
    pt.add_argument("--k0", type=int, default=3)
    pt.add_argument("--nn", default="mv", help="number of blocks, or 'mv'")
    pt.add_argument("--wn", default="mv", help="bootstrap window, or 'mv'")
    pt.add_argument("--block-grid", type=_int_list, default=tuple(range(2, 7)), dest="block_grid")
    pt.add_argument("--window-grid", type=_int_list, default=None, dest="window_grid")
    pt.add_argument("--B", type=int, default=1000, dest="n_boot")
    pt.add_argument("--alpha", type=float, default=0.05)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--d", type=int, default=None, dest="d_override")
    pt.add_argument("--c0", type=float, default=None)
    pt.add_argument("--eta", default="scan")
    pt.add_argument("--dump-draws", dest="dump_draws")
    pt.add_argument("--output", required=True)

    pu = sub.add_parser("tune", help="tuning curves for jn, nn, wn")
    add_panel_args(pu)
    pu.add_argument("--what", default="all", choices=("jn", "nn", "wn", "all"))
    pu.add_argument("--basis", default="legendre", choices=FAMILIES)
    pu.add_argument("--k0", type=int, default=3)
    pu.add_argument("--jn", default="cv")
    pu.add_argument("--nn", default="mv")
    pu.add_argument("--j-grid", type=_int_list, default=tuple(range(1, 9)), dest="j_grid")
    pu.add_argument("--block-grid", type=_int_list, default=tuple(range(2, 7)), dest="block_grid")
    pu.add_argument("--window-grid", type=_int_list, default=None, dest="window_grid")
    pu.add_argument("--d", type=int, default=None, dest="d_override")
    pu.add_argument("--seed", type=int, default=0)
    pu.add_argument("--output", required=True)

    ps = sub.add_parser("simulate", help="Monte-Carlo study on a built-in design")
    ps.add_argument("--design", required=True, choices=DESIGNS)
    ps.add_argument("--n", type=int, required=True)
    ps.add_argument("--p", type=int, required=True)
    ps.add_argument("--reps", type=int, default=1, dest="replicates")
    ps.add_argument("--deviation", type=float, default=None,
                    help="deviation D for the power design")
    ps.add_argument("--pipeline", default="test", choices=PIPELINES)
    ps.add_argument("--basis", default="legendre", choices=FAMILIES)
    ps.add_argument("--jn", default="cv")
    ps.add_argument("--j-grid", type=_int_list, default=tuple(range(1, 9)), dest="j_grid")
    ps.add_argument("--k0", type=int, default=3)
    ps.add_argument("--block-grid", type=_int_list, default=tuple(range(2, 7)), dest="block_grid")
    ps.add_argument("--window-grid", type=_int_list, default=None, dest="window_grid")
    ps.add_argument("--B", type=int, default=1000, dest="n_boot")
    ps.add_argument("--alpha", type=float, default=0.05)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--ar-max", type=int, default=6, dest="ar_max")
    ps.add_argument("--table", help="also write a one-row CSV summary")
    ps.add_argument("--output", required=True)

    pp = sub.add_parser("predict", help="rolling one-step forecasts through the factor structure")
    add_panel_args(pp)
    pp.add_argument("--basis", default="legendre", choices=FAMILIES)
    pp.add_argument("--jn", default="cv")
    pp.add_argument("--j-grid", type=_int_list, default=tuple(range(1, 9)), dest="j_grid")
    pp.add_argument("--k0", type=int, default=3)
    pp.add_argument("--d-max", type=int, default=None, dest="d_max")
    pp.add_argument("--eval-start", type=int, required=True, dest="eval_start")
    pp.add_argument("--ar-max", type=int, default=6, dest="ar_max")
    pp.add_argument("--emit-plot-data", dest="emit_plot_data")
    pp.add_argument("--output", required=True)

    return ap


def main(argv=None) -> int:
    ns = _build_parser().parse_args(argv)
    fields = {k: v for k, v in vars(ns).items() if v is not None or k in ("threads",)}
    cfg = RunConfig(**{k: v for k, v in fields.items() if k in RunConfig.__dataclass_fields__})
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
