"""Replicate pipelines for Monte-Carlo studies.

Each factory returns a callable mapping a generated :class:`SimulationTruth`
to a flat metric dict, ready for :func:`evofactor.simulate.monte_carlo`.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from . import rng as rngmod
from .basis import BasisSpec
from .covariance import fit_sieve, gamma_hat, lambda_path, local_pca_path
from .factors import (
    eigen_path,
    estimate_num_factors,
    num_factors_path,
    stable_intervals,
    sym_eigen,
)
from .simulate import SimulationTruth, angle_metric, rmse_metric
from .statictest import TestConfig, build_z, kernel_basis, reject_at, run_static_test
from .forecast import ForecastConfig, rolling_forecast
from .tuning import TuningGrid, cv_select_jn, default_window_grid, mv_select_blocks, mv_select_window

__all__ = [
    "estimation_pipeline",
    "static_test_pipeline",
    "rank_recovery_pipeline",
    "forecast_pipeline",
]

DEFAULT_J_GRID = tuple(range(1, 9))
DEFAULT_BLOCK_GRID = tuple(range(2, 7))


def _metrics_from_eigs(truth, values, vectors, c0, eta):
    """RMSE with estimated per-time spans, angle against the true spans."""
    n = truth.X.n
    d_hat = num_factors_path(values, n, c0, eta)
    spans_est = [vectors[i][:, : d_hat[i]] for i in range(n)]
    rmse = rmse_metric(truth, spans_est)
    true_spans = truth.true_spans()
    d_path = truth.d_path
    angles = np.empty(n)
    for i in range(n):
        angles[i] = angle_metric(vectors[i][:, : d_path[i]], true_spans[i])
    return rmse, float(angles.mean()), d_hat


def estimation_pipeline(
    j_grid: Sequence[int] = DEFAULT_J_GRID,
    k0: int = 3,
    family: str = "legendre",
    pca_window: Optional[int] = None,
    c0: float = 0.1,
    eta: float = 1.0,
    with_baselines: bool = True,
):
    """Sieve estimation with CV-selected order, plus two baselines.

    Baselines: the order-1 fit (time-constant covariance, classic static
    estimator) and the rolling local estimator with half-window
    ``pca_window`` (default: round(n^(2/3))).
    """

    def run(truth: SimulationTruth):
        X = truth.X
        n = X.n
        cv = cv_select_jn(X, TuningGrid(tuple(j_grid)), k0, family=family, c0=c0, eta=eta)
        model = fit_sieve(X, BasisSpec(family, cv.selected), k0)
        values, vectors = eigen_path(lambda_path(model, X.times))
        rmse_s, angle_s, _ = _metrics_from_eigs(truth, values, vectors, c0, eta)
        out = {"jn": cv.selected, "rmse_sieve": rmse_s, "angle_sieve": angle_s}
        if with_baselines:
            static = fit_sieve(X, BasisSpec(family, 1), k0)
            sval, svec = eigen_path(lambda_path(static, [1.0]))
            values0 = np.repeat(sval, n, axis=0)
            vectors0 = np.repeat(svec, n, axis=0)
            rmse_0, angle_0, _ = _metrics_from_eigs(truth, values0, vectors0, c0, eta)
            m = pca_window if pca_window is not None else int(round(n ** (2.0 / 3.0)))
            lval, lvec = eigen_path(local_pca_path(X, m, k0))
            rmse_l, angle_l, _ = _metrics_from_eigs(truth, lval, lvec, c0, eta)
            out.update(
                rmse_static=rmse_0,
                angle_static=angle_0,
                rmse_local=rmse_l,
                angle_local=angle_l,
            )
        return out

    return run


def static_test_pipeline(
    k0: int = 3,
    block_grid: Sequence[int] = DEFAULT_BLOCK_GRID,
    window_grid: Optional[Sequence[int]] = None,
    n_boot: int = 1000,
    alphas: Sequence[float] = (0.05, 0.10),
    h: int = 1,
    c0: float = 0.1,
):
    """Static-loadings test with minimal-volatility block and window tuning.

    The bootstrap seed of each replicate is derived from the replicate's own
    generator key, so panels and multipliers never share a stream.
    """

    def run(truth: SimulationTruth):
        X = truth.X
        n = X.n
        gamma = gamma_hat(X, k0)
        d_hat = estimate_num_factors(sym_eigen(gamma.matrix), n, c0=c0).d_hat
        F = kernel_basis(gamma, d_hat)
        sel_blocks = mv_select_blocks(
            X, TuningGrid(tuple(block_grid), h=h), k0, d_override=d_hat
        )
        n_blocks = sel_blocks.selected
        m = (n - k0) // n_blocks
        seed = rngmod.derive_seed(truth.base_seed, truth.replicate)
        probe_cfg = TestConfig(n_blocks=n_blocks, window=1, k0=k0, seed=seed)
        Z = build_z(X, F, probe_cfg)
        if window_grid is None:
            wgrid = default_window_grid(m, h=h)
        else:
            wgrid = TuningGrid(tuple(window_grid), h=h)
        sel_window = mv_select_window(Z, wgrid)
        cfg = TestConfig(
            n_blocks=n_blocks,
            window=sel_window.selected,
            k0=k0,
            n_boot=n_boot,
            alpha=min(alphas),
            seed=seed,
            d_override=d_hat,
        )
        res = run_static_test(X, cfg)
        out = {
            "p_value": res.p_value,
            "t_stat": res.t_stat,
            "d_hat": res.d_hat,
            "n_blocks": n_blocks,
            "window": sel_window.selected,
        }
        for a in alphas:
            out[f"reject_{int(round(100 * a))}"] = reject_at(
                res.bootstrap_draws, res.t_stat, a
            )
        return out

    return run


def rank_recovery_pipeline(
    jn: Optional[int] = None,
    j_grid: Sequence[int] = DEFAULT_J_GRID,
    k0: int = 3,
    family: str = "legendre",
    c0: float = 0.1,
    eta: Optional[float] = None,
):
    """Fraction of grid points, inside stable intervals, where the estimated
    factor count matches the truth.  ``eta`` defaults to the change-point
    scan scale log(n)^-4."""

    def run(truth: SimulationTruth):
        X = truth.X
        n = X.n
        eta_eff = eta if eta is not None else math.log(n) ** -4
        if jn is None:
            order = cv_select_jn(X, TuningGrid(tuple(j_grid)), k0, family=family).selected
        else:
            order = jn
        model = fit_sieve(X, BasisSpec(family, order), k0)
        values, _ = eigen_path(lambda_path(model, X.times))
        d_hat = num_factors_path(values, n, c0, eta_eff)
        intervals = stable_intervals(list(zip(X.times, d_hat)), n)
        mask = np.zeros(n, dtype=bool)
        for lo, hi in intervals:
            mask |= (X.times >= lo) & (X.times <= hi)
        match = d_hat[mask] == truth.d_path[mask]
        return {
            "match_rate": float(match.mean()) if mask.any() else float("nan"),
            "stable_points": int(mask.sum()),
            "jn": order,
            "changes_found": len(intervals) - 1,
        }

    return run


def forecast_pipeline(
    jn: int = 3,
    k0: int = 3,
    family: str = "legendre",
    d_max: Optional[int] = None,
    eval_frac: float = 2.0 / 3.0,
    ar_order_max: int = 6,
):
    """Rolling one-step forecasts versus the hold-today benchmark."""

    def run(truth: SimulationTruth):
        X = truth.X
        model = fit_sieve(X, BasisSpec(family, jn), k0)
        dm = d_max if d_max is not None else int(truth.d_path.max())
        start = max(50, int(round(eval_frac * X.n)))
        rep = rolling_forecast(X, model, ForecastConfig(d_max=dm, eval_start=start, ar_order_max=ar_order_max))
        return {
            "mspe": rep.mspe,
            "benchmark_mspe": rep.benchmark_mspe,
            "beats_benchmark": rep.mspe <= rep.benchmark_mspe,
        }

    return run
