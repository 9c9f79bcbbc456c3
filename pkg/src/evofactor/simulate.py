"""Synthetic panel generators, evaluation metrics, and a Monte-Carlo harness.

Designs
-------
``tv-loading``
    One factor whose p-vector loading is built from four smooth block
    functions; mildly autocorrelated factor, Gaussian noise.  The main
    estimation benchmark.
``persistent``
    Same layout with a strongly autocorrelated factor; used for forecasting
    comparisons.
``null-model1`` / ``null-model2``
    Three locally stationary factors behind a loading matrix that is
    constant in time (the static-loadings null).  Noise is scaled Student-t
    (model 1) or a product of consecutive Gaussians (model 2), both
    non-Gaussian.
``power``
    One unit-norm loading vector whose shape drifts with a deviation
    parameter D >= 0; D = 0 recovers the null.
``rank-jump``
    Two orthogonal loading directions where the second one switches on at
    t = 0.5, so the effective number of factors jumps from 1 to 2.

All factor processes are truncated moving averages z_i = sum_j c(i/n)^j
eps_{i-j} with time-varying coefficient functions; the truncation error of
the geometric tail is far below double precision for every design here.
Each replicate draws from three independent streams (factors, loadings,
noise) derived from (seed, replicate), so panels are reproducible regardless
of execution order.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import rng as rngmod
from .panel import PanelSeries

__all__ = [
    "DESIGNS",
    "SimulationSpec",
    "SimulationTruth",
    "MetricSummary",
    "SimulationReport",
    "gen_design",
    "rmse_metric",
    "angle_metric",
    "monte_carlo",
]

DESIGNS = ("tv-loading", "persistent", "null-model1", "null-model2", "power", "rank-jump")


@dataclass(frozen=True)
class SimulationSpec:
    design: str
    n: int
    p: int
    seed: int = 0
    replicates: int = 1
    ma_truncation: int = 200
    burn_in: int = 200
    deviation: Optional[float] = None  # D for the "power" design

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}, expected one of {DESIGNS}")
        if self.n < 2 or self.p < 2:
            raise ValueError("need n >= 2 and p >= 2")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.burn_in < self.ma_truncation:
            raise ValueError("burn_in must be >= ma_truncation")
        if self.design == "power":
            if self.deviation is None or self.deviation < 0:
                raise ValueError("the power design needs deviation D >= 0")


@dataclass(frozen=True)
class SimulationTruth:
    """Generated panel plus everything the generator knew."""

    X: PanelSeries
    loadings: np.ndarray         # (n, p, d_max), inactive columns zero
    factors: np.ndarray          # (n, d_max)
    noise: np.ndarray            # (n, p)
    d_true: int | np.ndarray     # scalar or per-time path
    base_seed: int
    replicate: int

    @property
    def d_path(self) -> np.ndarray:
        if np.isscalar(self.d_true):
            return np.full(self.X.n, int(self.d_true), dtype=int)
        return np.asarray(self.d_true, dtype=int)

    def true_spans(self) -> list[np.ndarray]:
        """Per-time orthonormal bases of the active loading columns."""
        out = []
        for i, d in enumerate(self.d_path):
            A = self.loadings[i][:, :d]
            q, _ = np.linalg.qr(A)
            out.append(q)
        return out


def _ma_series(rng, times: np.ndarray, coef_fn, scale: float, L: int, burn_in: int) -> np.ndarray:
    """Locally stationary MA: z_i = scale * sum_{j=0}^{L} c(i/n)^j eps_{i-j}."""
    n = times.size
    eps = rng.standard_normal(n + burn_in)[burn_in - L :]
    windows = sliding_window_view(eps, L + 1)        # row a: eps[a .. a+L]
    c = np.asarray(coef_fn(times), dtype=float)
    weights = c[:, None] ** np.arange(L + 1)[None, :]
    return scale * np.einsum("ij,ij->i", weights, windows[:, ::-1])


def _block_bounds(p: int, blocks: int) -> list[int]:
    return [int(np.round(i * p / blocks)) for i in range(blocks + 1)]


def _tv_loading_truth(spec, rng_f, rng_l, rng_e, a0):
    n, p, L = spec.n, spec.p, spec.ma_truncation
    times = np.arange(1, n + 1) / n
    base = 1.0 + 0.2 * np.sqrt(np.arange(1, p + 1) / p)
    b = _block_bounds(p, 5)
    # four row blocks: [0, b1), [b1, b2), [b2, b3), [b3, p)
    funcs = [
        1.3 * np.exp(times) - 1.0,
        0.6 * np.cos(np.pi * times / 3.0),
        -(0.5 + 2.0 * times**2),
        2.0 * np.cos(np.pi * times / 3.0) + 0.6 * times,
    ]
    loadings = np.empty((n, p, 1))
    for blk, (lo, hi) in enumerate(zip([0, b[1], b[2], b[3]], [b[1], b[2], b[3], p])):
        loadings[:, lo:hi, 0] = base[lo:hi][None, :] * funcs[blk][:, None]
    z = _ma_series(rng_f, times, a0, 1.0, L, spec.burn_in)
    factors = z[:, None]
    noise = rng_e.normal(0.0, 0.5, size=(n, p))
    return loadings, factors, noise, 1


def _null_model_truth(spec, rng_f, rng_l, rng_e, model: int):
    n, p, L = spec.n, spec.p, spec.ma_truncation
    times = np.arange(1, n + 1) / n
    thetas = [
        lambda t: 0.1 + 0.06 * t**2,
        lambda t: 0.12 + 0.04 * t**2,
        lambda t: np.full_like(t, 0.15),
    ]
    factors = np.column_stack(
        [_ma_series(rng_f, times, th, 2.0, L, spec.burn_in) for th in thetas]
    )
    A = 2.0 * rng_l.uniform(-1.0, 1.0, size=(p, 3))
    b = _block_bounds(p, 3)
    scales = np.empty(p)
    scales[: b[1]] = 0.8
    scales[b[1] : b[2]] = 0.9
    scales[b[2] :] = 1.0
    A_scaled = A * scales[:, None]
    loadings = np.broadcast_to(A_scaled, (n, p, 3)).copy()
    if model == 1:
        z = rng_e.standard_normal((n, p))
        chi = rng_e.chisquare(5.0, size=(n, p))
        noise = (16.0 / 25.0) * (z / np.sqrt(chi / 5.0)) / np.sqrt(5.0 / 4.0)
    else:
        tilde = rng_e.standard_normal((n + 1, p))
        noise = (16.0 / 25.0) * tilde[:-1] * tilde[1:]
    return loadings, factors, noise, 3


def _power_truth(spec, rng_f, rng_l, rng_e):
    n, p, L = spec.n, spec.p, spec.ma_truncation
    D = float(spec.deviation)
    times = np.arange(1, n + 1) / n
    b = _block_bounds(p, 5)
    funcs = [
        1.0 - D * times,
        1.0 - 2.0 * D * times,
        1.0 - D * times**2,
        1.0 - 2.0 * D * times**2,
        np.ones_like(times),
    ]
    raw = np.empty((n, p))
    for blk in range(5):
        raw[:, b[blk] : b[blk + 1]] = funcs[blk][:, None]
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    loadings = (raw / norms)[:, :, None]
    z = _ma_series(rng_f, times, lambda t: 0.2 + 0.2 * t, 4.0, L, spec.burn_in)
    factors = z[:, None]
    noise = rng_e.normal(0.0, 0.5, size=(n, p))
    return loadings, factors, noise, 1


def _rank_jump_truth(spec, rng_f, rng_l, rng_e):
    n, p, L = spec.n, spec.p, spec.ma_truncation
    times = np.arange(1, n + 1) / n
    q, _ = np.linalg.qr(rng_l.standard_normal((p, 2)))
    # square-root ramp, capped: the second direction crosses zero at t = 0.5,
    # reaches detectable strength quickly, but never dominates the first
    sigma2 = np.minimum(2.5 * np.sqrt(np.clip(times - 0.5, 0.0, None)), 0.9)
    loadings = np.empty((n, p, 2))
    loadings[:, :, 0] = np.sqrt(p) * q[:, 0][None, :]
    loadings[:, :, 1] = np.sqrt(p) * sigma2[:, None] * q[:, 1][None, :]
    theta = lambda t: np.full_like(t, 0.3)
    factors = np.column_stack(
        [_ma_series(rng_f, times, theta, 1.0, L, spec.burn_in) for _ in range(2)]
    )
    noise = rng_e.normal(0.0, 0.5, size=(n, p))
    d_true = np.where(times > 0.5, 2, 1).astype(int)
    return loadings, factors, noise, d_true


def gen_design(spec: SimulationSpec, replicate: int) -> SimulationTruth:
    """Generate one replicate of the given design."""
    if not 0 <= replicate:
        raise ValueError("replicate index must be >= 0")
    rng_f = rngmod.derive_rng(spec.seed, rngmod.SIM_FACTORS, replicate)
    rng_l = rngmod.derive_rng(spec.seed, rngmod.SIM_LOADINGS, replicate)
    rng_e = rngmod.derive_rng(spec.seed, rngmod.SIM_NOISE, replicate)
    if spec.design == "tv-loading":
        parts = _tv_loading_truth(spec, rng_f, rng_l, rng_e, lambda t: 0.4 * (0.4 - 0.2 * t))
    elif spec.design == "persistent":
        parts = _tv_loading_truth(spec, rng_f, rng_l, rng_e, lambda t: 0.6 + 0.2 * t)
    elif spec.design == "null-model1":
        parts = _null_model_truth(spec, rng_f, rng_l, rng_e, model=1)
    elif spec.design == "null-model2":
        parts = _null_model_truth(spec, rng_f, rng_l, rng_e, model=2)
    elif spec.design == "power":
        parts = _power_truth(spec, rng_f, rng_l, rng_e)
    else:
        parts = _rank_jump_truth(spec, rng_f, rng_l, rng_e)
    loadings, factors, noise, d_true = parts
    X = np.einsum("tpd,td->tp", loadings, factors) + noise
    return SimulationTruth(
        X=PanelSeries(X),
        loadings=loadings,
        factors=factors,
        noise=noise,
        d_true=d_true,
        base_seed=spec.seed,
        replicate=replicate,
    )


def rmse_metric(
    truth: SimulationTruth, fitted_spans: Sequence[np.ndarray], root: bool = True
) -> float:
    """Reconstruction error of the projected panel against the factor signal.

    Per time i the error vector is Vhat Vhat^T X_i minus the true common
    component; the metric is the square root of the average squared norm over
    all n*p entries (``root=False`` returns the raw average).
    """
    X = truth.X.values
    n, p = X.shape
    if len(fitted_spans) != n:
        raise ValueError("need one fitted span per time point")
    signal = X - truth.noise
    total = 0.0
    for i in range(n):
        V = fitted_spans[i]
        if V.shape[0] != p:
            raise ValueError(f"span at time {i + 1} has {V.shape[0]} rows, expected {p}")
        resid = V @ (V.T @ X[i]) - signal[i]
        total += float(resid @ resid)
    avg = total / (n * p)
    return math.sqrt(avg) if root else avg


def angle_metric(V_hat: np.ndarray, V: np.ndarray) -> float:
    """Projection distance between two column spans, in [0, 1].

    Equals 1 - trace(P_hat P)/d for the orthogonal projectors of the two
    spans; 0 for equal spans, 1 for orthogonal ones, invariant to orthogonal
    rotations of either basis.
    """
    V_hat = np.asarray(V_hat, dtype=float)
    V = np.asarray(V, dtype=float)
    if V_hat.shape != V.shape:
        raise ValueError("span matrices must have matching shapes")
    d = V.shape[1]
    for M, name in ((V_hat, "V_hat"), (V, "V")):
        if np.abs(M.T @ M - np.eye(d)).max() > 1e-8:
            raise ValueError(f"{name} does not have orthonormal columns")
    M = V_hat.T @ V
    return float(np.clip(1.0 - (M**2).sum() / d, 0.0, 1.0))


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    se: float
    count: int
    se_defined: bool


@dataclass(frozen=True)
class SimulationReport:
    design: str
    n: int
    p: int
    replicates: int
    completed: int
    metrics: Mapping[str, MetricSummary]
    failures: tuple[tuple[int, str], ...]
    replicate_metrics: tuple[Mapping[str, float], ...]
    runtime_s: float

    def to_dict(self) -> dict:
        return {
            "design": self.design,
            "n": self.n,
            "p": self.p,
            "replicates": self.replicates,
            "completed": self.completed,
            "failed": len(self.failures),
            "metrics": {
                k: {"mean": v.mean, "se": v.se, "count": v.count, "se_defined": v.se_defined}
                for k, v in self.metrics.items()
            },
            "runtime_s": self.runtime_s,
        }


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("EVOFACTOR_THREADS", "1")))
    except ValueError:
        return 1


def monte_carlo(
    spec: SimulationSpec,
    pipeline: Callable[[SimulationTruth], Mapping[str, float]],
    threads: Optional[int] = None,
) -> SimulationReport:
    """Run ``pipeline`` on every replicate and aggregate its metrics.

    The pipeline maps a generated truth to a flat dict of numbers (bools are
    treated as 0/1 rates).  Failing replicates are recorded and excluded,
    never silently dropped.  Aggregation order is fixed by replicate index,
    so reports are identical for any thread count.
    """
    threads = default_threads() if threads is None else max(1, threads)
    t0 = time.perf_counter()

    def one(rep: int):
        return pipeline(gen_design(spec, rep))

    results: list = [None] * spec.replicates
    failures: list[tuple[int, str]] = []
    if threads == 1:
        for rep in range(spec.replicates):
            try:
                results[rep] = dict(one(rep))
            except Exception as exc:  # noqa: BLE001 - recorded, not swallowed
                failures.append((rep, f"{type(exc).__name__}: {exc}"))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = {rep: pool.submit(one, rep) for rep in range(spec.replicates)}
            for rep in range(spec.replicates):
                try:
                    results[rep] = dict(futs[rep].result())
                except Exception as exc:  # noqa: BLE001
                    failures.append((rep, f"{type(exc).__name__}: {exc}"))
    rows = [r for r in results if r is not None]
    keys: list[str] = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    metrics: dict[str, MetricSummary] = {}
    for k in keys:
        vals = np.array([float(r[k]) for r in rows if k in r])
        count = vals.size
        mean = float(vals.mean()) if count else float("nan")
        if count > 1:
            se = float(vals.std(ddof=1) / math.sqrt(count))
            metrics[k] = MetricSummary(mean=mean, se=se, count=count, se_defined=True)
        else:
            metrics[k] = MetricSummary(mean=mean, se=0.0, count=count, se_defined=False)
    return SimulationReport(
        design=spec.design,
        n=spec.n,
        p=spec.p,
        replicates=spec.replicates,
        completed=len(rows),
        metrics=metrics,
        failures=tuple(failures),
        replicate_metrics=tuple(rows),
        runtime_s=time.perf_counter() - t0,
    )
