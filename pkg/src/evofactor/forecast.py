"""One-step-ahead prediction through the sieve factor structure.

Pipeline: extract a d_max-dimensional factor series from the leading
eigenvectors of the local quadratic form, forecast each coordinate with a
least-squares autoregression (order picked by AIC), zero out coordinates
beyond the locally estimated factor count, and map back through the local
loading basis.  Eigenvector columns are sign-aligned with the previous time
point so the factor series are temporally coherent; without that the AR fit
would see arbitrary sign flips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .covariance import SieveModel, lambda_path
from .factors import eigen_path, num_factors_path
from .panel import PanelSeries

__all__ = [
    "ForecastConfig",
    "ForecastReport",
    "extract_factors",
    "ar_forecast",
    "predict_next",
    "rolling_forecast",
    "mspe",
]


@dataclass(frozen=True)
class ForecastConfig:
    d_max: int
    eval_start: int          # first forecast origin (1-based time index)
    ar_order_max: int = 6

    def __post_init__(self):
        if self.d_max < 1:
            raise ValueError("d_max must be >= 1")
        if self.eval_start < 50:
            raise ValueError("eval_start must allow at least 50 points of history")
        if self.ar_order_max < 0:
            raise ValueError("ar_order_max must be >= 0")


def _align_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so consecutive time points stay coherent."""
    out = vectors.copy()
    for i in range(1, out.shape[0]):
        flip = np.einsum("pd,pd->d", out[i - 1], out[i]) < 0.0
        out[i][:, flip] *= -1.0
    return out


def _extract(values_panel: np.ndarray, times: np.ndarray, model: SieveModel, d_max: int):
    lam = lambda_path(model, times)
    eigvals, vectors = eigen_path(lam)
    bases = _align_signs(vectors[:, :, :d_max])
    factors = np.einsum("tpd,tp->td", bases, values_panel)
    return factors, bases, eigvals


def extract_factors(X: PanelSeries, model: SieveModel, d_max: int):
    """Factor series and per-time loading bases from the sieve eigenvectors.

    Returns ``(factors, bases)`` of shapes (n, d_max) and (n, p, d_max).
    """
    if not 1 <= d_max <= X.p:
        raise ValueError(f"d_max={d_max} out of range 1..{X.p}")
    factors, bases, _ = _extract(X.values, X.times, model, d_max)
    return factors, bases


def ar_forecast(series: np.ndarray, order_max: int) -> tuple[float, int]:
    """One-step least-squares AR forecast with AIC order selection.

    All orders 0..order_max are fit on the common sample that drops the
    first order_max observations, so the AIC values are comparable; the
    innovation variance uses the degrees-of-freedom-corrected RSS/(N-q),
    which keeps the selector from overfitting white noise on short factor
    histories.  Order 0 forecasts zero (the series is a centered factor).
    A singular fit falls back to order 0.
    """
    z = np.asarray(series, dtype=float)
    t = z.size
    qmax = min(order_max, max(t - 2, 0))
    n_eff = t - qmax
    if qmax == 0 or n_eff < qmax + 2:
        return 0.0, 0
    y = z[qmax:]
    best = (float("inf"), 0, None)
    for q in range(0, qmax + 1):
        if q == 0:
            rss = float(y @ y)
            coef = None
        else:
            design = np.column_stack([z[qmax - l : t - l] for l in range(1, q + 1)])
            coef, res, rank, _ = np.linalg.lstsq(design, y, rcond=None)
            if rank < q:
                continue  # singular design; skip this order
            resid = y - design @ coef
            rss = float(resid @ resid)
        sigma2 = max(rss / (n_eff - q), 1e-300)
        aic = n_eff * math.log(sigma2) + 2.0 * q
        if aic < best[0]:
            best = (aic, q, coef)
    _, q, coef = best
    if q == 0 or coef is None:
        return 0.0, 0
    history = z[t - q :][::-1]  # z_t, z_{t-1}, ..., z_{t-q+1}
    return float(coef @ history), q


def predict_next(X: PanelSeries, model: SieveModel, cfg: ForecastConfig, i: int) -> np.ndarray:
    """Forecast the panel at time i+1 using data through time i (1-based).

    Coordinates beyond the factor count estimated at time i are zeroed
    before reconstruction.
    """
    if i < cfg.eval_start:
        raise ValueError(f"need i >= eval_start={cfg.eval_start}")
    if i >= X.n:
        raise ValueError("nothing to predict: i must be < n")
    times = X.times[:i]
    factors, bases, eigvals = _extract(X.values[:i], times, model, cfg.d_max)
    d_here = num_factors_path(eigvals[-1:], X.n)[0]
    z_pred = np.zeros(cfg.d_max)
    for c in range(min(d_here, cfg.d_max)):
        z_pred[c], _ = ar_forecast(factors[:, c], cfg.ar_order_max)
    return bases[-1] @ z_pred


@dataclass(frozen=True)
class ForecastReport:
    origins: np.ndarray           # 1-based times i whose successor was predicted
    predictions: np.ndarray       # (len(origins), p)
    actuals: np.ndarray           # (len(origins), p)
    mspe: float
    benchmark_mspe: float         # "tomorrow equals today"
    per_origin_error: np.ndarray  # squared error norm / p, per origin
    ar_orders: np.ndarray         # selected AR order per origin (max over coords)

    def to_dict(self) -> dict:
        return {
            "mspe": self.mspe,
            "benchmark_mspe": self.benchmark_mspe,
            "origins": [int(i) for i in self.origins],
            "eval_points": int(self.origins.size),
        }


def mspe(predictions: np.ndarray, actuals: np.ndarray) -> float:
    """Mean squared prediction error per series per origin."""
    predictions = np.asarray(predictions, dtype=float)
    actuals = np.asarray(actuals, dtype=float)
    if predictions.shape != actuals.shape or predictions.ndim != 2:
        raise ValueError("predictions and actuals must be equal-shape 2-d arrays")
    if predictions.shape[0] < 1:
        raise ValueError("need at least one prediction")
    t, p = predictions.shape
    diff = predictions - actuals
    return float(np.sum(diff * diff) / (p * t))


def rolling_forecast(X: PanelSeries, model: SieveModel, cfg: ForecastConfig) -> ForecastReport:
    """Forecast every time point from ``eval_start`` onward.

    The factor extraction is computed once on the full grid; per-time values
    only use the observation at that time, so forecasts at origin i match
    :func:`predict_next` applied to the prefix through i.
    """
    n, p = X.n, X.p
    if cfg.eval_start >= n:
        raise ValueError("eval_start leaves no forecast origins")
    factors, bases, eigvals = _extract(X.values, X.times, model, cfg.d_max)
    d_path = num_factors_path(eigvals, X.n)
    origins = np.arange(cfg.eval_start, n)
    preds = np.empty((origins.size, p))
    orders = np.empty(origins.size, dtype=int)
    for row, i in enumerate(origins):
        z_pred = np.zeros(cfg.d_max)
        used = 0
        for c in range(min(d_path[i - 1], cfg.d_max)):
            z_pred[c], q = ar_forecast(factors[:i, c], cfg.ar_order_max)
            used = max(used, q)
        preds[row] = bases[i - 1] @ z_pred
        orders[row] = used
    actuals = X.values[origins]  # rows i (0-based) == times i+1
    diff = preds - actuals
    per_origin = np.sum(diff * diff, axis=1) / p
    bench = X.values[origins - 1]
    return ForecastReport(
        origins=origins,
        predictions=preds,
        actuals=actuals,
        mspe=mspe(preds, actuals),
        benchmark_mspe=mspe(bench, actuals),
        per_origin_error=per_origin,
        ar_orders=orders,
    )
