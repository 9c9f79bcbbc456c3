"""Data-driven tuning parameter selection.

Three selectors, all deterministic functions of their inputs:

* :func:`cv_select_jn` -- sieve order by leverage-weighted cross validation
  of the projection residuals.
* :func:`mv_select_blocks` -- number of test blocks by minimal volatility of
  the test statistic across neighboring candidates.
* :func:`mv_select_window` -- bootstrap window by a multivariate minimal
  volatility rule on cumulated squared centered block sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .basis import BasisSpec
from .covariance import fit_sieve, gamma_hat, lambda_path
from .factors import eigen_path, estimate_num_factors, num_factors_path, sym_eigen
from .panel import PanelSeries
from .statictest import TestConfig, blockwise_statistic, kernel_basis

__all__ = [
    "TuningGrid",
    "CvSelection",
    "MvSelection",
    "cv_select_jn",
    "mv_select_blocks",
    "mv_select_window",
    "default_window_grid",
]


@dataclass(frozen=True)
class TuningGrid:
    """Ascending integer candidates plus the volatility window half-width."""

    candidates: tuple[int, ...]
    h: int = 1

    def __post_init__(self):
        cand = tuple(int(c) for c in self.candidates)
        object.__setattr__(self, "candidates", cand)
        if self.h < 1:
            raise ValueError("h must be >= 1")
        if len(cand) < 2 * self.h + 1:
            raise ValueError(f"need at least {2 * self.h + 1} candidates for h={self.h}")
        if any(c < 1 for c in cand):
            raise ValueError("candidates must be positive")
        if any(b <= a for a, b in zip(cand, cand[1:])):
            raise ValueError("candidates must be strictly increasing")


@dataclass(frozen=True)
class CvSelection:
    selected: int
    candidates: tuple[int, ...]
    scores: np.ndarray
    clipped_terms: int


@dataclass(frozen=True)
class MvSelection:
    """Outcome of a minimal-volatility selection.

    For the block selector, ``values`` holds the statistic per feasible
    candidate and ``se`` its volatility per eligible center
    (candidates[h:-h]).  For the window selector both hold the
    worst-coordinate volatility per eligible center.
    """

    selected: int
    candidates: tuple[int, ...]
    values: np.ndarray
    se: np.ndarray
    dropped: tuple[int, ...]


def local_se(values: np.ndarray, h: int) -> np.ndarray:
    """Sample standard deviation over sliding windows of width 2h+1."""
    values = np.asarray(values, dtype=float)
    if values.size < 2 * h + 1:
        raise ValueError("curve shorter than the volatility window")
    return sliding_window_view(values, 2 * h + 1).std(axis=-1, ddof=1)


def _mv_argmin(values: np.ndarray, h: int) -> tuple[int, np.ndarray]:
    """Index of the stablest candidate (center of the flattest window)."""
    se = local_se(values, h)
    return int(np.argmin(se)) + h, se


def cv_select_jn(
    X: PanelSeries,
    grid: TuningGrid,
    k0: int,
    family: str = "legendre",
    c0: float = 0.1,
    eta: float = 1.0,
) -> CvSelection:
    """Pick the sieve order minimizing the cross-validation score.

    For each candidate order the panel is refit, the factor count and span
    are re-estimated at every in-sample time, and the score sums the squared
    projection residuals weighted by 1/(1 - leverage)^2, where the leverage
    of series s at time i is the s-th diagonal entry of the span projector.
    Leverages within 1e-8 of one are clipped (denominator floored at 1e-16)
    and counted in ``clipped_terms``.
    """
    n = X.n
    times = X.times
    Xv = X.values
    scores = np.empty(len(grid.candidates))
    clipped = 0
    for ci, J in enumerate(grid.candidates):
        model = fit_sieve(X, BasisSpec(family, J), k0)
        values, vectors = eigen_path(lambda_path(model, times))
        d_hat = num_factors_path(values, n, c0, eta)
        resid_sq = np.empty((n, X.p))
        lev = np.empty((n, X.p))
        for d in np.unique(d_hat):
            idx = np.nonzero(d_hat == d)[0]
            Vs = vectors[idx, :, :d]                          # (m, p, d)
            coef = np.einsum("tpd,tp->td", Vs, Xv[idx])
            proj = np.einsum("tpd,td->tp", Vs, coef)
            resid_sq[idx] = (Xv[idx] - proj) ** 2
            lev[idx] = np.einsum("tpd,tpd->tp", Vs, Vs)
        den = (1.0 - lev) ** 2
        bad = lev >= 1.0 - 1e-8
        clipped += int(bad.sum())
        den = np.maximum(den, 1e-16)
        scores[ci] = float(np.sum(resid_sq / den))
    sel = int(np.argmin(scores))
    return CvSelection(
        selected=grid.candidates[sel],
        candidates=grid.candidates,
        scores=scores,
        clipped_terms=clipped,
    )


def mv_select_blocks(
    X: PanelSeries,
    grid: TuningGrid,
    k0: int,
    c0: float = 0.1,
    eta: float = 1.0,
    d_override: int | None = None,
) -> MvSelection:
    """Pick the block count where the test statistic is most stable.

    The statistic is recomputed for every feasible candidate (block length
    at least 4); the candidate at the center of the lowest-volatility window
    wins, ties resolving to the smallest.
    """
    n = X.n
    gamma = gamma_hat(X, k0)
    if d_override is None:
        d_hat = estimate_num_factors(sym_eigen(gamma.matrix), n, c0=c0, eta=eta).d_hat
    else:
        d_hat = d_override
    if d_hat >= X.p:
        raise ValueError("factor count leaves no kernel directions")
    F = kernel_basis(gamma, d_hat)

    feasible, dropped = [], []
    for N in grid.candidates:
        m = (n - k0) // N
        (feasible if m >= 4 else dropped).append(N)
    if len(feasible) < 2 * grid.h + 1:
        raise ValueError("fewer than 2h+1 feasible block-count candidates")
    stats = np.array(
        [
            blockwise_statistic(
                X, F, TestConfig(n_blocks=N, window=1, k0=k0, seed=0)
            )
            for N in feasible
        ]
    )
    center, se = _mv_argmin(stats, grid.h)
    return MvSelection(
        selected=feasible[center],
        candidates=tuple(feasible),
        values=stats,
        se=se,
        dropped=tuple(dropped),
    )


def mv_select_window(Z: np.ndarray, grid: TuningGrid) -> MvSelection:
    """Pick the bootstrap window by multivariate minimal volatility.

    For each candidate w the centered overlapping sums are squared, cumulated
    over the sliding index (a common range set by the largest candidate so
    the stacks are comparable), and scaled by 1/(w (m - w + 1)).  For every
    coordinate of that stack the volatility across neighboring candidates is
    measured; the candidate whose window has the smallest worst-coordinate
    volatility wins, ties resolving to the smallest.
    """
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise ValueError("need at least two rows of Z")
    m, L = Z.shape
    h = grid.h
    feasible = [w for w in grid.candidates if w < m]
    dropped = tuple(w for w in grid.candidates if w >= m)
    if len(feasible) < 2 * h + 1:
        raise ValueError("fewer than 2h+1 feasible window candidates")
    g = len(feasible)
    r_common = m - max(feasible) + 1
    n_centers = g - 2 * h
    colmax = np.zeros(n_centers)
    chunk = max(1, int(5e6 / (g * r_common)))
    for lo in range(0, L, chunk):
        cols = slice(lo, min(lo + chunk, L))
        Zc = Z[:, cols]
        cs = np.concatenate([np.zeros((1, Zc.shape[1])), np.cumsum(Zc, axis=0)])
        total = cs[-1]
        stack = np.empty((g, r_common, Zc.shape[1]))
        for wi, w in enumerate(feasible):
            centered = (cs[w:] - cs[:-w]) - (w / m) * total
            stack[wi] = np.cumsum(centered**2, axis=0)[:r_common] / (w * (m - w + 1))
        windows = sliding_window_view(stack, 2 * h + 1, axis=0)  # (centers, r, c, 2h+1)
        se = windows.std(axis=-1, ddof=1)
        np.maximum(colmax, se.max(axis=(1, 2)), out=colmax)
    center = int(np.argmin(colmax)) + h
    return MvSelection(
        selected=feasible[center],
        candidates=tuple(feasible),
        values=colmax,
        se=colmax,
        dropped=dropped,
    )


def default_window_grid(m: int, size: int = 8, h: int = 1) -> TuningGrid:
    """Window candidates in [2, ~cbrt(m)].

    The window must grow slower than the block length, and the bootstrap
    tail widens with w/m: the cumulated-volatility criterion is top-biased
    on its grid, so the grid cap is the effective scale choice.  Size
    calibration on the null benchmarks sits at cube-root scale; caps near
    m/4 push the 5%-level rejection toward zero.
    """
    top = max(int(round(m ** (1.0 / 3.0))) + 2, 2 + 2 * h)
    cand = np.unique(np.linspace(2, top, num=size, dtype=int))
    return TuningGrid(candidates=tuple(int(c) for c in cand), h=h)
