"""Eigen-analysis of local quadratic forms.

Everything downstream of the covariance estimators flows through here: the
deterministic symmetric eigendecomposition, the eigen-ratio estimate of the
number of factors with its data-driven search bound, loading-span extraction,
stable-interval computation around change points of the factor count, and
explained variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .covariance import SieveModel, lambda_path

__all__ = [
    "EigenSystem",
    "DegenerateSpectrumError",
    "sym_eigen",
    "eigen_path",
    "estimate_num_factors",
    "num_factors_path",
    "span_estimate",
    "stable_intervals",
    "explained_variance",
    "FactorStructure",
    "factor_structure",
]


class DegenerateSpectrumError(ValueError):
    """Raised when a spectrum carries no factor signal (all eigenvalues zero)."""


@dataclass(frozen=True)
class EigenSystem:
    """Descending eigenvalues with orthonormal eigenvector columns.

    Sign convention: in each column the entry of largest absolute value is
    positive (first such entry on ties), which makes the decomposition a
    deterministic function of the input matrix.
    """

    values: np.ndarray   # (p,), descending
    vectors: np.ndarray  # (p, p), column i pairs with values[i]

    @property
    def p(self) -> int:
        return self.values.shape[0]


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # vectors: (..., p, p) with eigenvectors in columns
    anchor = np.argmax(np.abs(vectors), axis=-2)                      # (..., p)
    anchor_vals = np.take_along_axis(vectors, anchor[..., None, :], axis=-2)
    signs = np.where(anchor_vals < 0.0, -1.0, 1.0)
    return vectors * signs


def sym_eigen(S: np.ndarray) -> EigenSystem:
    """Deterministic eigendecomposition of a symmetric matrix."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(S)):
        raise ValueError("non-finite entries in matrix")
    scale = np.linalg.norm(S, "fro")
    if np.abs(S - S.T).max() > 1e-8 * max(scale, 1e-300):
        raise ValueError("matrix is not symmetric within tolerance")
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    w = w[::-1].copy()
    V = _fix_signs(V[:, ::-1]).copy()
    return EigenSystem(values=w, vectors=V)


def eigen_path(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched :func:`sym_eigen` over a stack of symmetric matrices.

    Returns ``(values, vectors)`` with shapes (m, p) and (m, p, p); same
    ordering and sign conventions as the scalar version.
    """
    mats = np.asarray(mats, dtype=float)
    w, V = np.linalg.eigh(0.5 * (mats + np.swapaxes(mats, -1, -2)))
    return w[..., ::-1].copy(), _fix_signs(V[..., ::-1]).copy()


class NumFactors(NamedTuple):
    d_hat: int
    search_bound: int


def _num_factors_from_values(lam: np.ndarray, n: int, c0: float, eta: float) -> NumFactors:
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, None)
    p = lam.size
    if p < 2:
        raise ValueError("need at least two eigenvalues")
    if lam[0] <= 0.0:
        raise DegenerateSpectrumError("all eigenvalues are zero; no factor structure")
    denom = math.sqrt(float(lam @ lam))
    thresh = c0 * eta / math.log(n)
    r_cap = min(p - 1, n // 2)
    # lam is sorted descending, so the normalized sequence is non-increasing
    # and the qualifying indices form a prefix.
    ok = lam[:r_cap] / denom >= thresh
    R = max(int(ok.sum()), 1)
    head = lam[:R]
    ratios = np.full(R, np.inf)
    nz = head > 0.0
    ratios[nz] = lam[1 : R + 1][nz] / head[nz]
    if not np.any(np.isfinite(ratios)):
        return NumFactors(d_hat=1, search_bound=R)
    return NumFactors(d_hat=int(np.argmin(ratios)) + 1, search_bound=R)


def estimate_num_factors(eig: EigenSystem, n: int, c0: float = 0.1, eta: float = 1.0) -> NumFactors:
    """Eigen-ratio estimate of the number of factors.

    The search bound R is the largest index r <= min(p-1, n//2) whose
    eigenvalue, normalized by the root sum of squared eigenvalues, stays
    above ``c0 * eta / log(n)`` (at least 1).  d_hat minimizes the
    consecutive eigenvalue ratio over 1..R, ties and zero-denominator
    entries resolving to the smallest index.
    """
    if n < 2:
        raise ValueError("sample size n must be >= 2")
    if c0 <= 0 or eta <= 0:
        raise ValueError("c0 and eta must be positive")
    return _num_factors_from_values(eig.values, n, c0, eta)


def num_factors_path(values: np.ndarray, n: int, c0: float = 0.1, eta: float = 1.0) -> np.ndarray:
    """Per-time factor counts from a (m, p) array of descending eigenvalues."""
    return np.array(
        [_num_factors_from_values(row, n, c0, eta).d_hat for row in values], dtype=int
    )


def span_estimate(eig: EigenSystem, d: int) -> np.ndarray:
    """Leading-d eigenvector matrix, p x d with orthonormal columns."""
    if not 1 <= d <= eig.p:
        raise ValueError(f"span dimension d={d} out of range 1..{eig.p}")
    return eig.vectors[:, :d].copy()


def stable_intervals(d_path: Sequence[tuple[float, int]], n: int) -> list[tuple[float, float]]:
    """Sub-intervals of [0, 1] away from change points of the factor count.

    A change point is placed at the midpoint between consecutive grid times
    whose estimated counts differ; a radius of 1/log^2(n) around each is
    excised and the remaining closed intervals are returned in order.
    """
    pts = list(d_path)
    times = np.array([t for t, _ in pts], dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("d_path must be sorted by time")
    counts = np.array([d for _, d in pts], dtype=int)
    changes = [
        0.5 * (times[i] + times[i + 1])
        for i in range(len(pts) - 1)
        if counts[i] != counts[i + 1]
    ]
    if not changes:
        return [(0.0, 1.0)]
    radius = 1.0 / math.log(n) ** 2
    excised = sorted((c - radius, c + radius) for c in changes)
    merged = [excised[0]]
    for lo, hi in excised[1:]:
        if lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    out = []
    cursor = 0.0
    for lo, hi in merged:
        if lo > cursor:
            out.append((cursor, min(lo, 1.0)))
        cursor = max(cursor, hi)
        if cursor >= 1.0:
            break
    if cursor < 1.0:
        out.append((cursor, 1.0))
    return [(a, b) for a, b in out if b > a]


def explained_variance(eig: EigenSystem, d: int) -> float:
    """Share of total eigenvalue mass carried by the leading d eigenvalues."""
    if not 1 <= d <= eig.p:
        raise ValueError(f"d={d} out of range 1..{eig.p}")
    lam = np.clip(eig.values, 0.0, None)
    total = lam.sum()
    if total <= 0.0:
        raise DegenerateSpectrumError("zero total variance")
    return float(lam[:d].sum() / total)


@dataclass(frozen=True)
class FactorStructure:
    """Per-grid-time eigen summary of a fitted sieve model."""

    grid: np.ndarray                 # (m,)
    eigenvalues: np.ndarray          # (m, p), descending per row
    d_hat: np.ndarray                # (m,), ints
    search_bound: np.ndarray         # (m,), ints
    explained: np.ndarray            # (m,), in [0, 1]
    spans: list[np.ndarray] | None   # per-time p x d_hat matrices, optional


def factor_structure(
    model: SieveModel,
    grid=None,
    c0: float = 0.1,
    eta: float = 1.0,
    keep_spans: bool = True,
) -> FactorStructure:
    """Run the full eigen-analysis of a sieve model over a time grid.

    ``grid`` defaults to the in-sample points i/n.  ``eta`` should be set to
    ``log(n)**-4`` when scanning for changes in the factor count.
    """
    if grid is None:
        grid = np.arange(1, model.n + 1) / model.n
    grid = np.asarray(grid, dtype=float)
    lam = lambda_path(model, grid)
    values, vectors = eigen_path(lam)
    m = grid.size
    d_hat = np.empty(m, dtype=int)
    bound = np.empty(m, dtype=int)
    explained = np.empty(m)
    spans: list[np.ndarray] | None = [] if keep_spans else None
    for i in range(m):
        nf = _num_factors_from_values(values[i], model.n, c0, eta)
        d_hat[i] = nf.d_hat
        bound[i] = nf.search_bound
        pos = np.clip(values[i], 0.0, None)
        explained[i] = pos[: nf.d_hat].sum() / pos.sum()
        if spans is not None:
            spans.append(vectors[i, :, : nf.d_hat].copy())
    return FactorStructure(
        grid=grid,
        eigenvalues=values,
        d_hat=d_hat,
        search_bound=bound,
        explained=explained,
        spans=spans,
    )
