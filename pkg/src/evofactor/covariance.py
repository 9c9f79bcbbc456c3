"""Lagged-covariance estimators.

The observed panel is modelled as a factor structure whose lag-k local
covariance Sigma_X(t, k) drifts smoothly with rescaled time t.  The sieve
estimator expands that drift on an orthonormal basis:

    coeff[j, k] = (1/n) sum_{i=1}^{n-k} X_{i+k} X_i^T B_j(i/n)
    M(t, k)     = sum_{j<=J} coeff[j, k] B_j(t)
    Lambda(t)   = sum_{k<=k0} M(t, k) M(t, k)^T

Lambda(t) is symmetric positive semi-definite by construction and its leading
eigenspace estimates the span of the factor loadings at time t.  The module
also provides the full-sample analogue (one term per lag, no basis weighting)
and a rolling-window local estimator used as a baseline.

The sum over i stops at n - k (the paper-facing convention elsewhere writes
the upper limit loosely); the divisor stays n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSpec, basis_matrix
from .panel import PanelSeries

__all__ = [
    "SieveModel",
    "LocalQuadForm",
    "fit_sieve",
    "m_hat",
    "lambda_hat",
    "lambda_path",
    "gamma_hat",
    "local_pca_lambda",
    "local_pca_path",
]


@dataclass(frozen=True)
class SieveModel:
    """Fitted sieve coefficients: ``coeffs[j-1, k-1]`` is the p x p block
    for basis index j and lag k."""

    spec: BasisSpec
    k0: int
    coeffs: np.ndarray  # shape (J, k0, p, p)
    n: int
    p: int

    def __post_init__(self):
        J = self.spec.order
        if self.coeffs.shape != (J, self.k0, self.p, self.p):
            raise ValueError("coefficient array shape mismatch")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("non-finite sieve coefficient")


@dataclass(frozen=True)
class LocalQuadForm:
    """A symmetric PSD p x p quadratic form attached to a time point.

    ``t = 1.0`` is also used for the full-sample form, which aggregates the
    whole interval (0, 1].
    """

    t: float
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("quadratic form must be a square matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("non-finite entry in quadratic form")
        scale = np.linalg.norm(m, "fro")
        if np.abs(m - m.T).max() > 1e-10 * max(scale, 1e-300):
            raise ValueError("matrix is not symmetric within tolerance")
        if not 0.0 <= self.t <= 1.0:
            raise ValueError("time index must lie in [0, 1]")


def _sym(mat: np.ndarray) -> np.ndarray:
    # wash out round-off asymmetry before any eigendecomposition
    return 0.5 * (mat + np.swapaxes(mat, -1, -2))


def fit_sieve(X: PanelSeries, spec: BasisSpec, k0: int) -> SieveModel:
    """Project the lagged products of a panel onto the basis.

    Parameters
    ----------
    X : PanelSeries
        Observed panel, n x p.
    spec : BasisSpec
        Basis family and order J.
    k0 : int
        Maximum lag; must satisfy 1 <= k0 < n/2.
    """
    n, p = X.n, X.p
    if k0 < 1:
        raise ValueError("k0 must be >= 1")
    if k0 >= n / 2:
        raise ValueError(f"k0={k0} too large for n={n} (need k0 < n/2)")
    J = spec.order
    B = basis_matrix(spec, X.times)  # (n, J)
    V = X.values
    coeffs = np.empty((J, k0, p, p))
    for k in range(1, k0 + 1):
        lead = V[k:]                       # rows i+k, i = 1..n-k
        lag = V[: n - k]                   # rows i
        w = lead[:, None, :] * B[: n - k, :, None]   # (n-k, J, p)
        c = w.reshape(n - k, J * p).T @ lag          # (J*p, p)
        coeffs[:, k - 1] = c.reshape(J, p, p) / n
    return SieveModel(spec=spec, k0=k0, coeffs=coeffs, n=n, p=p)


def m_hat(model: SieveModel, t: float, k: int) -> np.ndarray:
    """Reconstruct the lag-k local covariance at time t from the sieve."""
    if not 1 <= k <= model.k0:
        raise ValueError(f"lag k={k} out of range 1..{model.k0}")
    b = basis_matrix(model.spec, t)[0]  # (J,)
    return np.tensordot(b, model.coeffs[:, k - 1], axes=(0, 0))


def lambda_path(model: SieveModel, grid, chunk: int = 256) -> np.ndarray:
    """Evaluate the local quadratic form on a grid; returns (len(grid), p, p).

    Work is chunked over grid points so memory stays at
    ``chunk * k0 * p^2`` doubles regardless of grid length.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    out = np.empty((grid.size, model.p, model.p))
    for lo in range(0, grid.size, chunk):
        hi = min(lo + chunk, grid.size)
        B = basis_matrix(model.spec, grid[lo:hi])             # (c, J)
        M = np.einsum("tj,jkpq->tkpq", B, model.coeffs)       # (c, k0, p, p)
        out[lo:hi] = _sym(np.einsum("tkpq,tkrq->tpr", M, M))
    return out


def lambda_hat(model: SieveModel, t: float) -> LocalQuadForm:
    """The local quadratic form at one time point."""
    return LocalQuadForm(t=float(t), matrix=lambda_path(model, [t])[0])


def gamma_hat(X: PanelSeries, k0: int) -> LocalQuadForm:
    """Full-sample quadratic form: per lag, the whole-sample lagged product
    moment squared, summed over lags 1..k0."""
    n, p = X.n, X.p
    if k0 < 1:
        raise ValueError("k0 must be >= 1")
    if k0 >= n / 2:
        raise ValueError(f"k0={k0} too large for n={n} (need k0 < n/2)")
    V = X.values
    total = np.zeros((p, p))
    for k in range(1, k0 + 1):
        s = V[k:].T @ V[: n - k] / n
        total += s @ s.T
    return LocalQuadForm(t=1.0, matrix=_sym(total))


def local_pca_lambda(X: PanelSeries, i: int, m: int, k0: int) -> LocalQuadForm:
    """Rolling-window baseline at time index i (1-based, t = i/n).

    The lag-k product moments are averaged over the window [i-m, i+m],
    clipped to indices that keep i+k inside the sample, and divided by the
    actual number of summands.
    """
    n = X.n
    if not 1 <= i <= n:
        raise ValueError(f"time index i={i} out of range 1..{n}")
    if m < 1:
        raise ValueError("half-window m must be >= 1")
    if m >= n / 2:
        raise ValueError(f"half-window m={m} too large for n={n}")
    V = X.values
    total = np.zeros((X.p, X.p))
    for k in range(1, k0 + 1):
        lo = max(1, i - m)
        hi = min(i + m, n - k)
        if hi < lo:
            continue  # no usable pair at this lag near the right edge
        s = V[lo + k - 1 : hi + k].T @ V[lo - 1 : hi] / (hi - lo + 1)
        total += s @ s.T
    return LocalQuadForm(t=i / n, matrix=_sym(total))


def local_pca_path(X: PanelSeries, m: int, k0: int) -> np.ndarray:
    """Rolling-window quadratic forms at every i/n; returns (n, p, p).

    Uses prefix sums of the lagged outer products, so it holds one
    (n, p, p) array per lag; prefer :func:`local_pca_lambda` for very
    wide panels.
    """
    n, p = X.n, X.p
    if m < 1 or m >= n / 2:
        raise ValueError(f"half-window m={m} out of range for n={n}")
    V = X.values
    idx = np.arange(1, n + 1)
    out = np.zeros((n, p, p))
    for k in range(1, k0 + 1):
        prods = V[k:, :, None] * V[: n - k, None, :]      # (n-k, p, p)
        csum = np.concatenate([np.zeros((1, p, p)), np.cumsum(prods, axis=0)])
        lo = np.maximum(1, idx - m)
        hi = np.minimum(idx + m, n - k)
        counts = np.maximum(hi - lo + 1, 0)
        valid = counts > 0
        s = np.zeros((n, p, p))
        s[valid] = (csum[hi[valid]] - csum[lo[valid] - 1]) / counts[valid, None, None]
        out += s @ np.swapaxes(s, 1, 2)
    return _sym(out)
