"""Orthonormal basis families on [0, 1].

Two families are supported:

* ``"legendre"`` -- normalized shifted Legendre polynomials.  B_1(t) = 1,
  B_2(t) = sqrt(3)(2t - 1), B_3(t) = sqrt(5)(6t^2 - 6t + 1), and in general
  B_j(t) = sqrt(2j - 1) P_{j-1}(2t - 1) with P_k the classical Legendre
  polynomial, evaluated by the three-term recurrence on u = 2t - 1.
* ``"fourier"`` -- trigonometric system: B_1(t) = 1,
  B_{2m}(t) = sqrt(2) cos(2 pi m t), B_{2m+1}(t) = sqrt(2) sin(2 pi m t).

Both satisfy int_0^1 B_m B_n = 1{m = n}, which :func:`gram_defect` verifies
by Gauss-Legendre quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["BasisSpec", "basis_matrix", "basis_value", "gram_defect", "FAMILIES"]

FAMILIES = ("legendre", "fourier")


@dataclass(frozen=True)
class BasisSpec:
    """A basis family plus its truncation order J >= 1."""

    family: str
    order: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown basis family {self.family!r}, expected one of {FAMILIES}")
        if self.order < 1:
            raise ValueError(f"basis order must be >= 1, got {self.order}")


def _legendre_matrix(t: np.ndarray, J: int) -> np.ndarray:
    u = 2.0 * t - 1.0
    out = np.empty((t.size, J))
    out[:, 0] = 1.0
    if J > 1:
        out[:, 1] = u
    for deg in range(1, J - 1):
        # (deg+1) P_{deg+1} = (2 deg + 1) u P_deg - deg P_{deg-1}
        out[:, deg + 1] = ((2 * deg + 1) * u * out[:, deg] - deg * out[:, deg - 1]) / (deg + 1)
    return out * np.sqrt(2.0 * np.arange(J) + 1.0)


def _fourier_matrix(t: np.ndarray, J: int) -> np.ndarray:
    out = np.empty((t.size, J))
    out[:, 0] = 1.0
    root2 = np.sqrt(2.0)
    for j in range(2, J + 1):
        m = j // 2
        if j % 2 == 0:
            out[:, j - 1] = root2 * np.cos(2.0 * np.pi * m * t)
        else:
            out[:, j - 1] = root2 * np.sin(2.0 * np.pi * m * t)
    return out


def basis_matrix(spec: BasisSpec, t) -> np.ndarray:
    """Evaluate all J basis functions on a grid; returns shape (len(t), J)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.ndim != 1:
        raise ValueError("t must be a scalar or 1-d array")
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("basis functions are defined on [0, 1]")
    if spec.family == "legendre":
        return _legendre_matrix(t, spec.order)
    return _fourier_matrix(t, spec.order)


def basis_value(spec: BasisSpec, j: int, t: float) -> float:
    """Evaluate the j-th basis function (1-based, j <= J) at a point."""
    if not 1 <= j <= spec.order:
        raise ValueError(f"basis index j={j} out of range 1..{spec.order}")
    return float(basis_matrix(spec, t)[0, j - 1])


def gram_defect(spec: BasisSpec, quadrature_points: int) -> float:
    """Max deviation of the quadrature Gram matrix from the identity.

    Uses Gauss-Legendre quadrature with ``quadrature_points`` nodes mapped to
    [0, 1]; exact for polynomial integrands up to degree 2q - 1, so the
    Legendre family at q >= 2J gives defects at round-off level.
    """
    if quadrature_points < 2 * spec.order:
        raise ValueError("need at least 2J quadrature points")
    nodes, weights = np.polynomial.legendre.leggauss(quadrature_points)
    x = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    B = basis_matrix(spec, x)
    G = (B * w[:, None]).T @ B
    return float(np.abs(G - np.eye(spec.order)).max())
