"""Basis families: closed-form values, orthonormality, recurrence bounds."""

import numpy as np
import pytest

from evofactor import BasisSpec, basis_matrix, basis_value, gram_defect


def test_legendre_closed_forms():
    spec = BasisSpec("legendre", 3)
    assert basis_value(spec, 1, 0.37) == 1.0
    assert abs(basis_value(spec, 2, 0.5)) < 1e-15
    assert abs(basis_value(spec, 3, 0.0) - np.sqrt(5.0)) < 1e-14
    # degree-1 and degree-2 polynomials at a generic point
    t = 0.3
    assert abs(basis_value(spec, 2, t) - np.sqrt(3) * (2 * t - 1)) < 1e-14
    assert abs(basis_value(spec, 3, t) - np.sqrt(5) * (6 * t**2 - 6 * t + 1)) < 1e-13


def test_fourier_closed_forms():
    spec = BasisSpec("fourier", 5)
    t = 0.21
    assert basis_value(spec, 1, t) == 1.0
    assert abs(basis_value(spec, 2, t) - np.sqrt(2) * np.cos(2 * np.pi * t)) < 1e-14
    assert abs(basis_value(spec, 3, t) - np.sqrt(2) * np.sin(2 * np.pi * t)) < 1e-14
    assert abs(basis_value(spec, 4, t) - np.sqrt(2) * np.cos(4 * np.pi * t)) < 1e-14
    assert abs(basis_value(spec, 5, t) - np.sqrt(2) * np.sin(4 * np.pi * t)) < 1e-14


def test_gram_defect_examples():
    assert gram_defect(BasisSpec("legendre", 6), 64) < 1e-12
    assert gram_defect(BasisSpec("fourier", 5), 512) < 1e-10
    assert gram_defect(BasisSpec("legendre", 1), 2) < 1e-15


@pytest.mark.parametrize("family", ["legendre", "fourier"])
@pytest.mark.parametrize("J", [2, 7, 13, 30])
def test_orthonormality_spot_checks(family, J):
    assert gram_defect(BasisSpec(family, J), 4 * J * J) < 1e-8


def test_legendre_recurrence_bound():
    t = np.linspace(0.0, 1.0, 1001)
    B = basis_matrix(BasisSpec("legendre", 30), t)
    bounds = np.sqrt(2.0 * np.arange(1, 31) - 1.0)
    assert np.all(np.abs(B) <= bounds[None, :] + 1e-12)


def test_validation_errors():
    with pytest.raises(ValueError):
        BasisSpec("legendre", 0)
    with pytest.raises(ValueError):
        BasisSpec("wavelet", 3)
    spec = BasisSpec("legendre", 4)
    with pytest.raises(ValueError):
        basis_value(spec, 5, 0.5)
    with pytest.raises(ValueError):
        basis_value(spec, 0, 0.5)
    with pytest.raises(ValueError):
        basis_value(spec, 1, 1.5)
    with pytest.raises(ValueError):
        gram_defect(spec, 7)
