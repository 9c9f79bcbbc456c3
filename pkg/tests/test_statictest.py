"""Kernel basis, block statistics, the dual-formula statistic, bootstrap."""

import numpy as np
import pytest

import evofactor as ef
from evofactor import (
    LocalQuadForm,
    MemoryLimitError,
    PanelSeries,
    block_cov,
    blockwise_statistic,
    bootstrap_distribution,
    build_z,
    gamma_hat,
    kernel_basis,
    reject_at,
    run_static_test,
)


def make_cfg(**kw):
    base = dict(n_blocks=2, window=2, k0=1, n_boot=100, alpha=0.05, seed=1)
    base.update(kw)
    return ef.TestConfig(**base)


def test_kernel_basis_diagonal():
    F = kernel_basis(LocalQuadForm(t=1.0, matrix=np.diag([5.0, 1.0, 0.0])), 1)
    assert F.shape == (3, 2)
    assert np.allclose(F[:, 0], [0, 0, 1])  # ascending eigenvalue order
    assert np.allclose(F[:, 1], [0, 1, 0])


def test_kernel_basis_identity():
    F = kernel_basis(LocalQuadForm(t=1.0, matrix=np.eye(4)), 1)
    assert np.abs(F.T @ F - np.eye(3)).max() < 1e-10


def test_kernel_basis_exact_kernel_oracle():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((8, 3))
    F = kernel_basis(LocalQuadForm(t=1.0, matrix=A @ A.T), 3)
    assert np.abs(F.T @ A).max() < 1e-8


def test_kernel_basis_errors():
    g = LocalQuadForm(t=1.0, matrix=np.eye(3))
    with pytest.raises(ValueError):
        kernel_basis(g, 3)


def test_block_cov_zero_and_hand_case():
    Z = PanelSeries(np.zeros((10, 2)))
    cfg = make_cfg(n_blocks=4, window=1)
    assert np.all(block_cov(Z, 1, 1, cfg) == 0)

    # block length 2; first block holds rows (x1, x2), lag-1 products
    vals = np.array([[1.0, 0.0], [2.0, 1.0], [3.0, -1.0], [4.0, 2.0], [5.0, 0.5]])
    X = PanelSeries(vals)
    cfg = make_cfg(n_blocks=2, window=1, k0=1)
    got = block_cov(X, 1, 1, cfg)
    want = (np.outer(vals[1], vals[0]) + np.outer(vals[2], vals[1])) / 2.0
    assert np.allclose(got, want, atol=1e-15)
    with pytest.raises(ValueError):
        block_cov(X, 3, 1, cfg)


def test_block_average_approximates_full_product():
    rng = np.random.default_rng(1)
    vals = rng.standard_normal((40, 3))
    X = PanelSeries(vals)
    k0 = 2
    cfg = make_cfg(n_blocks=4, window=1, k0=k0)
    m = cfg.block_length(40)
    for k in (1, 2):
        total = sum(block_cov(X, j, k, cfg) * m / 40 for j in range(1, 5))
        full = vals[k:].T @ vals[: 40 - k] / 40
        bound = k0 * np.abs(vals).max() ** 2 / 40
        assert np.abs(total - full).max() <= bound + 1e-12


def brute_z(values, F, m, n_blocks, k0):
    """Independent stacking oracle: explicit loops over the documented layout."""
    q, p = F.shape[1], values.shape[1]
    L = k0 * n_blocks * q * p
    Z = np.zeros((m, L))
    for i in range(1, m + 1):
        for j in range(1, n_blocks + 1):
            for k in range(1, k0 + 1):
                lead = F.T @ values[(j - 1) * m + i + k - 1]
                lag = values[(j - 1) * m + i - 1]
                for s2 in range(1, q + 1):
                    for s3 in range(1, p + 1):
                        pos = k0 * q * p * (j - 1) + (k - 1) * q * p + (s2 - 1) * p + s3
                        Z[i - 1, pos - 1] = lead[s2 - 1] * lag[s3 - 1]
    return Z


def test_build_z_matches_brute_force():
    rng = np.random.default_rng(2)
    vals = rng.standard_normal((14, 3))
    X = PanelSeries(vals)
    cfg = make_cfg(n_blocks=3, window=1, k0=2)
    F = np.linalg.qr(rng.standard_normal((3, 2)))[0]
    m = cfg.block_length(14)
    Z = build_z(X, F, cfg)
    assert Z.shape == (m, 2 * 3 * 2 * 3)
    assert np.allclose(Z, brute_z(vals, F, m, 3, 2), atol=1e-15)


def test_build_z_orthogonal_direction_vanishes():
    rng = np.random.default_rng(3)
    base = rng.standard_normal((12, 1)) @ rng.standard_normal((1, 2))
    vals = np.column_stack([base, np.zeros(12)])  # third coordinate always 0
    X = PanelSeries(vals)
    F = np.array([[0.0], [0.0], [1.0]])  # picks the dead coordinate
    Z = build_z(X, F, make_cfg(n_blocks=2, window=1, k0=1))
    assert np.all(Z == 0)


def test_build_z_scaling_quadratic():
    rng = np.random.default_rng(4)
    vals = rng.standard_normal((12, 2))
    F = np.array([[1.0], [0.0]])
    cfg = make_cfg(n_blocks=2, window=1, k0=1)
    Z1 = build_z(PanelSeries(vals), F, cfg)
    Z2 = build_z(PanelSeries(3.0 * vals), F, cfg)
    assert np.allclose(Z2, 9.0 * Z1, atol=1e-12)


def test_build_z_memory_cap():
    rng = np.random.default_rng(5)
    X = PanelSeries(rng.standard_normal((30, 4)))
    F = np.linalg.qr(rng.standard_normal((4, 2)))[0]
    with pytest.raises(MemoryLimitError):
        build_z(X, F, make_cfg(n_blocks=3, window=1, k0=2, z_memory_cap=100))


def test_test_statistic_basics():
    assert ef.test_statistic(np.zeros((5, 3))) == 0.0
    Z = np.zeros((4, 3))
    Z[:, 1] = -2.5
    assert ef.test_statistic(Z) == pytest.approx(np.sqrt(4) * 2.5)
    with pytest.raises(ValueError):
        ef.test_statistic(np.zeros((1, 3)))


def test_dual_formula_identity():
    rng = np.random.default_rng(6)
    X = PanelSeries(rng.standard_normal((50, 4)))
    cfg = make_cfg(n_blocks=4, window=2, k0=3)
    F = kernel_basis(gamma_hat(X, 3), 2)
    t1 = ef.test_statistic(build_z(X, F, cfg))
    t2 = blockwise_statistic(X, F, cfg)
    assert abs(t1 - t2) <= 1e-10 * max(t1, 1.0)


def test_bootstrap_zero_input():
    cfg = make_cfg(window=2)
    K = bootstrap_distribution(np.zeros((6, 4)), cfg)
    assert K.shape == (100,)
    assert np.all(K == 0)


def test_bootstrap_pinned_multipliers():
    # scalar rows (1, 2, 3), window 2: sliding sums (3, 5), total 6,
    # centered terms (-1, +1), scale 1/sqrt(w*(m-w+1)) = 1/2
    Z = np.array([[1.0], [2.0], [3.0]])
    cfg = make_cfg(window=2, n_boot=100)
    ones = np.ones((100, 2))
    K = bootstrap_distribution(Z, cfg, multipliers=ones)
    assert np.allclose(K, 0.0, atol=1e-15)
    flip = np.tile([1.0, -1.0], (100, 1))
    K2 = bootstrap_distribution(Z, cfg, multipliers=flip)
    assert np.allclose(K2, 1.0, atol=1e-15)


def test_bootstrap_deterministic_and_sorted():
    rng = np.random.default_rng(7)
    Z = rng.standard_normal((12, 5))
    cfg = make_cfg(window=3, n_boot=150, seed=99)
    K1 = bootstrap_distribution(Z, cfg)
    K2 = bootstrap_distribution(Z, cfg)
    assert np.array_equal(K1, K2)
    assert np.all(np.diff(K1) >= 0)
    K3 = bootstrap_distribution(Z, make_cfg(window=3, n_boot=150, seed=100))
    assert not np.array_equal(K1, K3)


def test_bootstrap_multiplier_linearity():
    rng = np.random.default_rng(8)
    Z = rng.standard_normal((10, 4))
    cfg = make_cfg(window=2, n_boot=120, seed=5)
    c = 7.5
    K1 = bootstrap_distribution(Z, cfg)
    K2 = bootstrap_distribution(c * Z, cfg)
    assert np.allclose(K2, c * K1, rtol=1e-12)
    t1, t2 = ef.test_statistic(Z), ef.test_statistic(c * Z)
    assert t2 == pytest.approx(c * t1, rel=1e-12)
    p1 = np.mean(K1 >= t1)
    p2 = np.mean(K2 >= t2)
    assert p1 == p2


def test_reject_rule_order_statistic():
    draws = np.arange(1.0, 101.0)  # K_(r) = r
    assert reject_at(draws, 95.0, 0.05) is True
    assert reject_at(draws, 94.5, 0.05) is False
    assert reject_at(draws, 90.0, 0.10) is True


def test_run_static_test_degenerate_kernel_panel():
    # panel confined to the first two coordinates; overriding d=2 makes the
    # kernel annihilate every observation: statistic and draws all zero
    rng = np.random.default_rng(9)
    vals = np.zeros((40, 4))
    vals[:, :2] = rng.standard_normal((40, 2))
    X = PanelSeries(vals)
    cfg = make_cfg(n_blocks=3, window=2, k0=1, d_override=2, n_boot=100)
    res = run_static_test(X, cfg)
    assert res.t_stat == 0.0
    assert np.all(res.bootstrap_draws == 0)
    assert res.p_value == 1.0
    assert res.reject_at_alpha  # ties count as rejection under the >= rule


def test_run_static_test_streamed_matches_in_memory():
    rng = np.random.default_rng(10)
    X = PanelSeries(rng.standard_normal((60, 4)))
    cfg = make_cfg(n_blocks=4, window=3, k0=2, n_boot=120, seed=11)
    full = run_static_test(X, cfg)
    small_cap = make_cfg(
        n_blocks=4, window=3, k0=2, n_boot=120, seed=11, z_memory_cap=2000
    )
    streamed = run_static_test(X, small_cap)
    assert streamed.t_stat == pytest.approx(full.t_stat, rel=1e-12)
    assert np.allclose(streamed.bootstrap_draws, full.bootstrap_draws, rtol=1e-12)
    assert streamed.p_value == full.p_value


def test_run_static_test_no_kernel_error():
    rng = np.random.default_rng(11)
    X = PanelSeries(rng.standard_normal((40, 3)))
    cfg = make_cfg(n_blocks=3, window=2, k0=1, d_override=3)
    with pytest.raises(ValueError, match="kernel"):
        run_static_test(X, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        ef.TestConfig(n_blocks=2, window=2, n_boot=50)
    with pytest.raises(ValueError):
        ef.TestConfig(n_blocks=2, window=0)
    with pytest.raises(ValueError):
        ef.TestConfig(n_blocks=2, window=2, alpha=1.5)
    with pytest.raises(ValueError):
        ef.TestConfig(n_blocks=2, window=2, k0=11)
    cfg = ef.TestConfig(n_blocks=5, window=10, k0=3)
    with pytest.raises(ValueError):
        cfg.block_length(53)  # m = 10 <= window fails
