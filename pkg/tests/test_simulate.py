"""Design generators, metrics, and the Monte-Carlo harness."""

import numpy as np
import pytest

import evofactor as ef
from evofactor import SimulationSpec, angle_metric, gen_design, monte_carlo, rmse_metric


def test_spec_validation():
    with pytest.raises(ValueError):
        SimulationSpec(design="unknown", n=100, p=5)
    with pytest.raises(ValueError):
        SimulationSpec(design="power", n=100, p=5)  # missing deviation
    with pytest.raises(ValueError):
        SimulationSpec(design="power", n=100, p=5, deviation=-0.1)
    with pytest.raises(ValueError):
        SimulationSpec(design="tv-loading", n=100, p=5, replicates=0)
    with pytest.raises(ValueError):
        SimulationSpec(design="tv-loading", n=100, p=5, burn_in=10, ma_truncation=50)


@pytest.mark.parametrize(
    "design,kw",
    [
        ("tv-loading", {}),
        ("persistent", {}),
        ("null-model1", {}),
        ("null-model2", {}),
        ("power", {"deviation": 0.3}),
        ("rank-jump", {}),
    ],
)
def test_reconstruction_exact(design, kw):
    spec = SimulationSpec(design=design, n=120, p=10, seed=7, **kw)
    truth = gen_design(spec, 0)
    rebuilt = np.einsum("tpd,td->tp", truth.loadings, truth.factors) + truth.noise
    assert np.array_equal(truth.X.values, rebuilt)


def test_gen_design_deterministic_per_replicate():
    spec = SimulationSpec(design="null-model1", n=80, p=6, seed=3)
    a = gen_design(spec, 4)
    b = gen_design(spec, 4)
    c = gen_design(spec, 5)
    assert np.array_equal(a.X.values, b.X.values)
    assert not np.array_equal(a.X.values, c.X.values)


def test_power_design_unit_norm_loadings():
    spec = SimulationSpec(design="power", n=100, p=13, seed=1, deviation=0.4)
    truth = gen_design(spec, 0)
    norms = np.linalg.norm(truth.loadings[:, :, 0], axis=1)
    assert np.abs(norms - 1.0).max() < 1e-12


def test_power_zero_deviation_is_static():
    truth = gen_design(SimulationSpec(design="power", n=60, p=10, seed=2, deviation=0.0), 0)
    spread = np.abs(truth.loadings - truth.loadings[0]).max()
    assert spread < 1e-15


def test_rank_jump_d_path():
    truth = gen_design(SimulationSpec(design="rank-jump", n=100, p=8, seed=4), 0)
    d = truth.d_path
    times = truth.X.times
    assert np.all(d[times <= 0.5] == 1)
    assert np.all(d[times > 0.5] == 2)
    # second loading column vanishes on the first half
    first_half = truth.loadings[times <= 0.5, :, 1]
    assert np.all(first_half == 0)


def test_null_model2_noise_moments():
    # product-of-consecutive-Gaussians noise: mean 0, variance (16/25)^2;
    # the variance check uses the 1-dependent long-run variance of e^2
    spec = SimulationSpec(design="null-model2", n=10000, p=100, seed=11)
    truth = gen_design(spec, 0)
    e = truth.noise.ravel()
    s2 = (16.0 / 25.0) ** 2
    N = e.size
    assert abs(e.mean()) < 3.0 * np.sqrt(s2 / N)
    lrv_e2 = 12.0 * s2**2  # var(e^2) = 8 s^4 plus twice the lag-1 covariance 2 s^4
    assert abs((e**2).mean() - s2) < 3.0 * np.sqrt(lrv_e2 / N)


def test_null_model1_noise_scale():
    spec = SimulationSpec(design="null-model1", n=5000, p=40, seed=12)
    truth = gen_design(spec, 0)
    e = truth.noise.ravel()
    # (16/25) t(5) / sqrt(5/4) has variance (16/25)^2 * (5/3) / (5/4)
    want = (16.0 / 25.0) ** 2 * (5.0 / 3.0) / (5.0 / 4.0)
    assert abs(np.var(e) - want) / want < 0.1


def test_angle_metric_examples():
    v = np.array([[1.0], [0.0], [0.0]])
    assert angle_metric(v, v) == 0.0
    w = np.array([[0.0], [1.0], [0.0]])
    assert angle_metric(w, v) == pytest.approx(1.0)
    theta = np.arcsin(0.5)
    vh = np.array([[np.cos(theta)], [np.sin(theta)], [0.0]])
    assert angle_metric(vh, v) == pytest.approx(0.25, abs=1e-12)


def test_angle_metric_rotation_invariance():
    rng = np.random.default_rng(5)
    V = np.linalg.qr(rng.standard_normal((8, 3)))[0]
    Vh = np.linalg.qr(rng.standard_normal((8, 3)))[0]
    Q = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    assert abs(angle_metric(Vh @ Q, V) - angle_metric(Vh, V)) < 1e-12


def test_angle_metric_validation():
    rng = np.random.default_rng(6)
    V = np.linalg.qr(rng.standard_normal((5, 2)))[0]
    with pytest.raises(ValueError):
        angle_metric(V, np.ones((5, 2)))
    with pytest.raises(ValueError):
        angle_metric(V[:, :1], V)


def test_rmse_metric_perfect_and_zero_span():
    spec = SimulationSpec(design="tv-loading", n=50, p=6, seed=8)
    truth = gen_design(spec, 0)
    # a perfect span with zero noise gives zero error: rebuild such a truth
    clean = ef.SimulationTruth(
        X=ef.PanelSeries(truth.X.values - truth.noise + 0.0),
        loadings=truth.loadings,
        factors=truth.factors,
        noise=np.zeros_like(truth.noise),
        d_true=truth.d_true,
        base_seed=truth.base_seed,
        replicate=truth.replicate,
    )
    spans = [np.linalg.qr(truth.loadings[i])[0] for i in range(truth.X.n)]
    assert rmse_metric(clean, spans) < 1e-10
    # the empty span reduces to the signal norm
    empty = [np.zeros((6, 0)) for _ in range(truth.X.n)]
    signal = truth.X.values - truth.noise
    want = np.sqrt((signal**2).sum() / signal.size)
    assert rmse_metric(truth, empty) == pytest.approx(want, rel=1e-12)
    # raw (un-rooted) variant
    assert rmse_metric(truth, empty, root=False) == pytest.approx(want**2, rel=1e-12)


def test_monte_carlo_aggregation_and_order_independence():
    spec = SimulationSpec(design="null-model1", n=60, p=5, seed=9, replicates=6)

    def pipe(truth):
        return {"mean_abs": float(np.abs(truth.X.values).mean()), "flag": truth.replicate % 2 == 0}

    r1 = monte_carlo(spec, pipe, threads=1)
    r2 = monte_carlo(spec, pipe, threads=3)
    assert r1.metrics == r2.metrics
    assert r1.replicate_metrics == r2.replicate_metrics
    assert r1.completed == 6
    assert r1.metrics["flag"].mean == pytest.approx(0.5)


def test_monte_carlo_single_replicate_se_flag():
    spec = SimulationSpec(design="null-model1", n=60, p=5, seed=9, replicates=1)
    rep = monte_carlo(spec, lambda t: {"x": 1.0})
    assert rep.metrics["x"].se == 0.0
    assert rep.metrics["x"].se_defined is False


def test_monte_carlo_records_failures():
    spec = SimulationSpec(design="null-model1", n=60, p=5, seed=9, replicates=4)

    def pipe(truth):
        if truth.replicate == 2:
            raise RuntimeError("boom")
        return {"x": float(truth.replicate)}

    rep = monte_carlo(spec, pipe)
    assert rep.completed == 3
    assert len(rep.failures) == 1 and rep.failures[0][0] == 2
    assert "boom" in rep.failures[0][1]
    assert rep.metrics["x"].count == 3
