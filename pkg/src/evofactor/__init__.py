"""evofactor: time-varying factor models for high-dimensional panels.

Sieve estimation of evolutionary loading spans, eigen-ratio factor counting,
a bootstrap-assisted maximum-deviation test for static loadings, data-driven
tuning, synthetic benchmarks, and factor-based forecasting.
"""

from .panel import PanelSeries, load_csv, save_csv, difference, center
from .basis import BasisSpec, basis_matrix, basis_value, gram_defect
from .covariance import (
    SieveModel,
    LocalQuadForm,
    fit_sieve,
    m_hat,
    lambda_hat,
    lambda_path,
    gamma_hat,
    local_pca_lambda,
    local_pca_path,
)
from .factors import (
    EigenSystem,
    DegenerateSpectrumError,
    FactorStructure,
    sym_eigen,
    eigen_path,
    estimate_num_factors,
    num_factors_path,
    span_estimate,
    stable_intervals,
    explained_variance,
    factor_structure,
)
from .statictest import (
    TestConfig,
    StaticTestResult,
    MemoryLimitError,
    kernel_basis,
    block_cov,
    build_z,
    test_statistic,
    blockwise_statistic,
    bootstrap_distribution,
    run_static_test,
    reject_at,
)
from .tuning import (
    TuningGrid,
    CvSelection,
    MvSelection,
    cv_select_jn,
    mv_select_blocks,
    mv_select_window,
    default_window_grid,
)
from .simulate import (
    DESIGNS,
    SimulationSpec,
    SimulationTruth,
    SimulationReport,
    MetricSummary,
    gen_design,
    rmse_metric,
    angle_metric,
    monte_carlo,
)
from .forecast import (
    ForecastConfig,
    ForecastReport,
    extract_factors,
    ar_forecast,
    predict_next,
    rolling_forecast,
    mspe,
)
from . import pipelines

__version__ = "0.1.0"

__all__ = [
    "PanelSeries", "load_csv", "save_csv", "difference", "center",
    "BasisSpec", "basis_matrix", "basis_value", "gram_defect",
    "SieveModel", "LocalQuadForm", "fit_sieve", "m_hat", "lambda_hat",
    "lambda_path", "gamma_hat", "local_pca_lambda", "local_pca_path",
    "EigenSystem", "DegenerateSpectrumError", "FactorStructure", "sym_eigen",
    "eigen_path", "estimate_num_factors", "num_factors_path", "span_estimate",
    "stable_intervals", "explained_variance", "factor_structure",
    "TestConfig", "StaticTestResult", "MemoryLimitError", "kernel_basis",
    "block_cov", "build_z", "test_statistic", "blockwise_statistic",
    "bootstrap_distribution", "run_static_test", "reject_at",
    "TuningGrid", "CvSelection", "MvSelection", "cv_select_jn",
    "mv_select_blocks", "mv_select_window", "default_window_grid",
    "DESIGNS", "SimulationSpec", "SimulationTruth", "SimulationReport",
    "MetricSummary", "gen_design", "rmse_metric", "angle_metric", "monte_carlo",
    "ForecastConfig", "ForecastReport", "extract_factors", "ar_forecast",
    "predict_next", "rolling_forecast", "mspe",
    "pipelines",
]
