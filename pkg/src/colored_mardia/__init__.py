"""Mardia kurtosis normality test for serially dependent (colored) processes."""
from .engine import TestReport, run_test, std_normal_cdf, std_normal_quantile
from .errors import MardiaError
from .generators import Family, ProcessSpec, SeededRng, generate
from .null_moments import (
    EmbeddingCorrelation,
    Model,
    NullMoments,
    ScalarCovSeq,
    bivariate_colored_moments,
    embedded_bivariate_moments,
    iid_moments,
    plug_in_cov,
    scalar_colored_moments,
)
from .stats import (
    LagCovarianceSeq,
    PrecisionMatrix,
    TimeSeries,
    lag_covariance,
    mardia_statistic,
    precision,
    quadratic_form,
    sample_covariance,
)

__version__ = "0.1.0"

__all__ = [
    "EmbeddingCorrelation",
    "Family",
    "LagCovarianceSeq",
    "MardiaError",
    "Model",
    "NullMoments",
    "PrecisionMatrix",
    "ProcessSpec",
    "ScalarCovSeq",
    "SeededRng",
    "TestReport",
    "TimeSeries",
    "bivariate_colored_moments",
    "embedded_bivariate_moments",
    "generate",
    "iid_moments",
    "lag_covariance",
    "mardia_statistic",
    "plug_in_cov",
    "precision",
    "quadratic_form",
    "run_test",
    "sample_covariance",
    "scalar_colored_moments",
    "std_normal_cdf",
    "std_normal_quantile",
]
