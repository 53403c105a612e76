"""Estimator analysis for stratified sampling without replacement.

Exact finite-population design moments, exponential ratio/product-type
estimators, first- and second-order series bias/MSE, numeric optimization
of their tuning constants, and enumeration/Monte Carlo oracles that
certify all of it.
"""

from .errors import (
    ComputationError,
    ConfigError,
    DegenerateAuxiliaryError,
    EnumerationLimitError,
    InsufficientStratumError,
    MomentNormalizationError,
    PopulationError,
    StratexpError,
    ValidationError,
)
from .estimators import (
    EstimatorKind,
    EstimatorSpec,
    StratifiedSample,
    estimate,
    t1s,
    t2s,
    t3s,
    t4s,
)
from .expansion import (
    ApproximationResult,
    SeriesPolynomial,
    approximate,
    bias,
    expand_estimator,
    expectation_of,
    mse,
    printed_second_order,
)
from .moments import DesignCoefficients, VTable, design_coefficients, v_table
from .optimize import OptimizationOutcome, optimize_alpha, optimize_theta
from .population import (
    StratifiedPopulation,
    StratumPopulation,
    StratumSummary,
    load_population,
    load_population_file,
    summarize_stratum,
)
from .report import ComparisonReport, EstimatorRequest, RunConfig, emit, run
from .verify import (
    ExactDesignDistribution,
    McEstimate,
    MonteCarloResult,
    exact_bias_mse,
    exact_expectation,
    monte_carlo,
)

__version__ = "0.1.0"

__all__ = [
    "ApproximationResult",
    "ComparisonReport",
    "ComputationError",
    "ConfigError",
    "DegenerateAuxiliaryError",
    "DesignCoefficients",
    "EnumerationLimitError",
    "EstimatorKind",
    "EstimatorRequest",
    "EstimatorSpec",
    "ExactDesignDistribution",
    "InsufficientStratumError",
    "McEstimate",
    "MomentNormalizationError",
    "MonteCarloResult",
    "OptimizationOutcome",
    "PopulationError",
    "RunConfig",
    "SeriesPolynomial",
    "StratexpError",
    "StratifiedPopulation",
    "StratifiedSample",
    "StratumPopulation",
    "StratumSummary",
    "VTable",
    "ValidationError",
    "approximate",
    "bias",
    "emit",
    "estimate",
    "exact_bias_mse",
    "exact_expectation",
    "expand_estimator",
    "expectation_of",
    "load_population",
    "load_population_file",
    "monte_carlo",
    "mse",
    "optimize_alpha",
    "optimize_theta",
    "printed_second_order",
    "run",
    "summarize_stratum",
    "t1s",
    "t2s",
    "t3s",
    "t4s",
    "v_table",
]
