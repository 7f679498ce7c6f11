"""Noise-interpretation calculus and closed-form log-utility Merton policies.

The package converts SDEs between stochastic-integral conventions (Ito,
Stratonovich, Klimontovich and anything in between), derives the resulting
optimal consumption and portfolio rules in constant-volatility, factor-driven
and Heston markets, and verifies every closed form by Monte Carlo simulation
and HJB-residual checks.
"""

__version__ = "0.1.0"

from .calculus import (
    ITO,
    KLIMONTOVICH,
    STRATONOVICH,
    CoefficientField,
    CorrelationMatrix,
    Interpretation,
    ScalarFn,
    convert,
    correction_vector,
    effective_drift_factor,
    gbm_field,
    ito_drift_diagonal_multiplicative,
    reduce_correlated_noise,
    scalar_field,
)
from .errors import (
    AlphamertonError,
    ConfigError,
    DimensionError,
    DomainError,
    ParameterError,
    SimulationError,
    SolverError,
    ValidationError,
)
from .evaluate import (
    ComparisonTable,
    DriftCheckReport,
    PerturbationStudy,
    UtilityEstimate,
    compare_interpretations,
    estimate_utility,
    log_drift_check,
    perturbation_study,
)
from .markets import (
    CirParams,
    ConstantVolMarket,
    FactorMarket,
    FellerResult,
    HestonMarket,
    feller_check,
    heston_ito_form,
    validate,
)
from .policies import (
    LogValueFunction,
    Policy,
    hjb_residual,
    log_wealth_drift,
    solve_factor,
    solve_heston,
    solve_n_asset,
    solve_single_asset,
)
from .simulate import (
    PathEnsemble,
    SimConfig,
    alpha_point_step,
    correlated_increments,
    euler_step,
    simulate_cir,
    simulate_paths,
    simulate_wealth,
)

__all__ = [name for name in dir() if not name.startswith("_")]
