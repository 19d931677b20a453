"""Ruin-minimizing investment for an insurance surplus with market risk.

The package solves for the investment strategy that minimizes the ruin
probability of a jump-diffusion surplus: dynamic programming solvers for
capped and unrestricted investment, closed-form small- and large-surplus
behaviour, an independent ODE route for exponential claims, and a Monte
Carlo simulator for end-to-end validation.
"""

from .claims import (
    ClaimDistribution,
    from_config,
    make_exponential,
    make_half_normal,
    make_log_normal,
    make_pareto,
    make_weibull,
)
from .model import (
    DerivedConstants,
    ModelParams,
    Regime,
    RegimeReport,
    classify_infinity_regime,
    classify_zero_regime,
    derive_constants,
)
from .numerics import Grid, SampledFn, convolve_tail, convolve_tail_all, integrate_prefix, jump_operator_M
from .results import (
    NormalizedSurvival,
    StrategyCurve,
    ValueGrid,
    WindowDiagnostics,
    generator_residual,
    normalize_delta,
)
from .constrained import (
    curvature_best,
    curvature_candidate,
    extract_strategy_constrained,
    fixed_point_residual,
    solve_v_constrained,
)
from .unconstrained import (
    HjbResidual,
    curvature_operator,
    drift_claims_term,
    extract_strategy_unconstrained,
    hjb_residual,
    solve_v_unconstrained,
)
from .asymptotics import (
    AsymptoteReport,
    TailFit,
    asymptote_report,
    constrained_infinity_strategy,
    fit_tail_constant,
    no_investment_ruin_reference,
    ruin_tail_exp,
    strategy_expansion_infinity_exp,
    strategy_slope_zero,
    value_expansion_zero,
)
from .exp_ode import (
    LinearOdeCoeffs,
    TildeACurve,
    a_tilde_rhs,
    linear_ode_coeffs,
    reconstruct_vprime,
    solve_a_tilde,
    solve_linear_const_strategy,
)
from .mc import PathResult, SimConfig, SimReport, compare_strategies, estimate_survival, simulate_path
from .scenario import (
    BadValueError,
    Scenario,
    ScenarioError,
    UnknownKeyError,
    example1_distributions,
    example1_params,
    example2_distributions,
    example2_params,
    load_scenario,
    parse_scenario,
    scenario_text,
)

__version__ = "0.1.0"

__all__ = [
    "ClaimDistribution",
    "from_config",
    "make_exponential",
    "make_half_normal",
    "make_log_normal",
    "make_pareto",
    "make_weibull",
    "DerivedConstants",
    "ModelParams",
    "Regime",
    "RegimeReport",
    "classify_infinity_regime",
    "classify_zero_regime",
    "derive_constants",
    "Grid",
    "SampledFn",
    "convolve_tail",
    "convolve_tail_all",
    "integrate_prefix",
    "jump_operator_M",
    "NormalizedSurvival",
    "StrategyCurve",
    "ValueGrid",
    "WindowDiagnostics",
    "generator_residual",
    "normalize_delta",
    "curvature_best",
    "curvature_candidate",
    "extract_strategy_constrained",
    "fixed_point_residual",
    "solve_v_constrained",
    "HjbResidual",
    "curvature_operator",
    "drift_claims_term",
    "extract_strategy_unconstrained",
    "hjb_residual",
    "solve_v_unconstrained",
    "AsymptoteReport",
    "TailFit",
    "asymptote_report",
    "constrained_infinity_strategy",
    "fit_tail_constant",
    "no_investment_ruin_reference",
    "ruin_tail_exp",
    "strategy_expansion_infinity_exp",
    "strategy_slope_zero",
    "value_expansion_zero",
    "LinearOdeCoeffs",
    "TildeACurve",
    "a_tilde_rhs",
    "linear_ode_coeffs",
    "reconstruct_vprime",
    "solve_a_tilde",
    "solve_linear_const_strategy",
    "PathResult",
    "SimConfig",
    "SimReport",
    "compare_strategies",
    "estimate_survival",
    "simulate_path",
    "BadValueError",
    "Scenario",
    "ScenarioError",
    "UnknownKeyError",
    "example1_distributions",
    "example1_params",
    "example2_distributions",
    "example2_params",
    "load_scenario",
    "parse_scenario",
    "scenario_text",
    "__version__",
]
