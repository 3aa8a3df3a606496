"""Goal-based portfolio construction.

Turn a desired future-wealth distribution into a feasibility verdict, the
risk preferences it implies, and the optimal policy that delivers it — at a
fixed horizon, at an intermediate target date, or under a flexible-horizon
forward criterion — plus a single-period distribution-builder backend and a
Monte Carlo simulator for the resulting policies.
"""

from .errors import (
    AssumptionViolated,
    BudgetViolated,
    DegenerateMarkers,
    IllegalTransition,
    Inadmissible,
    InfeasibleWealth,
    IntegralDivergence,
    NoArbitrageViolation,
    NotSubmitted,
    RefusalError,
    SupportViolation,
    TargetWealthError,
)
from .market import MarketCurves, MarketSpec, build_curves, constant_market
from .targets import (
    TargetDistribution,
    distribution_from_dict,
    distribution_to_dict,
    from_markers,
    from_quantile_table,
    lognormal_family,
    transformed_normal_family,
    whole_line_diagnostic_family,
)
from .fixed_horizon import (
    FixedHorizonSolution,
    budget_constraint_terminal,
    cost_efficiency_check,
    marginal_utility_terminal,
    solve_family_parameter,
    solve_fixed_horizon,
)
from .intermediate import (
    IntermediateSolution,
    budget_constraint_intermediate,
    solve_intermediate,
    verify_assumptions,
    weierstrass_invert,
)
from .forward import (
    ForwardSolution,
    RecoveredMeasure,
    budget_constraint_forward,
    check_admissibility,
    fourier_of_measure,
    initial_datum,
    performance_surface,
    recover_measure,
    solve_forward,
)
from .builder import (
    BuilderSession,
    SinglePeriodMarket,
    distributional_price,
    infer_marginal_points,
    realize_outcome,
    set_markers,
    submit_session,
)
from .simulate import (
    PathBundle,
    SimulationConfig,
    ks_check,
    martingale_check,
    self_financing_check,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolated",
    "BudgetViolated",
    "BuilderSession",
    "DegenerateMarkers",
    "FixedHorizonSolution",
    "ForwardSolution",
    "IllegalTransition",
    "Inadmissible",
    "InfeasibleWealth",
    "IntegralDivergence",
    "IntermediateSolution",
    "MarketCurves",
    "MarketSpec",
    "NoArbitrageViolation",
    "NotSubmitted",
    "PathBundle",
    "RecoveredMeasure",
    "RefusalError",
    "SimulationConfig",
    "SinglePeriodMarket",
    "SupportViolation",
    "TargetDistribution",
    "TargetWealthError",
    "budget_constraint_forward",
    "budget_constraint_intermediate",
    "budget_constraint_terminal",
    "build_curves",
    "check_admissibility",
    "constant_market",
    "cost_efficiency_check",
    "distribution_from_dict",
    "distribution_to_dict",
    "distributional_price",
    "fourier_of_measure",
    "from_markers",
    "from_quantile_table",
    "infer_marginal_points",
    "initial_datum",
    "ks_check",
    "lognormal_family",
    "marginal_utility_terminal",
    "martingale_check",
    "performance_surface",
    "realize_outcome",
    "recover_measure",
    "self_financing_check",
    "set_markers",
    "simulate",
    "solve_family_parameter",
    "solve_fixed_horizon",
    "solve_forward",
    "solve_intermediate",
    "submit_session",
    "transformed_normal_family",
    "verify_assumptions",
    "weierstrass_invert",
    "whole_line_diagnostic_family",
]
