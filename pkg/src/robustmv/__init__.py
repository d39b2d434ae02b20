"""Robust mean-variance portfolio selection under covariance ambiguity."""

from .ambiguity import (
    AmbiguitySet,
    CorrelationCaseReport,
    WorstCase,
    classify_correlation,
    risk_premium,
    worst_case,
)
from .frontier import (
    FrontierContext,
    frontier_return,
    inverse_frontier,
    lambda_of_vartheta,
    sharpe_lower_bound,
)
from .hamiltonian import HamiltonianContext, evaluate_H, h_star, sigma_hat
from .simulation import (
    FeedbackStrategy,
    HestonBoundedModel,
    SharpeEstimate,
    StochCorrModel,
    estimate_sharpe,
    misspecified_strategy,
    replay_wealth,
    simulate_heston_paths,
    simulate_stochcorr_paths,
    simulate_terminal_wealth,
)
from .strategy import EmpiricalMeasure, RobustStrategy

__version__ = "0.1.0"

__all__ = [
    "AmbiguitySet",
    "CorrelationCaseReport",
    "WorstCase",
    "classify_correlation",
    "risk_premium",
    "worst_case",
    "FrontierContext",
    "frontier_return",
    "inverse_frontier",
    "lambda_of_vartheta",
    "sharpe_lower_bound",
    "FeedbackStrategy",
    "HestonBoundedModel",
    "SharpeEstimate",
    "StochCorrModel",
    "estimate_sharpe",
    "misspecified_strategy",
    "replay_wealth",
    "simulate_heston_paths",
    "simulate_stochcorr_paths",
    "simulate_terminal_wealth",
    "HamiltonianContext",
    "evaluate_H",
    "h_star",
    "sigma_hat",
    "EmpiricalMeasure",
    "RobustStrategy",
]
