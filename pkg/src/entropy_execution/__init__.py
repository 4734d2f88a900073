"""Robust optimal order execution with relative-entropy regularization.

Closed-form and Riccati-solver strategies for two linear-quadratic models,
Gaussian posteriors of the market trading rate, Monte Carlo evaluation
against adapted TWAP, and numerical checks of the game's saddle structure.
"""

from .closed_form import (
    LinearQuadraticStrategy,
    StrategyModel1,
    StrategyModel2,
    optimal_strategy,
    posterior_model1,
    posterior_model2,
)
from .entropy_core import (
    DiscretizedDensity,
    QuadraticCost,
    functional_value,
    gibbs_posterior_oracle,
    kl_gaussian,
    minimize_entropy_functional,
)
from .errors import *  # noqa: F401,F403
from .game_check import HamiltonianContext, hamiltonian, inner_min_reduction_check, saddle_check
from .model_config import (
    GaussianDist,
    LinearSchedule,
    Model1Coeffs,
    Model2Coeffs,
    ModelParams,
    PriorSchedule,
    RiskSpecModel1,
    RiskSpecModel2,
    derive_model1_coeffs,
    derive_model2_coeffs,
)
from .riccati import SolvedStrategy, ValueCoefficients, solve_model1, solve_model2
from .simulator import (
    AdaptedTWAP,
    FeedbackRule,
    OptimalFeedback,
    SimConfig,
    SimEnsemble,
    SimPath,
    performance_decompose,
    pnl_definition,
    pnl_transformed,
    simulate_paths,
)

__version__ = "0.1.0"
