"""Utility-maximizing power allocation for uplink multi-user MIMO.

Combines the spectral/energy-efficiency tradeoff (per-user preference
weights) with proportional fairness, and solves the resulting allocation
problem two ways: a centralized convexization solver and a distributed
primal-dual integration, both with full KKT / Lyapunov verification
instrumentation.
"""

from .channel import (
    ChannelRealization,
    EffectiveGains,
    SingularGramError,
    compute_effective_gains,
    gains_from_db,
    load_channel_csv,
    random_rayleigh_channel,
)
from .metrics import FairnessReport, jain_index, summarize
from .primal_dual import (
    PdSettings,
    Trajectory,
    clamp_box,
    clamp_plus,
    integrate,
    lyapunov,
    step,
    write_trajectory_csv,
)
from .scenario import LoadedScenario, build_scenario, load_scenario
from .solver import (
    Allocation,
    BudgetCase,
    ConvergenceError,
    Diagnostics,
    KktReport,
    Scenario,
    SolverSettings,
    compute_pu,
    kkt_residuals,
    project_capped_simplex,
    solve_centralized,
)
from .utility import (
    UserParams,
    beta,
    beta_prime,
    composite_u,
    ee,
    se,
    utility,
    utility_grad,
    utility_hess,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "BudgetCase",
    "ChannelRealization",
    "ConvergenceError",
    "Diagnostics",
    "EffectiveGains",
    "FairnessReport",
    "KktReport",
    "LoadedScenario",
    "PdSettings",
    "Scenario",
    "SingularGramError",
    "SolverSettings",
    "Trajectory",
    "UserParams",
    "beta",
    "beta_prime",
    "build_scenario",
    "clamp_box",
    "clamp_plus",
    "composite_u",
    "compute_effective_gains",
    "compute_pu",
    "ee",
    "gains_from_db",
    "integrate",
    "jain_index",
    "kkt_residuals",
    "load_channel_csv",
    "load_scenario",
    "lyapunov",
    "project_capped_simplex",
    "random_rayleigh_channel",
    "se",
    "solve_centralized",
    "step",
    "summarize",
    "utility",
    "utility_grad",
    "utility_hess",
    "write_trajectory_csv",
]
