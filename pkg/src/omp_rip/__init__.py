"""Fully corrective greedy sparse recovery (generalized OMP) with exact
restricted-isometry certification and numerical checks of its recovery
bounds."""
from .linalg import restricted_least_squares, symmetric_eig_extremes
from .objective import (
    LogisticObjective,
    Objective,
    QuadraticObjective,
    SensingProblem,
    SolverError,
    logistic_objective,
    quadratic_gradient,
    quadratic_value,
)
from .omp import OmpConfig, OmpResult, omp_run, select_coordinate
from .rsc import (
    BudgetExceeded,
    RscProfile,
    build_profile,
    epsilon_s,
    proposition1_check,
    rho_exact,
    rho_sampled,
)
from .theory import (
    TargetSignal,
    TheoryReport,
    condition_eq4_min_s,
    corollary1_check,
    verify_corollary2,
    verify_theorem1,
)

__version__ = "0.1.0"

__all__ = [
    "OmpConfig",
    "OmpResult",
    "omp_run",
    "select_coordinate",
    "BudgetExceeded",
    "LogisticObjective",
    "Objective",
    "QuadraticObjective",
    "RscProfile",
    "SensingProblem",
    "SolverError",
    "TargetSignal",
    "TheoryReport",
    "build_profile",
    "condition_eq4_min_s",
    "corollary1_check",
    "epsilon_s",
    "logistic_objective",
    "proposition1_check",
    "quadratic_gradient",
    "quadratic_value",
    "restricted_least_squares",
    "rho_exact",
    "rho_sampled",
    "symmetric_eig_extremes",
    "verify_corollary2",
    "verify_theorem1",
]
