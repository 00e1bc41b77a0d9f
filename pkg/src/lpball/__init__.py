"""Euclidean projection onto nonconvex lp balls (0 < p < 1).

Public surface: problem/option types, the residual toolkit, the exact
weighted-l1-ball projector with its brute-force oracle, the reweighted
projection solver ``solve``, and the root-searching baseline ``rs_solve``.
"""

from .core import (
    CONVERGED,
    FAILED,
    MAX_ITER_EXCEEDED,
    TRIVIAL_INSIDE_BALL,
    InvariantViolation,
    IterateState,
    IterateSummary,
    ProblemInstance,
    ReducedInstance,
    RunReport,
    SolverOptions,
    csum,
    inside_ball,
    lambda_estimate,
    recover,
    relaxed_residuals,
    residual_alpha,
    residual_beta,
    split_signs,
)
from .irbp import (
    EpsilonSchedule,
    compute_weights,
    init_state,
    solve,
    step,
    subproblem_radius,
    update_epsilon,
)
from .rs import RsIterate, RsOptions, lambda_high_init, newton_coordinate, rs_solve
from .weighted_l1 import KktReport, WeightedL1Solution, project_oracle, project_weighted_l1

__all__ = [
    "CONVERGED",
    "FAILED",
    "MAX_ITER_EXCEEDED",
    "TRIVIAL_INSIDE_BALL",
    "InvariantViolation",
    "IterateState",
    "IterateSummary",
    "ProblemInstance",
    "ReducedInstance",
    "RunReport",
    "SolverOptions",
    "csum",
    "inside_ball",
    "lambda_estimate",
    "recover",
    "relaxed_residuals",
    "residual_alpha",
    "residual_beta",
    "split_signs",
    "EpsilonSchedule",
    "compute_weights",
    "init_state",
    "solve",
    "step",
    "subproblem_radius",
    "update_epsilon",
    "RsIterate",
    "RsOptions",
    "lambda_high_init",
    "newton_coordinate",
    "rs_solve",
    "KktReport",
    "WeightedL1Solution",
    "project_oracle",
    "project_weighted_l1",
]
