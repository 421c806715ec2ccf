"""Stochastic primal-dual solvers for convex-concave saddle problems with
expectation constraints.

Two algorithms are provided: a fixed-step variant that needs the horizon N up
front, and a horizon-free adaptive variant with anchored prox maps.  Both
average their iterates and converge at the optimal 1/sqrt(N) rate in
objective gap and feasibility residual.
"""

from .core import (
    ConfigurationError,
    Dims,
    ExactOracle,
    IterateState,
    NumericalDivergenceError,
    ProblemConstants,
    ProblemInstance,
    ReferenceSolution,
    SamplingOracle,
)
from .metrics import (
    GapReport,
    SlopeFit,
    duality_gap,
    evaluate,
    slope_fit,
    solve_reference,
    theory_constant_R,
)
from .problems import (
    PricingSpec,
    QcqpSaddleSpec,
    generate_pricing,
    generate_qcqp,
    generate_zero_sum_toy,
)
from .prox import Ball, Box, DiagEllipsoid, FullSpace, NonnegOrthant, project
from .schedule import ADAPTIVE, BASIC, StepSchedule, StepSizes, adaptive_steps, basic_steps
from .solver import CheckpointRecord, RunConfig, RunTrace, run_adp_cspd, run_basic_cspd

__version__ = "0.1.0"

__all__ = [
    "ADAPTIVE",
    "BASIC",
    "Ball",
    "Box",
    "CheckpointRecord",
    "ConfigurationError",
    "DiagEllipsoid",
    "Dims",
    "ExactOracle",
    "FullSpace",
    "GapReport",
    "IterateState",
    "NonnegOrthant",
    "NumericalDivergenceError",
    "PricingSpec",
    "ProblemConstants",
    "ProblemInstance",
    "QcqpSaddleSpec",
    "ReferenceSolution",
    "RunConfig",
    "RunTrace",
    "SamplingOracle",
    "SlopeFit",
    "StepSchedule",
    "StepSizes",
    "adaptive_steps",
    "basic_steps",
    "duality_gap",
    "evaluate",
    "generate_pricing",
    "generate_qcqp",
    "generate_zero_sum_toy",
    "project",
    "run_adp_cspd",
    "run_basic_cspd",
    "slope_fit",
    "solve_reference",
    "theory_constant_R",
]
