"""Calibration of stochastic simulation models by discrete simulation
optimization: stochastic ruler random search over a parameter lattice,
with an optional monotonicity-based solution-space truncation pre-pass."""

from .abm import (
    District,
    HcvSimulation,
    ModelParams,
    SimOutcome,
    make_abm_run_fn,
    run_replication,
)
from .benchmarks import MonotoneTestProblem, brute_force_optimum, make_problem
from .objective import (
    AggregateResult,
    CalibrationTargets,
    ReplicationOracle,
    aggregate,
    fractional_deviation,
    objective_h,
)
from .ruler import RulerParams, SRTrace, StochasticRuler, estimate_ruler_bounds, m_t, run_sr
from .space import DiscreteSpace, SolutionMatrix, neighbors
from .truncation import (
    SolutionSpaceTruncation,
    TruncationReport,
    dominates_geq,
    dominates_leq,
    first_pass,
    second_pass,
    truncate,
)

__version__ = "0.1.0"

__all__ = [
    "District", "HcvSimulation", "ModelParams", "SimOutcome", "make_abm_run_fn",
    "run_replication", "MonotoneTestProblem", "brute_force_optimum", "make_problem",
    "AggregateResult", "CalibrationTargets", "ReplicationOracle", "aggregate",
    "fractional_deviation", "objective_h", "RulerParams", "SRTrace", "StochasticRuler",
    "estimate_ruler_bounds", "m_t", "run_sr", "DiscreteSpace", "SolutionMatrix",
    "neighbors", "SolutionSpaceTruncation", "TruncationReport", "dominates_geq",
    "dominates_leq", "first_pass", "second_pass", "truncate",
]
