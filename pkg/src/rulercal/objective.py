"""Calibration objective and replicate aggregation.

The objective for an outcome vector y against targets y0 is the sum of
absolute fractional deviations, sum_i |1 - y_i / y0_i|. A single oracle
evaluation runs k simulation replicates, scores each, and reports the
median-scoring replicate together with its outcome vector, so the search
always sees an (objective, outcomes) pair produced by one actual run.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .seeding import derive_seed

__all__ = [
    "CalibrationTargets",
    "AggregateResult",
    "Replicate",
    "ReplicationOracle",
    "objective_h",
    "fractional_deviation",
    "aggregate",
    "OracleError",
]


class OracleError(RuntimeError):
    """A replication inside an oracle evaluation failed."""


@dataclass(frozen=True)
class CalibrationTargets:
    """Target outcome values, same units as the simulator's outcomes."""

    values: tuple[float, ...]

    def __init__(self, values):
        values = tuple(float(v) for v in values)
        if len(values) == 0:
            raise ValueError("targets must be non-empty")
        if any(v <= 0 for v in values):
            raise ValueError(f"targets must all be positive (objective divides by them): {values}")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def objective_h(y, targets) -> float:
    """Sum of absolute fractional deviations of outcomes from targets.

    Zero iff the outcomes hit every target exactly.
    """
    t = targets.as_array() if isinstance(targets, CalibrationTargets) else np.asarray(targets, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.shape != t.shape:
        raise ValueError(f"outcome dimension {y.shape} does not match targets {t.shape}")
    if np.any(t <= 0):
        raise ValueError("targets must all be positive")
    return float(np.sum(np.abs(1.0 - y / t)))


def fractional_deviation(h_hat: float, n: int) -> float:
    """Average per-outcome fractional deviation for an objective value."""
    if n <= 0:
        raise ValueError("n must be positive")
    return h_hat / n


@dataclass(frozen=True)
class Replicate:
    """One simulation replicate: its outcome vector, objective value, and seed."""

    outcome: tuple[float, ...]
    h: float
    seed: int


@dataclass(frozen=True)
class AggregateResult:
    """Median-objective summary of k replicates at one candidate point.

    ``h_hat`` is the objective of the median replicate (lower median for
    even k) and ``y_hat`` is that same replicate's outcome vector, so
    ``objective_h(y_hat, targets) == h_hat`` exactly.
    """

    h_hat: float
    y_hat: tuple[float, ...]
    replicates: tuple[Replicate, ...]

    @property
    def k(self) -> int:
        return len(self.replicates)


def aggregate(run_fn, x, targets: CalibrationTargets, seeds) -> AggregateResult:
    """Run one replicate per seed at point ``x`` and pick the median-objective one.

    For even k the lower median is used so the reported outcome vector is
    always the outcome of an actual replicate. Selection is invariant to
    the order of ``seeds``.
    """
    seeds = [int(s) for s in seeds]
    if len(seeds) < 1:
        raise ValueError("at least one replicate seed is required")
    replicates = []
    for i, seed in enumerate(seeds):
        try:
            outcome = run_fn(x, seed)
        except Exception as exc:
            raise OracleError(f"replicate {i} (seed {seed}) at x={tuple(x)} failed: {exc}") from exc
        outcome = tuple(float(v) for v in np.asarray(outcome, dtype=float))
        replicates.append(Replicate(outcome=outcome, h=objective_h(outcome, targets), seed=seed))
    chosen = _lower_median(replicates)
    return AggregateResult(h_hat=chosen.h, y_hat=chosen.outcome, replicates=tuple(replicates))


def _lower_median(replicates) -> Replicate:
    # Tie-break on the outcome tuple so the pick is order-independent.
    ranked = sorted(replicates, key=lambda r: (r.h, r.outcome))
    return ranked[(len(ranked) - 1) // 2]


class ReplicationOracle:
    """Stochastic oracle g(x): median objective over k fresh replicates.

    Every call consumes a new block of replicate seeds derived from
    (master_seed, phase, call index, replicate index), so repeated
    evaluations at the same point yield fresh independent values while the
    whole call sequence stays reproducible. Replicates of one call may run
    in parallel; results are ordered by replicate index first, so the
    outcome does not depend on the parallelism degree.
    """

    def __init__(self, run_fn, targets: CalibrationTargets, k: int = 5,
                 master_seed: int = 0, phase: str = "oracle", n_jobs: int = 1,
                 on_result=None):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.run_fn = run_fn
        self.targets = targets
        self.k = int(k)
        self.master_seed = int(master_seed)
        self.phase = phase
        self.n_jobs = int(n_jobs)
        self.on_result = on_result  # callback(phase, call_index, x, AggregateResult)
        self._calls = 0

    @property
    def calls(self) -> int:
        """Number of oracle evaluations performed so far."""
        return self._calls

    @property
    def replications(self) -> int:
        """Total simulation replicates consumed so far."""
        return self._calls * self.k

    def replicate_seeds(self, call_index: int) -> list[int]:
        return [derive_seed(self.master_seed, self.phase, call_index, i) for i in range(self.k)]

    def evaluate(self, x) -> AggregateResult:
        seeds = self.replicate_seeds(self._calls)
        call_index = self._calls
        self._calls += 1
        if self.n_jobs == 1 or self.k == 1:
            result = aggregate(self.run_fn, x, self.targets, seeds)
        else:
            outcomes = Parallel(n_jobs=self.n_jobs)(
                delayed(self.run_fn)(x, seed) for seed in seeds
            )
            replicates = []
            for out, seed in zip(outcomes, seeds):
                out = tuple(float(v) for v in np.asarray(out, dtype=float))
                replicates.append(Replicate(outcome=out, h=objective_h(out, self.targets),
                                            seed=seed))
            chosen = _lower_median(replicates)
            result = AggregateResult(h_hat=chosen.h, y_hat=chosen.outcome,
                                     replicates=tuple(replicates))
        if self.on_result is not None:
            self.on_result(self.phase, call_index, tuple(x), result)
        return result

    def __call__(self, x) -> AggregateResult:
        return self.evaluate(x)
