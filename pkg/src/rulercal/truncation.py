"""Monotonicity-based truncation of the calibration lattice.

When every simulation outcome responds monotonically (non-decreasingly) to
every calibration parameter, a diagonal walk from each lattice extreme can
prove that whole dominance cones cannot contain the optimum: a point whose
outcomes all fall strictly below the targets rules out everything
element-wise below it, and symmetrically from above. Two passes walk the
diagonal inward from the corners, deleting those cones, and report the
reduced candidate matrix plus new boundary corners.

With a noisy oracle the elimination is heuristic, not proven; raise the
truncation replicate count to suppress noise before trusting it.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .objective import CalibrationTargets
from .space import DiscreteSpace, SolutionMatrix

__all__ = [
    "dominates_leq",
    "dominates_geq",
    "strictly_below",
    "strictly_above",
    "PassRecord",
    "PassResult",
    "TruncationReport",
    "first_pass",
    "second_pass",
    "truncate",
    "SolutionSpaceTruncation",
    "EmptySurvivorsError",
]

logger = logging.getLogger(__name__)


class EmptySurvivorsError(RuntimeError):
    """Truncation removed every candidate: targets lie outside the lattice's
    reachable outcome range (or the oracle is too noisy to trust)."""


def _pair(u, x):
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    if u.shape != x.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {x.shape}")
    return u, x


def dominates_leq(u, x) -> bool:
    """Element-wise u <= x."""
    u, x = _pair(u, x)
    return bool(np.all(u <= x))


def dominates_geq(u, x) -> bool:
    """Element-wise u >= x."""
    u, x = _pair(u, x)
    return bool(np.all(u >= x))


def strictly_below(u, x) -> bool:
    """Element-wise u < x on every component."""
    u, x = _pair(u, x)
    return bool(np.all(u < x))


def strictly_above(u, x) -> bool:
    """Element-wise u > x on every component."""
    u, x = _pair(u, x)
    return bool(np.all(u > x))


@dataclass(frozen=True)
class PassRecord:
    """One diagonal evaluation: the point, its outcomes, and what was decided."""

    x: tuple[float, ...]
    indices: tuple[int, ...]
    y_hat: tuple[float, ...]
    decision: str  # "eliminate" or "break"
    removed: int


@dataclass
class PassResult:
    """Outcome of one truncation pass; ``error`` is set instead of raising
    when the oracle fails mid-walk, leaving the partial state usable."""

    matrix: SolutionMatrix
    boundary: tuple[float, ...]
    records: list[PassRecord]
    removed: int
    oracle_calls: int
    error: str | None = None


@dataclass
class TruncationReport:
    evaluated: list[PassRecord]
    eliminated_pass1: int
    eliminated_pass2: int
    new_x_l: tuple[float, ...]
    new_x_r: tuple[float, ...]
    surviving: SolutionMatrix
    oracle_calls: int
    error: str | None = None

    @property
    def eliminated_total(self) -> int:
        return self.eliminated_pass1 + self.eliminated_pass2

    def default_start(self, space: DiscreteSpace) -> tuple[float, ...]:
        """Low-end start point for a follow-up search on the survivors.

        The redefined lower boundary itself sits just outside the surviving
        set, so start from its diagonal successor when that survives, else
        from the first surviving row.
        """
        successor = tuple(min(j + 1, k - 1) for j, k in
                          zip(space.index(self.new_x_l), space.cardinalities))
        if self.surviving.contains_index(successor):
            return space.point(successor)
        return tuple(float(v) for v in self.surviving.values[0])

    def to_json(self) -> str:
        return json.dumps({
            "evaluated": [
                {"x": list(r.x), "indices": list(r.indices), "y_hat": list(r.y_hat),
                 "decision": r.decision, "removed": r.removed}
                for r in self.evaluated
            ],
            "eliminated_pass1": self.eliminated_pass1,
            "eliminated_pass2": self.eliminated_pass2,
            "eliminated_total": self.eliminated_total,
            "new_x_l": list(self.new_x_l),
            "new_x_r": list(self.new_x_r),
            "surviving_rows": self.surviving.row_count,
            "oracle_calls": self.oracle_calls,
            "error": self.error,
        }, indent=2)


def _diagonal_point(space: DiscreteSpace, step: int, direction: int) -> tuple[int, ...]:
    """Index vector of the step-th diagonal point from the low (+1) or high (-1) corner."""
    if direction > 0:
        return tuple(step for _ in space.cardinalities)
    return tuple(k - 1 - step for k in space.cardinalities)


def _walk(space, oracle, targets, matrix, direction) -> PassResult:
    """Shared diagonal walk; eliminates dominance cones until the criterion breaks."""
    t0 = targets.as_array()
    records: list[PassRecord] = []
    removed_total = 0
    boundary = _diagonal_point(space, 0, direction)
    calls = 0
    error = None
    for step in range(min(space.cardinalities)):
        idx = _diagonal_point(space, step, direction)
        x = space.point(idx)
        try:
            agg = oracle.evaluate(x)
        except Exception as exc:
            error = f"oracle failed at diagonal point {x}: {exc}"
            break
        calls += 1
        y = np.asarray(agg.y_hat, dtype=float)
        if direction > 0:
            eliminate = strictly_below(y, t0)
            cone = np.all(matrix.indices <= np.asarray(idx), axis=1)
        else:
            eliminate = strictly_above(y, t0)
            cone = np.all(matrix.indices >= np.asarray(idx), axis=1)
        if not eliminate:
            records.append(PassRecord(x=x, indices=idx, y_hat=agg.y_hat,
                                      decision="break", removed=0))
            break
        removed = int(np.count_nonzero(cone))
        records.append(PassRecord(x=x, indices=idx, y_hat=agg.y_hat,
                                  decision="eliminate", removed=removed))
        matrix = matrix.keep(~cone)
        removed_total += removed
        boundary = idx
    return PassResult(matrix=matrix, boundary=space.point(boundary), records=records,
                      removed=removed_total, oracle_calls=calls, error=error)


def first_pass(space: DiscreteSpace, oracle, targets: CalibrationTargets,
               matrix: SolutionMatrix | None = None) -> PassResult:
    """Walk the diagonal up from the all-minimum corner, deleting the lower
    dominance cone of every point whose outcomes fall strictly below target."""
    matrix = SolutionMatrix.from_space(space) if matrix is None else matrix
    return _walk(space, oracle, targets, matrix, +1)


def second_pass(space: DiscreteSpace, oracle, targets: CalibrationTargets,
                matrix: SolutionMatrix) -> PassResult:
    """Walk the diagonal down from the all-maximum corner, deleting the upper
    dominance cone of every point whose outcomes lie strictly above target."""
    return _walk(space, oracle, targets, matrix, -1)


def truncate(space: DiscreteSpace, oracle, targets: CalibrationTargets,
             matrix: SolutionMatrix | None = None) -> TruncationReport:
    """Run both truncation passes and report survivors, boundaries, and trace.

    Uses at most 2 * min(axis cardinalities) oracle evaluations. An oracle
    failure mid-pass is reported in the ``error`` field with the partial
    state preserved; an empty surviving set raises.
    """
    matrix = SolutionMatrix.from_space(space) if matrix is None else matrix
    p1 = first_pass(space, oracle, targets, matrix)
    if p1.error is None:
        p2 = second_pass(space, oracle, targets, p1.matrix)
        surviving, x_r_new = p2.matrix, p2.boundary
    else:
        p2 = PassResult(matrix=p1.matrix, boundary=space.x_max, records=[],
                        removed=0, oracle_calls=0)
        surviving, x_r_new = p1.matrix, space.x_max
    if surviving.row_count == 0:
        raise EmptySurvivorsError(
            "truncation eliminated the whole lattice; the calibration targets "
            "appear unreachable from this lattice (or the oracle is too noisy)"
        )
    return TruncationReport(
        evaluated=p1.records + p2.records,
        eliminated_pass1=p1.removed,
        eliminated_pass2=p2.removed,
        new_x_l=p1.boundary,
        new_x_r=x_r_new,
        surviving=surviving,
        oracle_calls=p1.oracle_calls + p2.oracle_calls,
        error=p1.error or p2.error,
    )


class SolutionSpaceTruncation(BaseEstimator):
    """Estimator-style wrapper around the two-pass truncation.

    ``fit`` evaluates the oracle along the lattice diagonals and stores the
    report; ``transform`` returns the surviving candidate matrix for a
    follow-up :class:`~rulercal.ruler.StochasticRuler` fit.

    Parameters
    ----------
    warn_on_noise : log a warning when the oracle is stochastic, since cone
        elimination is then heuristic rather than proven.
    """

    def __init__(self, warn_on_noise: bool = True):
        self.warn_on_noise = warn_on_noise

    def fit(self, space: DiscreteSpace, oracle, targets: CalibrationTargets | None = None):
        targets = targets if targets is not None else oracle.targets
        if self.warn_on_noise and getattr(oracle, "k", None) is not None:
            logger.warning(
                "solution-space truncation under a stochastic oracle is heuristic; "
                "eliminations use k=%s replicates per diagonal point", oracle.k,
            )
        self.report_ = truncate(space, oracle, targets)
        self.survivors_ = self.report_.surviving
        self.x_l_ = self.report_.new_x_l
        self.x_r_ = self.report_.new_x_r
        return self

    def transform(self, space: DiscreteSpace | None = None) -> SolutionMatrix:
        check_is_fitted(self, "report_")
        return self.survivors_

    def fit_transform(self, space, oracle, targets=None) -> SolutionMatrix:
        return self.fit(space, oracle, targets).transform(space)
