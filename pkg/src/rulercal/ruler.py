"""Stochastic ruler random search over a discrete lattice.

A candidate neighbor is accepted as the new incumbent only if it beats a
fresh uniform ruler draw theta ~ U(a, b) in each of M_t consecutive tests,
where every test consumes a brand-new oracle value. The test count M_t
grows (slowly) with the iteration number, tightening acceptance over time.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .seeding import generator
from .space import DiscreteSpace, SolutionMatrix, neighbor_indices

__all__ = [
    "MT_TEXT",
    "MT_COMMENTED",
    "m_t",
    "RulerParams",
    "SRIteration",
    "SRTrace",
    "run_sr",
    "estimate_ruler_bounds",
    "StochasticRuler",
    "InvalidRulerError",
    "SearchAborted",
]

MT_TEXT = "text"
MT_COMMENTED = "commented"

STOP_THRESHOLD = "threshold"
STOP_BUDGET = "budget"


class InvalidRulerError(ValueError):
    """Ruler bounds are unusable (b <= a, or delta <= a)."""


class SearchAborted(RuntimeError):
    """The oracle failed mid-search; ``partial_trace`` holds progress so far."""

    def __init__(self, message: str, partial_trace: "SRTrace"):
        super().__init__(message)
        self.partial_trace = partial_trace


def m_t(t: int, schedule: str = MT_TEXT) -> int:
    """Number of consecutive ruler tests required at iteration t.

    Two published forms exist; both are non-decreasing in t and are clamped
    to at least one test (zero tests would accept unconditionally).
    """
    if t < 1:
        raise ValueError("iteration counter starts at 1")
    if schedule == MT_TEXT:
        value = math.ceil(math.log(t + 10) - math.log(5))
    elif schedule == MT_COMMENTED:
        value = math.ceil(math.log(t + 10) / math.log(5))
    else:
        raise ValueError(f"unknown M_t schedule: {schedule!r}")
    return max(1, value)


@dataclass(frozen=True)
class RulerParams:
    """Ruler bounds and stopping configuration for one search run."""

    a: float
    b: float
    delta: float
    budget: int
    mt_schedule: str = MT_TEXT

    def __post_init__(self):
        if not self.a < self.b:
            raise InvalidRulerError(f"ruler requires a < b, got a={self.a}, b={self.b}")
        if not self.delta > self.a:
            raise InvalidRulerError(
                f"stop threshold delta must exceed a so the ruler can reward "
                f"sub-threshold values, got delta={self.delta}, a={self.a}"
            )
        if self.budget < 0:
            raise InvalidRulerError(f"budget must be >= 0, got {self.budget}")
        if self.mt_schedule not in (MT_TEXT, MT_COMMENTED):
            raise InvalidRulerError(f"unknown M_t schedule: {self.mt_schedule!r}")


@dataclass(frozen=True)
class RulerTest:
    """One ruler comparison: a fresh oracle value against a fresh theta."""

    h_hat: float
    theta: float
    success: bool
    y_hat: tuple[float, ...]


@dataclass(frozen=True)
class SRIteration:
    t: int
    current_x: tuple[float, ...]
    candidate: tuple[float, ...]
    m_t: int
    tests: tuple[RulerTest, ...]
    accepted: bool


@dataclass
class SRTrace:
    """Full record of a stochastic ruler run, sufficient to replay it."""

    iterations: list[SRIteration] = field(default_factory=list)
    t_f: int = 0
    stop_reason: str = STOP_BUDGET
    incumbent_x: tuple[float, ...] | None = None
    best_x: tuple[float, ...] | None = None
    best_h_hat: float = math.inf
    best_y_hat: tuple[float, ...] | None = None
    solution_x: tuple[float, ...] | None = None
    solution_h_hat: float | None = None
    solution_y_hat: tuple[float, ...] | None = None
    oracle_calls: int = 0

    def first_meeting(self, delta: float):
        """First evaluation with h_hat < delta: (t, x, h_hat, y_hat), or None."""
        for it in self.iterations:
            for test in it.tests:
                if test.h_hat < delta:
                    return it.t, it.candidate, test.h_hat, test.y_hat
        return None

    def to_json_lines(self) -> str:
        lines = []
        for it in self.iterations:
            lines.append(json.dumps({
                "t": it.t,
                "current_x": list(it.current_x),
                "candidate": list(it.candidate),
                "m_t": it.m_t,
                "tests": [
                    {"h_hat": tst.h_hat, "theta": tst.theta,
                     "success": tst.success, "y_hat": list(tst.y_hat)}
                    for tst in it.tests
                ],
                "accepted": it.accepted,
            }))
        lines.append(json.dumps({
            "t_f": self.t_f,
            "stop_reason": self.stop_reason,
            "incumbent_x": list(self.incumbent_x) if self.incumbent_x else None,
            "best_x": list(self.best_x) if self.best_x else None,
            "best_h_hat": self.best_h_hat if self.best_x else None,
            "solution_x": list(self.solution_x) if self.solution_x else None,
            "solution_h_hat": self.solution_h_hat,
            "oracle_calls": self.oracle_calls,
        }))
        return "\n".join(lines) + "\n"


def estimate_ruler_bounds(oracle, x_l, x_r, a: float, delta: float = math.inf,
                          budget: int = 0, mt_schedule: str = MT_TEXT) -> RulerParams:
    """Set the upper ruler bound from the two lattice extremes.

    b is the larger of the oracle's median objectives at the all-minimum and
    all-maximum corners; a comes from configuration and must stay below b.
    """
    h_l = oracle.evaluate(x_l).h_hat
    h_r = oracle.evaluate(x_r).h_hat
    b = max(h_l, h_r)
    if b <= a:
        raise InvalidRulerError(
            f"estimated b={b} (from extremes h_l={h_l}, h_r={h_r}) does not exceed a={a}"
        )
    return RulerParams(a=a, b=b, delta=delta, budget=budget, mt_schedule=mt_schedule)


def run_sr(oracle, space: DiscreteSpace, ruler: RulerParams, start_x, rng,
           candidates: SolutionMatrix | None = None) -> SRTrace:
    """Run the stochastic ruler search and return its trace.

    One iteration samples a candidate uniformly from the (wrap-around)
    neighborhood of the incumbent, runs up to M_t accept tests, then
    advances t whether or not the candidate was accepted. The run stops as
    soon as any freshly generated oracle value falls below delta, or when
    t exceeds the budget. When ``candidates`` is given (a truncated solution
    space), proposals are drawn uniformly from the neighbors that survive
    in it.

    Fully deterministic given the rng state and the oracle's seed stream.
    """
    start_idx = space.index(start_x)
    allowed = candidates.index_set() if candidates is not None else None
    if allowed is not None and start_idx not in allowed:
        raise ValueError(f"start point {tuple(start_x)} is not in the candidate set")

    trace = SRTrace()
    incumbent = start_idx
    t = 1
    while t <= ruler.budget:
        hood = neighbor_indices(incumbent, space)
        if allowed is not None:
            hood = [idx for idx in hood if idx in allowed]
        if not hood:
            # Isolated point in a truncated space: nothing to propose.
            trace.iterations.append(SRIteration(
                t=t, current_x=space.point(incumbent), candidate=space.point(incumbent),
                m_t=m_t(t, ruler.mt_schedule), tests=(), accepted=False))
            t += 1
            continue
        candidate = hood[rng.integers(0, len(hood))]
        candidate_x = space.point(candidate)
        tests_needed = m_t(t, ruler.mt_schedule)
        tests: list[RulerTest] = []
        accepted = True
        stopped = None
        for _ in range(tests_needed):
            try:
                agg = oracle.evaluate(candidate_x)
            except Exception as exc:
                trace.iterations.append(SRIteration(
                    t=t, current_x=space.point(incumbent), candidate=candidate_x,
                    m_t=tests_needed, tests=tuple(tests), accepted=False))
                trace.t_f = t
                trace.incumbent_x = space.point(incumbent)
                raise SearchAborted(
                    f"oracle failed at iteration {t} evaluating {candidate_x}: {exc}",
                    partial_trace=trace) from exc
            trace.oracle_calls += 1
            theta = float(rng.uniform(ruler.a, ruler.b))
            success = agg.h_hat <= theta
            tests.append(RulerTest(h_hat=agg.h_hat, theta=theta,
                                   success=success, y_hat=agg.y_hat))
            if agg.h_hat < trace.best_h_hat:
                trace.best_h_hat = agg.h_hat
                trace.best_x = candidate_x
                trace.best_y_hat = agg.y_hat
            if agg.h_hat < ruler.delta:
                stopped = (candidate_x, agg.h_hat, agg.y_hat)
                break
            if not success:
                accepted = False
                break
        if stopped is not None:
            trace.iterations.append(SRIteration(
                t=t, current_x=space.point(incumbent), candidate=candidate_x,
                m_t=tests_needed, tests=tuple(tests), accepted=False))
            trace.t_f = t
            trace.stop_reason = STOP_THRESHOLD
            trace.incumbent_x = space.point(incumbent)
            trace.solution_x, trace.solution_h_hat, trace.solution_y_hat = stopped
            return trace
        trace.iterations.append(SRIteration(
            t=t, current_x=space.point(incumbent), candidate=candidate_x,
            m_t=tests_needed, tests=tuple(tests), accepted=accepted))
        if accepted:
            incumbent = candidate
        t += 1

    trace.t_f = ruler.budget
    trace.stop_reason = STOP_BUDGET
    trace.incumbent_x = space.point(incumbent)
    trace.solution_x = trace.best_x
    trace.solution_h_hat = trace.best_h_hat if trace.best_x is not None else None
    trace.solution_y_hat = trace.best_y_hat
    return trace


class StochasticRuler(BaseEstimator):
    """Stochastic ruler lattice search with an estimator-style interface.

    Parameters mirror the ruler configuration; ``fit`` runs the search
    against an oracle over a :class:`DiscreteSpace` and exposes the result
    through fitted attributes (``best_x_``, ``t_f_``, ``trace_``, ...).

    Parameters
    ----------
    a : lower ruler bound.
    b : upper ruler bound, or None to estimate it from the lattice extremes.
    delta : stop threshold on the median objective.
    budget : maximum number of iterations.
    mt_schedule : "text" or "commented" test-count schedule.
    random_state : seed for the search's own draws (proposals and thetas).
    """

    def __init__(self, a: float = 0.1, b: float | None = None, delta: float = 0.2,
                 budget: int = 100, mt_schedule: str = MT_TEXT, random_state: int | None = None):
        self.a = a
        self.b = b
        self.delta = delta
        self.budget = budget
        self.mt_schedule = mt_schedule
        self.random_state = random_state

    def fit(self, space: DiscreteSpace, oracle, start=None,
            candidates: SolutionMatrix | None = None, bounds_oracle=None):
        """Run the search. ``start`` defaults to the all-minimum corner.

        ``bounds_oracle`` (defaults to ``oracle``) is used only when ``b``
        is None, to estimate the upper ruler bound from the extremes.
        """
        if self.b is None:
            est = estimate_ruler_bounds(bounds_oracle or oracle, space.x_min, space.x_max,
                                        a=self.a, delta=self.delta, budget=self.budget,
                                        mt_schedule=self.mt_schedule)
            self.ruler_ = est
        else:
            self.ruler_ = RulerParams(a=self.a, b=self.b, delta=self.delta,
                                      budget=self.budget, mt_schedule=self.mt_schedule)
        start_x = space.x_min if start is None else start
        rng = generator(0 if self.random_state is None else self.random_state, "sr-loop")
        self.trace_ = run_sr(oracle, space, self.ruler_, start_x, rng, candidates=candidates)
        self.t_f_ = self.trace_.t_f
        self.stop_reason_ = self.trace_.stop_reason
        self.incumbent_x_ = self.trace_.incumbent_x
        self.best_x_ = self.trace_.best_x
        self.best_h_hat_ = self.trace_.best_h_hat
        self.solution_x_ = self.trace_.solution_x
        self.solution_h_hat_ = self.trace_.solution_h_hat
        return self

    def meets(self, delta: float):
        """First trace evaluation under ``delta`` (after fit)."""
        check_is_fitted(self, "trace_")
        return self.trace_.first_meeting(delta)
