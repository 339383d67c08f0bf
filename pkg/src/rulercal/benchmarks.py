"""Synthetic monotone test problems with analytically known optima.

These oracles have closed-form outcome means that are non-decreasing in
every lattice coordinate, plus optional truncated-normal noise, so the
search and truncation machinery can be verified end-to-end against brute
force enumeration at desk scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .objective import CalibrationTargets, ReplicationOracle, objective_h
from .space import DiscreteSpace

__all__ = [
    "MonotoneTestProblem",
    "make_problem",
    "brute_force_optimum",
    "random_monotone_problem",
]

ENUMERATION_GUARD = 10**6


@dataclass(frozen=True)
class MonotoneTestProblem:
    """A lattice, monotone outcome means, a noise level, and targets.

    ``kind`` selects the mean family: "affine" gives
    y_i(x) = intercepts[i] + weights[i] . x, "product" gives
    y_i(x) = intercepts[i] * prod_j x_j ** weights[i][j]; non-negative
    weights keep both non-decreasing in every coordinate.
    """

    space: DiscreteSpace
    kind: str
    intercepts: tuple[float, ...]
    weights: tuple[tuple[float, ...], ...]
    noise_sd: tuple[float, ...]
    targets: CalibrationTargets
    true_optimum: tuple[tuple[int, ...], tuple[float, ...], float]

    @property
    def n_outcomes(self) -> int:
        return len(self.intercepts)

    def mean(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        c = np.asarray(self.intercepts, dtype=float)
        if self.kind == "affine":
            return c + w @ x
        if self.kind == "product":
            return c * np.prod(np.power(x, w), axis=1)
        raise ValueError(f"unknown mean family: {self.kind!r}")

    def true_h(self, x) -> float:
        """Objective of the noise-free mean at x."""
        return objective_h(self.mean(x), self.targets)

    def sample(self, x, rng: np.random.Generator) -> np.ndarray:
        """One noisy outcome draw; noise is normal truncated at zero."""
        mu = self.mean(x)
        sd = np.asarray(self.noise_sd, dtype=float)
        out = mu.copy()
        for i in range(len(mu)):
            if sd[i] > 0:
                a = (0.0 - mu[i]) / sd[i]
                out[i] = stats.truncnorm.rvs(a, np.inf, loc=mu[i], scale=sd[i], random_state=rng)
        return out

    def run_fn(self, x, seed: int) -> np.ndarray:
        """Replication interface: deterministic given (x, seed)."""
        rng = np.random.Generator(np.random.PCG64(seed))
        return self.sample(x, rng)

    def oracle(self, k: int = 5, master_seed: int = 0, phase: str = "synthetic",
               n_jobs: int = 1) -> ReplicationOracle:
        return ReplicationOracle(self.run_fn, self.targets, k=k,
                                 master_seed=master_seed, phase=phase, n_jobs=n_jobs)


def _check_monotone(space: DiscreteSpace, mean_fn, n_outcomes: int) -> None:
    """Pairwise scan: means must be non-decreasing along every axis step."""
    if space.size > ENUMERATION_GUARD:
        raise ValueError(f"lattice too large to verify monotonicity ({space.size} points)")
    for idx in space.iter_indices():
        base = mean_fn(space.point(idx))
        for axis in range(space.m):
            if idx[axis] + 1 >= space.cardinalities[axis]:
                continue
            up = list(idx)
            up[axis] += 1
            stepped = mean_fn(space.point(up))
            if np.any(stepped < base - 1e-12):
                raise ValueError(
                    f"mean function is not non-decreasing along axis {axis} at index {idx}"
                )


def make_problem(space: DiscreteSpace, intercepts, weights, targets,
                 noise_sd=0.0, kind: str = "affine") -> MonotoneTestProblem:
    """Build a monotone test problem and locate its true optimum by enumeration.

    Rejects mean specifications that fail the pairwise monotonicity scan.
    """
    intercepts = tuple(float(c) for c in intercepts)
    weights = tuple(tuple(float(w) for w in row) for row in weights)
    n = len(intercepts)
    if any(len(row) != space.m for row in weights) or len(weights) != n:
        raise ValueError(f"weights must be shape ({n}, {space.m})")
    noise = np.broadcast_to(np.asarray(noise_sd, dtype=float), (n,))
    if np.any(noise < 0):
        raise ValueError("noise_sd must be >= 0")
    if not isinstance(targets, CalibrationTargets):
        targets = CalibrationTargets(targets)
    if targets.n != n:
        raise ValueError(f"targets dimension {targets.n} != outcomes {n}")

    probe = MonotoneTestProblem(
        space=space, kind=kind, intercepts=intercepts, weights=weights,
        noise_sd=tuple(noise), targets=targets, true_optimum=((), (), np.inf))
    _check_monotone(space, probe.mean, n)
    optimum = brute_force_optimum(probe)
    return MonotoneTestProblem(
        space=space, kind=kind, intercepts=intercepts, weights=weights,
        noise_sd=tuple(noise), targets=targets, true_optimum=optimum)


def brute_force_optimum(problem: MonotoneTestProblem):
    """Exhaustive argmin of the noise-free objective over the lattice.

    Ties break lexicographically on the index vector, so the result is
    deterministic and independent of enumeration order.
    """
    space = problem.space
    if space.size > ENUMERATION_GUARD:
        raise ValueError(f"lattice too large to enumerate ({space.size} points)")
    best_idx = None
    best_h = np.inf
    for idx in space.iter_indices():
        h = problem.true_h(space.point(idx))
        if h < best_h:
            best_h = h
            best_idx = idx
    return best_idx, space.point(best_idx), float(best_h)


def random_monotone_problem(rng: np.random.Generator, m: int | None = None,
                            max_cardinality: int = 6, noise_sd: float = 0.0,
                            n_outcomes: int = 3,
                            achievable: bool = True) -> MonotoneTestProblem:
    """A random strictly monotone problem on a small random lattice.

    Axes are sorted positive values; weights are strictly positive so every
    outcome strictly increases along every axis. With ``achievable`` (the
    default) the targets are the mean outcomes of a randomly chosen lattice
    point, matching the definition of an optimum that hits the targets
    exactly; dominance-cone elimination is only guaranteed sound in that
    regime. Otherwise targets are drawn between the outcome extremes.
    """
    m = int(rng.integers(2, 4)) if m is None else m
    axes = []
    for _ in range(m):
        k = int(rng.integers(3, max_cardinality + 1))
        vals = np.sort(rng.uniform(0.1, 10.0, size=k))
        # Enforce strict increase even under unlucky draws.
        vals += np.arange(k) * 1e-6
        axes.append(tuple(vals))
    space = DiscreteSpace(axes)
    weights = rng.uniform(0.1, 2.0, size=(n_outcomes, m))
    intercepts = rng.uniform(0.5, 3.0, size=n_outcomes)
    if achievable:
        idx = tuple(int(rng.integers(0, k)) for k in space.cardinalities)
        x0 = np.asarray(space.point(idx))
        targets = intercepts + weights @ x0
    else:
        lo = intercepts + weights @ np.array([a[0] for a in axes])
        hi = intercepts + weights @ np.array([a[-1] for a in axes])
        targets = rng.uniform(lo + 0.05 * (hi - lo), lo + 0.95 * (hi - lo))
    return make_problem(space, intercepts, weights, targets, noise_sd=noise_sd, kind="affine")
