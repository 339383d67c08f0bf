"""Discrete search lattices: axis sets, point/index bijection, wrap-around neighborhoods."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = ["DiscreteSpace", "SolutionMatrix", "neighbors", "OffLatticeError"]


class OffLatticeError(ValueError):
    """A point does not lie on the lattice (within matching tolerance)."""


@dataclass(frozen=True)
class DiscreteSpace:
    """Cartesian lattice of candidate parameter vectors.

    Each axis is a strictly increasing tuple of candidate values for one
    parameter; the lattice is the Cartesian product of the axes.
    """

    axes: tuple[tuple[float, ...], ...]

    def __init__(self, axes):
        axes = tuple(tuple(float(v) for v in axis) for axis in axes)
        for i, axis in enumerate(axes):
            if len(axis) == 0:
                raise ValueError(f"axis {i} is empty")
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise ValueError(f"axis {i} is not strictly increasing: {axis}")
        object.__setattr__(self, "axes", axes)

    @property
    def m(self) -> int:
        """Number of parameters (axes)."""
        return len(self.axes)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(axis) for axis in self.axes)

    @property
    def size(self) -> int:
        n = 1
        for axis in self.axes:
            n *= len(axis)
        return n

    @property
    def x_min(self) -> tuple[float, ...]:
        """All-minimum corner (the lower lattice extreme)."""
        return tuple(axis[0] for axis in self.axes)

    @property
    def x_max(self) -> tuple[float, ...]:
        """All-maximum corner (the upper lattice extreme)."""
        return tuple(axis[-1] for axis in self.axes)

    def point(self, indices) -> tuple[float, ...]:
        """Lattice point for an index vector."""
        indices = tuple(int(j) for j in indices)
        if len(indices) != self.m:
            raise ValueError(f"expected {self.m} indices, got {len(indices)}")
        for i, j in enumerate(indices):
            if not 0 <= j < len(self.axes[i]):
                raise IndexError(f"index {j} out of range for axis {i} (k={len(self.axes[i])})")
        return tuple(self.axes[i][j] for i, j in enumerate(indices))

    def index(self, x) -> tuple[int, ...]:
        """Index vector for a lattice point; inverse of :meth:`point`."""
        x = tuple(float(v) for v in x)
        if len(x) != self.m:
            raise ValueError(f"expected {self.m} coordinates, got {len(x)}")
        out = []
        for i, v in enumerate(x):
            axis = np.asarray(self.axes[i])
            j = int(np.argmin(np.abs(axis - v)))
            if not np.isclose(axis[j], v, rtol=1e-9, atol=0.0):
                raise OffLatticeError(f"value {v} not on axis {i}: {self.axes[i]}")
            out.append(j)
        return tuple(out)

    def contains(self, x) -> bool:
        try:
            self.index(x)
        except (OffLatticeError, ValueError):
            return False
        return True

    def iter_indices(self):
        """All index vectors in lexicographic order."""
        return itertools.product(*(range(k) for k in self.cardinalities))

    def iter_points(self):
        for idx in self.iter_indices():
            yield self.point(idx)

    def axis_neighbor_indices(self, i: int, j: int) -> tuple[int, int, int]:
        """Per-axis neighbor index set {j-1, j, j+1} with wrap-around at both ends."""
        k = len(self.axes[i])
        if k < 3:
            raise ValueError(f"axis {i} has only {k} values; neighborhoods need at least 3")
        return ((j - 1) % k, j, (j + 1) % k)


def neighbors(x, space: DiscreteSpace) -> list[tuple[float, ...]]:
    """Wrap-around lattice neighborhood of ``x``: the Cartesian product of the
    per-axis neighbor sets minus ``x`` itself. Size is exactly 3^m - 1."""
    idx = space.index(x)
    per_axis = [space.axis_neighbor_indices(i, j) for i, j in enumerate(idx)]
    out = []
    for combo in itertools.product(*per_axis):
        if combo == idx:
            continue
        out.append(space.point(combo))
    return out


def neighbor_indices(idx, space: DiscreteSpace) -> list[tuple[int, ...]]:
    """Like :func:`neighbors` but on index vectors."""
    idx = tuple(int(j) for j in idx)
    per_axis = [space.axis_neighbor_indices(i, j) for i, j in enumerate(idx)]
    return [combo for combo in itertools.product(*per_axis) if combo != idx]


@dataclass
class SolutionMatrix:
    """Explicit row matrix of lattice points (one row per candidate solution).

    Used by the truncation pass, which deletes rows from the full lattice and
    hands the survivors to the search. Rows are kept in lexicographic index
    order; ``values`` and ``indices`` stay row-aligned.
    """

    values: np.ndarray
    indices: np.ndarray
    _index_set: frozenset = field(default=None, repr=False, compare=False)

    @classmethod
    def from_space(cls, space: DiscreteSpace) -> "SolutionMatrix":
        indices = np.array(list(space.iter_indices()), dtype=np.int64)
        values = np.array([space.point(idx) for idx in space.iter_indices()], dtype=float)
        return cls(values=values, indices=indices)

    @property
    def row_count(self) -> int:
        return self.values.shape[0]

    def index_set(self) -> frozenset:
        if self._index_set is None:
            self._index_set = frozenset(map(tuple, self.indices.tolist()))
        return self._index_set

    def contains_index(self, idx) -> bool:
        return tuple(int(j) for j in idx) in self.index_set()

    def keep(self, mask: np.ndarray) -> "SolutionMatrix":
        return SolutionMatrix(values=self.values[mask], indices=self.indices[mask])
