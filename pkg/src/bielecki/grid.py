"""Discrete domains, quadrature measures and relations.

A :class:`Grid` is a tensor product of strictly increasing coordinate axes
with nodes numbered in lexicographic (C) order.  A :class:`Measure` holds one
nonnegative weight per node, and a :class:`Relation` assigns to every node
``i`` the index set ``H(i)`` over which integrals are taken.

Sampled functions on a grid are plain ``numpy`` arrays of shape ``(N,)``
(scalar) or ``(N, m)`` (vector valued); :func:`as_grid_function` checks them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import GridError, RelationStructureError, ShapeError

__all__ = [
    "Grid",
    "Measure",
    "Relation",
    "RelationReport",
    "as_grid_function",
    "build_tensor_grid",
    "relation_from_sets",
    "relation_full",
    "relation_volterra",
    "subaxis_trapezoid_weights",
    "trapezoid_measure",
    "trapezoid_weights_1d",
    "uniform_grid",
    "validate_relation",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor-product grid over a box in ``R^n``.

    Build instances with :func:`build_tensor_grid`, which validates axes.
    """

    axes: tuple

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(len(a) for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def multi_indices(self) -> np.ndarray:
        """``(N, n)`` integer array; row ``i`` is the multi-index of node ``i``."""
        idx = np.indices(self.shape).reshape(self.dimension, -1).T
        idx.setflags(write=False)
        return idx

    @cached_property
    def coords(self) -> np.ndarray:
        """``(N, n)`` node coordinates in lexicographic order."""
        c = np.column_stack([ax[self.multi_indices[:, k]] for k, ax in enumerate(self.axes)])
        c.setflags(write=False)
        return c

    def node_coords(self, i: int) -> np.ndarray:
        return self.coords[i]

    def multi_index(self, i: int) -> tuple:
        return tuple(int(v) for v in np.unravel_index(i, self.shape))

    def lex_index(self, multi: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.shape))

    @property
    def lower(self) -> np.ndarray:
        return np.array([ax[0] for ax in self.axes])

    @property
    def upper(self) -> np.ndarray:
        return np.array([ax[-1] for ax in self.axes])

    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def subgrid(self, stop: Sequence[int]) -> "Grid":
        """Grid made of the first ``stop[k]`` points of every axis."""
        if len(stop) != self.dimension:
            raise ShapeError("stop must have one entry per axis")
        return build_tensor_grid([ax[:s] for ax, s in zip(self.axes, stop)])

    def subgrid_indices(self, stop: Sequence[int]) -> np.ndarray:
        """Indices (in this grid) of the nodes kept by :meth:`subgrid`."""
        keep = np.all(self.multi_indices < np.asarray(stop), axis=1)
        return np.flatnonzero(keep)

    def __repr__(self):
        return f"Grid(shape={self.shape}, lower={self.lower.tolist()}, upper={self.upper.tolist()})"


def build_tensor_grid(axes) -> Grid:
    """Build a tensor grid from a list of coordinate lists.

    Raises
    ------
    GridError
        If an axis is empty, contains non-finite entries or is not strictly
        increasing.  The message names the offending axis index.
    """
    if len(axes) == 0:
        raise GridError("a grid needs at least one axis")
    checked = []
    for k, ax in enumerate(axes):
        a = np.asarray(ax, dtype=float).ravel()
        if a.size == 0:
            raise GridError(f"axis {k} is empty")
        if not np.all(np.isfinite(a)):
            raise GridError(f"axis {k} has non-finite coordinates")
        if np.any(np.diff(a) <= 0):
            raise GridError(f"axis {k} is not strictly increasing")
        checked.append(_frozen(a))
    return Grid(tuple(checked))


def uniform_grid(bounds, nodes) -> Grid:
    """Uniform grid with ``nodes[k]`` points spanning ``bounds[k] = (a, b)``."""
    if np.isscalar(nodes):
        nodes = [nodes] * len(bounds)
    return build_tensor_grid([np.linspace(a, b, int(n)) for (a, b), n in zip(bounds, nodes)])


def trapezoid_weights_1d(axis) -> np.ndarray:
    """Composite trapezoid weights on the points of ``axis``.

    A single point gets weight 0.
    """
    a = np.asarray(axis, dtype=float)
    w = np.zeros(a.size)
    if a.size < 2:
        return w
    h = np.diff(a)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


def subaxis_trapezoid_weights(axis) -> np.ndarray:
    """Lower-triangular matrix of trapezoid weights on axis prefixes.

    Row ``i`` holds the trapezoid weights of ``axis[:i + 1]`` (zero-padded),
    so ``row_i @ v`` integrates ``v`` from ``axis[0]`` to ``axis[i]``.
    """
    a = np.asarray(axis, dtype=float)
    n = a.size
    W = np.zeros((n, n))
    h = np.diff(a)
    for i in range(1, n):
        W[i, :i] += h[:i] / 2
        W[i, 1 : i + 1] += h[:i] / 2
    return W


@dataclass(frozen=True, eq=False)
class Measure:
    """Node weights approximating a measure on ``grid``.

    ``axis_weights`` is set when the measure is a product of 1-D rules.
    """

    grid: Grid
    weights: np.ndarray
    axis_weights: tuple | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.grid.size,):
            raise ShapeError(f"expected {self.grid.size} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise GridError("measure weights must be finite and nonnegative")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def total(self) -> float:
        return float(np.add.accumulate(self.weights)[-1])


def trapezoid_measure(grid: Grid) -> Measure:
    """Product trapezoid rule; the weights sum to the box volume."""
    per_axis = tuple(_frozen(trapezoid_weights_1d(ax)) for ax in grid.axes)
    w = per_axis[0]
    for wk in per_axis[1:]:
        w = np.multiply.outer(w, wk)
    return Measure(grid, np.ravel(w), axis_weights=per_axis)


class Relation:
    """Set-valued map ``i -> H(i)`` on the nodes of a grid.

    ``kind`` is ``"full"``, ``"volterra"`` or ``"custom"``.  The first two are
    generated on demand, so large grids never store the ``N^2`` index sets;
    the core map recognizes them and uses structured quadrature.
    """

    def __init__(self, grid: Grid, kind: str, sets=None):
        if kind not in ("full", "volterra", "custom"):
            raise GridError(f"unknown relation kind {kind!r}")
        if kind == "custom":
            if sets is None or len(sets) != grid.size:
                raise ShapeError("a custom relation needs one index set per node")
            sets = tuple(np.unique(np.asarray(s, dtype=np.int64)) for s in sets)
        self.grid = grid
        self.kind = kind
        self._sets = sets

    def __len__(self):
        return self.grid.size

    def __getitem__(self, i: int) -> np.ndarray:
        if self.kind == "custom":
            return self._sets[i]
        if self.kind == "full":
            return np.arange(self.grid.size)
        mi = self.grid.multi_indices
        return np.flatnonzero(np.all(mi <= mi[i], axis=1))

    @property
    def sets(self) -> list:
        return [self[i] for i in range(len(self))]

    def mask(self) -> np.ndarray:
        """Dense ``(N, N)`` boolean membership matrix, ``mask[i, j] = j in H(i)``."""
        N = self.grid.size
        if self.kind == "full":
            return np.ones((N, N), dtype=bool)
        if self.kind == "volterra":
            mi = self.grid.multi_indices
            return np.all(mi[None, :, :] <= mi[:, None, :], axis=2)
        M = np.zeros((N, N), dtype=bool)
        for i, s in enumerate(self._sets):
            if s.size and (s.min() < 0 or s.max() >= N):
                raise RelationStructureError(f"H({i}) contains an index outside 0..{N - 1}")
            M[i, s] = True
        return M

    def contains(self, i: int, j: int) -> bool:
        if self.kind == "full":
            return True
        if self.kind == "volterra":
            mi = self.grid.multi_indices
            return bool(np.all(mi[j] <= mi[i]))
        return bool(np.isin(j, self._sets[i]))

    def __repr__(self):
        return f"Relation(kind={self.kind!r}, nodes={self.grid.size})"


def relation_full(grid: Grid) -> Relation:
    """``H(i)`` is every node (Fredholm case)."""
    return Relation(grid, "full")


def relation_volterra(grid: Grid) -> Relation:
    """``H(i)`` is every node below node ``i`` coordinatewise (Volterra case)."""
    if np.any(grid.lower < 0):
        bad = int(np.flatnonzero(grid.lower < 0)[0])
        raise GridError(f"Volterra relation needs nonnegative coordinates; axis {bad} starts below 0")
    return Relation(grid, "volterra")


def relation_from_sets(grid: Grid, sets) -> Relation:
    return Relation(grid, "custom", sets)


@dataclass(frozen=True)
class RelationReport:
    reflexive: bool
    transitive: bool
    cover: bool
    reflexive_witness: int | None = None
    # (i, j, k) with j in H(i), k in H(j) and k not in H(i)
    transitive_witness: tuple | None = None
    cover_witness: int | None = None

    @property
    def ok(self) -> bool:
        return self.reflexive and self.transitive and self.cover

    def as_dict(self) -> dict:
        return {
            "reflexive": self.reflexive,
            "transitive": self.transitive,
            "cover": self.cover,
            "reflexive_witness": self.reflexive_witness,
            "transitive_witness": None if self.transitive_witness is None else list(self.transitive_witness),
            "cover_witness": self.cover_witness,
        }


def validate_relation(relation: Relation) -> RelationReport:
    """Check reflexivity, transitivity and the cover condition.

    The cover condition ``union_i H(i) = all nodes`` stands in for strong
    surjectivity, which has no meaning on a finite set of nodes.

    Raises
    ------
    RelationStructureError
        If some ``H(i)`` holds an index outside ``0..N-1``.
    """
    M = relation.mask()
    N = M.shape[0]
    diag = np.diag(M)
    refl_fail = np.flatnonzero(~diag)
    reflexive = refl_fail.size == 0
    reach = (M.astype(np.int64) @ M.astype(np.int64)) > 0
    bad = reach & ~M
    transitive = not bad.any()
    witness = None
    if not transitive:
        i, k = (int(v) for v in np.argwhere(bad)[0])
        j = int(np.flatnonzero(M[i] & M[:, k])[0])
        witness = (i, j, k)
    covered = M.any(axis=0)
    cover_fail = np.flatnonzero(~covered)
    return RelationReport(
        reflexive=reflexive,
        transitive=transitive,
        cover=cover_fail.size == 0,
        reflexive_witness=None if reflexive else int(refl_fail[0]),
        transitive_witness=witness,
        cover_witness=None if cover_fail.size == 0 else int(cover_fail[0]),
    )


def as_grid_function(values, grid: Grid, m: int | None = None, positive: bool = False, name: str = "values"):
    """Validate samples of a function on ``grid`` and return them as floats.

    Scalars broadcast to every node.  The result has shape ``(N,)`` when the
    input is one-dimensional and ``(N, m)`` otherwise.
    """
    a = np.asarray(values, dtype=float)
    N = grid.size
    if a.ndim == 0:
        a = np.full(N if m is None else (N, m), float(a))
    if a.shape[0] != N:
        raise ShapeError(f"{name}: expected {N} rows, got {a.shape[0]}")
    if m is not None:
        a = a.reshape(N, -1)
        if a.shape[1] != m:
            raise ShapeError(f"{name}: expected codomain dimension {m}, got {a.shape[1]}")
    if not np.all(np.isfinite(a)):
        raise ShapeError(f"{name}: entries must be finite")
    if positive and np.any(a <= 0):
        raise ShapeError(f"{name}: entries must be positive")
    return a
