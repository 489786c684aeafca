"""Cauchy problems for the mixed derivative ``d_1 ... d_n x = F(t, x)``.

Data ``phi`` is given on the coordinate cross ``D0 = {t : t_1 ... t_n = 0}``.
The problem is equivalent to the Volterra equation

    x(t) = f(t) + int_{[0, t]} F(s, x(s)) ds,
    f(t) = sum_{P in Pi_n} (-1)^(n - 1 - rank P) phi(P t),

where ``Pi_n`` are the singular diagonal 0/1 matrices.  For ``n = 1`` this is
the usual initial value problem ``x' = F(t, x)``, ``x(0) = phi(0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GridError, KernelEvaluationError, ShapeError
from .grid import Grid, as_grid_function, relation_volterra, trapezoid_measure
from .renorm import Modulus
from .solver import IntegralProblem, SolverConfig, solve_integral

__all__ = [
    "BoundaryReport",
    "CauchyProblem",
    "DiagonalProjector",
    "boundary_to_forcing",
    "check_boundary",
    "enumerate_pi_n",
    "mixed_partial_residual",
    "solve_cauchy",
    "to_integral_problem",
]

MAX_DIMENSION = 16


@dataclass(frozen=True)
class DiagonalProjector:
    mask: tuple

    def __post_init__(self):
        if all(self.mask):
            raise ValueError("the identity is not singular")

    @property
    def rank(self) -> int:
        return int(sum(self.mask))

    @property
    def sign(self) -> int:
        n = len(self.mask)
        return -1 if (n - 1 - self.rank) % 2 else 1

    def apply(self, coords) -> np.ndarray:
        return np.asarray(coords, dtype=float) * np.asarray(self.mask, dtype=float)


def enumerate_pi_n(n: int) -> list:
    """All ``2^n - 1`` singular diagonal 0/1 matrices, by ascending binary value.

    The mask is read most-significant bit first, so for ``n = 2`` the order is
    ``(0, 0), (0, 1), (1, 0)``.
    """
    if not 1 <= n <= MAX_DIMENSION:
        raise ValueError(f"n must lie in 1..{MAX_DIMENSION}")
    out = []
    for value in range(2**n - 1):
        mask = tuple((value >> (n - 1 - k)) & 1 for k in range(n))
        out.append(DiagonalProjector(mask))
    return out


@dataclass(frozen=True, eq=False)
class CauchyProblem:
    """``d_1...d_n x = F(t, x)`` on a box ``[0, b]`` with ``x = phi`` on ``D0``.

    ``F(t, x)`` takes ``(P, n)`` and ``(P, m)`` arrays; ``phi`` takes
    ``(P, n)`` points of the cross and returns ``(P, m)``.  ``lipschitz``
    samples ``L(t)`` at the nodes.
    """

    grid: Grid
    F: Callable
    lipschitz: np.ndarray
    boundary: Callable
    m: int = 1

    def __post_init__(self):
        if np.any(self.grid.lower != 0):
            raise GridError("Cauchy problems live on boxes [0, b]; every axis must start at 0")
        L = as_grid_function(self.lipschitz, self.grid, name="L").ravel()
        if np.any(L < 0):
            raise ValueError("L must be nonnegative")
        L.setflags(write=False)
        object.__setattr__(self, "lipschitz", L)


def _phi(problem, points):
    vals = np.asarray(problem.boundary(points), dtype=float).reshape(points.shape[0], problem.m)
    if not np.all(np.isfinite(vals)):
        raise KernelEvaluationError("boundary data returned non-finite values")
    return vals


def boundary_to_forcing(problem: CauchyProblem) -> np.ndarray:
    """Forcing ``f(t) = sum_P (-1)^(n-1-rank P) phi(P t)`` at every node."""
    coords = problem.grid.coords
    f = np.zeros((problem.grid.size, problem.m))
    for P in enumerate_pi_n(problem.grid.dimension):
        f += P.sign * _phi(problem, P.apply(coords))
    return f


def to_integral_problem(problem: CauchyProblem) -> IntegralProblem:
    """Equivalent Volterra problem with kernel ``K(t, s, x) = F(s, x)``."""
    grid = problem.grid
    F = problem.F

    def kernel(t, s, x):
        return F(s, x)

    return IntegralProblem(
        grid=grid,
        measure=trapezoid_measure(grid),
        relation=relation_volterra(grid),
        forcing=boundary_to_forcing(problem),
        kernel=kernel,
        lipschitz=Modulus.of_s(problem.lipschitz),
        kernel_uses_t=False,
    )


def solve_cauchy(problem: CauchyProblem, config: SolverConfig = SolverConfig()):
    """Solve through the equivalent Volterra equation with an automatic weight."""
    return solve_integral(to_integral_problem(problem), "auto", config)


@dataclass(frozen=True)
class BoundaryReport:
    error: float
    passed: bool
    worst_node: int | None


def check_boundary(x, problem: CauchyProblem, tol: float) -> BoundaryReport:
    """Largest ``|x(t) - phi(t)|`` over nodes with a zero coordinate."""
    grid = problem.grid
    x = np.asarray(x, dtype=float).reshape(grid.size, problem.m)
    on_cross = np.flatnonzero(np.any(grid.coords == 0, axis=1))
    err = np.linalg.norm(x[on_cross] - _phi(problem, grid.coords[on_cross]), axis=1)
    k = int(np.argmax(err))
    worst = float(err[k])
    return BoundaryReport(error=worst, passed=worst <= tol, worst_node=int(on_cross[k]))


def mixed_partial_residual(x, problem: CauchyProblem) -> float:
    """Max discrepancy between the mixed forward difference and ``F``.

    For every cell the composed differences ``Delta_{k;h_k} / h_k`` of ``x``
    are compared with ``F`` at the low corner.  First-order accurate; a
    diagnostic only.
    """
    grid = problem.grid
    if min(grid.shape) < 2:
        raise GridError("mixed differences need at least two nodes per axis")
    X = np.asarray(x, dtype=float).reshape(grid.shape + (problem.m,))
    D = X
    for k, ax in enumerate(grid.axes):
        shape = [1] * D.ndim
        shape[k] = -1
        D = np.diff(D, axis=k) / np.diff(ax).reshape(shape)
    low = tuple(slice(0, n - 1) for n in grid.shape)
    corner_coords = grid.coords.reshape(grid.shape + (grid.dimension,))[low].reshape(-1, grid.dimension)
    corner_x = X[low].reshape(-1, problem.m)
    Fv = np.asarray(problem.F(corner_coords, corner_x), dtype=float).reshape(-1, problem.m)
    diff = D.reshape(-1, problem.m) - Fv
    if diff.size == 0:
        raise ShapeError("no interior cells")
    return float(np.max(np.linalg.norm(diff, axis=1)))
