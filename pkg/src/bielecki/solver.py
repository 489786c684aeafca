"""Certified Banach-Picard iteration for integral and Presic-type equations.

Integral equations have the form

    x(t) = f(t) + int_{H(t)} K(t, s, x(phi_1(s)), ..., x(phi_n(s))) dmu(s)

(no substitutions means ``K(t, s, x(s))``), and Presic-type equations

    f(t) = F(t, f(phi_1(t)), ..., f(phi_n(t))).

Every solve computes a contraction certificate first and refuses to iterate
when it fails.  Iteration stops once the a-posteriori bound
``q / (1 - q) * d_p(x_n, x_{n-1})`` drops below ``tol``.

Kernels are vectorized callables: ``K(t, s, *xs)`` gets coordinate arrays
``t, s`` of shape ``(P, n)`` and ``xs`` of shape ``(P, m)`` and returns
``(P, m)`` (or ``(P,)`` when ``m == 1``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import quadrature
from .errors import (
    AdmissibilityError,
    CertificateError,
    ConvergenceError,
    InterpolationError,
    KernelEvaluationError,
    ShapeError,
)
from .grid import Grid, Measure, Relation, as_grid_function, relation_full, relation_volterra
from .renorm import (
    Certificate,
    Modulus,
    Weight,
    as_modulus,
    bielecki_distance,
    build_weight_constant_lipschitz,
    build_weight_general,
    contraction_factor,
    presic_contraction_factor,
    retarded_contraction_factor,
    sup_distance,
)

__all__ = [
    "ConvergenceReport",
    "IntegralProblem",
    "PresicProblem",
    "Retardation",
    "SolverConfig",
    "check_substitutions",
    "interpolate",
    "picard_step",
    "residual",
    "solve_integral",
    "solve_linear_fredholm",
    "solve_linear_volterra",
    "solve_presic",
    "spectral_norm",
]

_INTERP_METHODS = {"multilinear": "linear", "nearest": "nearest"}


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 10_000
    margin: float = 1e-6
    interpolation: str = "multilinear"
    initial_guess: object = "forcing"
    weight_tol: float = 1e-12
    weight_max_iter: int = 10_000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.margin < 1:
            raise ValueError("margin must lie in (0, 1)")
        if self.interpolation not in _INTERP_METHODS:
            raise ValueError(f"interpolation must be one of {sorted(_INTERP_METHODS)}")
        if isinstance(self.initial_guess, str) and self.initial_guess not in ("forcing", "zero"):
            raise ValueError("initial_guess must be 'forcing', 'zero' or an array")


@dataclass
class ConvergenceReport:
    iterations: int
    certificate: Certificate
    increment: float
    bound: float
    residual: float
    weight: Weight | None = field(default=None, repr=False)

    @property
    def q(self) -> float:
        return self.certificate.q

    def record(self, grid: Grid | None = None) -> dict:
        return {
            "iterations": int(self.iterations),
            "certificate": self.certificate.record(grid),
            "increment": float(self.increment),
            "bound": float(self.bound),
            "residual": float(self.residual),
        }


@dataclass(frozen=True)
class Retardation:
    """Substitution ``s -> phi(s)`` inside the kernel, with modulus ``L_k(t, s)``.

    ``phi`` maps coordinate arrays ``(P, n) -> (P, n)``.
    """

    phi: Callable
    modulus: object = 1.0


def _as_codomain(values, grid, name):
    a = np.asarray(values, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return as_grid_function(a, grid, m=a.shape[1], name=name)


@dataclass(frozen=True, eq=False)
class IntegralProblem:
    """Nonlinear (optionally retarded) integral equation on a grid.

    ``lipschitz`` bounds ``|K(t,s,x) - K(t,s,y)| <= L(t,s) |x - y|``.  With
    retardations it is unused and each :class:`Retardation` carries its own
    modulus.  ``kernel_uses_t=False`` declares ``K`` independent of ``t``,
    which lets the step use structured quadrature.
    """

    grid: Grid
    measure: Measure
    relation: Relation
    forcing: np.ndarray
    kernel: Callable
    lipschitz: object = 0.0
    retardations: tuple = ()
    kernel_uses_t: bool = True

    def __post_init__(self):
        f = _as_codomain(self.forcing, self.grid, "forcing")
        f.setflags(write=False)
        object.__setattr__(self, "forcing", f)
        object.__setattr__(self, "retardations", tuple(self.retardations))
        if self.relation.grid.shape != self.grid.shape or self.measure.grid.shape != self.grid.shape:
            raise ShapeError("relation, measure and grid must share the same nodes")

    @property
    def m(self) -> int:
        return self.forcing.shape[1]

    @cached_property
    def modulus(self) -> Modulus:
        return as_modulus(self.lipschitz)

    @cached_property
    def substitution_points(self) -> tuple:
        return tuple(_map_points(r.phi, self.grid, k) for k, r in enumerate(self.retardations))


@dataclass(frozen=True, eq=False)
class PresicProblem:
    """Functional equation ``f(t) = F(t, f(phi_1(t)), ..., f(phi_n(t)))``.

    ``F(t, *xs)`` gets ``t`` of shape ``(N, n)`` and each ``xs[k]`` of shape
    ``(N, m)``.  ``moduli[k]`` samples ``L_k(t)`` at the nodes.
    """

    grid: Grid
    F: Callable
    substitutions: tuple
    moduli: tuple
    m: int = 1
    relation: Relation | None = None

    def __post_init__(self):
        object.__setattr__(self, "substitutions", tuple(self.substitutions))
        if len(self.moduli) != len(self.substitutions):
            raise ShapeError("one modulus per substitution is required")
        mods = tuple(as_grid_function(L, self.grid, name=f"L_{k + 1}").ravel() for k, L in enumerate(self.moduli))
        for k, L in enumerate(mods):
            if np.any(L < 0):
                raise ValueError(f"modulus L_{k + 1} must be nonnegative")
        object.__setattr__(self, "moduli", mods)

    @cached_property
    def substitution_points(self) -> tuple:
        return tuple(_map_points(phi, self.grid, k) for k, phi in enumerate(self.substitutions))


def _map_points(phi, grid, k):
    pts = np.asarray(phi(grid.coords), dtype=float)
    pts = pts.reshape(grid.size, grid.dimension)
    if not np.all(np.isfinite(pts)):
        raise InterpolationError(f"substitution {k + 1} produced non-finite points")
    lo, hi = grid.lower, grid.upper
    slack = 1e-12 * np.maximum(1.0, np.abs(hi - lo))
    outside = np.any((pts < lo - slack) | (pts > hi + slack), axis=1)
    if outside.any():
        i = int(np.flatnonzero(outside)[0])
        raise InterpolationError(
            f"substitution {k + 1} maps node {i} {grid.coords[i].tolist()} to "
            f"{pts[i].tolist()}, outside the grid box"
        )
    return np.clip(pts, lo, hi)


def interpolate(grid: Grid, values, points, method: str = "multilinear") -> np.ndarray:
    """Evaluate grid samples at arbitrary points inside the grid box."""
    values = np.asarray(values, dtype=float)
    scalar = values.ndim == 1
    V = values.reshape(grid.shape + (-1,))
    # drop single-point axes; scipy needs at least two points for 'linear'
    keep = [k for k, n in enumerate(grid.shape) if n > 1]
    pts = np.asarray(points, dtype=float).reshape(-1, grid.dimension)
    if not keep:
        out = np.broadcast_to(V.reshape(1, -1), (pts.shape[0], V.shape[-1])).copy()
    else:
        V = V.reshape(tuple(grid.shape[k] for k in keep) + (V.shape[-1],))
        try:
            interp = RegularGridInterpolator(
                tuple(grid.axes[k] for k in keep), V, method=_INTERP_METHODS[method], bounds_error=True
            )
            out = interp(pts[:, keep])
        except ValueError as exc:
            raise InterpolationError(str(exc)) from exc
    return out[:, 0] if scalar else out


def check_substitutions(relation: Relation, points_list: Sequence[np.ndarray]) -> None:
    """Reject substitutions that do not map every ``H(i)`` into itself.

    ``points_list[k][j]`` is ``phi_k`` applied to node ``j``.

    Raises
    ------
    AdmissibilityError
        Naming the substitution and the first offending node.
    """
    grid = relation.grid
    for k, pts in enumerate(points_list):
        if relation.kind == "full":
            continue
        if relation.kind == "volterra":
            slack = 1e-12 * np.maximum(1.0, np.abs(grid.upper))
            bad = np.any(pts > grid.coords + slack, axis=1)
        else:
            nearest = np.array([grid.lex_index(_nearest_multi(grid, p)) for p in pts])
            M = relation.mask()
            bad = np.any(M & ~M[:, nearest], axis=0)
        if bad.any():
            j = int(np.flatnonzero(bad)[0])
            raise AdmissibilityError(
                f"substitution {k + 1} sends node {j} {grid.coords[j].tolist()} to "
                f"{pts[j].tolist()}, outside H(t) for some t with this node in H(t)",
                substitution=k,
                node=j,
            )


def _nearest_multi(grid, p):
    return [int(np.argmin(np.abs(ax - c))) for ax, c in zip(grid.axes, p)]


def _check_finite(vals, what, pair=None):
    if not np.all(np.isfinite(vals)):
        raise KernelEvaluationError(f"{what} returned non-finite values", node_pair=pair)


def _kernel_arguments(problem: IntegralProblem, x, method):
    if not problem.retardations:
        return [x]
    return [interpolate(problem.grid, x, pts, method) for pts in problem.substitution_points]


def picard_step(problem: IntegralProblem, x, interpolation: str = "multilinear") -> np.ndarray:
    """One application of ``(Tx)(t) = f(t) + int_{H(t)} K(t, s, x(s)) dmu(s)``."""
    grid = problem.grid
    m = problem.m
    x = _as_codomain(x, grid, "x")
    if x.shape[1] != m:
        raise ShapeError(f"x has codomain dimension {x.shape[1]}, problem has {m}")
    args = _kernel_arguments(problem, x, interpolation)
    coords = grid.coords
    if not problem.kernel_uses_t:
        g = np.asarray(problem.kernel(coords, coords, *args), dtype=float).reshape(grid.size, m)
        if not np.all(np.isfinite(g)):
            j = int(np.flatnonzero(~np.all(np.isfinite(g), axis=1))[0])
            raise KernelEvaluationError(f"kernel returned non-finite values at s-node {j}", node_pair=(None, j))
        return problem.forcing + quadrature.integrate(problem.relation, problem.measure, g)

    def pair(i_idx, j_idx):
        vals = np.asarray(
            problem.kernel(coords[i_idx], coords[j_idx], *[a[j_idx] for a in args]), dtype=float
        ).reshape(i_idx.size, m)
        bad = ~np.all(np.isfinite(vals), axis=1)
        if bad.any():
            p = int(np.flatnonzero(bad)[0])
            pair_ij = (int(i_idx[p]), int(j_idx[p]))
            raise KernelEvaluationError(f"kernel returned non-finite values at node pair {pair_ij}", node_pair=pair_ij)
        return vals

    return problem.forcing + quadrature.integrate_pairs(problem.relation, problem.measure, pair, m)


def presic_step(problem: PresicProblem, f, interpolation: str = "multilinear") -> np.ndarray:
    """One application of ``(Tf)(t) = F(t, f(phi_1(t)), ..., f(phi_n(t)))``."""
    grid = problem.grid
    f = _as_codomain(f, grid, "f")
    if f.shape[1] != problem.m:
        raise ShapeError(f"f has codomain dimension {f.shape[1]}, problem has {problem.m}")
    args = [interpolate(grid, f, pts, interpolation) for pts in problem.substitution_points]
    out = np.asarray(problem.F(grid.coords, *args), dtype=float).reshape(grid.size, problem.m)
    _check_finite(out, "F")
    return out


def residual(problem, x, interpolation: str = "multilinear") -> float:
    """``max_i |x_i - (Tx)_i|`` with a freshly assembled operator."""
    if isinstance(problem, PresicProblem):
        Tx = presic_step(problem, x, interpolation)
    else:
        Tx = picard_step(problem, x, interpolation)
    return sup_distance(_as_codomain(x, problem.grid, "x"), Tx)


def _max_summed_moduli(relation: Relation, moduli) -> float:
    grid = relation.grid
    best = 0.0
    for rows in quadrature._row_blocks(grid.size, 1):
        r, j = np.nonzero(quadrature.member_rows(relation, rows))
        if r.size:
            total = sum(m.pair_values(grid, rows[r], j) for m in moduli)
            best = max(best, float(np.max(total)))
    return best


def _resolve_weight(problem: IntegralProblem, weight, config: SolverConfig) -> Weight:
    grid = problem.grid
    if isinstance(weight, Weight):
        if weight.grid.shape != grid.shape:
            raise ShapeError("weight lives on a different grid")
        return weight
    if weight is None or weight == "auto":
        if problem.retardations:
            moduli = [as_modulus(r.modulus) for r in problem.retardations]
            L0 = _max_summed_moduli(problem.relation, moduli)
            return build_weight_constant_lipschitz(
                problem.relation, problem.measure, L0, tol=config.weight_tol, max_iter=config.weight_max_iter
            )
        return build_weight_general(
            problem.relation, problem.measure, problem.modulus, tol=config.weight_tol, max_iter=config.weight_max_iter
        )
    if weight == "uniform":
        return Weight.uniform(grid)
    if isinstance(weight, str):
        raise ValueError(f"unknown weight mode {weight!r}")
    return Weight(grid, weight)


def certify(problem: IntegralProblem, weight: Weight, config: SolverConfig = SolverConfig()) -> Certificate:
    """Contraction certificate of the problem's Picard operator in ``d_p``."""
    if problem.retardations:
        composed = [interpolate(problem.grid, weight.ell, pts, config.interpolation) for pts in problem.substitution_points]
        moduli = [r.modulus for r in problem.retardations]
        return retarded_contraction_factor(problem.relation, problem.measure, moduli, composed, weight, config.margin)
    return contraction_factor(problem.relation, problem.measure, problem.modulus, weight, config.margin)


def _initial_guess(config, grid, m, default):
    g = config.initial_guess
    if isinstance(g, str):
        return default() if g == "forcing" else np.zeros((grid.size, m))
    return _as_codomain(g, grid, "initial guess")


def _iterate(step, x0, weight, cert, config, grid):
    q = cert.q
    factor = q / (1 - q)
    x = x0
    inc = np.inf
    for n in range(1, config.max_iter + 1):
        x_new = step(x)
        inc = bielecki_distance(x_new, x, weight)
        x = x_new
        if factor * inc <= config.tol:
            return x, n, inc
    report = ConvergenceReport(config.max_iter, cert, inc, factor * inc, float("nan"), weight)
    raise ConvergenceError(
        f"Picard iteration did not reach tol={config.tol:g} in {config.max_iter} steps "
        f"(last weighted increment {inc:.3e})",
        iterations=config.max_iter,
        last_increment=inc,
        report=report,
    )


def solve_integral(problem: IntegralProblem, weight=None, config: SolverConfig = SolverConfig()):
    """Certify, then solve an integral equation by Picard iteration.

    Parameters
    ----------
    problem : IntegralProblem
    weight : Weight, array, ``"auto"`` (default) or ``"uniform"``
        ``"auto"`` solves ``ell = 1 + int L ell`` for the problem's modulus
        (for retarded problems: constant modulus ``max sum_k L_k``).
    config : SolverConfig

    Returns
    -------
    x : ndarray, shape (N, m)
    report : ConvergenceReport

    Raises
    ------
    AdmissibilityError
        A substitution violates ``phi_k(H(t)) <= H(t)``.
    CertificateError
        ``q > 1 - margin``; nothing is iterated.
    ConvergenceError
        ``max_iter`` reached first.
    """
    if problem.retardations:
        check_substitutions(problem.relation, problem.substitution_points)
    w = _resolve_weight(problem, weight, config)
    cert = certify(problem, w, config)
    if not cert.passed:
        raise CertificateError(cert, report=ConvergenceReport(0, cert, float("nan"), float("nan"), float("nan"), w))
    x0 = _initial_guess(config, problem.grid, problem.m, lambda: problem.forcing.copy())

    def step(x):
        return picard_step(problem, x, config.interpolation)

    x, n, inc = _iterate(step, x0, w, cert, config, problem.grid)
    q = cert.q
    report = ConvergenceReport(
        iterations=n,
        certificate=cert,
        increment=inc,
        bound=q / (1 - q) * inc,
        residual=residual(problem, x, config.interpolation),
        weight=w,
    )
    return x, report


def spectral_norm(mats, steps: int = 50, tol: float = 1e-12) -> np.ndarray:
    """Spectral norms of a stack of matrices, shape ``(P, m, k) -> (P,)``.

    Direct SVD for ``m, k <= 4``; power iteration on ``A^T A`` above.
    """
    A = np.asarray(mats, dtype=float)
    if A.ndim == 2:
        A = A[None]
    if max(A.shape[1:]) <= 4:
        return np.linalg.norm(A, ord=2, axis=(1, 2))
    v = np.ones((A.shape[0], A.shape[2])) / np.sqrt(A.shape[2])
    sigma = np.zeros(A.shape[0])
    for _ in range(steps):
        w = np.einsum("pij,pj->pi", A, v)
        u = np.einsum("pji,pj->pi", A, w)
        norm_u = np.linalg.norm(u, axis=1)
        new_sigma = np.sqrt(norm_u)
        nz = norm_u > 0
        v[nz] = u[nz] / norm_u[nz, None]
        done = np.all(np.abs(new_sigma - sigma) <= tol * np.maximum(1.0, new_sigma))
        sigma = new_sigma
        if done:
            break
    return sigma


def _linear_parts(A, m):
    if callable(A):

        def mats(t, s):
            out = np.asarray(A(t, s), dtype=float)
            return np.broadcast_to(out.reshape((-1, m, m)) if out.ndim else out, (t.shape[0], m, m))

        def kernel(t, s, x):
            return np.einsum("pij,pj->pi", mats(t, s), x)

        modulus = Modulus.pairwise(lambda t, s: spectral_norm(mats(t, s)))
        return kernel, modulus, True
    M = np.asarray(A, dtype=float).reshape(m, m)
    return (lambda t, s, x: x @ M.T), Modulus.constant(float(spectral_norm(M)[0])), False


def solve_linear_fredholm(grid: Grid, measure: Measure, A, f, config: SolverConfig = SolverConfig(), weight="uniform"):
    """Solve ``x(t) = f(t) + int_X A(t, s) x(s) dmu(s)``.

    ``A`` is a constant ``(m, m)`` matrix or a callable ``A(t, s)`` returning
    ``(P, m, m)``.  The certificate uses ``L(t, s) = |A(t, s)|_2`` with
    ``ell = 1`` by default, i.e. ``max_t int |A(t, s)| dmu(s) < 1``.
    """
    f = _as_codomain(f, grid, "forcing")
    kernel, modulus, uses_t = _linear_parts(A, f.shape[1])
    problem = IntegralProblem(grid, measure, relation_full(grid), f, kernel, modulus, kernel_uses_t=uses_t)
    return solve_integral(problem, weight, config)


def solve_linear_volterra(grid: Grid, measure: Measure, A, f, config: SolverConfig = SolverConfig(), retardation=None):
    """Solve ``x(t) = f(t) + int_{[0,t]} A(t, s) x(phi(s)) ds`` (``phi`` = identity by default).

    No smallness condition is needed: the weight is built from the constant
    modulus ``L0 = max |A(t, s)|`` over the Volterra pairs.
    """
    f = _as_codomain(f, grid, "forcing")
    relation = relation_volterra(grid)
    kernel, modulus, uses_t = _linear_parts(A, f.shape[1])
    L0 = modulus.max_value(relation)
    weight = build_weight_constant_lipschitz(relation, measure, L0, tol=config.weight_tol, max_iter=config.weight_max_iter)
    rets = () if retardation is None else (Retardation(retardation, modulus),)
    problem = IntegralProblem(grid, measure, relation, f, kernel, modulus, retardations=rets, kernel_uses_t=uses_t)
    return solve_integral(problem, weight, config)


def solve_presic(problem: PresicProblem, weight="uniform", config: SolverConfig = SolverConfig()):
    """Certify, then solve a Presic-type equation by Picard iteration.

    With ``weight="uniform"`` the certificate reduces to ``max_t sum_k L_k(t)``.
    The ``"forcing"`` initial guess is ``F(t, 0, ..., 0)``.
    """
    grid = problem.grid
    if problem.relation is not None:
        check_substitutions(problem.relation, problem.substitution_points)
    if weight is None or (isinstance(weight, str) and weight == "uniform"):
        w = Weight.uniform(grid)
    elif isinstance(weight, Weight):
        w = weight
    else:
        w = Weight(grid, weight)
    composed = [interpolate(grid, w.ell, pts, config.interpolation) for pts in problem.substitution_points]
    cert = presic_contraction_factor(problem.moduli, composed, w, config.margin)
    if not cert.passed:
        raise CertificateError(cert, report=ConvergenceReport(0, cert, float("nan"), float("nan"), float("nan"), w))
    m = problem.m
    zero = np.zeros((grid.size, m))
    x0 = _initial_guess(config, grid, m, lambda: presic_step(problem, zero, config.interpolation))

    def step(f):
        return presic_step(problem, f, config.interpolation)

    x, n, inc = _iterate(step, x0, w, cert, config, grid)
    q = cert.q
    report = ConvergenceReport(n, cert, inc, q / (1 - q) * inc, residual(problem, x, config.interpolation), w)
    return x, report
