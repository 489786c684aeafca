"""Bielecki weights, weighted metrics, the core map and contraction certificates.

A weight is stored as a positive function ``ell`` on the grid; the metric it
induces is ``d_p(x, y) = max_i |x_i - y_i| / ell_i``.  For an integral
operator with Lipschitz modulus ``L(t, s)`` the contraction factor in that
metric is

    q = max_i (1 / ell_i) * sum_{j in H(i)} w_ij L(i, j) ell_j,

and ``q < 1`` certifies a unique fixed point.  Weights making ``q < 1`` are
built by Picard iteration of ``ell = 1 + int_{H(t)} L ell``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from . import quadrature
from .errors import DivergenceError, InfeasibleError, ShapeError
from .grid import Grid, Measure, Relation, as_grid_function

__all__ = [
    "Certificate",
    "F2Construction",
    "Modulus",
    "RadiusEstimate",
    "Weight",
    "as_modulus",
    "bielecki_distance",
    "build_weight_constant_lipschitz",
    "build_weight_general",
    "contraction_factor",
    "core_map_apply",
    "exponential_weight",
    "iterate_metric_distance",
    "presic_contraction_factor",
    "product_weight_f2",
    "retarded_contraction_factor",
    "spectral_radius_sequence",
    "sup_distance",
    "volterra_core_closed_form",
    "weight_iterates",
]

DEFAULT_MARGIN = 1e-6


@dataclass(frozen=True, eq=False)
class Weight:
    """Admissible weight, stored as ``ell`` (the metric uses ``1/ell``)."""

    grid: Grid
    ell: np.ndarray

    def __post_init__(self):
        ell = as_grid_function(self.ell, self.grid, name="weight").ravel().copy()
        if ell.ndim != 1 or np.any(ell <= 0):
            raise ShapeError("weight must be a positive scalar grid function")
        ell.setflags(write=False)
        object.__setattr__(self, "ell", ell)

    @classmethod
    def uniform(cls, grid: Grid) -> "Weight":
        return cls(grid, np.ones(grid.size))


@dataclass(frozen=True)
class Certificate:
    q: float
    margin: float
    passed: bool
    argmax_node: int
    per_node: np.ndarray | None = field(default=None, repr=False, compare=False)

    def record(self, grid: Grid | None = None) -> dict:
        rec = {
            "q": float(self.q),
            "margin": float(self.margin),
            "pass": bool(self.passed),
            "argmax_node": int(self.argmax_node),
        }
        if grid is not None:
            rec["argmax_coords"] = [float(c) for c in grid.coords[self.argmax_node]]
        return rec


def _certificate(per_node, weight_ell, margin) -> Certificate:
    if not 0 < margin < 1:
        raise ValueError("margin must lie in (0, 1)")
    ratio = np.asarray(per_node, dtype=float) / weight_ell
    i = int(np.argmax(ratio))
    q = float(ratio[i])
    ratio.setflags(write=False)
    return Certificate(q=q, margin=margin, passed=bool(q <= 1 - margin), argmax_node=i, per_node=ratio)


@dataclass(frozen=True)
class RadiusEstimate:
    """``r[k - 1, i] = ((Lambda^k 1)(i)) ** (1/k)`` for ``k = 1..K``."""

    r: np.ndarray
    powers: np.ndarray

    @property
    def depth(self) -> int:
        return self.r.shape[0]


class Modulus:
    """Nonnegative Lipschitz modulus ``L(t, s)`` on node pairs.

    Separable moduli ``a(t) * b(s)`` (constants included) are integrated with
    the structured quadrature; general callables ``fn(t, s)`` of coordinate
    arrays of shape ``(P, n)`` are evaluated pair by pair.
    """

    def __init__(self, t_factor=None, s_factor=None, fn: Callable | None = None, scale: float = 1.0):
        if fn is not None and (t_factor is not None or s_factor is not None):
            raise ValueError("give either a pairwise function or separable factors")
        self.t_factor = None if t_factor is None else np.asarray(t_factor, dtype=float)
        self.s_factor = None if s_factor is None else np.asarray(s_factor, dtype=float)
        self.fn = fn
        self.scale = float(scale)
        for f in (self.t_factor, self.s_factor):
            if f is not None and (np.any(f < 0) or not np.all(np.isfinite(f))):
                raise ValueError("modulus factors must be finite and nonnegative")
        if self.scale < 0 or not math.isfinite(self.scale):
            raise ValueError("modulus scale must be finite and nonnegative")

    @classmethod
    def constant(cls, c: float) -> "Modulus":
        return cls(scale=c)

    @classmethod
    def of_s(cls, values) -> "Modulus":
        return cls(s_factor=values)

    @classmethod
    def of_t(cls, values) -> "Modulus":
        return cls(t_factor=values)

    @classmethod
    def separable(cls, t_values, s_values) -> "Modulus":
        return cls(t_factor=t_values, s_factor=s_values)

    @classmethod
    def pairwise(cls, fn: Callable) -> "Modulus":
        return cls(fn=fn)

    @property
    def is_zero(self) -> bool:
        if self.fn is not None:
            return False
        if self.scale == 0:
            return True
        return any(f is not None and not np.any(f) for f in (self.t_factor, self.s_factor))

    @property
    def uses_t(self) -> bool:
        return self.fn is not None or self.t_factor is not None

    def _factor(self, f, grid):
        if f is None:
            return None
        if f.shape != (grid.size,):
            raise ShapeError(f"modulus factor has shape {f.shape}, grid has {grid.size} nodes")
        return f

    def pair_values(self, grid: Grid, i_idx, j_idx) -> np.ndarray:
        if self.fn is not None:
            vals = np.asarray(self.fn(grid.coords[i_idx], grid.coords[j_idx]), dtype=float)
            vals = np.broadcast_to(vals.reshape(-1) if vals.ndim else vals, np.shape(i_idx))
            if np.any(vals < 0) or not np.all(np.isfinite(vals)):
                raise ValueError("Lipschitz modulus must be finite and nonnegative on the relation")
            return vals * self.scale
        vals = np.full(np.shape(i_idx), self.scale)
        a = self._factor(self.t_factor, grid)
        b = self._factor(self.s_factor, grid)
        if a is not None:
            vals = vals * a[i_idx]
        if b is not None:
            vals = vals * b[j_idx]
        return vals

    def max_value(self, relation: Relation) -> float:
        """Largest value of the modulus over the pairs of ``relation``."""
        grid = relation.grid
        if self.fn is None and relation.kind == "full":
            a = 1.0 if self.t_factor is None else float(np.max(self._factor(self.t_factor, grid)))
            b = 1.0 if self.s_factor is None else float(np.max(self._factor(self.s_factor, grid)))
            return self.scale * a * b
        best = 0.0
        for rows in quadrature._row_blocks(grid.size, 1):
            r, j = np.nonzero(quadrature.member_rows(relation, rows))
            if r.size:
                best = max(best, float(np.max(self.pair_values(grid, rows[r], j))))
        return best

    def apply(self, relation: Relation, measure: Measure, v) -> np.ndarray:
        """``out[i] = sum_{j in H(i)} w_ij L(i, j) v_j``."""
        v = np.asarray(v, dtype=float)
        grid = relation.grid
        if self.fn is None:
            b = self._factor(self.s_factor, grid)
            g = v if b is None else (b * v.T).T
            out = quadrature.integrate(relation, measure, g) * self.scale
            a = self._factor(self.t_factor, grid)
            if a is not None:
                out = (a * out.T).T
            return out
        scalar = v.ndim == 1
        V = v.reshape(grid.size, -1)

        def pair(i_idx, j_idx):
            return self.pair_values(grid, i_idx, j_idx)[:, None] * V[j_idx]

        out = quadrature.integrate_pairs(relation, measure, pair, V.shape[1])
        return out[:, 0] if scalar else out

    def __repr__(self):
        if self.fn is not None:
            return f"Modulus(pairwise={self.fn!r})"
        parts = [f"scale={self.scale:g}"]
        if self.t_factor is not None:
            parts.append("t_factor")
        if self.s_factor is not None:
            parts.append("s_factor")
        return f"Modulus({', '.join(parts)})"


def as_modulus(L) -> Modulus:
    """Coerce a number, a :class:`Modulus` or a callable ``L(t, s)``."""
    if isinstance(L, Modulus):
        return L
    if callable(L):
        return Modulus.pairwise(L)
    return Modulus.constant(float(L))


def core_map_apply(x, relation: Relation, measure: Measure) -> np.ndarray:
    """Apply the core map: ``(Lambda x)(t) = int_{H(t)} x dmu`` on the grid."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError("core map acts on scalar grid functions")
    return quadrature.integrate(relation, measure, x)


def spectral_radius_sequence(relation: Relation, measure: Measure, K: int) -> RadiusEstimate:
    """Finite sequence ``((Lambda^k 1)(t))^(1/k)``, ``k = 1..K``.

    The limsup of this sequence is the spectral radius function; only the
    computed terms are reported.  ``powers`` holds ``Lambda^k 1`` itself.
    """
    if K < 1:
        raise ValueError("depth K must be at least 1")
    v = np.ones(relation.grid.size)
    powers = np.empty((K, v.size))
    r = np.empty((K, v.size))
    for k in range(1, K + 1):
        v = core_map_apply(v, relation, measure)
        powers[k - 1] = v
        with np.errstate(divide="ignore", under="ignore"):
            r[k - 1] = np.where(v > 0, np.power(np.maximum(v, 0.0), 1.0 / k), 0.0)
    return RadiusEstimate(r=r, powers=powers)


def volterra_core_closed_form(t, k: int, n: int | None = None) -> float:
    """``(t_1 ... t_n)^k / (k!)^n``, the value of ``Lambda^k 1`` for ``H(t) = [0, t]``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("coordinates must be nonnegative")
    if k < 1:
        raise ValueError("k must be at least 1")
    if n is None:
        n = t.size
    if t.size != n:
        raise ShapeError(f"expected {n} coordinates, got {t.size}")
    vol = float(np.prod(t))
    return vol**k / math.factorial(k) ** n


def sup_distance(x, y) -> float:
    """Unweighted sup of Euclidean node distances."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if d.ndim == 1:
        return float(np.max(np.abs(d))) if d.size else 0.0
    return float(np.max(np.linalg.norm(d, axis=1)))


def bielecki_distance(x, y, weight: Weight) -> float:
    """Weighted distance ``max_i |x_i - y_i|_2 / ell_i``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch {x.shape} vs {y.shape}")
    N = weight.grid.size
    if x.shape[0] != N:
        raise ShapeError(f"functions have {x.shape[0]} nodes, weight has {N}")
    d = np.abs(x - y) if x.ndim == 1 else np.linalg.norm((x - y).reshape(N, -1), axis=1)
    return float(np.max(d / weight.ell))


def weight_iterates(relation: Relation, measure: Measure, L) -> Iterator[np.ndarray]:
    """Yield ``ell_0 = 1`` and ``ell_n = 1 + int_{H(t)} L(t, s) ell_{n-1}(s) ds`` forever."""
    L = as_modulus(L)
    ell = np.ones(relation.grid.size)
    yield ell
    while True:
        ell = 1.0 + L.apply(relation, measure, ell)
        yield ell


def build_weight_general(
    relation: Relation,
    measure: Measure,
    L,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    patience: int = 5,
) -> Weight:
    """Solve ``ell = 1 + int_{H(t)} L(t, s) ell(s) dmu(s)`` by Picard iteration.

    Parameters
    ----------
    L : float, Modulus or callable ``L(t, s)``
        Nonnegative Lipschitz modulus.
    tol : float
        Stop once ``max |ell_n - ell_{n-1}| <= tol``.
    max_iter : int
        Iteration cap.
    patience : int
        Number of consecutive growing increments, with non-decreasing growth
        ratio, after which the series is declared divergent.

    Raises
    ------
    DivergenceError
        When the increments keep growing geometrically, or ``max_iter`` is
        exceeded, or values overflow.
    """
    L = as_modulus(L)
    if L.is_zero:
        return Weight(relation.grid, np.ones(relation.grid.size))
    it = weight_iterates(relation, measure, L)
    prev = next(it)
    prev_inc = None
    prev_ratio = None
    grow = 0
    for n in range(1, max_iter + 1):
        ell = next(it)
        inc = float(np.max(np.abs(ell - prev)))
        if not np.isfinite(inc):
            raise DivergenceError("weight iteration overflowed; L0 * rho >= 1", n, inc)
        if inc <= tol:
            return Weight(relation.grid, ell)
        if prev_inc is not None and inc > prev_inc:
            ratio = inc / prev_inc
            # Volterra-type series grow for a while with shrinking ratios
            grow = grow + 1 if prev_ratio is None or ratio >= prev_ratio * (1 - 1e-12) else 1
            prev_ratio = ratio
            if grow >= patience:
                raise DivergenceError(
                    f"weight increments grew for {grow} consecutive iterations "
                    f"(ratio {ratio:.6g}); L0 * rho >= 1 on this relation",
                    n,
                    inc,
                )
        else:
            grow = 0
            prev_ratio = None
        prev, prev_inc = ell, inc
    raise DivergenceError(f"weight iteration did not converge in {max_iter} steps", max_iter, prev_inc)


def build_weight_constant_lipschitz(
    relation: Relation,
    measure: Measure,
    L0: float,
    tol: float = 1e-12,
    max_iter: int = 10_000,
) -> Weight:
    """Weight solving ``ell = 1 + L0 * Lambda ell`` (constant modulus ``L0``)."""
    if L0 < 0:
        raise ValueError("L0 must be nonnegative")
    return build_weight_general(relation, measure, Modulus.constant(L0), tol=tol, max_iter=max_iter)


def contraction_factor(relation: Relation, measure: Measure, L, weight: Weight, margin: float = DEFAULT_MARGIN) -> Certificate:
    """Certificate ``q = max_i (1/ell_i) int_{H(i)} L(i, s) ell(s) ds``.

    A value ``q >= 1 - margin`` is a failing certificate, not an error.
    """
    L = as_modulus(L)
    per_node = L.apply(relation, measure, weight.ell)
    return _certificate(per_node, weight.ell, margin)


def retarded_contraction_factor(
    relation: Relation,
    measure: Measure,
    moduli: Sequence,
    composed_weights: Sequence,
    weight: Weight,
    margin: float = DEFAULT_MARGIN,
) -> Certificate:
    """Certificate for retarded kernels.

    ``q = max_i (1/ell_i) sum_k int_{H(i)} L_k(i, s) ell(phi_k(s)) ds``, with
    ``composed_weights[k]`` the samples of ``ell o phi_k`` at the nodes.
    """
    if len(moduli) != len(composed_weights):
        raise ShapeError("one composed weight per modulus is required")
    total = np.zeros(relation.grid.size)
    for Lk, ellk in zip(moduli, composed_weights):
        total = total + as_modulus(Lk).apply(relation, measure, np.asarray(ellk, dtype=float))
    return _certificate(total, weight.ell, margin)


def presic_contraction_factor(moduli: Sequence, composed_weights: Sequence, weight: Weight, margin: float = DEFAULT_MARGIN) -> Certificate:
    """Certificate ``q = max_t (1/ell(t)) sum_k L_k(t) ell(phi_k(t))``."""
    total = np.zeros(weight.grid.size)
    for Lk, ellk in zip(moduli, composed_weights):
        Lk = as_grid_function(Lk, weight.grid, name="Presic modulus")
        if np.any(Lk < 0):
            raise ValueError("Presic moduli must be nonnegative")
        total = total + Lk * np.asarray(ellk, dtype=float)
    return _certificate(total, weight.ell, margin)


def exponential_weight(grid: Grid, L, tau: float | None = None) -> Weight:
    """``ell(t) = exp(int_tau^t L)`` with a cumulative trapezoid integral."""
    if grid.dimension != 1:
        raise ShapeError("the exponential weight is defined on 1-D grids")
    axis = grid.axes[0]
    if tau is not None and tau != axis[0]:
        raise ValueError(f"base point tau={tau} must be the left endpoint {axis[0]}")
    L = as_grid_function(L, grid, name="L")
    if L.ndim != 1:
        raise ShapeError("L must be scalar")
    return Weight(grid, np.exp(quadrature.cumulative_trapezoid(L, axis)))


@dataclass(frozen=True)
class F2Construction:
    """Weight ``ell = L1 + c`` and modulus ``(L1(t) + c) L2(s)``."""

    weight: Weight
    c: float
    modulus: Modulus


def product_weight_f2(L1, L2, measure: Measure, margin: float = DEFAULT_MARGIN) -> F2Construction:
    """Weight for product moduli ``L1(t) L2(s)`` on a full relation.

    Picks ``c`` as half the largest value allowed by
    ``int (L1 + c) L2 dmu <= 1 - margin``.

    Raises
    ------
    InfeasibleError
        If ``int L1 L2 dmu >= 1 - margin``.
    """
    grid = measure.grid
    L1 = as_grid_function(L1, grid, name="L1")
    L2 = as_grid_function(L2, grid, name="L2")
    if np.any(L1 < 0) or np.any(L2 < 0):
        raise ValueError("L1 and L2 must be nonnegative")
    w = measure.weights
    a = float(quadrature.ordered_sum(w * L1 * L2))
    b = float(quadrature.ordered_sum(w * L2))
    slack = 1 - margin - a
    if slack <= 0:
        raise InfeasibleError(f"int L1 L2 dmu = {a:.17g} is not below 1 - margin")
    c = 1.0 if b == 0 else 0.5 * slack / b
    return F2Construction(
        weight=Weight(grid, L1 + c),
        c=c,
        modulus=Modulus.separable(L1 + c, L2),
    )


def iterate_metric_distance(base_distances: Sequence[float], q: float) -> float:
    """``sum_j q^(-j/k) d(T^j x, T^j y)`` over ``j = 0..k-1``.

    If ``T^k`` is a ``q``-contraction for ``d``, then ``T`` is a
    ``q^(1/k)``-contraction for this distance.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    k = len(base_distances)
    if k < 1:
        raise ValueError("need at least one base distance")
    return float(sum(q ** (-j / k) * float(d) for j, d in enumerate(base_distances)))
