"""Relation-restricted quadrature used by the core map, certificates and solvers.

Every integral here has the form ``out[i] = sum_{j in H(i)} w[i, j] * g[i, j]``
where ``w[i, j]`` are quadrature weights for the node set ``H(i)``:

* full relation: the global measure weights;
* Volterra relation with a product trapezoid measure: trapezoid weights of the
  sub-grid spanned by the axis prefixes of node ``i`` (so constants and
  multilinear integrands over ``[a, t]`` are integrated exactly);
* anything else: the global weights masked to ``H(i)``.

Sums run over ``j`` in ascending index order (``np.add.accumulate``), which
makes results independent of the surrounding array size.  That is what lets
a Volterra solve on a prefix sub-grid reproduce the full-grid values bit for
bit.
"""

from __future__ import annotations

import numpy as np

from .grid import Measure, Relation, subaxis_trapezoid_weights
from .errors import ShapeError

# Upper bound on the number of (i, j, component) entries materialized at once.
_CHUNK_ENTRIES = 4_000_000


def _check(relation: Relation, measure: Measure):
    if relation.grid is not measure.grid and relation.grid.shape != measure.grid.shape:
        raise ShapeError("relation and measure live on different grids")


def uses_subgrid_rule(relation: Relation, measure: Measure) -> bool:
    return relation.kind == "volterra" and measure.axis_weights is not None


def ordered_sum(values, axis=0):
    """Sum in ascending index order along ``axis``."""
    v = np.asarray(values)
    if v.shape[axis] == 0:
        return np.zeros(np.delete(v.shape, axis))
    return np.take(np.add.accumulate(v, axis=axis), -1, axis=axis)


def cumulative_trapezoid(values, axis_coords, axis=0):
    """Running trapezoid integral from the first node, in ascending order."""
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    out = np.zeros_like(v)
    if v.shape[0] > 1:
        h = np.diff(np.asarray(axis_coords, dtype=float))
        h = h.reshape((-1,) + (1,) * (v.ndim - 1))
        out[1:] = np.add.accumulate(0.5 * h * (v[:-1] + v[1:]), axis=0)
    return np.moveaxis(out, 0, axis)


def integrate(relation: Relation, measure: Measure, g) -> np.ndarray:
    """``out[i] = sum_{j in H(i)} w[i, j] g[j]`` for ``g`` of shape ``(N,)`` or ``(N, m)``."""
    _check(relation, measure)
    g = np.asarray(g, dtype=float)
    grid = relation.grid
    N = grid.size
    if g.shape[0] != N:
        raise ShapeError(f"expected {N} rows, got {g.shape[0]}")
    scalar = g.ndim == 1
    G = g.reshape(N, -1)
    if relation.kind == "full":
        total = ordered_sum(measure.weights[:, None] * G, axis=0)
        out = np.broadcast_to(total, G.shape).copy()
    elif uses_subgrid_rule(relation, measure):
        T = G.reshape(grid.shape + (G.shape[1],))
        for k, ax in enumerate(grid.axes):
            T = cumulative_trapezoid(T, ax, axis=k)
        out = T.reshape(N, -1)
    else:
        out = _dense_rows(relation, measure, lambda rows, W: W[:, :, None] * G[None, :, :], G.shape[1])
    return out[:, 0] if scalar else out


def weight_rows(relation: Relation, measure: Measure, rows) -> np.ndarray:
    """Dense block ``w[rows, :]`` of pair weights, zero outside the relation."""
    rows = np.asarray(rows)
    grid = relation.grid
    N = grid.size
    if relation.kind == "full":
        return np.broadcast_to(measure.weights, (rows.size, N)).copy()
    if uses_subgrid_rule(relation, measure):
        mi = grid.multi_indices
        W = np.ones((rows.size, N))
        for k, ax in enumerate(grid.axes):
            S = subaxis_trapezoid_weights(ax)
            W *= S[mi[rows, k]][:, mi[:, k]]
        return W
    if relation.kind == "volterra":
        mi = grid.multi_indices
        mask = np.all(mi[None, :, :] <= mi[rows][:, None, :], axis=2)
    else:
        mask = np.zeros((rows.size, N), dtype=bool)
        for r, i in enumerate(rows):
            mask[r, relation[int(i)]] = True
    return np.where(mask, measure.weights[None, :], 0.0)


def member_rows(relation: Relation, rows) -> np.ndarray:
    """Boolean block ``j in H(i)`` for ``i`` in ``rows``."""
    rows = np.asarray(rows)
    grid = relation.grid
    N = grid.size
    if relation.kind == "full":
        return np.ones((rows.size, N), dtype=bool)
    if relation.kind == "volterra":
        mi = grid.multi_indices
        return np.all(mi[None, :, :] <= mi[rows][:, None, :], axis=2)
    mask = np.zeros((rows.size, N), dtype=bool)
    for r, i in enumerate(rows):
        mask[r, relation[int(i)]] = True
    return mask


def _row_blocks(N, m):
    step = max(1, _CHUNK_ENTRIES // max(1, N * m))
    for start in range(0, N, step):
        yield np.arange(start, min(N, start + step))


def _dense_rows(relation, measure, block_values, m):
    N = relation.grid.size
    out = np.empty((N, m))
    for rows in _row_blocks(N, m):
        W = weight_rows(relation, measure, rows)
        out[rows] = ordered_sum(block_values(rows, W), axis=1)
    return out


def integrate_pairs(relation: Relation, measure: Measure, pair_fn, m: int) -> np.ndarray:
    """Integrate a function of node pairs over each ``H(i)``.

    ``pair_fn(i_idx, j_idx)`` receives flat index arrays of member pairs and
    returns values of shape ``(P,)`` or ``(P, m)``.  It is never called on
    pairs outside the relation.
    """
    _check(relation, measure)
    N = relation.grid.size
    out = np.empty((N, m))
    for rows in _row_blocks(N, m):
        W = weight_rows(relation, measure, rows)
        member = member_rows(relation, rows)
        r, j = np.nonzero(member)
        V = np.zeros((rows.size, N, m))
        if r.size:
            vals = np.asarray(pair_fn(rows[r], j), dtype=float).reshape(r.size, m)
            V[r, j] = W[r, j][:, None] * vals
        out[rows] = ordered_sum(V, axis=1)
    return out
