"""Randomized property checks shared by test_properties.py and the acceptance suite.

Each ``check_*`` is a hypothesis test body; calling it runs every example.
"""

from __future__ import annotations

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from bielecki import (
    IntegralProblem,
    Modulus,
    Weight,
    bielecki_distance,
    build_weight_general,
    picard_step,
    relation_from_sets,
    relation_full,
    relation_volterra,
    sup_distance,
    trapezoid_measure,
    uniform_grid,
    validate_relation,
)
from bielecki.renorm import iterate_metric_distance, weight_iterates
from bielecki.solver import certify, SolverConfig, _resolve_weight

EXAMPLES = 200
SETTINGS = settings(
    max_examples=EXAMPLES,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@SETTINGS
@given(seed=seeds, N=st.integers(1, 40), m=st.integers(1, 3))
def check_metric_sandwich(seed, N, m):
    rng = np.random.default_rng(seed)
    grid = uniform_grid([(0.0, 1.0)], [N])
    x, y = rng.normal(size=(2, N, m)) * rng.uniform(0.1, 10)
    ell = rng.uniform(0.05, 20.0, size=N)
    w = Weight(grid, ell)
    d1 = sup_distance(x, y)
    dp = bielecki_distance(x, y, w)
    rel = 1e-12 * d1
    assert d1 / ell.max() - rel <= dp <= d1 / ell.min() + rel


def _random_problem(rng, kind, n):
    nodes = [int(rng.integers(3, 9)) for _ in range(n)]
    grid = uniform_grid([(0.0, float(rng.uniform(0.5, 2.0))) for _ in range(n)], nodes)
    measure = trapezoid_measure(grid)
    relation = relation_full(grid) if kind == "full" else relation_volterra(grid)
    a = float(rng.uniform(0.0, 0.9 if kind == "full" else 3.0))
    b = float(rng.uniform(0.0, 1.0))
    scale = a / max(grid.volume(), 1e-300)
    forcing = rng.normal(size=(grid.size, 1))

    # |d/dx K| <= scale * (1 + b * |t1 - s1|) / (1 + b) =: L
    def kernel(t, s, x):
        return scale * (1 + b * np.abs(t[:, :1] - s[:, :1])) / (1 + b) * np.sin(x + t[:, :1])

    def L(t, s):
        return scale * (1 + b * np.abs(t[:, 0] - s[:, 0])) / (1 + b)

    return IntegralProblem(grid, measure, relation, forcing, kernel, Modulus.pairwise(L))


@SETTINGS
@given(seed=seeds, kind=st.sampled_from(["full", "volterra"]), n=st.integers(1, 2))
def check_contraction_observed(seed, kind, n):
    rng = np.random.default_rng(seed)
    problem = _random_problem(rng, kind, n)
    config = SolverConfig()
    weight = _resolve_weight(problem, "auto", config)
    cert = certify(problem, weight, config)
    if not cert.passed:
        return
    x, y = rng.normal(size=(2, problem.grid.size, 1)) * 3
    lhs = bielecki_distance(picard_step(problem, x), picard_step(problem, y), weight)
    assert lhs <= cert.q * bielecki_distance(x, y, weight) + 1e-9


@SETTINGS
@given(seed=seeds, kind=st.sampled_from(["full", "volterra"]), n=st.integers(1, 2))
def check_weight_iterates_monotone(seed, kind, n):
    rng = np.random.default_rng(seed)
    nodes = [int(rng.integers(2, 8)) for _ in range(n)]
    grid = uniform_grid([(0.0, 1.0)] * n, nodes)
    relation = relation_full(grid) if kind == "full" else relation_volterra(grid)
    L = rng.uniform(0, 2.0, size=grid.size)
    prev = None
    for k, ell in enumerate(weight_iterates(relation, trapezoid_measure(grid), Modulus.of_s(L))):
        if prev is not None:
            assert np.all(ell >= prev)
        prev = ell
        if k == 25:
            break


def _transitive_closure(M):
    R = M.copy()
    while True:
        R2 = R | ((R.astype(np.int64) @ R.astype(np.int64)) > 0)
        if np.array_equal(R2, R):
            return R
        R = R2


@SETTINGS
@given(seed=seeds, N=st.integers(2, 12), density=st.floats(0.0, 0.5))
def check_relation_axioms(seed, N, density):
    rng = np.random.default_rng(seed)
    grid = uniform_grid([(0.0, 1.0)], [N])
    # partial order: random DAG on a random permutation, closed transitively
    perm = rng.permutation(N)
    M = np.eye(N, dtype=bool)
    for a in range(N):
        for b in range(a + 1, N):
            if rng.random() < density:
                M[perm[b], perm[a]] = True
    M = _transitive_closure(M)
    rel = relation_from_sets(grid, [np.flatnonzero(M[i]) for i in range(N)])
    rep = validate_relation(rel)
    assert rep.ok
    for i in range(N):
        for j in np.flatnonzero(M[i]):
            assert set(rel[j]) <= set(rel[i])
    # drop an implied pair: transitivity must fail with a genuine witness
    implied = [(i, k) for i in range(N) for k in range(N) if i != k and M[i, k]
               and any(M[i, j] and M[j, k] and j not in (i, k) for j in range(N))]
    if implied:
        i, k = implied[int(rng.integers(len(implied)))]
        B = M.copy()
        B[i, k] = False
        rep = validate_relation(relation_from_sets(grid, [np.flatnonzero(B[r]) for r in range(N)]))
        assert not rep.transitive
        a, b, c = rep.transitive_witness
        assert B[a, b] and B[b, c] and not B[a, c]


@SETTINGS
@given(seed=seeds, n=st.integers(1, 2), steps=st.integers(1, 4), uses_t=st.booleans())
def check_restriction_consistency(seed, n, steps, uses_t):
    rng = np.random.default_rng(seed)
    nodes = [int(rng.integers(3, 9)) for _ in range(n)]
    axes = [np.sort(rng.uniform(0, 2, size=k)) for k in nodes]
    axes = [np.concatenate([[0.0], a[np.diff(np.concatenate([[0.0], a])) > 1e-6]]) for a in axes]
    from bielecki import build_tensor_grid

    grid = build_tensor_grid(axes)
    stop = [int(rng.integers(1, len(a) + 1)) for a in axes]
    sub = grid.subgrid(stop)
    keep = grid.subgrid_indices(stop)
    c = float(rng.uniform(0.1, 2.0))

    def kernel(t, s, x):
        return c * np.cos(x) * (1 + t[:, :1] * s[:, :1]) if uses_t else c * np.cos(x) * (1 + s[:, :1])

    def forcing(g):
        return np.sin(3 * g.coords[:, :1]) + g.coords.sum(axis=1, keepdims=True)

    def problem(g):
        return IntegralProblem(g, trapezoid_measure(g), relation_volterra(g), forcing(g), kernel,
                               Modulus.constant(2 * c), kernel_uses_t=uses_t)

    P, Q = problem(grid), problem(sub)
    x, y = P.forcing, Q.forcing
    for _ in range(steps):
        x, y = picard_step(P, x), picard_step(Q, y)
        assert np.array_equal(x[keep], y)


@SETTINGS
@given(seed=seeds, k=st.integers(2, 4))
def check_iterate_metric(seed, k):
    # T = A is not a contraction in the Euclidean norm, but A^k is
    rng = np.random.default_rng(seed)
    if k == 2:
        A = np.array([[0.0, 2.0], [0.125, 0.0]])
    else:
        A = np.diag([0.5, -0.6]) + np.array([[0.0, 1.5], [0.0, 0.0]])
    Ak = np.linalg.matrix_power(A, k)
    q = float(np.linalg.norm(Ak, 2))
    assert q < 1 < np.linalg.norm(A, 2)
    x, y = rng.normal(size=(2, 2)) * 5

    def dk(u, v):
        ds = []
        for _ in range(k):
            ds.append(float(np.linalg.norm(u - v)))
            u, v = A @ u, A @ v
        return iterate_metric_distance(ds, q)

    assert dk(A @ x, A @ y) <= q ** (1 / k) * dk(x, y) * (1 + 1e-12) + 1e-12


ALL_CHECKS = {
    "metric equivalence sandwich": check_metric_sandwich,
    "contraction observation": check_contraction_observed,
    "weight iterates monotone": check_weight_iterates_monotone,
    "relation axioms on random partial orders": check_relation_axioms,
    "restriction consistency (bitwise)": check_restriction_consistency,
    "iterate-metric contraction q^(1/k)": check_iterate_metric,
}
