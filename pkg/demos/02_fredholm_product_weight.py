# %% [markdown]
# # Fredholm equations and product moduli
#
# With a separable kernel the solution is known in closed form, which makes
# the quadrature error easy to see.

# %%
import numpy as np

from bielecki import (
    IntegralProblem,
    Modulus,
    Weight,
    contraction_factor,
    product_weight_f2,
    relation_full,
    solve_integral,
    trapezoid_measure,
    uniform_grid,
)

grid = uniform_grid([(0.0, 1.0)], [201])
mu = trapezoid_measure(grid)
t = grid.coords[:, 0]

# %%
# x(t) = t + 1/2 int_0^1 t s x(s) ds has solution 6t/5
prob = IntegralProblem(
    grid, mu, relation_full(grid), t,
    lambda t, s, x: t[:, :1] * s[:, :1] * x / 2,
    lambda t, s: t[:, 0] * s[:, 0] / 2,
)
x, report = solve_integral(prob, "uniform")
print(f"q = {report.q:.6f}, max error vs 1.2t: {np.max(np.abs(x[:, 0] - 1.2 * t)):.2e}")

# %% [markdown]
# For moduli L1(t) L2(s) the weight ell = L1 + c certifies the operator as
# long as int L1 L2 < 1, even when the uniform weight gives q > 1.

# %%
L1, L2 = 2.5 * t, t
flat = contraction_factor(relation_full(grid), mu, Modulus.separable(L1, L2), Weight.uniform(grid))
print(f"uniform weight q = {flat.q:.4f}")
res = product_weight_f2(L1, L2, mu)
cert = contraction_factor(relation_full(grid), mu, res.modulus, res.weight)
print(f"c = {res.c:.4f}, product weight q = {cert.q:.4f}, passes = {cert.passed}")
