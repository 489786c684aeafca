# %% [markdown]
# # Retarded arguments and functional equations
#
# The pantograph equation x(t) = 1 + int_0^t x(s/2) ds evaluates the unknown
# at a contracted argument.  Its value at 1 is a fast-converging series.

# %%
import math

import numpy as np

from bielecki import (
    IntegralProblem,
    PresicProblem,
    Retardation,
    relation_volterra,
    solve_integral,
    solve_presic,
    trapezoid_measure,
    uniform_grid,
)

grid = uniform_grid([(0.0, 1.0)], [401])
mu = trapezoid_measure(grid)
series = sum(2.0 ** (-k * (k - 1) / 2) / math.factorial(k) for k in range(20))

prob = IntegralProblem(
    grid, mu, relation_volterra(grid), np.ones(grid.size), lambda t, s, x: x, 0.0,
    retardations=(Retardation(lambda s: s / 2, 1.0),), kernel_uses_t=False,
)
x, report = solve_integral(prob)
print(f"x(1) = {x[-1, 0]:.6f}, series = {series:.6f}, q = {report.q:.4f}")

# %% [markdown]
# With no integral at all, f(t) = t + f(t/2)/2 is a contraction with q = 1/2
# and its solution is 4t/3.

# %%
t = grid.coords[:, 0]
pres = PresicProblem(grid, lambda t, f: t + f / 2, [lambda t: t / 2], [0.5])
f, rep = solve_presic(pres)
print(f"q = {rep.q}, max error vs 4t/3: {np.max(np.abs(f[:, 0] - 4 * t / 3)):.2e}")
