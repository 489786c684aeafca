# %% [markdown]
# # Mixed-derivative Cauchy problems
#
# d1 d2 x = x on [0,1]^2 with x = 1 on the coordinate axes.  The boundary data
# is folded into a forcing term and the problem becomes a Volterra equation.

# %%
import math

import numpy as np

from bielecki import CauchyProblem, check_boundary, enumerate_pi_n, solve_cauchy, uniform_grid

for P in enumerate_pi_n(2):
    print("mask", P.mask, "sign", P.sign)

# %%
grid = uniform_grid([(0.0, 1.0), (0.0, 1.0)], [101, 101])
prob = CauchyProblem(grid, lambda t, x: x, 1.0, lambda p: np.ones((p.shape[0], 1)))
x, report = solve_cauchy(prob)
series = sum(1 / math.factorial(k) ** 2 for k in range(12))
print(f"x(1,1) = {x[-1, 0]:.6f}, series = {series:.6f}")
print(f"boundary error {check_boundary(x, prob, 1e-10).error:.1e}")
