# %% [markdown]
# # The spectral radius function of the core map
#
# For H(t) = [0, t] the powers Lambda^k 1 decay like t^k / k!, so their k-th
# roots tend to zero.  For the full relation they stay at one.

# %%
import numpy as np

from bielecki import (
    relation_full,
    relation_volterra,
    spectral_radius_sequence,
    trapezoid_measure,
    uniform_grid,
    volterra_core_closed_form,
)

grid = uniform_grid([(0.0, 1.0)], [401])
mu = trapezoid_measure(grid)
vol = spectral_radius_sequence(relation_volterra(grid), mu, 8)
full = spectral_radius_sequence(relation_full(grid), mu, 8)
for k in range(1, 9):
    exact = volterra_core_closed_form([1.0], k) ** (1 / k)
    print(f"k={k}: volterra r = {vol.r[k - 1, -1]:.5f} (exact {exact:.5f}), full r = {full.r[k - 1, -1]:.5f}")
