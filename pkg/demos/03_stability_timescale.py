# coding: utf-8

# # The stability timescale
#
# For a sampled repetition curve p(t) the estimator compares the chord slope
# (p(0) - p(t)) / t with the worst later chord slope V(t, t). The point t*
# where this ratio is largest gives t_s = t* / (p(0) - p(t*)), and a
# projector counts as stable when t_s exceeds lambda * t_d.

import numpy as np

import histstab as hs
from histstab.decoherence import cat_decomposition, initial_state

# In[1]:

# Three textbook curves.

grid = hs.TimeGrid.linear(10.0, 256)
curves = {
    "constant": np.full(256, 0.7),
    "linear": 1.0 - grid.points / 40.0,
    "exponential": 0.5 + 0.5 * np.exp(-grid.points / 0.5),
}
for name, values in curves.items():
    ts = hs.stability_timescale(hs.RepetitionCurve(grid, values, name))
    print(f"{name:12s} t* = {ts.t_star:.4f}  F* = {ts.f_star:.4g}  t_s = {ts.t_s:.4g}")

# In[2]:

# The spin-bath scenario: pointer projectors are frozen (t_s infinite); the
# cat projector decays fast, but the curve's late fluctuations are small
# compared to the early drop, which pushes t* far out on the grid.

model = hs.build_spin_bath(8, seed=7)
cat = hs.CatState(2 ** -0.5, 2 ** -0.5)
slices = ((0.0, cat_decomposition(model.space, cat)), (1.0, model.pointer_decomposition()))
histories = hs.HistorySet(initial_state(model, cat), model.hamiltonian, slices)
for report in hs.check_stability(histories, 0.1, grid):
    for r in report.per_projector:
        state = "skipped" if r.skipped else ("pass" if r.passed else "fail")
        print(f"{r.label:16s} t* = {r.t_star}  t_s = {r.t_s}  -> {state}")
