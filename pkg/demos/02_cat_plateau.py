# coding: utf-8

# # A cat state in a spin bath
#
# The system qubit couples to N bath qubits through sum_k g_k Z_k (x) Z_S.
# Pointer projectors (onto |0> or |1> of the system) commute with this
# Hamiltonian. A superposition a|0> + b|1> does not: its coherence with the
# bath decays and the repetition probability falls to a plateau at
# p(0)(1 - 2|a|^2|b|^2).

import math

import numpy as np

import histstab as hs
from histstab.decoherence import closed_form_epsilon, plateau_average, predicted_repetition

# In[1]:

model = hs.build_spin_bath(8, seed=7)
cat = hs.CatState(math.sqrt(0.5), math.sqrt(0.5))
grid = hs.TimeGrid.linear(10.0, 256)
print("couplings:", np.round(model.couplings, 3))

# In[2]:

# Off-diagonal coherence of the reduced system state, measured by full
# unitary evolution and compared to the product of cosines.

fit = hs.off_diagonal_decay(model, cat, grid)
closed = closed_form_epsilon(model, cat, grid.points)
print("max |eps - closed form| =", np.max(np.abs(fit.epsilon - closed)))
print(f"t_dc = {fit.t_dc:.4f}  (t_dc / t_d = {fit.t_dc / grid.t_d:.4f})")

# In[3]:

curve, plateau = hs.cat_scenario(model, cat, grid)
print("p(0) =", curve.p0, " predicted plateau =", plateau)
print("late-time average of p/p(0):", round(plateau_average(curve, fit.t_dc), 4))

# In[4]:

# The whole curve is a quadratic form in the measured coherence.

pred = predicted_repetition(cat, fit.coherence, curve.p0)
print("max |p - prediction| =", np.max(np.abs(curve.values - pred)))

for t, p in list(zip(curve.times, curve.values))[:12:2]:
    print(f"  t = {t:6.3f}   p = {p:.4f}")
