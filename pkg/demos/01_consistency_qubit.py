# coding: utf-8

# # Consistency on a single qubit
#
# A history set is an initial state plus time-ordered projection
# decompositions. Here the state is |0>, the Hamiltonian is zero, and we ask
# first "+ or -?" and then "0 or 1?". The two routes to the final answer
# interfere, so the set cannot be given classical probabilities.

import numpy as np

import histstab as hs

# In[1]:

ket0 = np.array([1, 0])
plus, minus = np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)

x_basis = hs.ProjectionDecomposition.from_vectors([[plus], [minus]], "x", labels=["+", "-"])
z_basis = hs.ProjectionDecomposition.from_vectors([[ket0], [[0, 1]]], "z", labels=["0", "1"])
rho = hs.DensityMatrix.from_vector(ket0)

histories = hs.HistorySet(rho, np.zeros((2, 2)), ((0.0, x_basis), (1.0, z_basis)))

# In[2]:

# Every history has probability 1/4 or 0, and they sum to one.

for h in hs.enumerate_histories(histories):
    print(h, round(hs.history_probability(histories, h), 12))

# In[3]:

# The off-diagonal entry between (+, 0) and (-, 0) is the interference term.

D = hs.decoherence_functional(histories)
print("D[(+,0), (-,0)] =", np.round(D[(0, 0), (1, 0)], 12))
report = hs.check_consistency(histories)
print("max |off-diagonal| =", report.max_off_diag, "consistent:", report.is_consistent)

# In[4]:

# Coarse-graining the first question away leaves one history per outcome,
# and a single-slice set is always consistent.

merged = hs.coarse_grain(histories, 0, [[0, 1]])
print("after merging + and -:", hs.check_consistency(merged).is_consistent)
