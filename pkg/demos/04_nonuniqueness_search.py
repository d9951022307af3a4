# coding: utf-8

# # More than one consistent set
#
# A qubit starts in |0> with zero Hamiltonian. The first question is asked
# in a basis rotated by theta, the second in a basis at pi/4. Scanning theta
# shows several exactly consistent choices, not just the pointer basis.

import math

import numpy as np

import histstab as hs

# In[1]:

space = hs.FactoredSpace(1, 2)
family = hs.rotation_family(
    space,
    [(0.0, 1.0), (math.pi / 4, 0.0)],
    bounds=[[0.0, math.pi]],
    pointer_params=[[0.0], [math.pi / 2], [math.pi]],
)
template = hs.HistoryTemplate(hs.DensityMatrix.from_vector([1, 0]), np.zeros((2, 2)), (0.0, 1.0))

for theta in np.linspace(0, math.pi, 9):
    print(f"theta = {theta:.4f}   violation = {hs.violation_norm(template, family, [theta]):.3e}")

# In[2]:

result = hs.search_consistent_sets(template, family, tol=1e-6, seed=11)
print(f"{len(result.minima)} consistent points after {result.evaluations} evaluations")
for m in result.minima:
    print(f"  theta = {m.theta[0]:.6f}  violation = {m.violation:.1e}  distance to pointer = {m.pointer_distance:.4f}")
