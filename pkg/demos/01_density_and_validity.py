"""
Density, distribution function and the validity constraint
==========================================================

A four-dimensional model built from a handful of coefficients, checked
against the sufficient constraint, then evaluated on a few points.
"""
import itertools

import numpy as np

from extfgm import CopulaModel, ParamVector, check_validity, project_to_valid, simulation_params
from extfgm.params import mask_from_indices

# coefficients are keyed by (order, subset mask); everything else is zero
p = ParamVector.from_dict(4, {
    (1, mask_from_indices([1, 2])): 0.15,
    (1, mask_from_indices([3, 4])): -0.10,
    (2, mask_from_indices([1, 3])): 0.05,
})
print(check_validity(p))

m = CopulaModel(p)
u = np.array([[0.1, 0.2, 0.8, 0.9], [0.5, 0.5, 0.5, 0.5], [1.0, 1.0, 0.3, 0.3]])
print("density:", m.density(u))
print("cdf:    ", m.cdf(u))

# uniform margins: fixing all but one coordinate at 1 returns that coordinate
print("margin check:", m.cdf([[1.0, 0.37, 1.0, 1.0]]))

# the reference simulation vector fails the constraint by a wide margin
sim = simulation_params()
res = check_validity(sim)
print(f"simulation vector: constraint sum {res.total:.4f}, excess {res.excess:.4f}")

# its density is negative near some corners of the cube
corners = np.array(list(itertools.product([0.0, 1.0], repeat=4)))
dens = CopulaModel.unchecked(sim).density(corners)
print("most negative corner value:", dens.min())

# proportional shrinkage brings it inside the valid region
shrunk = project_to_valid(sim)
print("after projection:", check_validity(shrunk))
