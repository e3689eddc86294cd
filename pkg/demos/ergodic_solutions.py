"""
Ergodic pairs
=============

Stationary solutions of ``|v'| = l + c``. For ``l = |x|`` the Dirichlet
route gives ``-x^2/2 - c|x|`` and the Perron route ``x^2/2`` at ``c = 0``.
For ``l = |sin x|`` the argmin set is infinite and solutions may stay
bounded.
"""

import numpy as np

from hjlongtime import HamiltonianSpec, ScalarField, make_uniform_grid
from hjlongtime.ergodic import dirichlet_limit, extract_aubry, gradient_bound_check, solve_perron_min

H = HamiltonianSpec.eikonal(1.0)

for c in (0.5, 1.0, 2.0):
    sol = dirichlet_limit(H, np.abs, c, (3, 4, 5, 6), 0.01, (-2, 2))
    v = sol.v.restrict(-2, 2)
    err = np.max(np.abs(v.values + 0.5 * v.grid.x**2 + c * np.abs(v.grid.x)))
    diffs = sol.meta["stabilization"].details["sup_differences"]
    print(f"c={c}: error {err:.4f}, consecutive differences {max(diffs):.1e}")

g = make_uniform_grid(-7, 7, 1401)
l = ScalarField.from_function(g, lambda x: np.abs(np.sin(x)))
# the zeros at +-pi, +-2 pi fall between nodes
aubry = extract_aubry(l, subgrid=True)
print("argmin components near", np.round(aubry.component_centers(), 3))
sol = solve_perron_min(H, l, aubry)
print("max v =", sol.v.values.max(), " error vs 1 - |cos x| =",
      np.max(np.abs(sol.v.values - (1 - np.abs(np.cos(g.x))))))
print(gradient_bound_check(sol, l, 1.0).to_text())
