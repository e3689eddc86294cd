"""
Exact evolution and first-order convergence
===========================================

For ``u_t + |u_x| = 1 + |x|`` with ``u0 = S(x) = x|x|/2`` the solution is
``u = t + S(x)``. We run the three schemes and halve the mesh once.
"""

import numpy as np

from hjlongtime import CauchyProblem, HamiltonianSpec, ScalarField, make_uniform_grid, solve

H = HamiltonianSpec.eikonal(1.0)


def S(x):
    return 0.5 * x * np.abs(x)


def error(scheme, dx, T=1.0):
    g = make_uniform_grid(-8, 8, int(round(16 / dx)) + 1)
    prob = CauchyProblem(H, ScalarField.from_function(g, lambda x: 1 + np.abs(x)),
                         ScalarField.from_function(g, S), T, scheme=scheme)
    h = solve(prob)
    m = g.mask(-4, 4)
    # stored values are normalized; original() puts the running-cost shift back
    return np.max(np.abs(h.original(-1)[m] - (T + S(g.x[m]))))


for scheme in ("godunov", "lax-friedrichs", "semi-lagrangian"):
    e1, e2 = error(scheme, 0.02), error(scheme, 0.01)
    print(f"{scheme:16s} dx=0.02: {e1:.4f}  dx=0.01: {e2:.4f}  ratio {e1 / e2:.2f}")
