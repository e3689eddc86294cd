"""
Convergence and its failure
===========================

A bounded perturbation of the stationary profile settles down, while
``S + x + sin x`` keeps travelling: ``u(0, t)`` oscillates with amplitude 2.
"""

import numpy as np

from hjlongtime import (
    CauchyProblem,
    HamiltonianSpec,
    ScalarField,
    convergence_monitor,
    make_uniform_grid,
    solve,
)

H = HamiltonianSpec.eikonal(1.0)


def S(x):
    return 0.5 * x * np.abs(x)


def run(l, u0, T, L, dx=0.01, scheme="godunov"):
    g = make_uniform_grid(-L, L, int(round(2 * L / dx)) + 1)
    prob = CauchyProblem(H, ScalarField.from_function(g, l), ScalarField.from_function(g, u0), T,
                         scheme=scheme, snapshot_stride=20)
    return solve(prob)

###############################################################################
# A bounded perturbation of 1/2 x^2 with l = |x|. The limit picks up
# min_y (y^2 + sin y), the cheapest way to reach the origin and sit there.

h = run(np.abs, lambda x: 0.5 * x**2 + np.sin(x), 20.0, 26)
ys = np.linspace(-2, 2, 400001)
shift = np.min(ys**2 + np.sin(ys))
target = ScalarField.from_function(h.grid, lambda x: 0.5 * x**2 + shift)
rep = convergence_monitor(h, target, (-2, 2), 0.05)
print(rep.to_text("bounded perturbation"))

###############################################################################
# The travelling wave: no limit, the monitor reports the oscillation.

h = run(lambda x: 1 + np.abs(x), lambda x: S(x) + x + np.sin(x), 30.0, 36, 0.005, "semi-lagrangian")
target = ScalarField.from_function(h.grid, lambda x: S(x) + x)
rep = convergence_monitor(h, target, (-2, 2), 0.05, c=0.0, probe=0.0)
print(rep.to_text("travelling wave"))
