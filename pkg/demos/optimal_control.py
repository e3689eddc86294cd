"""
Optimal trajectories
====================

The value function of ``X' = alpha, |alpha| <= 1`` with running cost
``1 + |x|`` and terminal cost ``S`` is ``t + S(x)``. From ``x = 1`` with
horizon 3 two strategies tie at cost 3.5.
"""

import numpy as np

from hjlongtime import make_uniform_grid
from hjlongtime.control import ControlProblem, evaluate_cost, synthesize_trajectory, value_function_dp


def S(x):
    return 0.5 * x * np.abs(x)


prob = ControlProblem(1.0, lambda x: 1 + np.abs(x), S, 3.0)
print("walk to 0 and wait :", evaluate_cost(prob, [(1.0, -1.0), (2.0, 0.0)], 1.0).cost)
print("walk left for 3    :", evaluate_cost(prob, [(3.0, -1.0)], 1.0).cost)

g = make_uniform_grid(-8, 8, 1601)
V = value_function_dp(prob, g)
traj = synthesize_trajectory(V, prob, 1.0)
print("V(1, 3) on the grid:", np.interp(1.0, g.x, V.values[-1]))
print("synthesized cost   :", traj.cost, " ending at", traj.terminal)
