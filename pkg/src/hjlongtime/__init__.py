"""Long-time behaviour of ``u_t + H(x, Du) = l(x)`` on the real line.

Explicit monotone solvers for the Cauchy problem, constructions of ergodic
pairs ``(c, v)``, the optimal-control value function, and monitors that
check convergence of ``u(x, t) + c t`` against stationary profiles.
"""

from .fields import Grid, ScalarField, interp_linear, make_uniform_grid, read_field_csv, write_field_csv
from .hamiltonian import GODUNOV, LAX_FRIEDRICHS, AuditBox, HamiltonianSpec, audit_assumptions, eval_H, numerical_H
from .cauchy import SEMI_LAGRANGIAN, CauchyProblem, SnapshotHistory, build_supersolution, normalize_cost, solve
from .ergodic import (
    AubrySet,
    ErgodicSolution,
    dirichlet_limit,
    estimate_ergodic_constant,
    extract_aubry,
    long_time_limit,
    solve_dirichlet,
    solve_perron_min,
)
from .control import ControlProblem, Trajectory, evaluate_cost, synthesize_trajectory, value_function_dp
from .analysis import (
    ConvergenceReport,
    convergence_monitor,
    decrease_on_aubry,
    dependence_cone_check,
    inf_convolution,
    min_combine,
    residual_stationary,
    sandwich_bounds,
    sup_convolution,
)

__version__ = "0.1.0"
