import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hjlongtime.cauchy import CauchyProblem, CFLError, solve
from hjlongtime.control import (
    ControlError,
    ControlProblem,
    evaluate_cost,
    read_trajectory_csv,
    synthesize_trajectory,
    value_function_dp,
    write_trajectory_csv,
)
from hjlongtime.fields import ScalarField
from hjlongtime.hamiltonian import HamiltonianSpec

from conftest import S, field, grid_dx


def l52(x):
    return 1 + np.abs(x)


@pytest.fixture
def prob52():
    return ControlProblem(1.0, l52, S, 3.0)


def test_evaluate_cost_two_optimal_paths(prob52):
    stay = evaluate_cost(prob52, [(1.0, -1.0), (2.0, 0.0)], 1.0)
    far = evaluate_cost(prob52, [(3.0, -1.0)], 1.0)
    assert stay.cost == pytest.approx(3.5, abs=1e-6)
    assert far.cost == pytest.approx(3.5, abs=1e-6)
    assert stay.terminal == pytest.approx(0.0) and far.terminal == pytest.approx(-2.0)


def test_zero_control_without_running_cost():
    prob = ControlProblem(1.0, 0.0, lambda x: x**2, 2.0)
    assert evaluate_cost(prob, [(2.0, 0.0)], 1.5).cost == pytest.approx(2.25)


def test_speed_violation_names_piece(prob52):
    with pytest.raises(ControlError, match="piece 1"):
        evaluate_cost(prob52, [(1.0, 0.5), (2.0, 1.5)], 0.0)
    prob = ControlProblem(lambda x: 1 + 0.5 * np.tanh(x), 0.0, 0.0, 1.0)
    with pytest.raises(ControlError, match="piece 0"):
        evaluate_cost(prob, [(1.0, -1.2)], 0.5)


def test_control_must_cover_horizon(prob52):
    with pytest.raises(ControlError):
        evaluate_cost(prob52, [(1.0, 0.0)], 0.0)
    with pytest.raises(ControlError):
        evaluate_cost(prob52, [], 0.0)


def test_dp_matches_closed_form(prob52):
    g = grid_dx(-8, 8, 0.01)
    V = value_function_dp(prob52, g)
    m = g.mask(-2, 2)
    assert np.max(np.abs(V.values[-1][m] - (3 + S(g.x[m])))) <= g.dx * 3
    assert V.scheme == "dynamic-programming"


def test_dp_ball_minimum():
    g = grid_dx(-5, 5, 0.05)
    u0 = lambda x: np.cos(2 * x) + 0.1 * x
    V = value_function_dp(ControlProblem(1.0, 0.0, u0, 1.0), g)
    m = g.mask(*(V.trust_lo[-1], V.trust_hi[-1]))
    fine = np.linspace(-6, 6, 120001)
    exact = np.array([np.min(u0(fine[np.abs(fine - x) <= 1.0])) for x in g.x[m]])
    # interpolation error accumulates over the steps, second order per step
    assert np.max(V.values[-1][m] - exact) <= 0.02
    assert np.all(V.values[-1][m] >= exact - 1e-9)


@pytest.mark.parametrize("speed", [1.0, lambda x: 1 + 0.5 * np.sin(x)])
def test_dp_equals_semi_lagrangian(speed):
    g = grid_dx(-6, 6, 0.02)
    cp = ControlProblem(speed, l52, S, 1.0)
    V = value_function_dp(cp, g)
    sl = solve(CauchyProblem(HamiltonianSpec.eikonal(speed, g), field(g, l52), field(g, S), 1.0,
                             scheme="semi-lagrangian", dt=V.dt, snapshot_stride=1))
    assert np.max(np.abs(sl.original_values() - V.values)) <= 1e-12


def test_dp_cfl():
    g = grid_dx(-3, 3, 0.1)
    with pytest.raises(CFLError):
        value_function_dp(ControlProblem(1.0, 0.0, 0.0, 1.0), g, dt=0.2)


def test_dynamic_programming_principle():
    g = grid_dx(-6, 6, 0.02)
    u0 = lambda x: np.abs(x - 0.3)
    full = value_function_dp(ControlProblem(1.0, l52, u0, 1.0), g)
    half = value_function_dp(ControlProblem(1.0, l52, u0, 0.5), g, dt=full.dt)
    again = value_function_dp(ControlProblem(1.0, l52, ScalarField(g, half.values[-1]), 0.5), g, dt=full.dt)
    m = g.mask(full.trust_lo[-1], full.trust_hi[-1])
    assert np.max(np.abs(again.values[-1][m] - full.values[-1][m])) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=6), st.floats(-1, 1))
def test_any_control_costs_at_least_V(alphas, x):
    prob = ControlProblem(1.0, l52, S, 3.0)
    g = grid_dx(-8, 8, 0.02)
    V = _V52(g)
    d = 3.0 / len(alphas)
    J = evaluate_cost(prob, [(d, a) for a in alphas], x).cost
    assert J >= float(np.interp(x, g.x, V)) - 3 * g.dx


_cache = {}


def _V52(g):
    if g.n not in _cache:
        _cache[g.n] = value_function_dp(ControlProblem(1.0, l52, S, 3.0), g).values[-1]
    return _cache[g.n]


def test_synthesis_recovers_value(prob52):
    g = grid_dx(-8, 8, 0.01)
    traj = synthesize_trajectory(value_function_dp(prob52, g), prob52, 1.0)
    assert traj.cost == pytest.approx(3.5, abs=0.02)
    assert np.all(np.abs(np.diff(traj.positions)) <= np.diff(traj.times) + 1e-12)


def test_synthesis_without_running_cost():
    prob = ControlProblem(1.0, 0.0, np.abs, 1.0)
    g = grid_dx(-5, 5, 0.01)
    traj = synthesize_trajectory(value_function_dp(prob, g), prob, 2.0)
    assert traj.cost == pytest.approx(1.0, abs=1e-9)
    assert traj.terminal == pytest.approx(1.0, abs=1e-9)


def test_synthesis_long_horizon_terminal():
    prob = ControlProblem(1.0, lambda x: x**2 + np.sin(x) - (-0.2324655751582156), 0.0, 10.0)
    g = grid_dx(-14, 14, 0.01)
    traj = synthesize_trajectory(value_function_dp(prob, g), prob, 0.0)
    assert traj.terminal == pytest.approx(-0.4502, abs=0.05)


def test_synthesis_needs_every_step(prob52):
    g = grid_dx(-8, 8, 0.05)
    with pytest.raises(ValueError):
        synthesize_trajectory(value_function_dp(prob52, g, snapshot_stride=3), prob52, 1.0)


def test_synthesis_trust_exit(prob52):
    g = grid_dx(-4, 4, 0.05)
    with pytest.raises(ControlError):
        synthesize_trajectory(value_function_dp(prob52, g), prob52, 3.9)


def test_trajectory_csv_round_trip(prob52, tmp_path):
    traj = evaluate_cost(prob52, [(1.0, -1.0), (2.0, 0.0)], 1.0)
    write_trajectory_csv(traj, tmp_path / "t.csv")
    text = (tmp_path / "t.csv").read_text().splitlines()
    assert text[0].startswith("# cost=") and text[1] == "s,X,alpha"
    back = read_trajectory_csv(tmp_path / "t.csv")
    assert back.cost == traj.cost
    np.testing.assert_array_equal(back.positions, traj.positions)
    np.testing.assert_array_equal(back.controls, traj.controls)
