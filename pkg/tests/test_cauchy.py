import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hjlongtime.cauchy import (
    FROZEN,
    SEMI_LAGRANGIAN,
    AssumptionError,
    CauchyProblem,
    CFLError,
    NonFiniteError,
    TrustRegionError,
    build_supersolution,
    normalize_cost,
    sandwich_check,
    solve,
    time_step,
)
from hjlongtime.fields import ScalarField, make_uniform_grid
from hjlongtime.hamiltonian import GODUNOV, LAX_FRIEDRICHS, HamiltonianSpec

from conftest import S, field, grid_dx

SCHEMES = [GODUNOV, LAX_FRIEDRICHS, SEMI_LAGRANGIAN]


def _run(H, g, l, u0, T, **kw):
    return solve(CauchyProblem(H, field(g, l), field(g, u0), T, **kw))


def _err(h, exact, window=(-2, 2)):
    m = h.grid.mask(*window)
    return float(np.max(np.abs(h.original(len(h) - 1)[m] - exact(h.grid.x[m], h.times[-1]))))


def test_normalize_cost_examples():
    g = make_uniform_grid(-3, 3, 61)
    ln, shift = normalize_cost(field(g, lambda x: 1 + np.abs(x)))
    assert shift == 1.0
    np.testing.assert_allclose(ln.values, np.abs(g.x), atol=1e-15)
    ln, shift = normalize_cost(field(g, 0.0))
    assert shift == 0.0 and np.all(ln.values == 0)
    ln, shift = normalize_cost(field(g, lambda x: 2 + np.sin(x)))
    assert np.min(ln.values) == 0.0
    assert shift == pytest.approx(np.min(2 + np.sin(g.x)))


@pytest.mark.parametrize("scheme", SCHEMES)
def test_quadratic_exact_solution(eik, scheme):
    g = grid_dx(-6, 6, 0.01)
    h = _run(eik, g, lambda x: 1 + np.abs(x), lambda x: 0.5 * x**2, 1.0, scheme=scheme)
    assert _err(h, lambda x, t: t + 0.5 * x**2) <= g.dx


@pytest.mark.parametrize("scheme", SCHEMES)
def test_S_exact_solution(eik, scheme):
    g = grid_dx(-6, 6, 0.01)
    h = _run(eik, g, lambda x: 1 + np.abs(x), S, 1.0, scheme=scheme)
    assert _err(h, lambda x, t: t + S(x)) <= g.dx


@pytest.mark.parametrize("scheme", SCHEMES)
def test_constants_are_preserved(eik, scheme):
    g = grid_dx(-3, 3, 0.05)
    h = _run(eik, g, 0.0, 5.0, 1.0, scheme=scheme)
    assert np.all(h.values == 5.0)


def test_refinement_ratio_first_order(eik):
    errs = []
    for dx in (0.02, 0.01):
        g = grid_dx(-6, 6, dx)
        h = _run(eik, g, lambda x: 1 + np.abs(x), lambda x: 0.5 * x**2, 1.0)
        errs.append(_err(h, lambda x, t: t + 0.5 * x**2, (-4, 4)))
    assert 1.6 <= errs[0] / errs[1] <= 2.4


def test_shift_bookkeeping(eik):
    g = grid_dx(-4, 4, 0.02)
    a = _run(eik, g, lambda x: 1 + np.abs(x), S, 1.0)
    b = _run(eik, g, lambda x: 1 + np.abs(x), S, 1.0, normalize=False)
    assert a.shift == 1.0 and b.shift == 0.0
    np.testing.assert_allclose(a.original_values(), b.original_values(), atol=1e-12)


def test_history_invariants(eik):
    g = grid_dx(-5, 5, 0.02)
    h = _run(eik, g, np.abs, S, 2.0, snapshot_stride=7)
    assert np.all(np.diff(h.trust_radius) <= 0)
    assert h.times[-1] == pytest.approx(2.0)
    assert np.all(np.diff(h.times) > 0)
    for k in range(len(h)):
        assert np.all(np.isfinite(h.values[k][h.trust_mask(k)]))
    # the trust cone is never narrower than the physical cone
    assert np.all(h.trust_radius <= 5 - h.times * 1.0 + 1e-12)


def test_time_step_divides_T(eik):
    g = grid_dx(-3, 3, 0.01)
    p = CauchyProblem(eik, field(g, np.abs), field(g, S), 0.7)
    dt, n, theta = time_step(p)
    assert n * dt == pytest.approx(0.7, rel=1e-14)
    assert dt <= 0.9 * g.dx / theta + 1e-15


def test_cfl_errors(eik):
    g = grid_dx(-3, 3, 0.01)
    with pytest.raises(CFLError):
        CauchyProblem(eik, field(g, np.abs), field(g, S), 1.0, cfl=1.5)
    with pytest.raises(CFLError):
        solve(CauchyProblem(eik, field(g, np.abs), field(g, S), 1.0, dt=0.02))


def test_trust_region_vanishes(eik):
    g = grid_dx(-1, 1, 0.01)
    with pytest.raises(TrustRegionError) as exc:
        _run(eik, g, np.abs, S, 5.0)
    assert 0 < exc.value.t_vanish < 5.0


def test_nonfinite_reports_node():
    H = HamiltonianSpec.custom(lambda x, p: np.where(np.abs(p) > 3, np.nan, np.abs(p)))
    g = grid_dx(-2, 2, 0.05)
    prob = CauchyProblem(H, field(g, 0.0), field(g, lambda x: np.where(x > 1, 4 * x, 0.0)), 0.2,
                         scheme=LAX_FRIEDRICHS, theta=1.0, check_assumptions=False)
    with pytest.raises(NonFiniteError) as exc:
        solve(prob)
    assert exc.value.node > 0


def test_assumption_audit_rejects_signed_H():
    H = HamiltonianSpec.custom(lambda x, p: p)
    g = grid_dx(-2, 2, 0.05)
    with pytest.raises(AssumptionError):
        solve(CauchyProblem(H, field(g, np.abs), field(g, 0.0), 0.1, scheme=LAX_FRIEDRICHS))


def test_semi_lagrangian_requires_eikonal():
    H = HamiltonianSpec.custom(lambda x, p: np.abs(p))
    g = grid_dx(-2, 2, 0.05)
    with pytest.raises(ValueError):
        CauchyProblem(H, field(g, np.abs), field(g, 0.0), 0.1, scheme=SEMI_LAGRANGIAN)


def test_frozen_boundary_runs(eik):
    g = grid_dx(-6, 6, 0.01)
    h = _run(eik, g, lambda x: 1 + np.abs(x), S, 1.0, boundary=FROZEN)
    assert _err(h, lambda x, t: t + S(x)) <= g.dx


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(SCHEMES),
       st.lists(st.floats(-2, 2), min_size=41, max_size=41),
       st.lists(st.floats(0, 1), min_size=41, max_size=41))
def test_discrete_comparison(scheme, base, gap):
    H = HamiltonianSpec.eikonal(1.0)
    g = make_uniform_grid(-2, 2, 41)
    l = field(g, np.abs)
    A = ScalarField(g, base)
    B = ScalarField(g, np.array(base) + np.array(gap))
    ha = solve(CauchyProblem(H, l, A, 0.5, scheme=scheme))
    hb = solve(CauchyProblem(H, l, B, 0.5, scheme=scheme))
    for k in range(len(ha)):
        m = ha.trust_mask(k)
        assert np.all(ha.values[k][m] <= hb.values[k][m] + 1e-12)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_finite_speed_bit_identical(eik, scheme):
    g = grid_dx(-6, 6, 0.01)
    r = 3.0
    u0a = lambda x: 0.5 * x**2
    u0b = lambda x: 0.5 * x**2 + np.where(np.abs(x) > r, np.sin(5 * x) + 2, 0.0)
    ha = _run(eik, g, np.abs, u0a, 1.0, scheme=scheme)
    hb = _run(eik, g, np.abs, u0b, 1.0, scheme=scheme)
    for k, t in enumerate(ha.times):
        steps = round(t / ha.dt)
        m = np.abs(g.x) <= r - (steps + 1) * g.dx
        if scheme == LAX_FRIEDRICHS:
            assert np.max(np.abs(ha.values[k][m] - hb.values[k][m])) <= 1e-12
        else:
            assert np.array_equal(ha.values[k][m], hb.values[k][m])


def test_supersolution_examples():
    g = grid_dx(-3, 3, 0.01)
    vp = build_supersolution(field(g, 0.0), field(g, np.abs), 0.0, 1.0)
    assert np.all(vp.values >= 0.5 * g.x**2 - 1e-12)
    vp0 = build_supersolution(field(g, 0.0), field(g, 0.0), 0.0, 1.0)
    assert np.all(vp0.values == 0)
    u0 = field(g, lambda x: 0.5 * x**2)
    vq = build_supersolution(u0, field(g, np.abs), 0.0, 1.0)
    assert np.all(vq.values >= u0.values)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=31, max_size=31),
       st.lists(st.floats(0, 4), min_size=31, max_size=31),
       st.floats(0, 2), st.booleans())
def test_supersolution_outward_slopes(u0v, lv, c, shifted):
    lo, hi = (-1.5, 1.5) if not shifted else (-1.45, 1.55)
    g = make_uniform_grid(lo, hi, 31)
    u0, l = ScalarField(g, u0v), ScalarField(g, lv)
    vp = build_supersolution(u0, l, c, 1.0)
    assert np.all(vp.values >= u0.values - 1e-12)
    need = l.values + c
    d = np.diff(vp.values) / g.dx
    for i in range(g.n):
        x = g.x[i]
        if x > 1e-12 and i + 1 < g.n:
            assert d[i] >= need[i] - 1e-9
        if x < -1e-12 and i > 0:
            assert -d[i - 1] >= need[i] - 1e-9


def test_sandwich_check_pass_and_corruption(eik):
    g = grid_dx(-6, 6, 0.01)
    l = field(g, lambda x: 1 + np.abs(x))
    u0 = field(g, S)
    h = solve(CauchyProblem(eik, l, u0, 1.0))
    vp = build_supersolution(u0, l, -1.0, 1.0)
    rep = sandwich_check(h, field(g, lambda x: S(x) - 1), vp, -1.0)
    assert rep.passed and all(rep.details["slice_verdicts"])
    at0 = sandwich_check(h, u0, vp, -1.0)
    assert at0.details["slice_verdicts"][0]
    vals = np.array(h.values)
    k, node = len(h) // 2, g.n // 2 + 17
    vals[k, node] -= 1.0
    bad = sandwich_check(h.with_values(vals), field(g, lambda x: S(x) - 1), vp, -1.0)
    assert not bad.passed
    assert bad.witness["node"] == node and bad.witness["side"] == "lower"
    assert bad.details["failing_slices"] == 1
