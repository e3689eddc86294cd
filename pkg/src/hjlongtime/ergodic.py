"""Solutions ``(c, v)`` of the stationary problem ``H(x, Dv) = l(x) + c``.

Two constructions are provided for Eikonal Hamiltonians:

* the Dirichlet route: solve on ``[-R, R]`` with zero boundary data, shift
  by the value at the origin and let ``R`` grow (any ``c >= 0``);
* the Perron route: the largest nonnegative subsolution vanishing on the
  argmin set of ``l`` (``c = 0``).

A third source is the long-time limit of an evolution run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cauchy import SnapshotHistory
from .fields import (
    FieldLike,
    Grid,
    ScalarField,
    interp_linear,
    make_uniform_grid,
    read_field_csv,
    sample,
    write_field_csv,
)
from .hamiltonian import HamiltonianSpec
from .reports import CheckReport

__all__ = [
    "DIRICHLET_LIMIT",
    "PERRON_MIN",
    "LONG_TIME_LIMIT",
    "AubrySet",
    "ErgodicSolution",
    "SweepConvergenceError",
    "extract_aubry",
    "solve_dirichlet",
    "dirichlet_limit",
    "solve_perron_min",
    "long_time_limit",
    "estimate_ergodic_constant",
    "growth_diagnostics",
    "gradient_bound_check",
    "aubry_domination_check",
    "write_ergodic_solution",
    "read_ergodic_solution",
]

DIRICHLET_LIMIT = "dirichlet-limit"
PERRON_MIN = "perron-min"
LONG_TIME_LIMIT = "long-time-limit"

SWEEP_TOL = 1e-12
MAX_SWEEPS = 10**6


class SweepConvergenceError(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True)
class AubrySet:
    """Sampled argmin set of a normalized running cost.

    ``eps_A`` is the minimum of ``l`` outside the enclosing interval of the
    set inflated by one node and ``R_A`` that interval's outer radius; both
    are NaN when every node belongs to the set (``degenerate``).
    """

    grid: Grid
    tolerance: float
    indices: np.ndarray
    components: tuple[tuple[int, int], ...]
    eps_A: float
    R_A: float
    l_min: float = 0.0

    @property
    def degenerate(self) -> bool:
        return len(self.indices) == self.grid.n

    @property
    def points(self) -> np.ndarray:
        return self.grid.x[self.indices]

    def component_centers(self) -> np.ndarray:
        return np.array([0.5 * (self.grid.x[a] + self.grid.x[b]) for a, b in self.components])


@dataclass(frozen=True)
class ErgodicSolution:
    c: float
    v: ScalarField
    provenance: str
    normalization: str = "none"
    meta: dict = field(default_factory=dict, compare=False)


def extract_aubry(l: ScalarField, tol: float | None = None, *, subgrid: bool = False) -> AubrySet:
    """Nodes where ``l <= min l + tol``, grouped into index intervals.

    ``tol`` defaults to ``1e-9 (1 + max l)``; ``eps_A`` is measured above
    ``min l`` (which is 0 for a normalized cost). With ``subgrid`` a node also
    counts when it is a discrete local minimum whose value is within its
    neighbouring increments, i.e. ``l`` may vanish inside the adjacent cells
    (zeros that fall between nodes).
    """
    v = l.values
    if tol is None:
        tol = 1e-9 * (1.0 + float(np.max(np.abs(v))))
    lmin = float(np.min(v))
    v = v - lmin
    member = v <= tol
    if subgrid:
        inner = np.zeros_like(member)
        left, mid, right = v[:-2], v[1:-1], v[2:]
        local_min = (mid <= left) & (mid <= right)
        reach = 0.5 * ((left - mid) + (right - mid))
        inner[1:-1] = local_min & (mid <= tol + reach)
        member |= inner
    idx = np.flatnonzero(member)
    comps = []
    start = prev = int(idx[0])
    for i in idx[1:]:
        i = int(i)
        if i != prev + 1:
            comps.append((start, prev))
            start = i
        prev = i
    comps.append((start, prev))
    g = l.grid
    if len(idx) == g.n:
        return AubrySet(g, tol, idx, tuple(comps), float("nan"), float("nan"), lmin)
    lo = max(int(idx[0]) - 1, 0)
    hi = min(int(idx[-1]) + 1, g.n - 1)
    outside = np.ones(g.n, dtype=bool)
    outside[lo:hi + 1] = False
    eps_A = float(np.min(v[outside])) if outside.any() else float("nan")
    R_A = float(max(abs(g.x[lo]), abs(g.x[hi])))
    return AubrySet(g, tol, idx, tuple(comps), eps_A, R_A, lmin)


def _sweep(f: np.ndarray, dx: float, pinned: np.ndarray, free_ends: bool) -> np.ndarray:
    """Gauss-Seidel fast sweeping for ``v_i = min(v_{i-1}, v_{i+1}) + dx f_i``.

    Nodes in ``pinned`` stay 0. With ``free_ends`` the end nodes use their
    single neighbour, otherwise they are pinned as well.
    """
    n = len(f)
    inf = math.inf
    v = [0.0 if p else inf for p in pinned]
    if not free_ends:
        v[0] = v[-1] = 0.0
    step = [dx * float(fi) for fi in f]
    active = [i for i in range(n) if not pinned[i] and (free_ends or 0 < i < n - 1)]
    backward = active[::-1]
    for it in range(MAX_SWEEPS):
        change = 0.0
        for order in (active, backward):
            for i in order:
                if i == 0:
                    nb = v[1]
                elif i == n - 1:
                    nb = v[n - 2]
                else:
                    a, b = v[i - 1], v[i + 1]
                    nb = a if a < b else b
                new = nb + step[i]
                old = v[i]
                if new != old:
                    d = abs(new - old) if old != inf else inf
                    if d > change:
                        change = d
                    v[i] = new
        if change < SWEEP_TOL:
            return np.array(v)
    raise SweepConvergenceError(f"fast sweeping did not converge in {MAX_SWEEPS} sweeps", change)


def _speed_on(H: HamiltonianSpec, grid: Grid) -> np.ndarray:
    if not H.is_eikonal:
        raise ValueError("the stationary solvers handle Eikonal Hamiltonians only")
    return np.broadcast_to(np.asarray(H.speed(grid.x), dtype=float), grid.x.shape)


def solve_dirichlet(H: HamiltonianSpec, l: FieldLike, c: float, R: float, dx: float) -> ScalarField:
    """``H(x, Dv) = l + c`` on ``[-R, R]`` with ``v(+-R) = 0`` by fast sweeping."""
    if c < 0:
        raise ValueError("no subsolution exists for c < 0 (normalized cost)")
    n = int(round(2 * R / dx)) + 1
    g = make_uniform_grid(-R, R, n)
    rhs = sample(l, g) + c
    if np.any(rhs < -1e-12):
        raise ValueError("l + c must be nonnegative")
    f = np.maximum(rhs, 0.0) / _speed_on(H, g)
    pinned = np.zeros(n, dtype=bool)
    return ScalarField(g, _sweep(f, g.dx, pinned, free_ends=False))


def dirichlet_limit(
    H: HamiltonianSpec,
    l: FieldLike,
    c: float,
    R_sequence,
    dx: float,
    window: tuple[float, float] | None = None,
) -> ErgodicSolution:
    """Limit of ``V_R - V_R(0)`` over increasing radii.

    Consecutive normalized solutions are compared on ``window`` (default
    ``[-R0/2, R0/2]`` for the smallest radius ``R0``). The returned solution
    is the last one; ``meta["stabilization"]`` reports the sup-differences
    and flags (without raising) when they fail to decrease.
    """
    Rs = [float(r) for r in R_sequence]
    if any(b <= a for a, b in zip(Rs, Rs[1:])):
        raise ValueError("R_sequence must be increasing")
    if window is None:
        window = (-Rs[0] / 2, Rs[0] / 2)
    sols = []
    for R in Rs:
        V = solve_dirichlet(H, l, c, R, dx)
        sols.append(ScalarField(V.grid, V.values - interp_linear(V, 0.0)))
    wgrid, _ = sols[-1].grid.subgrid(*window)
    on_window = [interp_linear(s, wgrid.x) for s in sols]
    diffs = [float(np.max(np.abs(b - a))) for a, b in zip(on_window, on_window[1:])]
    stabilized = all(d1 <= d0 + 1e-10 for d0, d1 in zip(diffs, diffs[1:]))
    report = CheckReport(
        "dirichlet_stabilization", stabilized,
        -max(diffs) if diffs else 0.0, None,
        {"radii": Rs, "sup_differences": diffs, "window": list(window)},
    )
    return ErgodicSolution(c, sols[-1], DIRICHLET_LIMIT, "zero-at-origin",
                           {"stabilization": report, "warning": not stabilized})


def solve_perron_min(
    H: HamiltonianSpec,
    l: FieldLike,
    aubry: AubrySet | None = None,
    grid: Grid | None = None,
) -> ErgodicSolution:
    """Largest nonnegative subsolution with ``c = 0`` vanishing on the argmin set.

    End nodes are left free (one-sided update), argmin nodes are pinned to 0.
    """
    if grid is None:
        if not isinstance(l, ScalarField):
            raise ValueError("give a grid or a ScalarField cost")
        grid = l.grid
    lf = ScalarField(grid, sample(l, grid))
    if aubry is None:
        aubry = extract_aubry(lf)
    if aubry.grid != grid:
        raise ValueError("Aubry set lives on a different grid")
    if len(aubry.indices) == 0:
        raise ValueError("empty Aubry set")
    f = np.maximum(lf.values, 0.0) / _speed_on(H, grid)
    pinned = np.zeros(grid.n, dtype=bool)
    pinned[aubry.indices] = True
    v = _sweep(f, grid.dx, pinned, free_ends=True)
    return ErgodicSolution(0.0, ScalarField(grid, v), PERRON_MIN, "zero-on-aubry")


def long_time_limit(history: SnapshotHistory, c: float = 0.0) -> ErgodicSolution:
    """Last slice of a run, ``u(., T) + c T``, restricted to its trust interval."""
    k = len(history) - 1
    t = float(history.times[k])
    u = ScalarField(history.grid, history.original(k) + c * t)
    return ErgodicSolution(c, u.restrict(history.trust_lo[k], history.trust_hi[k]),
                           LONG_TIME_LIMIT, "none", {"T": t})


def estimate_ergodic_constant(history: SnapshotHistory, window: tuple[float, float], t_lo: float) -> float:
    """Minus the least-squares slope of ``t -> mean_window u(., t)`` for ``t >= t_lo``."""
    ks = np.flatnonzero(history.times >= t_lo - 1e-12)
    if len(ks) < 3:
        raise ValueError("need at least 3 stored slices after t_lo")
    m = history.grid.mask(*window)
    means = []
    for k in ks:
        if window[0] < history.trust_lo[k] - 1e-12 or window[1] > history.trust_hi[k] + 1e-12:
            raise ValueError(f"window {window} leaves the trust interval at t={history.times[k]}")
        means.append(float(np.mean(history.original(k)[m])))
    slope = np.polyfit(history.times[ks], means, 1)[0]
    return float(-slope)


def _slack(v: ScalarField, factor: float) -> float:
    slopes = np.abs(np.diff(v.values)) / v.grid.dx
    return factor * v.grid.dx * max(1.0, float(np.max(slopes)))


def growth_diagnostics(
    sol: ErgodicSolution,
    aubry: AubrySet,
    m_inv,
    radii=(1.0, 2.0, 3.0),
    slack_factor: float = 2.0,
) -> CheckReport:
    """Growth bounds for ergodic solutions.

    ``c == 0``: ``v(x) >= m_inv(eps_A) (|x| - R_A)`` outside ``R_A`` (growth
    to infinity). ``c > 0``: ``min_{[-R, R]} v <= v(0) - m_inv(min l + c) R``
    for every radius of the ladder (unbounded below). Both inequalities get
    a slack of ``slack_factor * dx * max(1, max|Dv|)``.
    """
    v = sol.v
    g = v.grid
    slack = _slack(v, slack_factor)
    if sol.c <= 0:
        if aubry.degenerate or not np.isfinite(aubry.eps_A):
            return CheckReport("growth", True, float("nan"), None,
                               {"mode": "growth", "skipped": "degenerate Aubry set"})
        rate = float(m_inv(aubry.eps_A))
        out = np.abs(g.x) > aubry.R_A
        if not out.any():
            return CheckReport("growth", True, float("nan"), None,
                               {"mode": "growth", "skipped": "no node outside R_A"})
        bound = rate * (np.abs(g.x[out]) - aubry.R_A) - slack
        marg = v.values[out] - bound
        j = int(np.argmin(marg))
        return CheckReport("growth", bool(marg[j] >= 0), float(marg[j]),
                           {"x": float(g.x[out][j])},
                           {"mode": "growth", "rate": rate, "eps_A": aubry.eps_A,
                            "R_A": aubry.R_A, "slack": slack})
    alpha = aubry.l_min + sol.c
    rate = float(m_inv(alpha))
    v0 = interp_linear(v, 0.0)
    margins, used = [], []
    for R in radii:
        if -R < g.x_min or R > g.x_max:
            continue
        m = g.mask(-R, R)
        margins.append(v0 - rate * R + slack - float(np.min(v.values[m])))
        used.append(float(R))
    if not used:
        raise ValueError("no ladder radius fits inside the solution grid")
    j = int(np.argmin(margins))
    return CheckReport("unbounded_below", bool(margins[j] >= 0), float(margins[j]),
                       {"R": used[j]},
                       {"mode": "ladder", "rate": rate, "alpha": alpha, "radii": used,
                        "margins": margins, "slack": slack})


def gradient_bound_check(
    sol: ErgodicSolution,
    l: FieldLike,
    nu: FieldLike,
    slack_factor: float = 1.0,
) -> CheckReport:
    """One-sided slopes of ``v`` against ``max (l + c)/nu`` over the solution grid.

    The slack is ``slack_factor * dx * (1 + Lip((l + c)/nu))``.
    """
    v = sol.v
    g = v.grid
    ratio = (sample(l, g) + sol.c) / sample(nu, g)
    bound = float(np.max(ratio))
    lip = float(np.max(np.abs(np.diff(ratio)))) / g.dx
    slack = slack_factor * g.dx * (1.0 + lip)
    d = np.abs(np.diff(v.values)) / g.dx
    pm, pp = d[:-1], d[1:]  # at interior nodes 1..n-2
    worst = np.maximum(pm, pp)
    other = np.minimum(pm, pp)
    j = int(np.lexsort((other, worst))[-1])
    margin = bound + slack - float(worst[j])
    return CheckReport("gradient_bound", margin >= 0, margin,
                       {"node": j + 1, "x": float(g.x[j + 1]), "slope": float(worst[j])},
                       {"bound": bound, "slack": slack, "c": sol.c})


def aubry_domination_check(
    v1: ErgodicSolution,
    v2: ErgodicSolution,
    aubry: AubrySet,
    window: tuple[float, float],
    tol: float,
) -> CheckReport:
    """``max_window (v1 - v2) <= max_A (v1 - v2) + tol`` for two ``c = 0`` solutions."""
    base = v2.v.restrict(*window)
    xs = base.grid.x
    diff = interp_linear(v1.v, xs) - base.values
    pts = aubry.points
    pts = pts[(pts >= window[0]) & (pts <= window[1])]
    if len(pts) == 0:
        raise ValueError("no Aubry node inside the comparison window")
    on_a = float(np.max(interp_linear(v1.v, pts) - interp_linear(v2.v, pts)))
    j = int(np.argmax(diff))
    margin = on_a + tol - float(diff[j])
    return CheckReport("aubry_domination", margin >= 0, margin, {"x": float(xs[j])},
                       {"max_window": float(diff[j]), "max_aubry": on_a, "tol": tol})


def write_ergodic_solution(sol: ErgodicSolution, stem, residual: dict | None = None) -> tuple[str, str]:
    """Write ``<stem>.csv`` (the field) and ``<stem>.meta`` (``key = value`` lines)."""
    stem = str(stem)
    write_field_csv(sol.v, stem + ".csv")
    lines = [f"c = {sol.c!r}", f"provenance = {sol.provenance}", f"normalization = {sol.normalization}"]
    for k, val in (residual or {}).items():
        lines.append(f"residual_{k} = {float(val)!r}")
    with open(stem + ".meta", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return stem + ".csv", stem + ".meta"


def read_ergodic_solution(stem) -> ErgodicSolution:
    stem = str(stem)
    v = read_field_csv(stem + ".csv")
    meta = {}
    with open(stem + ".meta") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            if "=" not in line:
                raise ValueError(f"{stem}.meta: line {n}: expected 'key = value'")
            k, val = (s.strip() for s in line.split("=", 1))
            meta[k] = val
    extra = {k: float(x) for k, x in meta.items() if k.startswith("residual_")}
    return ErgodicSolution(float(meta["c"]), v, meta["provenance"], meta["normalization"], extra)
