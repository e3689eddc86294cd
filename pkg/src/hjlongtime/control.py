"""Speed-limited optimal control ``X' = alpha``, ``|alpha| <= a(X)``.

The cost of a control on ``[0, t]`` is

    J(x, t, alpha) = int_0^t l(X(s)) ds + u0(X(t)),

and ``V(x, t) = inf_alpha J``. :func:`value_function_dp` computes ``V`` by
the dynamic programming recursion on a grid, :func:`evaluate_cost` prices a
given piecewise-constant control and :func:`synthesize_trajectory` reads an
optimal control back out of the stored value function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cauchy import CFLError, SnapshotHistory, _check_trust, _trust
from .fields import FieldLike, Grid, ScalarField, interp_linear, interp_nodal, sample
from .hamiltonian import HamiltonianSpec

__all__ = [
    "ControlProblem",
    "Trajectory",
    "ControlError",
    "evaluate_cost",
    "value_function_dp",
    "synthesize_trajectory",
    "write_trajectory_csv",
    "read_trajectory_csv",
]

QUAD_STEP = 1e-3
DP_SCHEME = "dynamic-programming"


class ControlError(ValueError):
    """Inadmissible control or a trajectory leaving the trusted window."""


def _pointwise(f: FieldLike):
    if isinstance(f, ScalarField):
        return lambda x: interp_linear(f, x)
    if callable(f):
        return f
    const = float(f)
    return lambda x: np.full(np.shape(x), const) if np.ndim(x) else const


@dataclass(frozen=True)
class ControlProblem:
    """Data of the control problem: speed bound ``a``, running cost ``l``,
    terminal cost ``u0`` and horizon ``t``. Each may be a constant, a
    vectorized callable or a :class:`ScalarField`."""

    speed: FieldLike
    running_cost: FieldLike
    terminal_cost: FieldLike
    horizon: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    def a(self, x):
        return _pointwise(self.speed)(x)

    def l(self, x):
        return _pointwise(self.running_cost)(x)

    def u0(self, x):
        return _pointwise(self.terminal_cost)(x)

    def hamiltonian(self, grid: Grid | None = None) -> HamiltonianSpec:
        return HamiltonianSpec.eikonal(self.speed, grid)


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear path: ``controls[k]`` acts on ``[times[k], times[k+1])``."""

    times: np.ndarray
    positions: np.ndarray
    controls: np.ndarray
    cost: float

    @property
    def terminal(self) -> float:
        return float(self.positions[-1])


def _as_pieces(control) -> list[tuple[float, float]]:
    pieces = [(float(d), float(al)) for d, al in control]
    if not pieces:
        raise ControlError("empty control")
    for k, (d, al) in enumerate(pieces):
        if not d >= 0 or not math.isfinite(d) or not math.isfinite(al):
            raise ControlError(f"piece {k}: invalid (duration, alpha) = ({d}, {al})")
    return pieces


def evaluate_cost(problem: ControlProblem, control: Sequence[tuple[float, float]], x: float) -> Trajectory:
    """Price a piecewise-constant control given as ``(duration, alpha)`` pieces.

    Positions are exact; the running cost uses the composite trapezoid rule
    with sub-step at most ``1e-3`` inside every piece.
    """
    pieces = _as_pieces(control)
    total = sum(d for d, _ in pieces)
    T = problem.horizon
    if abs(total - T) > 1e-9 * max(1.0, T):
        raise ControlError(f"control pieces cover [0, {total}], expected [0, {T}]")
    times = [0.0]
    pos = [float(x)]
    integral = 0.0
    for k, (d, al) in enumerate(pieces):
        X0 = pos[-1]
        if d > 0:
            m = max(1, math.ceil(d / QUAD_STEP - 1e-9))
            s = np.linspace(0.0, d, m + 1)
            Xs = X0 + al * s
            a = np.broadcast_to(np.asarray(problem.a(Xs), dtype=float), Xs.shape)
            over = np.abs(al) - a
            if np.any(over > 1e-12 * max(1.0, abs(al))):
                j = int(np.argmax(over))
                raise ControlError(
                    f"piece {k}: |alpha|={abs(al)} exceeds the speed bound a={a[j]} at X={Xs[j]}")
            ls = np.broadcast_to(np.asarray(problem.l(Xs), dtype=float), Xs.shape)
            integral += float(np.sum(0.5 * (ls[1:] + ls[:-1]))) * (d / m)
        times.append(times[-1] + d)
        pos.append(X0 + al * d)
    cost = integral + float(problem.u0(pos[-1]))
    return Trajectory(np.array(times), np.array(pos), np.array([al for _, al in pieces]), cost)


def value_function_dp(
    problem: ControlProblem,
    grid: Grid,
    dt: float | None = None,
    snapshot_stride: int = 1,
) -> SnapshotHistory:
    """``V(x, t + dt) = min_{|y - x| <= a(x) dt} V(y, t) + dt l(x)`` with ``V(., 0) = u0``.

    Reachable intervals are cut at the grid ends and ``V(., t)`` is read by
    linear interpolation, so the minimum is attained at an interval end or
    at a node inside. Slices carry the same trust intervals as
    :func:`hjlongtime.cauchy.solve`.
    """
    a = np.broadcast_to(np.asarray(sample(problem.speed, grid), dtype=float), grid.x.shape)
    if np.any(a <= 0):
        raise ValueError("speed must be positive")
    bound = grid.dx / float(np.max(a))
    T = problem.horizon
    if dt is None:
        nsteps = max(1, math.ceil(T / (0.9 * bound) - 1e-9))
        dt = T / nsteps
    else:
        if dt > bound * (1 + 1e-12):
            raise CFLError(f"dt={dt} exceeds dx/max a={bound}")
        nsteps = int(round(T / dt))
        if abs(nsteps * dt - T) > 1e-9 * T:
            raise ValueError("dt must divide the horizon")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    _check_trust(grid, nsteps, dt)

    x = grid.x
    dx = grid.dx
    lv = sample(problem.running_cost, grid)
    reach = a * dt
    y_lo = np.clip(x - reach, grid.x_min, grid.x_max)
    y_hi = np.clip(x + reach, grid.x_min, grid.x_max)
    # node offsets j with |j| dx inside the reachable interval, per node
    jmax = int(math.floor(float(np.max(reach)) / dx + 1e-12))
    idx = np.arange(grid.n)
    offsets = []
    for j in range(-jmax, jmax + 1):
        if j == 0:
            continue
        src = idx + j
        ok = (src >= 0) & (src < grid.n) & (reach >= abs(j) * dx)
        if ok.any():
            offsets.append((np.flatnonzero(ok), src[ok]))

    keep = sorted(set(range(0, nsteps + 1, snapshot_stride)) | {nsteps})
    V = sample(problem.terminal_cost, grid)
    stored = [V.copy()]
    for k in range(1, nsteps + 1):
        best = np.minimum(interp_nodal(grid, V, y_lo), interp_nodal(grid, V, y_hi))
        best = np.minimum(best, V)
        for dst, src in offsets:
            best[dst] = np.minimum(best[dst], V[src])
        V = best + dt * lv
        if k in keep:
            stored.append(V.copy())
    steps = np.array(keep)
    lo, hi = _trust(grid, steps)
    return SnapshotHistory(grid, steps * dt, np.array(stored), lo, hi, 0.0, dt, DP_SCHEME,
                           {"nsteps": nsteps, "stride": snapshot_stride})


def _candidates(grid: Grid, X: float, h: float) -> np.ndarray:
    lo = max(X - h, grid.x_min)
    hi = min(X + h, grid.x_max)
    inside = grid.x[(grid.x > lo) & (grid.x < hi)]
    return np.unique(np.concatenate([[lo, hi, min(max(X, lo), hi)], inside]))


def synthesize_trajectory(
    history: SnapshotHistory,
    problem: ControlProblem,
    x: float,
    tie_tol: float = 1e-12,
) -> Trajectory:
    """Greedy optimal control read from a stride-1 value-function history.

    At remaining horizon ``tau`` the state moves to the reachable point that
    minimizes ``V(., tau - dt)``; ties go to the smaller ``|y|``, then left.
    The returned trajectory is priced by :func:`evaluate_cost`.
    """
    g = history.grid
    dts = np.diff(history.times)
    if len(dts) == 0 or np.any(np.abs(dts - history.dt) > 1e-9 * history.dt):
        raise ValueError("synthesis needs a history stored at every step")
    T = float(history.times[-1])
    if abs(T - problem.horizon) > 1e-9 * max(1.0, T):
        raise ValueError(f"history ends at t={T}, problem horizon is {problem.horizon}")
    dt = history.dt
    N = len(history) - 1
    X = float(x)
    controls = []
    for step in range(N):
        k = N - step  # slice of the current remaining horizon
        if not history.trust_lo[k] - 1e-12 <= X <= history.trust_hi[k] + 1e-12:
            raise ControlError(
                f"trajectory left the trust window at s={step * dt} (X={X}, "
                f"window [{history.trust_lo[k]}, {history.trust_hi[k]}])")
        h = float(problem.a(X)) * dt
        ys = _candidates(g, X, h)
        vals = interp_nodal(g, history.values[k - 1], ys)
        vmin = float(np.min(vals))
        tied = ys[vals <= vmin + tie_tol * max(1.0, abs(vmin))]
        order = np.lexsort((tied, np.abs(tied)))
        y = float(tied[order[0]])
        controls.append((y - X) / dt)
        X = y
    return evaluate_cost(problem, [(dt, al) for al in controls], x)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """``# cost=<J>`` line, then ``s,X,alpha`` rows (the last row repeats the last control)."""
    alphas = np.append(traj.controls, traj.controls[-1])
    with open(path, "w") as fh:
        fh.write(f"# cost={float(traj.cost)!r}\n")
        fh.write("s,X,alpha\n")
        for s, X, al in zip(traj.times, traj.positions, alphas):
            fh.write(f"{float(s)!r},{float(X)!r},{float(al)!r}\n")


def read_trajectory_csv(path) -> Trajectory:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("# cost="):
        raise ValueError(f"{path}: expected '# cost=' metadata line")
    cost = float(lines[0][len("# cost="):])
    if lines[1] != "s,X,alpha":
        raise ValueError(f"{path}: expected header 's,X,alpha'")
    rows = []
    for n, ln in enumerate(lines[2:], 3):
        cells = ln.split(",")
        if len(cells) != 3:
            raise ValueError(f"{path}: line {n}: expected 3 cells")
        rows.append([float(c) for c in cells])
    arr = np.array(rows)
    return Trajectory(arr[:, 0], arr[:, 1], arr[:-1, 2], cost)
