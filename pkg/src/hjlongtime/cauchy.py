"""Explicit monotone time stepping for ``u_t + H(x, u_x) = l(x)`` on a truncated grid.

The computational interval is finite, so values near its ends are polluted
by the boundary closure. Every stored slice carries a *trust interval*: the
nodes the boundary cannot have reached yet. An explicit three-point scheme
moves information by at most one node per step, so after ``k`` steps the
trust interval is the domain shrunk by ``k + 2`` nodes on each side. With
``dt <= cfl * dx / speed`` this cone is never narrower than the physical one
(``speed * t``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import FieldLike, Grid, ScalarField, interp_nodal, sample
from .hamiltonian import (
    GODUNOV,
    LAX_FRIEDRICHS,
    AuditBox,
    HamiltonianSpec,
    audit_assumptions,
    eval_H,
    lf_dissipation,
    numerical_H,
)
from .reports import CheckReport

__all__ = [
    "SEMI_LAGRANGIAN",
    "ONE_SIDED",
    "FROZEN",
    "CFLError",
    "TrustRegionError",
    "NonFiniteError",
    "AssumptionError",
    "CauchyProblem",
    "SnapshotHistory",
    "normalize_cost",
    "time_step",
    "solve",
    "build_supersolution",
    "sandwich_check",
]

SEMI_LAGRANGIAN = "semi-lagrangian"
SCHEMES = (GODUNOV, LAX_FRIEDRICHS, SEMI_LAGRANGIAN)
ONE_SIDED = "one-sided"
FROZEN = "frozen"
BOUNDARIES = (ONE_SIDED, FROZEN)
DEFAULT_SLICES = 200


class CFLError(ValueError):
    """Requested time step exceeds the monotonicity bound."""


class TrustRegionError(RuntimeError):
    """The trust interval vanishes before the final time."""

    def __init__(self, msg: str, t_vanish: float):
        super().__init__(msg)
        self.t_vanish = t_vanish


class NonFiniteError(FloatingPointError):
    def __init__(self, msg: str, node: int, t: float):
        super().__init__(msg)
        self.node = node
        self.t = t


class AssumptionError(ValueError):
    def __init__(self, msg: str, report):
        super().__init__(msg)
        self.report = report


@dataclass(frozen=True)
class CauchyProblem:
    """``u_t + H(x, Du) = l(x)``, ``u(., 0) = u0`` on ``u0.grid`` up to time ``T``.

    With ``normalize`` (the default) the scheme evolves ``u - t min l`` with
    cost ``l - min l``; the history records the subtracted rate in ``shift``.
    ``dt`` overrides the CFL-derived step (it must respect the bound).
    """

    H: HamiltonianSpec
    l: ScalarField
    u0: ScalarField
    T: float
    scheme: str = GODUNOV
    cfl: float = 0.9
    boundary: str = ONE_SIDED
    snapshot_stride: int | None = None
    normalize: bool = True
    theta: float | None = None
    dt: float | None = None
    check_assumptions: bool = True

    def __post_init__(self):
        if self.l.grid != self.u0.grid:
            raise ValueError("l and u0 must live on the same grid")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if not 0 < self.cfl <= 1:
            raise CFLError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.scheme in (GODUNOV, SEMI_LAGRANGIAN) and not self.H.is_eikonal:
            raise ValueError(f"{self.scheme} needs an Eikonal Hamiltonian")
        if self.snapshot_stride is not None and self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")

    @property
    def grid(self) -> Grid:
        return self.u0.grid


@dataclass(frozen=True)
class SnapshotHistory:
    """Stored time slices of a run.

    ``values[k]`` is the scheme state at ``times[k]`` (the normalized
    evolution when ``shift != 0``); :meth:`original` adds ``shift * t`` back.
    Nodes in ``[trust_lo[k], trust_hi[k]]`` are certified free of boundary
    influence.
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    trust_lo: np.ndarray
    trust_hi: np.ndarray
    shift: float = 0.0
    dt: float = float("nan")
    scheme: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("times", "values", "trust_lo", "trust_hi"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.values.shape != (len(self.times), self.grid.n):
            raise ValueError("values must have shape (len(times), grid.n)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def trust_radius(self) -> np.ndarray:
        return 0.5 * (self.trust_hi - self.trust_lo)

    @property
    def fields(self) -> list[ScalarField]:
        return [ScalarField(self.grid, v) for v in self.values]

    def original_values(self) -> np.ndarray:
        return self.values + self.shift * self.times[:, None]

    def original(self, k: int) -> np.ndarray:
        return self.values[k] + self.shift * self.times[k]

    def field(self, k: int, original: bool = True) -> ScalarField:
        return ScalarField(self.grid, self.original(k) if original else self.values[k])

    def trust_mask(self, k: int) -> np.ndarray:
        return self.grid.mask(self.trust_lo[k], self.trust_hi[k])

    def index_at(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"no stored slice at t={t}")
        return k

    def with_values(self, values: np.ndarray, **meta) -> "SnapshotHistory":
        return SnapshotHistory(self.grid, self.times, values, self.trust_lo, self.trust_hi,
                               self.shift, self.dt, self.scheme, {**self.meta, **meta})


def normalize_cost(l: ScalarField) -> tuple[ScalarField, float]:
    """Return ``(l - min l, min l)``; the returned field has minimum exactly 0."""
    shift = float(np.min(l.values))
    return ScalarField(l.grid, l.values - shift), shift


def _speed_values(H: HamiltonianSpec, grid: Grid) -> np.ndarray:
    return np.broadcast_to(np.asarray(H.speed(grid.x), dtype=float), grid.x.shape).copy()


def _slope_bound(problem: CauchyProblem) -> float:
    g = problem.grid
    du = np.max(np.abs(np.diff(problem.u0.values))) / g.dx
    nu = np.broadcast_to(np.asarray(problem.H.nu(g.x), dtype=float), g.x.shape)
    return float(max(1.0, 2.0 * du + np.max(np.abs(problem.l.values)) / np.min(nu)))


def time_step(problem: CauchyProblem) -> tuple[float, int, float]:
    """``(dt, nsteps, theta)`` with ``nsteps * dt == T`` and ``dt`` within the CFL bound.

    ``theta`` is the dissipation / maximal speed used for the bound.
    """
    g = problem.grid
    if problem.scheme == SEMI_LAGRANGIAN or problem.scheme == GODUNOV:
        theta = float(np.max(_speed_values(problem.H, g)))
    else:
        P = _slope_bound(problem)
        est = lf_dissipation(problem.H, AuditBox(g.x_min, g.x_max, -P, P, min(g.n, 201), 401))
        if problem.theta is not None and problem.theta < est * (1 - 1e-9):
            raise CFLError(f"theta={problem.theta} is below the sampled sup|dH/dp|={est}")
        theta = float(problem.theta if problem.theta is not None else est)
    bound = g.dx / theta
    if problem.dt is not None:
        if problem.dt > bound * (1 + 1e-12):
            raise CFLError(f"dt={problem.dt} exceeds the stability bound dx/theta={bound}")
        nsteps = int(round(problem.T / problem.dt))
        if abs(nsteps * problem.dt - problem.T) > 1e-9 * problem.T:
            raise ValueError("explicit dt must divide T")
        return float(problem.dt), nsteps, theta
    nsteps = max(1, math.ceil(problem.T / (problem.cfl * bound) - 1e-9))
    return problem.T / nsteps, nsteps, theta


def _trust(grid: Grid, steps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    off = (steps + 2) * grid.dx
    return grid.x_min + off, grid.x_max - off


def _check_trust(grid: Grid, nsteps: int, dt: float):
    half_nodes = (grid.n - 1) // 2
    if nsteps + 2 > half_nodes:
        k_vanish = max(half_nodes - 2, 0)
        raise TrustRegionError(
            f"trust interval empties at t={k_vanish * dt:.6g} (step {k_vanish}) before T={nsteps * dt:.6g}; "
            f"widen the domain or shorten T",
            k_vanish * dt,
        )


def _audit_H(problem: CauchyProblem):
    g = problem.grid
    P = _slope_bound(problem)
    rep = audit_assumptions(problem.H, None, AuditBox(g.x_min, g.x_max, -P, P, min(g.n, 41), 41))
    if not rep.passed:
        raise AssumptionError(f"Hamiltonian fails {rep.failures()} on the run box", rep)


def solve(problem: CauchyProblem) -> SnapshotHistory:
    """Run the explicit scheme to ``T`` and return the stored slices."""
    if problem.check_assumptions:
        _audit_H(problem)
    g = problem.grid
    dt, nsteps, theta = time_step(problem)
    _check_trust(g, nsteps, dt)
    if problem.normalize:
        l_run, shift = normalize_cost(problem.l)
    else:
        l_run, shift = problem.l, 0.0
    lv = l_run.values
    x = g.x
    dx = g.dx
    stride = problem.snapshot_stride or max(1, round(nsteps / DEFAULT_SLICES))
    keep = sorted(set(range(0, nsteps + 1, stride)) | {nsteps})

    H = problem.H
    scheme = problem.scheme
    a = _speed_values(H, g) if H.is_eikonal else None

    frozen = None
    if problem.boundary == FROZEN:
        u0 = problem.u0.values
        p_left = (u0[1] - u0[0]) / dx
        p_right = (u0[-1] - u0[-2]) / dx
        rate_l = lv[0] - eval_H(H, x[0], p_left)
        rate_r = lv[-1] - eval_H(H, x[-1], p_right)
        frozen = (u0[0], rate_l, u0[-1], rate_r)

    if scheme == SEMI_LAGRANGIAN:
        h = a * dt
        kmax = int(math.floor(np.max(h) / dx + 1e-12))
        q_lo = np.clip(x - h, g.x_min, g.x_max)
        q_hi = np.clip(x + h, g.x_min, g.x_max)

    u = np.array(problem.u0.values, dtype=float)
    stored = [u.copy()]
    for k in range(1, nsteps + 1):
        if scheme == SEMI_LAGRANGIAN:
            cand = np.minimum(u, np.minimum(interp_nodal(g, u, q_lo), interp_nodal(g, u, q_hi)))
            for j in range(1, kmax + 1):
                reach = h >= j * dx
                left = np.where(reach[j:], u[:-j], np.inf)
                right = np.where(reach[:-j], u[j:], np.inf)
                cand[j:] = np.minimum(cand[j:], left)
                cand[:-j] = np.minimum(cand[:-j], right)
            u = cand + dt * lv
        else:
            d = np.diff(u) / dx
            pm = np.empty_like(u)
            pp = np.empty_like(u)
            pm[1:] = d
            pp[:-1] = d
            pm[0] = pp[0]
            pp[-1] = pm[-1]
            Hn = numerical_H(H, x, pm, pp, theta, scheme=scheme)
            u = u - dt * (Hn - lv)
        if frozen is not None:
            t = k * dt
            u[0] = frozen[0] + t * frozen[1]
            u[-1] = frozen[2] + t * frozen[3]
        if not np.all(np.isfinite(u)):
            i = int(np.flatnonzero(~np.isfinite(u))[0])
            raise NonFiniteError(f"non-finite value at node {i} (x={x[i]}), t={k * dt}", i, k * dt)
        if k in keep:
            stored.append(u.copy())

    steps = np.array(keep)
    lo, hi = _trust(g, steps)
    return SnapshotHistory(
        g, steps * dt, np.array(stored), lo, hi, shift, dt, scheme,
        {"theta": theta, "nsteps": nsteps, "stride": stride, "cfl": problem.cfl,
         "boundary": problem.boundary},
    )


def build_supersolution(u0: ScalarField, l: ScalarField, c: float, nu: FieldLike) -> ScalarField:
    """Radial supersolution ``v+(x) = f0(|x|) + int_0^|x| f1`` lying above ``u0``.

    ``f0`` is the nonnegative nondecreasing radial majorant of ``u0`` and
    ``f1`` the nondecreasing radial majorant of ``(l + c)/nu`` with
    ``f1(0) = 0``, integrated by the trapezoid rule over the node radii.
    Every outward one-sided slope of the result is at least ``(l + c)/nu``
    at its node.
    """
    g = u0.grid
    if l.grid != g:
        raise ValueError("u0 and l must share a grid")
    nuv = sample(nu, g)
    if np.any(nuv <= 0):
        raise ValueError("nu must be positive")
    ratio = (l.values + c) / nuv
    if np.any(ratio < -1e-12):
        raise ValueError("l + c must be nonnegative")
    r = np.abs(g.x)
    radii, inv = np.unique(r, return_inverse=True)
    # radial maxima of u0 and of the slope requirement, then running maxima
    u_rad = np.full(radii.shape, -np.inf)
    g_rad = np.full(radii.shape, -np.inf)
    np.maximum.at(u_rad, inv, u0.values)
    np.maximum.at(g_rad, inv, ratio)
    f0 = np.maximum(np.maximum.accumulate(u_rad), 0.0)
    f1 = np.maximum.accumulate(np.maximum(g_rad, 0.0))
    if radii[0] == 0.0:
        # f1(0) = 0 forces the first segment to average >= the requirement at 0
        need0 = f1[0]
        f1 = f1.copy()
        f1[0] = 0.0
        if len(f1) > 1:
            f1[1] = max(f1[1], 2.0 * need0)
            f1 = np.maximum.accumulate(f1)
        integral = np.concatenate([[0.0], np.cumsum(0.5 * (f1[1:] + f1[:-1]) * np.diff(radii))])
    else:
        # implicit f1(0) = 0 at radius 0, not a node
        first = 0.5 * f1[0] * radii[0]
        integral = first + np.concatenate([[0.0], np.cumsum(0.5 * (f1[1:] + f1[:-1]) * np.diff(radii))])
        # the innermost radius still needs an outward slope of f1[0]; the
        # trapezoid segments beyond it average at least f1[0] because f1 is nondecreasing
    v = f0[inv] + integral[inv]
    return ScalarField(g, v)


def sandwich_check(
    history: SnapshotHistory,
    v_minus: FieldLike,
    v_plus: FieldLike,
    c: float,
    tol: float = 1e-9,
) -> CheckReport:
    """Check ``v- <= u + c t <= v+`` on each slice's trust interval.

    ``u`` is the original-scale solution (``history.original``).
    """
    g = history.grid
    vm = sample(v_minus, g)
    vp = sample(v_plus, g)
    worst = np.inf
    witness = None
    per_slice = []
    for k, t in enumerate(history.times):
        m = history.trust_mask(k)
        w = history.original(k)[m] + c * t
        lower = w - vm[m]
        upper = vp[m] - w
        marg = np.minimum(lower, upper) + tol
        j = int(np.argmin(marg))
        per_slice.append(bool(marg[j] >= 0))
        if marg[j] < worst:
            worst = float(marg[j])
            side = "lower" if lower[j] <= upper[j] else "upper"
            witness = {"t": float(t), "x": float(g.x[m][j]), "node": int(np.flatnonzero(m)[j]),
                       "side": side}
    passed = all(per_slice)
    return CheckReport("sandwich", passed, worst - tol, witness,
                       {"c": c, "slices": len(per_slice), "failing_slices": per_slice.count(False),
                        "slice_verdicts": per_slice})
