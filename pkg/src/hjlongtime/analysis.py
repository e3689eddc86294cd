"""Large-time behaviour: time convolutions, min-combination, stationary
residuals and the monitors that turn convergence statements into reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cauchy import SnapshotHistory
from .ergodic import AubrySet, ErgodicSolution
from .fields import FieldLike, ScalarField, interp_linear, sample
from .hamiltonian import GODUNOV, LAX_FRIEDRICHS, AuditBox, HamiltonianSpec, lf_dissipation, numerical_H
from .reports import CheckReport, block

__all__ = [
    "inf_convolution",
    "sup_convolution",
    "min_combine",
    "StationaryResidual",
    "residual_stationary",
    "ConvergenceReport",
    "convergence_monitor",
    "decrease_on_aubry",
    "sandwich_bounds",
    "dependence_cone_check",
]


# ------------------------------------------------------------ convolutions

def _convolve(history: SnapshotHistory, eps: float, sign: int) -> SnapshotHistory:
    if len(history) < 2:
        raise ValueError("time convolution needs at least 2 stored slices")
    if not eps > 0:
        raise ValueError("eps must be positive")
    t = history.times
    u = history.original_values()
    out = np.empty_like(u)
    for k in range(len(t)):
        pen = (t[k] - t) ** 2 / eps**2
        if sign < 0:
            out[k] = np.min(u + pen[:, None], axis=0)
        else:
            out[k] = np.max(u - pen[:, None], axis=0)
    # minimizers stay within eps * sqrt(osc) of t; earlier times feel the t = 0 cut
    osc = float(np.max(np.max(u, axis=0) - np.min(u, axis=0)))
    reach = eps * math.sqrt(osc)
    lo = np.array(history.trust_lo)
    hi = np.array(history.trust_hi)
    for k in range(len(t)):
        near = np.abs(t - t[k]) <= reach + 1e-12
        lo[k] = np.max(history.trust_lo[near])
        hi[k] = np.min(history.trust_hi[near])
    name = "inf" if sign < 0 else "sup"
    return SnapshotHistory(history.grid, t, out, lo, hi, 0.0, history.dt, history.scheme,
                           {**history.meta, "convolution": name, "eps": eps, "valid_from": reach})


def inf_convolution(history: SnapshotHistory, eps: float) -> SnapshotHistory:
    """``min_s u(x, s) + (t - s)^2 / eps^2`` over the stored times ``s``.

    Values are in the original scale. ``meta["valid_from"]`` is the time
    before which the minimization may be cut by the initial time.
    """
    return _convolve(history, eps, -1)


def sup_convolution(history: SnapshotHistory, eps: float) -> SnapshotHistory:
    """``max_s u(x, s) - (t - s)^2 / eps^2`` over the stored times ``s``."""
    return _convolve(history, eps, +1)


def min_combine(f: ScalarField, g: ScalarField) -> ScalarField:
    if f.grid != g.grid:
        raise ValueError("min_combine needs fields on the same grid")
    return ScalarField(f.grid, np.minimum(f.values, g.values))


# ---------------------------------------------------------------- residual

@dataclass(frozen=True)
class StationaryResidual:
    """Residual of ``H(x, Dv) = l + c`` at the interior nodes."""

    field: ScalarField
    sup: float
    l1: float

    def sup_excluding(self, x0: float, radius: float) -> float:
        """Sup-norm over interior nodes farther than ``radius`` from ``x0``."""
        m = np.abs(self.field.x - x0) > radius
        return float(np.max(np.abs(self.field.values[m]))) if m.any() else 0.0


def residual_stationary(
    v: ScalarField,
    H: HamiltonianSpec,
    l: FieldLike,
    c: float,
    scheme: str | None = None,
    theta: float | None = None,
) -> StationaryResidual:
    g = v.grid
    d = np.diff(v.values) / g.dx
    pm, pp = d[:-1], d[1:]
    xi = g.x[1:-1]
    scheme = scheme or (GODUNOV if H.is_eikonal else LAX_FRIEDRICHS)
    if scheme == LAX_FRIEDRICHS and theta is None:
        P = float(np.max(np.abs(d))) + 1.0
        theta = lf_dissipation(H, AuditBox(g.x_min, g.x_max, -P, P))
    Hn = numerical_H(H, xi, pm, pp, theta or 0.0, scheme=scheme)
    r = Hn - sample(l, g)[1:-1] - c
    sub, _ = g.subgrid(g.x[1], g.x[-2])
    return StationaryResidual(ScalarField(sub, r), float(np.max(np.abs(r))),
                              float(np.sum(np.abs(r)) * g.dx))


# ------------------------------------------------------------- convergence

@dataclass
class ConvergenceReport:
    """``d(t) = sup_window |u(., t) + c t - v|`` per stored slice and its verdict.

    ``converged`` requires ``d <= tol`` at every stored time from ``T_star``
    on, and ``T_star`` must not be later than the start of the trailing
    band (the last quarter of the stored times).
    """

    window: tuple[float, float]
    times: np.ndarray
    d: np.ndarray
    tol: float
    c: float
    converged: bool
    T_star: float | None
    oscillation: float
    probe: float | None = None
    probe_oscillation: float = float("nan")
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "converged" if self.converged else "not-converged"

    def to_text(self, name: str = "convergence") -> str:
        return block(name, {
            "verdict": self.verdict,
            "window": list(self.window),
            "tol": self.tol,
            "c": self.c,
            "T_star": "none" if self.T_star is None else self.T_star,
            "final_distance": float(self.d[-1]),
            "max_trailing_distance": float(np.max(self.d[self._band()])),
            "oscillation": self.oscillation,
            "probe": "none" if self.probe is None else self.probe,
            "probe_oscillation": self.probe_oscillation,
        })

    def _band(self) -> np.ndarray:
        t = self.times
        return t >= t[0] + 0.75 * (t[-1] - t[0]) - 1e-12


def convergence_monitor(
    history: SnapshotHistory,
    target: ErgodicSolution | FieldLike,
    window: tuple[float, float],
    tol: float,
    c: float | None = None,
    probe: float | None = None,
) -> ConvergenceReport:
    """Distance of ``u + c t`` to ``target`` on ``window`` over the stored slices.

    ``c`` defaults to the target's constant. ``probe`` adds the oscillation
    of ``u(probe, t) + c t`` over the trailing quarter, which detects
    periodic profiles whose distance to the target stays constant.
    """
    if isinstance(target, ErgodicSolution):
        v_target = target.v
        c = target.c if c is None else c
    else:
        v_target = target
        c = 0.0 if c is None else c
    g = history.grid
    if window[0] < history.trust_lo[-1] - 1e-12 or window[1] > history.trust_hi[-1] + 1e-12:
        raise ValueError(
            f"window {window} leaves the final trust interval "
            f"[{history.trust_lo[-1]}, {history.trust_hi[-1]}]")
    m = g.mask(*window)
    xs = g.x[m]
    v = sample(v_target, g)[m] if not isinstance(v_target, ScalarField) else interp_linear(v_target, xs)
    u = history.original_values()
    w = u[:, m] + c * history.times[:, None]
    d = np.max(np.abs(w - v[None, :]), axis=1)
    t = history.times
    above = np.flatnonzero(d > tol)
    if len(above) == 0:
        T_star = float(t[0])
    elif above[-1] == len(t) - 1:
        T_star = None
    else:
        T_star = float(t[above[-1] + 1])
    band = t >= t[0] + 0.75 * (t[-1] - t[0]) - 1e-12
    converged = T_star is not None and T_star <= float(t[band][0])
    osc = float(np.max(d[band]) - np.min(d[band]))
    p_osc = float("nan")
    if probe is not None:
        wp = np.array([interp_linear(ScalarField(g, u[k]), probe) for k in np.flatnonzero(band)])
        wp = wp + c * t[band]
        p_osc = float(np.max(wp) - np.min(wp))
    return ConvergenceReport(tuple(window), t.copy(), d, tol, float(c), converged, T_star, osc, probe, p_osc)


# ----------------------------------------------------------- other monitors

def decrease_on_aubry(history: SnapshotHistory, aubry: AubrySet, tol: float = 1e-10) -> CheckReport:
    """Stored (scheme-scale) values at argmin nodes never increase by more than ``tol``."""
    g = history.grid
    nodes = []
    for xa in aubry.points:
        if g.x_min <= xa <= g.x_max:
            nodes.append(g.index_of(xa, tol=1e-6))
    if not nodes:
        raise ValueError("no Aubry node on the history grid")
    vals = history.values[:, nodes]
    inc = np.diff(vals, axis=0)
    k, j = np.unravel_index(int(np.argmax(inc)), inc.shape)
    worst = float(inc[k, j])
    return CheckReport("decrease_on_aubry", worst <= tol, tol - worst,
                       {"t": float(history.times[k + 1]), "x": float(g.x[nodes[j]])},
                       {"nodes": len(nodes), "max_increase": worst, "tol": tol})


def sandwich_bounds(
    history: SnapshotHistory,
    v1: ErgodicSolution,
    v2: ErgodicSolution,
    t_from: float | None = None,
) -> tuple[float, float]:
    """Smallest ``(k1, k2)`` with ``v1 - k1 <= u <= v2 + k2`` for ``t >= t_from``.

    ``t_from`` defaults to half the final time; the comparison uses each
    slice's trust interval cut to the nodes both solutions cover.
    """
    if t_from is None:
        t_from = 0.5 * float(history.times[-1])
    g = history.grid
    lo_v = max(v1.v.grid.x_min, v2.v.grid.x_min)
    hi_v = min(v1.v.grid.x_max, v2.v.grid.x_max)
    ks = np.flatnonzero(history.times >= t_from - 1e-12)
    k1 = k2 = -np.inf
    for k in ks:
        lo = max(history.trust_lo[k], lo_v)
        hi = min(history.trust_hi[k], hi_v)
        if hi <= lo:
            raise ValueError(f"trust interval at t={history.times[k]} misses the solutions' domain")
        m = g.mask(lo, hi)
        xs = g.x[m]
        u = history.original(k)[m]
        k1 = max(k1, float(np.max(interp_linear(v1.v, xs) - u)))
        k2 = max(k2, float(np.max(u - interp_linear(v2.v, xs))))
    return k1, k2


def dependence_cone_check(
    run_A: SnapshotHistory,
    run_B: SnapshotHistory,
    x0: float,
    r: float,
    C_H: float,
    require_identical_ball: bool = True,
    tol: float = 1e-10,
) -> CheckReport:
    """Finite speed of propagation between two runs.

    With ``delta = max_{|x - x0| <= r} |uA0 - uB0|`` every stored slice must
    satisfy ``|uA - uB| <= delta + tol`` on the exponential cone
    ``e^{C_H t}(1 + |x - x0|) - 1 <= r`` and on the linear numerical cone
    ``|x - x0| <= r - k dx`` after ``k`` steps (exact equality there when
    ``delta = 0``). With ``require_identical_ball`` a nonzero ``delta`` is a
    precondition error.
    """
    if run_A.grid != run_B.grid or not np.array_equal(run_A.times, run_B.times):
        raise ValueError("runs must share grid and stored times")
    g = run_A.grid
    dist = np.abs(g.x - x0)
    ball = dist <= r + 1e-9 * g.dx
    uA, uB = run_A.original_values(), run_B.original_values()
    delta = float(np.max(np.abs(uA[0, ball] - uB[0, ball])))
    if require_identical_ball and delta != 0.0:
        raise ValueError(f"initial data differ inside B({x0}, {r}) by {delta}")
    dt = run_A.dt
    worst_exp = 0.0
    worst_lin = 0.0
    slices_exp = 0
    witness = None
    for k, t in enumerate(run_A.times):
        diff = np.abs(uA[k] - uB[k])
        rad = (1.0 + r) * math.exp(-C_H * t) - 1.0
        m = dist <= rad
        if m.any():
            slices_exp += 1
            j = int(np.argmax(diff[m]))
            if diff[m][j] > worst_exp:
                worst_exp = float(diff[m][j])
                witness = {"t": float(t), "x": float(g.x[m][j]), "cone": "exponential"}
        steps = int(round(t / dt))
        ml = dist <= r - steps * g.dx + 1e-9 * g.dx
        if ml.any():
            dl = float(np.max(diff[ml]))
            if dl > worst_lin:
                worst_lin = dl
                witness = {"t": float(t), "x": float(g.x[ml][int(np.argmax(diff[ml]))]), "cone": "linear"}
    lin_ok = worst_lin == 0.0 if delta == 0.0 else worst_lin <= delta + tol
    exp_ok = worst_exp <= delta + tol
    margin = delta + tol - max(worst_exp, worst_lin)
    return CheckReport("dependence_cone", bool(lin_ok and exp_ok), margin, witness,
                       {"delta": delta, "max_exponential_cone": worst_exp,
                        "max_linear_cone": worst_lin, "exponential_slices": slices_exp,
                        "linear_identical": worst_lin == 0.0, "C_H": C_H})
