"""Hamiltonians ``H(x, p)``, monotone numerical Hamiltonians and assumption audits.

Two families are supported:

* Eikonal, ``H(x, p) = a(x) |p|`` with ``a > 0``;
* Custom, any vectorized ``(x, p) -> H`` supplied by the caller.

Godunov fluxes are only available for the Eikonal family; Lax-Friedrichs
works for both.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import FieldLike, Grid, ScalarField, interp_linear, sample
from .reports import CheckReport, block

__all__ = [
    "HamiltonianSpec",
    "AuditBox",
    "AuditReport",
    "eval_H",
    "numerical_H",
    "lf_dissipation",
    "audit_assumptions",
]

GODUNOV = "godunov"
LAX_FRIEDRICHS = "lax-friedrichs"


def _as_callable(f: FieldLike) -> Callable:
    if isinstance(f, ScalarField):
        return f
    if callable(f):
        return f
    c = float(f)
    return lambda x: np.full(np.shape(x), c) if np.ndim(x) else c


@dataclass(frozen=True)
class HamiltonianSpec:
    """An evaluable Hamiltonian together with the constants the theory needs.

    Build instances with :meth:`eikonal` or :meth:`custom`.

    Attributes
    ----------
    kind : "eikonal" or "custom"
    nu : coercivity weight, ``H(x, p) >= nu(x) |p|``
    C_H : global Lipschitz constant of ``H`` in ``p``
    m, m_inv : increasing upper envelope ``H(x, p) <= m(|p|)`` and its inverse
    """

    kind: str
    func: Callable = field(repr=False)
    nu: Callable = field(repr=False)
    C_H: float
    m: Callable = field(repr=False)
    m_inv: Callable = field(repr=False)
    speed: Callable | None = field(default=None, repr=False)
    a_max: float | None = None

    @classmethod
    def eikonal(cls, a: FieldLike = 1.0, grid: Grid | None = None) -> "HamiltonianSpec":
        """``H(x, p) = a(x)|p|``.

        ``a`` may be a constant, a :class:`ScalarField` or a vectorized
        callable; a callable needs ``grid`` to estimate ``sup a``.
        """
        if isinstance(a, ScalarField):
            vals = a.values
        elif callable(a):
            if grid is None:
                raise ValueError("a callable speed needs a grid to sample sup a")
            vals = sample(a, grid)
        else:
            vals = np.array([float(a)])
        if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
            raise ValueError("Eikonal speed must be finite and > 0")
        a_max = float(np.max(vals))
        speed = _as_callable(a)

        def func(x, p):
            return speed(x) * np.abs(p)

        return cls(
            kind="eikonal",
            func=func,
            nu=speed,
            C_H=a_max,
            m=lambda r: a_max * np.asarray(r),
            m_inv=lambda s: np.asarray(s) / a_max,
            speed=speed,
            a_max=a_max,
        )

    @classmethod
    def custom(
        cls,
        func: Callable,
        nu: FieldLike = 1.0,
        C_H: float = 1.0,
        m: Callable | None = None,
        m_inv: Callable | None = None,
    ) -> "HamiltonianSpec":
        """Arbitrary ``H`` given as a vectorized ``func(x, p)``.

        Without an explicit envelope, ``m(r) = C_H r`` is declared.
        """
        if (m is None) != (m_inv is None):
            raise ValueError("give both m and m_inv or neither")
        if m is None:
            m = lambda r: C_H * np.asarray(r)  # noqa: E731
            m_inv = lambda s: np.asarray(s) / C_H  # noqa: E731
        return cls(kind="custom", func=func, nu=_as_callable(nu), C_H=float(C_H), m=m, m_inv=m_inv)

    @property
    def is_eikonal(self) -> bool:
        return self.kind == "eikonal"


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite input to Hamiltonian")


def eval_H(spec: HamiltonianSpec, x, p):
    """``H(x, p)``; broadcasts over array arguments."""
    _check_finite(x, p)
    out = spec.func(np.asarray(x, dtype=float), np.asarray(p, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def numerical_H(spec: HamiltonianSpec, x, p_minus, p_plus, theta: float = 0.0, scheme: str | None = None):
    """Monotone numerical Hamiltonian from backward/forward slopes.

    Eikonal specs default to the Godunov flux
    ``a(x) max(max(p-, 0), max(-p+, 0))``; custom specs use global
    Lax-Friedrichs ``H(x, (p- + p+)/2) - theta (p+ - p-)/2``.
    """
    if theta < 0:
        raise ValueError("theta must be >= 0")
    _check_finite(x, p_minus, p_plus)
    if scheme is None:
        scheme = GODUNOV if spec.is_eikonal else LAX_FRIEDRICHS
    x = np.asarray(x, dtype=float)
    pm = np.asarray(p_minus, dtype=float)
    pp = np.asarray(p_plus, dtype=float)
    if scheme == GODUNOV:
        if not spec.is_eikonal:
            raise ValueError("Godunov flux is implemented for Eikonal Hamiltonians only")
        out = spec.speed(x) * np.maximum(np.maximum(pm, 0.0), np.maximum(-pp, 0.0))
    elif scheme == LAX_FRIEDRICHS:
        out = spec.func(x, 0.5 * (pm + pp)) - theta * 0.5 * (pp - pm)
    else:
        raise ValueError(f"unknown flux {scheme!r}")
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class AuditBox:
    """Sampling lattice ``[x_min, x_max] x [p_min, p_max]``."""

    x_min: float
    x_max: float
    p_min: float
    p_max: float
    nx: int = 61
    np_: int = 81

    def __post_init__(self):
        if self.nx < 2 or self.np_ < 2:
            raise ValueError("audit needs at least 2 samples per axis")

    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    def ps(self) -> np.ndarray:
        ps = np.linspace(self.p_min, self.p_max, self.np_)
        if self.p_min < 0 < self.p_max:
            ps = np.union1d(ps, [0.0])
        return ps

    def describe(self) -> str:
        return (f"x in [{self.x_min!r}, {self.x_max!r}] ({self.nx} samples), "
                f"p in [{self.p_min!r}, {self.p_max!r}] ({self.np_} samples)")


def lf_dissipation(spec: HamiltonianSpec, box: AuditBox | Grid) -> float:
    """Upper bound of ``|dH/dp|`` on the box, the Lax-Friedrichs coefficient.

    Eikonal specs return ``sup a`` on the box's x-samples; custom specs use
    one-sided finite differences in ``p``.
    """
    xs = box.x if isinstance(box, Grid) else box.xs()
    if spec.is_eikonal:
        return float(np.max(np.broadcast_to(spec.speed(xs), xs.shape)))
    if isinstance(box, Grid):
        raise ValueError("custom Hamiltonians need an AuditBox with a p-range")
    ps = box.ps()
    X, P = np.meshgrid(xs, ps, indexing="ij")
    Hv = spec.func(X, P)
    slopes = np.abs(np.diff(Hv, axis=1)) / np.diff(ps)[None, :]
    return float(np.max(slopes))


def _values_at(f: FieldLike, xs: np.ndarray) -> np.ndarray:
    if isinstance(f, ScalarField):
        return np.asarray(interp_linear(f, xs), dtype=float)
    if callable(f):
        return np.broadcast_to(np.asarray(f(xs), dtype=float), xs.shape).copy()
    return np.full(xs.shape, float(f))


@dataclass
class AuditReport:
    """Per-assumption verdicts of :func:`audit_assumptions`."""

    box: str
    checks: dict[str, CheckReport]
    fitted_C_H: float
    k_R: dict[float, float]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]

    def to_text(self) -> str:
        head = block("audit", {
            "box": self.box,
            "verdict": "pass" if self.passed else "fail",
            "fitted_C_H": self.fitted_C_H,
            "k_R": {f"R={r!r}": k for r, k in self.k_R.items()},
        })
        return head + "".join(c.to_text() for c in self.checks.values())


def _worst(margin: np.ndarray, coords: dict[str, np.ndarray]) -> tuple[float, dict]:
    idx = np.unravel_index(int(np.argmin(margin)), margin.shape)
    return float(margin[idx]), {k: float(v[idx]) for k, v in coords.items()}


def audit_assumptions(
    spec: HamiltonianSpec,
    l: ScalarField | None,
    box: AuditBox,
    *,
    collar: float = 0.1,
    eta: float = 0.0,
    tol: float = 1e-12,
    radii=None,
) -> AuditReport:
    """Check the standing assumptions on a sampled lattice.

    Checks coercivity ``H >= nu|p|``, ``H(x,0) = 0 < H(x,p)``, midpoint
    convexity in ``p``, the two-point Lipschitz bound (fitting ``C_H`` and
    per-radius ``k_R``), the envelope ``H <= m(|p|)``, ``l >= 0`` and the
    compactness proxy: the interior minimum of ``l`` lies strictly (by
    ``eta``) below its minimum on the outer ``collar`` fraction of the box.

    Violations are verdicts, never exceptions. Every failing check carries
    the worst witness.
    """
    xs, ps = box.xs(), box.ps()
    X, P = np.meshgrid(xs, ps, indexing="ij")
    Hv = np.asarray(spec.func(X, P), dtype=float)
    checks: dict[str, CheckReport] = {}

    nu = np.broadcast_to(np.asarray(spec.nu(xs), dtype=float), xs.shape)
    m = Hv - nu[:, None] * np.abs(P)
    margin, w = _worst(m + tol, {"x": X, "p": P})
    checks["coercivity"] = CheckReport("coercivity", margin >= 0, margin, w)

    H0 = np.asarray(spec.func(xs, np.zeros_like(xs)), dtype=float)
    i0 = int(np.argmax(np.abs(H0)))
    zero_margin = tol - abs(H0[i0])
    nz = P != 0
    pos_margin, wpos = _worst(np.where(nz, Hv, np.inf), {"x": X, "p": P})
    ok = zero_margin >= 0 and pos_margin > 0
    if zero_margin < 0:
        checks["H_zero_at_origin"] = CheckReport(
            "H_zero_at_origin", False, zero_margin, {"x": float(xs[i0]), "p": 0.0})
    else:
        checks["H_zero_at_origin"] = CheckReport(
            "H_zero_at_origin", ok, pos_margin, wpos if pos_margin <= 0 else None)

    # midpoint convexity over all p-pairs, per x
    Pa, Pb = np.meshgrid(ps, ps, indexing="ij")
    mid = 0.5 * (Pa + Pb)
    worst_c, wit_c = np.inf, None
    for j, x in enumerate(xs):
        xx = np.full_like(mid, x)
        lhs = np.asarray(spec.func(xx, mid), dtype=float)
        rhs = 0.5 * (Hv[j][:, None] + Hv[j][None, :])
        marg = rhs + 1e-12 - lhs
        k = np.unravel_index(int(np.argmin(marg)), marg.shape)
        if marg[k] < worst_c:
            worst_c = float(marg[k])
            wit_c = {"x": float(x), "p": float(Pa[k]), "q": float(Pb[k])}
    checks["convexity"] = CheckReport("convexity", worst_c >= 0, worst_c, wit_c)

    # |H(x,p) - H(x,q)| <= C_H |p - q| on neighbouring and all p-pairs
    dH = np.abs(Hv[:, :, None] - Hv[:, None, :])
    dp = np.abs(ps[:, None] - ps[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dp[None] > 0, dH / dp[None], 0.0)
    fitted = float(np.max(ratio))
    k = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    lip_margin = spec.C_H * (1 + 1e-9) + tol - fitted
    checks["lipschitz_p"] = CheckReport(
        "lipschitz_p", lip_margin >= 0, lip_margin,
        {"x": float(xs[k[0]]), "p": float(ps[k[1]]), "q": float(ps[k[2]])},
        {"declared_C_H": spec.C_H, "fitted_C_H": fitted},
    )

    # smallest k_R with |H(x,p) - H(y,p)| <= k_R (1+|p|)|x-y| for |x|,|y| <= R
    if radii is None:
        rmax = float(np.max(np.abs(xs)))
        radii = [rmax * f for f in (0.25, 0.5, 0.75, 1.0)]
    k_R = {}
    dx = np.abs(xs[:, None] - xs[None, :])
    for R in radii:
        sel = np.abs(xs) <= R + 1e-12
        if sel.sum() < 2:
            k_R[float(R)] = 0.0
            continue
        Hs = Hv[sel]
        num = np.abs(Hs[:, None, :] - Hs[None, :, :])
        den = (1 + np.abs(ps))[None, None, :] * dx[np.ix_(sel, sel)][:, :, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(den > 0, num / den, 0.0)
        k_R[float(R)] = float(np.max(q))

    env = np.asarray(spec.m(np.abs(P)), dtype=float) + tol - Hv
    margin, w = _worst(env, {"x": X, "p": P})
    checks["upper_envelope"] = CheckReport("upper_envelope", margin >= 0, margin, w)

    if l is not None:
        lv = _values_at(l, xs)
        i = int(np.argmin(lv))
        checks["cost_nonnegative"] = CheckReport(
            "cost_nonnegative", lv[i] >= 0, float(lv[i]), {"x": float(xs[i])})
        span = xs[-1] - xs[0]
        outer = (xs <= xs[0] + collar * span) | (xs >= xs[-1] - collar * span)
        inner = ~outer
        if inner.any() and outer.any():
            ji = np.flatnonzero(inner)[np.argmin(lv[inner])]
            jo = np.flatnonzero(outer)[np.argmin(lv[outer])]
            gap = float(lv[jo] - lv[ji]) - eta
            checks["compact_argmin"] = CheckReport(
                "compact_argmin", gap > 0, gap,
                {"x_interior": float(xs[ji]), "x_collar": float(xs[jo])},
                {"collar": collar, "eta": eta},
            )

    return AuditReport(box.describe(), checks, fitted, k_R)
