"""Command-line front end: ``hjlt list | run | run-all | audit | ergodic | control``.

Artifacts go to ``$HJLT_ARTIFACTS`` (default ``./artifacts``) or ``--root``.
Exit status is 0 when every expected outcome passes, 1 when one fails and
2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .control import ControlProblem, synthesize_trajectory, value_function_dp, write_trajectory_csv
from .ergodic import (
    dirichlet_limit,
    extract_aubry,
    gradient_bound_check,
    solve_perron_min,
    write_ergodic_solution,
)
from .analysis import residual_stationary
from .experiments import (
    DEFAULTS,
    ConfigError,
    _grid,
    artifact_root,
    build_registry,
    list_experiments,
    parse_config,
    run_experiment,
)
from .fields import ScalarField, ensure_dir, write_field_csv
from .hamiltonian import AuditBox, audit_assumptions
from .reports import block

ERGODIC_C_GRID = (0.0, 0.5, 1.0, 2.0)


def _add_overrides(p: argparse.ArgumentParser):
    for key in DEFAULTS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None,
                       help=f"override {key}")
    p.add_argument("--root", default=None, help="artifact root directory")


def _flags(ns) -> dict:
    return {k: getattr(ns, k) for k in DEFAULTS if getattr(ns, k, None) is not None}


def _out(ns, exp_id: str) -> str:
    return ensure_dir(os.path.join(ns.root or artifact_root(), exp_id))


def cmd_list(ns) -> int:
    rows = list_experiments(ns.tag, build_registry(empty=ns.empty))
    for eid, section, tags, desc in rows:
        print(f"{eid:<18} {section:<10} {tags:<32} {desc}")
    return 0


def cmd_run(ns) -> int:
    spec = parse_config(ns.config, _flags(ns), ns.id)
    res = run_experiment(spec, None, ns.root)
    print(res.report, end="")
    return res.status


def _run_one(args):
    eid, root = args
    res = run_experiment(eid, None, root)
    return res.summary(), res.status


def cmd_run_all(ns) -> int:
    ids = [row[0] for row in list_experiments(ns.tag)]
    jobs = [(eid, ns.root) for eid in ids]
    if ns.parallel:
        with ProcessPoolExecutor() as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    for line, _ in results:
        print(line)
    failed = sum(status != 0 for _, status in results)
    print(f"summary: run-all {'pass' if failed == 0 else 'fail'} ({len(results) - failed}/{len(results)})")
    return 0 if failed == 0 else 1


def cmd_audit(ns) -> int:
    spec = parse_config(ns.config, _flags(ns))
    p = spec.params
    H = spec.H()
    g = _grid(p)
    l = ScalarField.from_function(g, spec.l)
    P = 1.0 + float(np.max(np.abs(l.values)))
    box = AuditBox(p["x_min"], p["x_max"], -P, P)
    rep = audit_assumptions(H, l, box)
    text = rep.to_text()
    with open(os.path.join(_out(ns, spec.id), "audit.txt"), "w") as fh:
        fh.write(text)
    print(text, end="")
    print(f"summary: audit {spec.id} {'pass' if rep.passed else 'fail'}")
    return 0 if rep.passed else 1


def cmd_ergodic(ns) -> int:
    spec = parse_config(ns.config, _flags(ns))
    p = spec.params
    explicit_c = "c" in _flags(ns) or _file_has(ns.config, "c")
    cs = (p["c"],) if explicit_c else ERGODIC_C_GRID
    H = spec.H()
    g = _grid(p)
    l = ScalarField.from_function(g, spec.l)
    shift = float(np.min(l.values))
    l_norm = ScalarField(g, l.values - shift)
    out = _out(ns, spec.id)
    R = min(-p["x_min"], p["x_max"])
    radii = tuple(R * f for f in (0.5, 2 / 3, 5 / 6, 1.0))
    half = radii[0] / 2
    window = (max(p["window"][0], -half), min(p["window"][1], half))
    ok = True
    for c in cs:
        if c == 0:
            sol = solve_perron_min(H, l_norm, extract_aubry(l_norm, subgrid=True))
        else:
            sol = dirichlet_limit(H, lambda x: spec.l(x) - shift, c, radii, p["dx"], window)
        res = residual_stationary(sol.v, H, l_norm, c)
        gb = gradient_bound_check(sol, l_norm, 1.0)
        ok &= gb.passed
        stem = os.path.join(out, f"ergodic_c{c:g}")
        write_ergodic_solution(sol, stem, {"sup": res.sup, "l1": res.l1})
        print(block(f"ergodic c={c:g}", {"provenance": sol.provenance, "normalization": sol.normalization,
                                           "residual_sup": res.sup, "residual_l1": res.l1,
                                           "files": stem + ".csv"}), end="")
        print(gb.to_text(), end="")
    print(f"summary: ergodic {spec.id} {'pass' if ok else 'fail'}")
    return 0 if ok else 1


def _file_has(path, key) -> bool:
    if path is None:
        return False
    with open(path) as fh:
        return any(line.split("#", 1)[0].split("=", 1)[0].strip() == key for line in fh if "=" in line)


def cmd_control(ns) -> int:
    spec = parse_config(ns.config, _flags(ns))
    p = spec.params
    if spec.u0 is None:
        raise ConfigError(f"{spec.id} has no terminal cost; pick an evolution experiment")
    H = spec.H()
    cp = ControlProblem(H.speed, spec.l, spec.u0, p["T"])
    g = _grid(p)
    V = value_function_dp(cp, g)
    traj = synthesize_trajectory(V, cp, p["x0"])
    out = _out(ns, spec.id)
    write_trajectory_csv(traj, os.path.join(out, "trajectory.csv"))
    write_field_csv(ScalarField(g, V.values[-1]), os.path.join(out, "value_final.csv"))
    v_here = float(np.interp(p["x0"], g.x, V.values[-1]))
    gap = abs(traj.cost - v_here)
    print(block("control", {"id": spec.id, "horizon": p["T"], "x": p["x0"], "V": v_here,
                            "cost": traj.cost, "terminal": traj.terminal, "gap": gap}), end="")
    passed = gap <= p["tol"]
    print(f"summary: control {spec.id} {'pass' if passed else 'fail'}")
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hjlt", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list registered experiments")
    p.add_argument("--tag", default=None)
    p.add_argument("--empty", action="store_true", help="use an empty registry")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("run", help="run one experiment")
    p.add_argument("id")
    p.add_argument("--config", default=None)
    _add_overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("run-all", help="run every experiment")
    p.add_argument("--tag", default=None)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--root", default=None)
    p.set_defaults(func=cmd_run_all)

    for name, func, help_ in (("audit", cmd_audit, "check the structural assumptions"),
                              ("ergodic", cmd_ergodic, "build ergodic solutions over a c grid"),
                              ("control", cmd_control, "value function and optimal trajectory")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        _add_overrides(p)
        p.set_defaults(func=func)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
