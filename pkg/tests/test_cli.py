import os

import numpy as np
import pytest

from hjlongtime.cli import main
from hjlongtime.experiments import (
    ARTIFACT_ENV,
    ConfigError,
    build_registry,
    get_experiment,
    list_experiments,
    parse_config,
    run_experiment,
)

IDS = ["ex-5-1-dirichlet", "ex-5-1-perron", "ex-5-2", "ex-5-3", "ex-5-4", "ex-5-5",
       "ex-thm1-4", "ex-remark-4-2"]


def _cfg(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_list_default_registry(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    rows = [ln.split()[0] for ln in out.splitlines()]
    assert rows == IDS
    assert [r[0] for r in list_experiments()] == IDS


def test_list_tag_filter():
    assert [r[0] for r in list_experiments("ergodic")] == ["ex-5-1-dirichlet", "ex-5-1-perron",
                                                             "ex-remark-4-2"]


def test_list_empty(capsys):
    assert main(["list", "--empty"]) == 0
    assert capsys.readouterr().out == ""
    assert list_experiments(registry=build_registry(empty=True)) == []


def test_flag_overrides_file(tmp_path):
    spec = parse_config(_cfg(tmp_path, "id = ex-5-2\ndx = 0.01\n"), {"dx": "0.005"})
    assert spec.params["dx"] == 0.005


def test_cfl_validation(tmp_path):
    with pytest.raises(ConfigError, match=r"\(0, 1\]"):
        parse_config(_cfg(tmp_path, "id = ex-5-2\ncfl = 1.5\n"))


def test_minimal_file_uses_defaults(tmp_path):
    spec = parse_config(_cfg(tmp_path, "# only the id\nid = ex-5-2\n"))
    assert spec.params == get_experiment("ex-5-2").params
    assert spec.params["dx"] == 0.01 and spec.params["cfl"] == 0.9


def test_config_errors_carry_line_numbers(tmp_path):
    with pytest.raises(ConfigError, match="line 2: unknown key 'dxx'"):
        parse_config(_cfg(tmp_path, "id = ex-5-2\ndxx = 0.1\n"))
    with pytest.raises(ConfigError, match="line 1"):
        parse_config(_cfg(tmp_path, "dx 0.1\n"))
    with pytest.raises(ConfigError, match="invalid value"):
        parse_config(_cfg(tmp_path, "id = ex-5-2\nwindow = 1\n"))
    with pytest.raises(ConfigError, match="unknown experiment"):
        parse_config(None, None, "ex-nope")
    with pytest.raises(ConfigError, match="unknown override"):
        parse_config(None, {"speed": "2"}, "ex-5-2")


def test_run_writes_artifacts(tmp_path, capsys):
    assert main(["run", "ex-5-1-perron", "--root", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.strip().splitlines()[-1].startswith("summary: ex-5-1-perron pass")
    files = set(os.listdir(tmp_path / "ex-5-1-perron"))
    assert {"report.txt", "summary.txt", "perron_min.csv", "perron_min.meta"} <= files


def test_artifact_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv(ARTIFACT_ENV, str(tmp_path / "env"))
    res = run_experiment("ex-5-1-perron")
    assert res.outdir.startswith(str(tmp_path / "env"))


def test_determinism(tmp_path):
    a = run_experiment("ex-5-2", {"dx": "0.02"}, str(tmp_path / "a"))
    b = run_experiment("ex-5-2", {"dx": "0.02"}, str(tmp_path / "b"))
    csvs = [f for f in os.listdir(a.outdir) if f.endswith((".csv", ".dat"))]
    assert csvs
    for f in csvs:
        assert (tmp_path / "a" / "ex-5-2" / f).read_bytes() == (tmp_path / "b" / "ex-5-2" / f).read_bytes()


def test_exit_status_follows_outcomes(tmp_path, capsys):
    # a tolerance no first-order run can meet
    assert main(["run", "ex-5-2", "--tol", "1e-9", "--root", str(tmp_path)]) == 1
    out = capsys.readouterr().out
    assert " fail " in out and "summary: ex-5-2 fail" in out
    assert main(["run", "ex-5-2", "--cfl", "2", "--root", str(tmp_path)]) == 2


def test_run_experiment_spec_overrides(tmp_path):
    spec = parse_config(None, {"dx": "0.02"}, "ex-5-1-perron")
    res = run_experiment(spec, {"tol": "0.1"}, str(tmp_path))
    assert "dx: 0.02" in res.report and "tol: 0.1" in res.report


def test_audit_command(tmp_path, capsys):
    cfg = _cfg(tmp_path, "id = ex-5-2\n")
    assert main(["audit", cfg, "--root", str(tmp_path)]) == 0
    assert "summary: audit ex-5-2 pass" in capsys.readouterr().out
    assert (tmp_path / "ex-5-2" / "audit.txt").exists()


def test_ergodic_command(tmp_path, capsys):
    cfg = _cfg(tmp_path, "id = ex-5-1-perron\ndx = 0.02\nx_min = -4\nx_max = 4\n")
    assert main(["ergodic", cfg, "--root", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    for c in ("0", "0.5", "1", "2"):
        assert f"ergodic c={c}" in out
        assert (tmp_path / "ex-5-1-perron" / f"ergodic_c{c}.meta").exists()
    assert main(["ergodic", cfg, "--c", "1", "--root", str(tmp_path)]) == 0
    assert capsys.readouterr().out.count("[ergodic c=") == 1


def test_control_command(tmp_path, capsys):
    cfg = _cfg(tmp_path, "id = ex-5-2\nT = 3\nx0 = 1\n")
    assert main(["control", cfg, "--root", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "summary: control ex-5-2 pass" in out
    text = (tmp_path / "ex-5-2" / "trajectory.csv").read_text().splitlines()
    assert text[1] == "s,X,alpha"
    assert float(text[0].split("=")[1]) == pytest.approx(3.5, abs=0.02)
    assert main(["control", _cfg(tmp_path, "id = ex-5-1-perron\n", "p.cfg")]) == 2
