import json

import numpy as np
import pytest

from asg1kit.harness import (
    ConfigError,
    StudyConfig,
    main,
    run_convergence,
    run_p_sweep,
)


def test_list_geometries(capsys):
    assert main(["list-geometries"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) >= 3
    assert "two_patch_square" in out


def test_gluing_subcommand(capsys):
    assert main(["gluing", "--geometry", "two_patch_square"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["certified"]
    entry = data["interfaces"][0]
    assert entry["alpha"]["left"] == [1.0, 1.0]
    assert entry["beta"]["left"] == [0.0, 0.0]
    assert entry["residual_beta"] <= 1e-12


def test_gluing_fit_linear(capsys):
    assert main(["gluing", "--geometry", "two_patch_skew", "--fit-linear"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["interfaces"][0]["solver"] == "fit-linear"


def test_convergence_csv_shape(tmp_path):
    out = tmp_path / "r.csv"
    code = main([
        "convergence", "--geometry", "two_patch_square", "--function",
        "sinsin", "--p", "3", "--k", "1", "--levels", "3", "--n", "4",
        "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "level,h,p,k,e_L2,e_H1,e_H2,rate_L2,rate_H1,rate_H2"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[7] == first[8] == first[9] == ""
    last = lines[3].split(",")
    assert float(last[7]) > 3.0


def test_convergence_deterministic(tmp_path):
    args = [
        "convergence", "--geometry", "two_patch_skew", "--p", "3", "--k", "1",
        "--levels", "2", "--n", "4",
    ]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_convergence_h_decreases():
    cfg = StudyConfig("two_patch_square", "sinsin", 3, 1, levels=3, base_n=4)
    res = run_convergence(cfg)
    hs = [row["h"] for row in res.rows]
    assert hs[0] > hs[1] > hs[2]


def test_convergence_observed_orders_sane():
    # the guaranteed orders are exceeded on coarse level pairs: the edge
    # corrections decay half an order faster than the leading error term
    cfg = StudyConfig("two_patch_square", "sinsin", 3, 1, levels=2, base_n=8)
    res = run_convergence(cfg)
    rates = res.rows[-1]["rates"]
    assert 3.5 <= rates[0] <= 5.2
    assert 2.6 <= rates[1] <= 4.2
    assert 1.7 <= rates[2] <= 3.2


def test_config_validation():
    with pytest.raises(ConfigError):
        StudyConfig("unit_square", "sinsin", 2, 0).validate()
    with pytest.raises(ConfigError):
        StudyConfig("unit_square", "sinsin", 3, 1, base_n=2).validate()
    with pytest.raises(ConfigError):
        StudyConfig("unit_square", "sinsin", 3, 1, levels=0).validate()


def test_coarse_grid_rejected_for_degree():
    code = main([
        "convergence", "--geometry", "unit_square", "--p", "5", "--k", "1",
        "--levels", "1", "--n", "4",
    ])
    assert code == 2


def test_unknown_geometry_exit_code():
    assert main(["gluing", "--geometry", "missing_thing"]) == 2


def test_unknown_function_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["convergence", "--geometry", "unit_square", "--function", "bad"])
    assert exc.value.code == 2


def test_unknown_flag_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["convergence", "--geometry", "unit_square", "--frobnicate"])
    assert exc.value.code == 2


def test_project_subcommand(tmp_path, capsys):
    code = main([
        "project", "--geometry", "two_patch_square", "--function", "sinsin",
        "--p", "4", "--k", "1", "--n", "8",
    ])
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["interfaces"]) == 1
    assert data["interfaces"][0]["value_jump_relative"] <= 1e-10


def test_check_c1_flags_non_asg1_geometry(tmp_path, capsys):
    # a non-AS-G1 spline interface: certification fails (exit 1); forcing the
    # projection yields genuine C1 jumps (also exit 1)
    from asg1kit.geometry import save_geometry
    from test_gluing import non_asg1_geometry

    path = tmp_path / "bad.json"
    save_geometry(non_asg1_geometry(), path)
    args = ["check-c1", "--geometry", str(path), "--function", "expxy",
            "--p", "4", "--k", "1", "--n", "8"]
    code = main(args)
    capsys.readouterr()
    assert code == 1
    code = main(args + ["--force"])
    out = json.loads(capsys.readouterr().out)
    assert code == 1
    assert out["max_d_derivative_jump_relative"] > 1e-9


def test_check_c1_passes_at_p4(capsys):
    code = main([
        "check-c1", "--geometry", "two_patch_skew", "--function", "sinsin",
        "--p", "4", "--k", "1", "--n", "8",
    ])
    capsys.readouterr()
    assert code == 0


def test_p_sweep_polynomial_exact(tmp_path):
    out = tmp_path / "s.csv"
    code = main([
        "p-sweep", "--geometry", "two_patch_square", "--function", "poly4",
        "--p", "4", "5", "--n", "8", "--out", str(out),
    ])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 3
    for line in lines[1:]:
        parts = line.split(",")
        assert float(parts[4]) <= 1e-9  # e_L2
        assert float(parts[6]) <= 1e-7  # e_H2


def test_p_sweep_errors_decrease_with_p(tmp_path):
    cfg = StudyConfig("unit_square", "sinsin", degrees=(3, 4), base_n=8)
    res = run_p_sweep(cfg)
    assert res.rows[1]["errors"][2] <= res.rows[0]["errors"][2]


def test_quadrature_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("ASG1_QUAD_NODES", "7")
    out = tmp_path / "env.csv"
    code = main([
        "convergence", "--geometry", "unit_square", "--p", "3", "--k", "1",
        "--levels", "1", "--n", "4", "--out", str(out),
    ])
    assert code == 0
    assert len(out.read_text().strip().splitlines()) == 2


def test_geometry_file_path_accepted(tmp_path, capsys):
    from asg1kit.geometry import builtin_geometry, save_geometry

    path = tmp_path / "geo.json"
    save_geometry(builtin_geometry("two_patch_square"), path)
    assert main(["gluing", "--geometry", str(path)]) == 0
    capsys.readouterr()
