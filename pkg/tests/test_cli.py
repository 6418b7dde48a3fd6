import json

import pytest
from click.testing import CliRunner

from src.cli import cli, run


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def flow2_path(config_dir):
    return str(config_dir / "flow2.yaml")


@pytest.fixture
def no_equilibrium_settings(tmp_path):
    path = tmp_path / "settings.yaml"
    path.write_text("solver:\n  monomial_rtol: -1.0\n", encoding="utf-8")
    return str(path)


def test_solve_fb(runner, flow2_path):
    result = runner.invoke(cli, ["solve-fb", "--config", flow2_path])
    assert result.exit_code == 0, result.output
    assert "eigenvalue: 1.1547005" in result.stdout
    assert "0.5773502" in result.stdout
    assert "eigenvector" not in result.stdout


def test_solve_fb_methods_agree(runner, config_dir):
    path = str(config_dir / "flow3.yaml")
    eigen = runner.invoke(cli, ["solve-fb", "--config", path, "--method", "eigen", "--format", "json"])
    fixed = runner.invoke(cli, ["solve-fb", "--config", path, "--method", "fixed-point", "--format", "json"])
    worst = json.loads(eigen.stdout)["equilibria"][0]
    single = json.loads(fixed.stdout)["equilibria"][0]
    assert single["weighted_cost"] == pytest.approx(worst["weighted_cost"], rel=1e-9)


def test_solve_fb_eigenvector(runner, config_dir):
    result = runner.invoke(cli, ["solve-fb", "--config", str(config_dir / "flow3.yaml"), "--eigenvector", "--format", "json"])
    assert result.exit_code == 0, result.output
    vector = json.loads(result.stdout)["equilibria"][0]["eigenvector"]
    assert len(vector) == 8
    p = json.loads(result.stdout)["equilibria"][0]["p"]
    assert vector[1] / vector[0] == pytest.approx(p[0], rel=1e-6)
    assert vector[-1] / vector[0] == pytest.approx(p[0] * p[1] * p[2], rel=1e-6)


def test_indices(runner, config_dir):
    result = runner.invoke(cli, ["indices", "--config", str(config_dir / "flow3.yaml")])
    assert result.exit_code == 0, result.output
    assert "rho_fb: 1.341640786" in result.stdout
    assert "chi: 0.86066" in result.stdout
    assert "individualized_poa: " in result.stdout


def test_indices_json_with_design_check(runner, config_dir):
    result = runner.invoke(
        cli, ["indices", "--config", str(config_dir / "flow3.yaml"), "--format", "json", "--chi-target", "1.0"]
    )
    data = json.loads(result.stdout)
    assert data["chi"] == pytest.approx(0.8607, abs=5e-4)
    assert data["design_check"]["satisfied"] is True
    assert len(data["individualized_poa"]) == 3


def test_csv_is_deterministic(runner, config_dir):
    args = ["indices", "--config", str(config_dir / "hetero3.yaml"), "--format", "csv"]
    first = runner.invoke(cli, args)
    second = runner.invoke(cli, args)
    assert first.exit_code == 0
    assert first.stdout == second.stdout
    header = first.stdout.splitlines()[0].split(",")
    assert header[:3] == ["rho_fb", "rho_ol", "chi"]


def test_csv_booleans_and_missing_approximation(runner, config_dir):
    result = runner.invoke(cli, ["indices", "--config", str(config_dir / "hetero3.yaml"), "--format", "csv"])
    header, row = result.stdout.splitlines()
    cells = dict(zip(header.split(","), row.split(",")))
    assert cells["rho_fb_is_lower_bound"] == "false"
    assert cells["chi_approx"] == ""


def test_invalid_game(runner, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("a: 0\nb: [1, 1]\nq: [-1, 1]\nr: [1, 1]\nx0: 1\n", encoding="utf-8")
    result = runner.invoke(cli, ["solve-fb", "--config", str(path)])
    assert result.exit_code == 2
    assert "[q]" in result.stderr


def test_no_equilibrium(runner, flow2_path, no_equilibrium_settings):
    result = runner.invoke(cli, ["--settings", no_equilibrium_settings, "solve-fb", "--config", flow2_path])
    assert result.exit_code == 1
    assert "NoEquilibrium" in result.stderr
    assert "rejected" in result.stderr


def test_usage_errors(runner, flow2_path):
    assert runner.invoke(cli, ["solve-fb"]).exit_code == 2
    assert runner.invoke(cli, ["--n-cap", "0", "solve-fb", "--config", flow2_path]).exit_code == 2


def test_solve_ol_and_social(runner, flow2_path):
    ol = runner.invoke(cli, ["solve-ol", "--config", flow2_path, "--format", "csv"])
    assert ol.stdout.splitlines()[0] == "player,xi,k_star,cost,p_bar,decay_rate"
    social = runner.invoke(cli, ["solve-social", "--config", flow2_path])
    assert "cost: 0.5" in social.stdout
    assert "gains: -1, -1" in social.stdout


def test_poc(runner, config_dir):
    result = runner.invoke(cli, ["poc", "--config", str(config_dir / "hetero3.yaml"), "--uniform", "--format", "json"])
    assert result.exit_code == 0, result.output
    nu = json.loads(result.stdout)["nu"]
    assert len(nu) == 3 and all(v > 0 for v in nu)


def test_simulate(runner, flow2_path, tmp_path):
    trajectory = tmp_path / "traj.csv"
    result = runner.invoke(
        cli,
        ["simulate", "--config", flow2_path, "--horizon", "20", "--dt", "0.01", "--trajectory", str(trajectory), "--format", "json"],
    )
    assert result.exit_code == 0, result.output
    data = json.loads(result.stdout)
    assert max(data["relative_error"]) <= 1e-6
    lines = trajectory.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,x,u_1,u_2,running_cost_1,running_cost_2"
    assert len(lines) == 2002


@pytest.mark.parametrize("policy", ["ol", "social"])
def test_simulate_other_policies(runner, flow2_path, policy):
    result = runner.invoke(
        cli, ["simulate", "--config", flow2_path, "--policy", policy, "--horizon", "30", "--dt", "0.01", "--format", "csv"]
    )
    assert result.exit_code == 0, result.output
    rows = [line.split(",") for line in result.stdout.splitlines()[1:]]
    assert all(float(row[3]) <= 1e-6 for row in rows)


def test_simulate_bad_step(runner, flow2_path):
    result = runner.invoke(cli, ["simulate", "--config", flow2_path, "--dt", "-1"])
    assert result.exit_code == 2
    assert "[dt]" in result.stderr


def test_sweep(runner, flow2_path):
    result = runner.invoke(cli, ["sweep", "--config", flow2_path, "--param", "N", "--from", "2", "--to", "4"])
    assert result.exit_code == 0, result.output
    lines = result.stdout.splitlines()
    assert lines[0].startswith("N,rho_fb,rho_ol,chi")
    assert [line.split(",")[0] for line in lines[1:]] == ["2", "3", "4"]


def test_sweep_drift(runner, config_dir):
    path = str(config_dir / "hetero3.yaml")
    result = runner.invoke(cli, ["sweep", "--config", path, "--param", "a", "--from", "-1", "--to", "1", "--steps", "3"])
    assert result.exit_code == 0, result.output
    assert [line.split(",")[0] for line in result.stdout.splitlines()[1:]] == ["-1", "0", "1"]


def test_reproduce(runner, tmp_path):
    out = tmp_path / "table1.csv"
    result = runner.invoke(cli, ["reproduce", "--target", "table1", "--n-max", "4", "-o", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("N,f,J_fb,J_social,J_ol")


def test_run_exit_codes(flow2_path, no_equilibrium_settings, capsys):
    assert run(["solve-social", "--config", flow2_path]) == 0
    assert "cost: 0.5" in capsys.readouterr().out
    assert run(["--settings", no_equilibrium_settings, "solve-fb", "--config", flow2_path]) == 1
    assert run(["solve-fb", "--config", "missing.yaml"]) == 2
    assert run(["reproduce", "--target", "table7"]) == 2
