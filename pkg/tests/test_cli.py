import json
import subprocess
import sys

import pytest

from weakint import NumericalError
from weakint.harness import cli


def run(*args):
    return cli.main(list(args))


def test_oracle_to_stdout(capsys):
    assert run("oracle_verify", "--stat", "mean", "--dist", "alphabet:0,1", "--n", "3") == 0
    data = json.loads(capsys.readouterr().out)
    assert abs(data["summary"]["unbiasedness_gap"]) <= 1e-10


def test_config_file_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mode": "variance_ci", "n": 50, "replications": 5, "format": "json"}))
    out = tmp_path / "o.csv"
    assert run("variance_ci", "--config", str(cfg), "--n", "8", "--format", "csv", "--out", str(out)) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "rep,seed,f_value,v_f,sigma_lower,sigma_upper,bound_epsilon,covered"
    assert len(lines) == 6
    assert json.loads(capsys.readouterr().out)["replications"] == 5


def test_mode_argument_wins(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mode": "variance_ci", "n": 3, "dist": "alphabet:0,1"}))
    assert run("oracle_verify", "--config", str(cfg)) == 0
    assert json.loads(capsys.readouterr().out)["metadata"]["mode"] == "oracle_verify"


@pytest.mark.parametrize(
    "args",
    [
        ("variance_ci", "--stat", "nonsense"),
        ("variance_ci", "--delta", "1.5"),
        ("variance_ci", "--config", "/nonexistent/config.json"),
        ("variance_ci", "--n", "ten"),
        ("bogus_mode",),
    ],
)
def test_config_errors(args, capsys):
    assert run(*args) == 2


def test_budget_error(capsys):
    assert run("oracle_verify", "--dist", "bernoulli:0.5", "--n", "40") == 3
    assert "budget" in capsys.readouterr().err


def test_budget_env(monkeypatch, capsys):
    monkeypatch.setenv("WEAKINT_BUDGET", "100")
    assert run("oracle_verify", "--dist", "alphabet:0,1", "--n", "3") == 3


def test_numerical_error(monkeypatch, capsys):
    def boom(cfg):
        raise NumericalError("non-finite")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert run("variance_ci") == 4


def test_help_exit_zero(capsys):
    assert run("--help") == 0


def test_console_script():
    out = subprocess.run(
        [sys.executable, "-m", "weakint.harness.cli", "seminorms", "--stat", "mean", "--dist", "alphabet:0,1", "--n", "3"],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0
    assert json.loads(out.stdout)["summary"]["method"] == "exact"
