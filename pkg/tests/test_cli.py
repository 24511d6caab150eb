import pytest

from mrebench.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main

SCENARIO = """
name: cli
grid:
  nodes: [9, 9, 9]
absorbing:
  thickness: 0.02
time:
  steps_per_period: 8
  n_periods: 2
  max_periods: 2
"""


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(SCENARIO)
    return p


def test_version(capsys):
    assert main(["version"]) == EXIT_OK
    assert "mrebench" in capsys.readouterr().out


def test_run_invert_slice(scenario, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(scenario), "-o", str(out)]) == EXIT_OK
    assert "uniform" in capsys.readouterr().out
    assert main(["invert", str(out / "history"), "--stencil", "standard",
                 "-o", str(tmp_path / "e_std"), "--report", str(tmp_path / "r.json")]) == EXIT_OK
    assert (tmp_path / "e_std.bin").exists() and (tmp_path / "r.json").exists()
    assert main(["export-slice", str(tmp_path / "e_std"), "--axis", "x", "--index", "4",
                 "-o", str(tmp_path / "s.csv")]) == EXIT_OK
    assert "masked" in (tmp_path / "s.csv").read_text()


def test_sweep(scenario, tmp_path, capsys):
    rc = main(["sweep", str(scenario), "--nodes", "9", "11", "--tsamples", "8",
               "--periods", "2", "-o", str(tmp_path / "sw")])
    assert rc == EXIT_OK
    assert "spatial ladder" in capsys.readouterr().out


def test_config_error(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("grid:\n  nodes: [1, 9, 9]\n")
    assert main(["run", str(p)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_numerical_failure(tmp_path):
    p = tmp_path / "unstable.yaml"
    p.write_text(SCENARIO.replace("steps_per_period: 8", "steps_per_period: 4\n  beta: 0.01"))
    assert main(["run", str(p), "-o", str(tmp_path / "o")]) == EXIT_NUMERICAL
    assert not (tmp_path / "o").exists()


def test_io_error(tmp_path):
    assert main(["invert", str(tmp_path / "missing")]) == EXIT_IO
    assert main(["export-slice", str(tmp_path / "missing")]) == EXIT_IO
