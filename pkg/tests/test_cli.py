import json
import subprocess
import sys

import pytest

from hordeshaping.harness.cli import EXIT_CONFIG, EXIT_IO, EXIT_USAGE, main

CONFIG = {
    "environment": "cart_pole",
    "runs": 2,
    "episodes": 20,
    "eval_interval": 10,
    "max_steps": 200,
    "lambda": 0.7,
    "beta": 0.001,
    "potentials": [{"kind": "cp_angle", "scales": [1, 10]}],
    "ensembles": [{"name": "E", "members": ["cp_angle@*"]}],
}


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(CONFIG))
    return path


def error_line(capsys):
    lines = capsys.readouterr().err.strip().splitlines()
    return json.loads(lines[-1])


def test_run_compare_curves(tmp_path, config_file, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file), "--out", str(out), "--seed", "3"]) == 0
    assert "wrote" in capsys.readouterr().out
    assert json.loads((out / "manifest.json").read_text())["seed"] == 3

    assert main(["compare", "--in", str(out), "--a", "E", "--b", "base"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) >= {"mean_a", "mean_b", "t", "df", "p"}
    assert 0.0 <= report["p"] <= 1.0

    assert main(["curves", "--in", str(out), "--policies", "base,E",
                 "--reference", "cp_angle:1,10"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# episode") and [ln.split()[0] for ln in lines[1:]] == ["10", "20"]


def test_config_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**CONFIG, "episodez": 3}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    err = error_line(capsys)
    assert err["error"] == "config" and "episodez" in err["keys"]
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG


def test_io_and_usage_errors(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_IO
    assert error_line(capsys)["error"] == "io"
    assert main(["compare", "--in", str(tmp_path), "--a", "x", "--b", "y"]) == EXIT_IO
    assert main(["frobnicate"]) == EXIT_USAGE
    assert error_line(capsys)["error"] == "usage"


def test_unknown_policy_is_usage_error(tmp_path, config_file, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file), "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["compare", "--in", str(out), "--a", "ghost", "--b", "base"]) == EXIT_USAGE
    assert "ghost" in error_line(capsys)["message"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hordeshaping", "compare", "--in",
                           str(tmp_path), "--a", "a", "--b", "b"], capture_output=True, text=True)
    assert proc.returncode == EXIT_IO
    assert json.loads(proc.stderr.strip().splitlines()[-1])["error"] == "io"
