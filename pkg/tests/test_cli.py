"""CLI surface tests driven through main() with a temp runs directory."""

import json

import pytest
import yaml

from tunnelblimp.cli import main


@pytest.fixture
def scenario_file(tmp_path):
    doc = {
        "name": "cli-smoke",
        "map": {"builtin": "straight", "width": 3.3, "length": 15.0},
        "initial_pose": {"x": 1.0, "y": 0.0, "z": 0.4, "yaw_deg": 0.0},
        "duration_limit": 40.0,
    }
    p = tmp_path / "smoke.yaml"
    p.write_text(yaml.safe_dump(doc))
    return p


def test_run_and_metrics_and_replay(scenario_file, tmp_path, capsys):
    runs = tmp_path / "runs"
    rc = main(["--runs-dir", str(runs), "run", "--config", str(scenario_file),
               "--seed", "3"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "cli-smoke-s3" in out and "completed" in out

    rc = main(["--runs-dir", str(runs), "list"])
    assert rc == 0
    assert "cli-smoke-s3" in capsys.readouterr().out

    rc = main(["--runs-dir", str(runs), "metrics", "--run", "cli-smoke-s3"])
    assert rc == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["duration"] > 0

    rc = main(["--runs-dir", str(runs), "replay", "--run", "cli-smoke-s3"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "t=" in out and "status: completed" in out


def test_batch_writes_tables(scenario_file, tmp_path, capsys):
    runs = tmp_path / "runs"
    out_prefix = tmp_path / "table"
    rc = main(["--runs-dir", str(runs), "batch", "--configs", str(scenario_file.parent),
               "--seeds", "0,1", "--out", str(out_prefix)])
    assert rc == 0
    text = (tmp_path / "table.txt").read_text()
    assert text.splitlines()[0].startswith("condition")
    csv = (tmp_path / "table.csv").read_text()
    assert csv.startswith("condition,")
    assert "cli-smoke" in csv


def test_metrics_unknown_run_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        main(["--runs-dir", str(tmp_path), "metrics", "--run", "ghost"])
