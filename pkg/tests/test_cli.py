import contextlib
import io
import json
import math

import numpy as np
import pytest

from conftest import INSTANCE_A
from qds.cli import generate_scenario
from qds.cli import main as cli_main


def main(argv):
    """Run the CLI entry point with its terminal chatter swallowed."""
    with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
        return cli_main(argv)


@pytest.fixture
def scenario_path(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(INSTANCE_A))
    return str(path)


def test_check_command(scenario_path):
    assert main(["check", "--scenario", scenario_path]) == 0


def test_check_rejects_bad_input(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"N": 4, "machines": []}))
    assert main(["check", "--scenario", str(bad)]) == 2
    assert main(["check", "--scenario", str(tmp_path / "missing.json")]) == 2
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    assert main(["check", "--scenario", str(garbled)]) == 2


def test_sample_writes_report(scenario_path, tmp_path):
    out = tmp_path / "report.json"
    rc = main(["sample", "--scenario", scenario_path, "--model", "sequential", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["queries"]["sequential_total"] == 12
    assert doc["final_state_error"] <= 1e-9
    assert doc["within_tolerance"] is True
    assert doc["trace"][0] == {"unitary": {"name": "prepare"}}
    assert np.allclose(doc["distribution"], [0.4, 0.4, 0.2, 0.0], atol=1e-9)


def test_sample_parallel_counts(scenario_path, tmp_path):
    out = tmp_path / "report.json"
    rc = main(["sample", "--scenario", scenario_path, "--model", "parallel", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["queries"]["parallel_rounds"] == 12
    assert doc["queries"]["parallel_as_sequential"] == 24


def test_sample_tolerance_failure(scenario_path, tmp_path):
    out = tmp_path / "report.json"
    rc = main(
        ["sample", "--scenario", scenario_path, "--tolerance", "1e-18", "--out", str(out)]
    )
    assert rc == 3
    doc = json.loads(out.read_text())
    assert doc["within_tolerance"] is False


def test_sample_empty_database(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"N": 3, "nu": 2, "machines": [{"elements": {}}]}))
    rc = main(["sample", "--scenario", str(empty), "--out", str(tmp_path / "r.json")])
    assert rc == 2


def test_adversary_outputs(scenario_path, tmp_path):
    trace = tmp_path / "steps.csv"
    summary = tmp_path / "summary.json"
    rc = main(
        [
            "adversary",
            "--scenario", scenario_path,
            "--k", "1",
            "--alpha", "0.5",
            "--beta", "0.5",
            "--trace", str(trace),
            "--summary", str(summary),
        ]
    )
    assert rc == 0
    lines = trace.read_text().strip().splitlines()
    assert lines[0] == "t,D_t,growth_bound,step_increment,oracle_diff_avg"
    assert len(lines) == 8  # header + t = 0..6
    assert lines[1].startswith("0,0.0,0.0,,")
    doc = json.loads(summary.read_text())
    assert doc["members"] == 6
    assert doc["machine_k_calls"] == 6
    assert all(c["passed"] or not c["applicable"] for c in doc["bounds"]["checks"])

    # deterministic: byte-identical on re-run
    first = trace.read_bytes()
    rc = main(
        [
            "adversary",
            "--scenario", scenario_path,
            "--k", "1",
            "--alpha", "0.5",
            "--beta", "0.5",
            "--trace", str(trace),
            "--summary", str(summary),
        ]
    )
    assert rc == 0
    assert trace.read_bytes() == first


def test_adversary_condition_failure(scenario_path, tmp_path):
    rc = main(
        [
            "adversary",
            "--scenario", scenario_path,
            "--k", "1",
            "--alpha", "0.9",
            "--beta", "0.5",
            "--trace", str(tmp_path / "t.csv"),
            "--summary", str(tmp_path / "s.json"),
        ]
    )
    assert rc == 3


def test_adversary_family_limit(scenario_path, tmp_path):
    rc = main(
        [
            "adversary",
            "--scenario", scenario_path,
            "--k", "1",
            "--alpha", "0.5",
            "--beta", "0.5",
            "--limit", "5",
            "--trace", str(tmp_path / "t.csv"),
            "--summary", str(tmp_path / "s.json"),
        ]
    )
    assert rc == 3


def test_generate_scenario_is_deterministic():
    a = generate_scenario(8, 2, 3, 5, seed=11)
    b = generate_scenario(8, 2, 3, 5, seed=11)
    assert a == b
    assert a.stats.total == 5
    assert all(a.total_count(i) <= a.nu for i in range(1, 9))
    assert generate_scenario(4, 1, 2, 9, seed=0) is None  # M > nu * N


def test_sweep_table(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(
        json.dumps({"N": [16], "n": [2], "nu": [4], "M": [4, 8, 16, 32], "seed": 3})
    )
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--grid", str(grid), "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "N,n,nu,M,valid,queries,scale,ratio,in_band"
    assert len(lines) == 5
    for line in lines[1:]:
        cells = line.split(",")
        N, n, nu, M = (int(cells[i]) for i in range(4))
        assert cells[4] == "1"
        queries = int(cells[5])
        scale = n * math.sqrt(nu * N / M)
        assert float(cells[6]) == scale
        assert np.isclose(float(cells[7]), queries / scale)
        assert cells[8] == "1"

    # byte-identical re-run, also under threads
    first = out.read_bytes()
    assert main(["sweep", "--grid", str(grid), "--threads", "4", "--out", str(out)]) == 0
    assert out.read_bytes() == first


def test_sweep_band_failure(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(
        json.dumps({"N": [16], "n": [2], "nu": [4], "M": [4], "band": [1, 2]})
    )
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--grid", str(grid), "--out", str(out)]) == 3
    # the table is still written, with in_band = 0
    assert out.read_text().strip().splitlines()[1].endswith(",0")


def test_sweep_invalid_points_marked(tmp_path):
    grid = tmp_path / "grid.json"
    # M = 9 exceeds nu * N = 8 -> invalid point, sweep continues
    grid.write_text(json.dumps({"N": [4], "n": [1], "nu": [2], "M": [4, 9]}))
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--grid", str(grid), "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[2].split(",")[4] == "0"


def test_sweep_grid_validation(tmp_path):
    out = str(tmp_path / "s.csv")
    bad = tmp_path / "g.json"
    bad.write_text(json.dumps({"N": [4], "n": [1], "nu": [2], "M": [2], "extra": 1}))
    assert main(["sweep", "--grid", str(bad), "--out", out]) == 2
    bad.write_text(json.dumps({"N": [], "n": [1], "nu": [2], "M": [2]}))
    assert main(["sweep", "--grid", str(bad), "--out", out]) == 2
    bad.write_text(json.dumps({"N": [4], "n": [1], "nu": [2], "M": [2], "band": [2, 1]}))
    assert main(["sweep", "--grid", str(bad), "--out", out]) == 2


def test_threads_env_override(scenario_path, tmp_path, monkeypatch):
    monkeypatch.setenv("QDS_THREADS", "not-a-number")
    rc = main(
        [
            "adversary",
            "--scenario", scenario_path,
            "--k", "1",
            "--alpha", "0.5",
            "--beta", "0.5",
            "--trace", str(tmp_path / "t.csv"),
            "--summary", str(tmp_path / "s.json"),
        ]
    )
    assert rc == 2
