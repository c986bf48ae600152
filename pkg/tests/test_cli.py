import json
import pandas as pd
import pytest
from typer.testing import CliRunner
from cli import app
from data.loader import write_csv

try:
    runner = CliRunner(mix_stderr=False)
except TypeError:
    # newer runners keep stderr apart by default
    runner = CliRunner()


def _error_lines(result):
    return result.stderr.strip().splitlines()


@pytest.fixture
def constant_csv(constant_series, tmp_path):
    path = tmp_path / "constant.csv"
    write_csv(constant_series, path)
    return path


@pytest.fixture
def mu1_csv(mu1_series, tmp_path):
    path = tmp_path / "mu1.csv"
    write_csv(mu1_series, path)
    return path


def test_constant_series_is_not_rejected(constant_csv, tmp_path):
    out = tmp_path / "result.json"
    result = runner.invoke(app, [
        "test", "-i", str(constant_csv), "--delta", "0.5", "--bandwidth", "0.2", "--boot", "100", "-o", str(out),
    ])
    assert result.exit_code == 0, result.stderr
    payload = json.loads(out.read_text())
    assert payload["reject"] is False
    assert payload["delta"] == 0.5
    assert "reject=False" in result.stdout


def test_threshold_grid_writes_one_result_each(mu1_csv, tmp_path):
    out = tmp_path / "results.json"
    result = runner.invoke(app, [
        "test", "-i", str(mu1_csv), "--deltas", "0.5,3", "--bandwidth", "0.2", "--boot", "50", "-o", str(out),
    ])
    assert result.exit_code == 0, result.stderr
    payload = json.loads(out.read_text())
    assert [r["delta"] for r in payload] == [0.5, 3.0]
    assert payload[0]["d_inf"] == payload[1]["d_inf"]


def test_delta_and_deltas_are_exclusive(constant_csv, tmp_path):
    result = runner.invoke(app, ["test", "-i", str(constant_csv), "-o", str(tmp_path / "x.json")])
    assert result.exit_code == 2
    assert len(_error_lines(result)) == 1
    assert _error_lines(result)[0].startswith("error code=InvalidConfig")


def test_bad_header_exits_with_code(write_wide, tmp_path):
    path = write_wide("label,0,2,1\na,1,2,3\nb,4,5,6\n")
    result = runner.invoke(app, ["test", "-i", str(path), "--delta", "1", "-o", str(tmp_path / "x.json")])
    assert result.exit_code == 2
    assert len(_error_lines(result)) == 1
    assert _error_lines(result)[0].startswith("error code=NonMonotoneGrid")


def test_invalid_bandwidth_is_a_config_error(constant_csv, tmp_path):
    result = runner.invoke(app, [
        "test", "-i", str(constant_csv), "--delta", "1", "--bandwidth", "0.7", "-o", str(tmp_path / "x.json"),
    ])
    assert result.exit_code == 2
    assert len(_error_lines(result)) == 1
    assert _error_lines(result)[0].startswith("error code=InvalidConfig")


def test_simulate_is_reproducible_across_threads(tmp_path):
    outputs = []
    for name, threads in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "2")]:
        out = tmp_path / name
        result = runner.invoke(app, [
            "simulate", "--n", "100", "--reps", "4", "--boot", "100", "--deltas", "2.0", "--seed", "7",
            "--points", "11", "--bandwidth", "0.2", "--threads", threads, "-o", str(out),
        ])
        assert result.exit_code == 0, result.stderr
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    frame = pd.read_csv(tmp_path / "a.csv")
    assert frame["reps"].tolist() == [4]
    assert frame["mean"].tolist() == ["mu1"]


def test_simulate_rejects_custom_mean(tmp_path):
    result = runner.invoke(app, [
        "simulate", "--mean", "custom", "--n", "100", "--reps", "1", "--deltas", "1", "-o", str(tmp_path / "x.csv"),
    ])
    assert result.exit_code == 2
    assert "code=InvalidConfig" in result.stderr


def test_first_time_writes_json_and_csv(mu1_csv, tmp_path):
    out = tmp_path / "first.json"
    result = runner.invoke(app, [
        "first-time", "-i", str(mu1_csv), "--delta", "1.0", "--bandwidth", "0.2", "--boot", "50", "--alpha", "0.05",
        "--blocks", "4,2", "--threads", "2", "-o", str(out),
    ])
    assert result.exit_code == 0, result.stderr
    payload = json.loads(out.read_text())
    assert set(payload) >= {"per_s", "global", "delta", "delta_n"}
    frame = pd.read_csv(tmp_path / "first.csv")
    assert list(frame.columns) == ["s", "t_star"]
    assert len(frame) == 21


def test_bandwidth_writes_report(mu1_csv, tmp_path):
    out = tmp_path / "cv.json"
    result = runner.invoke(app, [
        "bandwidth", "-i", str(mu1_csv), "--grid", "0.1,0.2,0.3", "--folds", "5", "-o", str(out),
    ])
    assert result.exit_code == 0, result.stderr
    report = json.loads(out.read_text())
    assert report["candidates"] == [0.1, 0.2, 0.3]
    assert report["chosen"] in report["candidates"]
    assert report["k"] == 5


def test_surface_writes_long_table(mu1_csv, tmp_path):
    out = tmp_path / "surface.csv"
    result = runner.invoke(app, ["surface", "-i", str(mu1_csv), "--bandwidth", "0.2", "-o", str(out)])
    assert result.exit_code == 0, result.stderr
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["t", "s", "mu_tilde", "g_hat", "deviation"]
    assert frame["t"].min() >= 0.2 - 1e-12
    assert frame["t"].max() <= 0.8 + 1e-12


@pytest.mark.parametrize("args", [
    ["test", "-i", "missing.csv", "--delta", "1", "-o", "x.json"],
    ["test", "--delta", "1", "-o", "x.json"],
    ["test", "-i", "missing.csv", "--delta", "1"],
    ["test", "-i", "missing.csv", "--delta", "1", "--benchmark", "bogus", "-o", "x.json"],
    ["test", "-i", "missing.csv", "--delta", "one", "-o", "x.json"],
    ["simulate", "--n", "100", "--reps", "1", "--deltas", "1", "--errors", "garch", "-o", "x.csv"],
    ["test", "--no-such-flag"],
])
def test_usage_errors_are_one_error_line(args, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = runner.invoke(app, args)
    assert result.exit_code == 2
    lines = _error_lines(result)
    assert len(lines) == 1
    assert lines[0].startswith("error code=InvalidConfig message=")


def test_first_time_needs_positive_delta(mu1_csv, tmp_path):
    result = runner.invoke(app, ["first-time", "-i", str(mu1_csv), "--delta", "0", "-o", str(tmp_path / "x.json")])
    assert result.exit_code == 2
    assert len(_error_lines(result)) == 1
    assert "code=InvalidConfig" in result.stderr


def test_help_still_exits_cleanly():
    result = runner.invoke(app, ["test", "--help"])
    assert result.exit_code == 0
    assert "--delta" in result.stdout
