import json

import pytest

from fuzzyagents.cli import main
from fuzzyagents.trace import read_trace
from fuzzyagents.watering import REFERENCE_CONFIG, REFERENCE_SCENARIO, infer, reference_config


def test_infer_prints_duration(capsys):
    assert main(["infer", "--temperature", "35", "--humidity", "10"]) == 0
    value = float(capsys.readouterr().out)
    assert abs(value - infer(reference_config(), 35, 10)) < 1e-3


def test_run_writes_trace_and_reports_duration(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    assert main(["run", "--out", str(out)]) == 0
    duration = float(capsys.readouterr().out.split(":")[1])
    assert abs(duration - 40) <= 5
    assert read_trace(out.read_bytes()).of_kind("env-effect")


def test_run_to_stdout_as_jsonl(capsysbinary):
    assert main(["run", "--format", "jsonl"]) == 0
    captured = capsysbinary.readouterr()
    assert read_trace(captured.out, "jsonl").of_kind("tick")
    assert captured.err.startswith(b"duration:")


def test_run_is_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--out", str(a)]) == 0
    assert main(["run", "--out", str(b), "--parallel"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_explicit_files(tmp_path):
    cfg, sc = tmp_path / "c.json", tmp_path / "s.json"
    cfg.write_text(REFERENCE_CONFIG.read_text())
    sc.write_text(REFERENCE_SCENARIO.read_text())
    assert main(["run", "--config", str(cfg), "--scenario", str(sc), "--out", str(tmp_path / "t.csv")]) == 0


def test_validate(capsys):
    assert main(["validate"]) == 0
    assert "ok" in capsys.readouterr().out


def test_invalid_config_exits_one(tmp_path, capsys):
    raw = json.loads(REFERENCE_CONFIG.read_text())
    raw["variables"][0]["terms"][4]["params"] = [30.0, 40.0]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(raw))
    assert main(["validate", "--config", str(bad)]) == 1
    assert "calibration" in capsys.readouterr().err
    assert main(["infer", "--config", str(tmp_path / "missing.json"), "--temperature", "1", "--humidity", "1"]) == 1


def test_nothing_fires_exits_two(capsys):
    assert main(["infer", "--temperature", "0", "--humidity", "30"]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
