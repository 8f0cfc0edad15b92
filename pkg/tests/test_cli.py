import csv
import io
import json
import subprocess
import sys

import pytest

from cbmr.cli import main


def _exp(tmp_path, T=60, policies="cbmr-ind"):
    p = tmp_path / "exp.json"
    assert main(["generate", "--preset", "commission", "--experiment", "--T", str(T), "--policies", policies,
                 "-o", str(p)]) == 0
    return p


def test_generate_market(tmp_path, capsys):
    out = tmp_path / "m.json"
    assert main(["generate", "--preset", "C-2", "--seed", "3", "--set", "g_c=0.2", "--topology", "line",
                 "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "cbmr.market/1" and doc["purchase"]["g_c"] == 0.2
    assert doc["topology"]["edges"] == [[0, 1], [1, 2]]


def test_run_is_deterministic(tmp_path, capsys):
    exp = _exp(tmp_path)
    for name in ("a", "b"):
        assert main(["run", "--config", str(exp), "--seed", "7", "--output", str(tmp_path / name)]) == 0
    out = capsys.readouterr().out
    first = next(csv.DictReader(io.StringIO(out)))
    assert first["policy"] == "cbmr-ind"
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_sweep_commission_rows(tmp_path, capsys):
    exp = _exp(tmp_path, T=40)
    assert main(["sweep", "--config", str(exp), "--param", "commission", "--values", "0,0.1,0.2,0.3,0.4,0.5",
                 "--output", str(tmp_path / "sw")]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["label"] for r in rows] == [f"commission={v}" for v in ("0", "0.1", "0.2", "0.3", "0.4", "0.5")]
    assert (tmp_path / "sw" / "sweep.csv").exists()
    assert float(rows[0]["optimal_reward_mean"]) < float(rows[-1]["optimal_reward_mean"])


def test_report_writes_table_and_figures(tmp_path, capsys):
    exp = _exp(tmp_path, T=80, policies="cbmr-ind,cbmr-d")
    assert main(["run", "--config", str(exp), "--output", str(tmp_path / "res")]) == 0
    capsys.readouterr()
    assert main(["report", str(tmp_path / "res"), "--output", str(tmp_path / "rep"), "--agent", "0"]) == 0
    out = capsys.readouterr().out
    assert len(list(csv.DictReader(io.StringIO(out)))) == 2
    pngs = list((tmp_path / "rep").glob("*.png"))
    assert pngs and pngs[0].read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert (tmp_path / "rep" / "report.csv").exists()


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--bogus"])
    assert exc.value.code != 0
    proc = subprocess.run([sys.executable, "-m", "cbmr", "sweep", "--nope"], capture_output=True, text=True)
    assert proc.returncode != 0 and "usage" in proc.stderr


def test_malformed_config_reports_location(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"T": 5,\n  "scenario": {"preset": "C-2",}}')
    assert main(["run", "--config", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err and "bad.json" in err


def test_missing_file_and_bad_report(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "none.json")]) == 1
    assert main(["report", str(tmp_path / "empty"), "--output", str(tmp_path / "r")]) == 1
    assert "error" in capsys.readouterr().err
