"""Command-line behaviour: output shapes, exit codes, error categories."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from mip6sim.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
ITRO_FILE = str(SCENARIOS / "comparison_itro.json")
BT_FILE = str(SCENARIOS / "comparison_bt.json")


def _summary(text: str) -> dict[str, str]:
    rows = {}
    for line in text.splitlines():
        key, _, value = line.partition("  ")
        rows[key.strip()] = value.strip()
    return rows


def test_run_prints_a_key_value_summary(capsys):
    assert main(["run", ITRO_FILE]) == 0
    out = capsys.readouterr().out
    summary = _summary(out)
    assert summary["scenario"] == ITRO_FILE
    assert summary["mtu"] == "1500"
    assert summary["injected"] == "1"
    assert summary["delivered"] == "1"
    assert summary["dropped"] == "0"
    assert summary["signaling_bytes"] == "320"
    assert summary["overhead_pct_measured"] == "0.0000"
    assert summary["delay_units_measured"] == "1"
    assert summary["overhead_pct_analytic"] == "0.0000"
    assert summary["delay_units_analytic"] == "1"


def test_run_csv_format(capsys):
    assert main(["run", BT_FILE, "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert "delivered,1\n" in out
    assert "overhead_pct_measured,5.4795\n" in out
    assert "overhead_pct_analytic,5.4795\n" in out
    assert "delay_units_measured,3\n" in out


def test_run_writes_trace_and_report_files(tmp_path, capsys):
    trace = tmp_path / "out.jsonl"
    report = tmp_path / "report.txt"
    assert main(["run", BT_FILE, "--trace", str(trace), "--report", str(report)]) == 0
    out = capsys.readouterr().out
    assert report.read_text(encoding="utf-8") == out
    lines = trace.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 7  # 4 binding updates + 3 tunnel legs
    for line in lines:
        record = json.loads(line)
        assert list(record) == [
            "time", "from", "to", "wire_bytes", "mobility_bytes", "headers", "mechanism",
        ]


def test_run_seed_override_changes_nothing_but_payload_bytes(tmp_path, capsys):
    t1, t2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["run", ITRO_FILE, "--seed", "5", "--trace", str(t1)]) == 0
    assert main(["run", ITRO_FILE, "--seed", "6", "--trace", str(t2)]) == 0
    capsys.readouterr()
    # Sizes and routing are identical, so the traces agree byte for byte.
    assert t1.read_bytes() == t2.read_bytes()


def test_validate_ok(capsys):
    assert main(["validate", ITRO_FILE]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_reports_every_finding(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    raw = json.loads(Path(ITRO_FILE).read_text(encoding="utf-8"))
    raw["version"] = 9
    raw["nodes"][2]["role"] = "laptop"
    bad.write_text(json.dumps(raw), encoding="utf-8")
    assert main(["validate", str(bad)]) == 1
    out = capsys.readouterr().out
    findings = [l for l in out.splitlines() if l.startswith("config-invalid: ")]
    assert len(findings) >= 2


def test_validate_mtu_override_applies_before_checks(capsys):
    # At mtu 1000 the bundled bt payload (1420) no longer fits its cap.
    assert main(["validate", BT_FILE, "--mtu", "1000"]) == 1
    out = capsys.readouterr().out
    assert "exceeds the bidirectional_tunneling cap" in out


def test_missing_file_category(capsys):
    assert main(["run", "no-such-scenario.json"]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:file-not-found: ")
    assert err.count("\n") == 1


def test_parse_error_category(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text("{", encoding="utf-8")
    assert main(["run", str(bad)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:parse-error: ")


def test_config_invalid_category(tmp_path, capsys):
    bad = tmp_path / "invalid.json"
    bad.write_text(json.dumps({"version": 1, "nodes": []}), encoding="utf-8")
    assert main(["run", str(bad)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:config-invalid: ")


def test_invalid_value_category(capsys):
    # mtu 88 is a legal wire size but too small for the closed forms.
    assert main(["reproduce-paper", "--mtu", "88"]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:invalid-value: ")


def test_usage_errors_exit_2(capsys):
    for argv in ([], ["frobnicate"], ["run"], ["reproduce-paper", "--format", "xml"]):
        with pytest.raises(SystemExit) as exit_info:
            main(argv)
        assert exit_info.value.code == 2
        assert capsys.readouterr().err.startswith("error:usage: ")


def test_reproduce_paper_table(capsys):
    assert main(["reproduce-paper"]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0].split() == [
        "mechanism",
        "overhead_pct_analytic",
        "overhead_pct_measured",
        "delay_units_analytic",
        "delay_units_measured",
    ]
    assert lines[1].startswith("bidirectional_tunneling")
    assert lines[2].startswith("route_optimization")
    assert lines[3].startswith("tunneling_route_optimization")
    assert lines[4].startswith("improved_tunneling_route_optimization")
    assert "note: " in out
    assert "6.6" in out and "5.48" in out


def test_reproduce_paper_csv(capsys):
    assert main(["reproduce-paper", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("mechanism,overhead_pct_analytic,")
    assert "bidirectional_tunneling,5.4795,5.4795,3,3\n" in out
    assert "route_optimization,3.3058,3.3058,1,1\n" in out
    assert "tunneling_route_optimization,2.7397,2.7397,1,1\n" in out
    assert "improved_tunneling_route_optimization,0.0000,0.0000,1,1\n" in out


def test_reproduce_paper_mtu_override(capsys):
    assert main(["reproduce-paper", "--mtu", "1000", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert "bidirectional_tunneling,8.3333,8.3333,3,3\n" in out


def test_reproduce_paper_trace_covers_all_mechanisms(tmp_path, capsys):
    trace = tmp_path / "all.jsonl"
    assert main(["reproduce-paper", "--trace", str(trace)]) == 0
    capsys.readouterr()
    mechanisms = [json.loads(l)["mechanism"] for l in trace.read_text().splitlines()]
    assert mechanisms[0] == "bidirectional_tunneling"
    assert mechanisms[-1] == "improved_tunneling_route_optimization"
    assert set(mechanisms) == {
        "bidirectional_tunneling",
        "route_optimization",
        "tunneling_route_optimization",
        "improved_tunneling_route_optimization",
    }


def test_reproduce_paper_traces_are_reproducible(tmp_path, capsys):
    t1, t2 = tmp_path / "one.jsonl", tmp_path / "two.jsonl"
    assert main(["reproduce-paper", "--trace", str(t1)]) == 0
    assert main(["reproduce-paper", "--trace", str(t2)]) == 0
    capsys.readouterr()
    assert t1.read_bytes() == t2.read_bytes()
    assert t1.stat().st_size > 0


def test_report_file_matches_stdout(tmp_path, capsys):
    report = tmp_path / "table.txt"
    assert main(["reproduce-paper", "--report", str(report)]) == 0
    out = capsys.readouterr().out
    assert report.read_text(encoding="utf-8") == out


def test_module_entry_point_runs_as_a_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "mip6sim.cli", "reproduce-paper", "--format", "csv"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("mechanism,")


def test_unroutable_drop_appears_in_the_summary(tmp_path, capsys):
    # cn starts away and never registers, so the packet has nowhere to go.
    raw = json.loads(Path(ITRO_FILE).read_text(encoding="utf-8"))
    raw["nodes"][3]["initial_location"] = "2001:db8:b::10"
    raw["schedule"] = [
        {"at": 0, "kind": "send", "node": "mn", "dst": "2001:db8:2::10", "payload_size": 10}
    ]
    lonely = tmp_path / "lonely.json"
    lonely.write_text(json.dumps(raw), encoding="utf-8")
    assert main(["run", str(lonely)]) == 0
    summary = _summary(capsys.readouterr().out)
    assert summary["dropped"] == "1"
    assert summary["drops.unroutable"] == "1"
    assert summary["overhead_pct_measured"] == "n/a"
    assert summary["delay_units_measured"] == "n/a"