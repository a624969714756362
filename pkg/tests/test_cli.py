import json
import shutil
import subprocess

import pytest

from gpv.cli import FOUND, INAPPLICABLE, INPUT_ERROR, OK, RESOURCE_LIMIT, main, parse_fairness, parse_query
from gpv.harness import reader_writer, toy_disjunctive
from gpv.model import GlobalDeadlock, LocalDeadlock, Target
from gpv.textio import parse_protocol, render_source, run_from_json
from gpv.witness import validate_run


@pytest.fixture
def rw_file(tmp_path):
    path = tmp_path / "readerwriter.gp"
    path.write_text(render_source(reader_writer()))
    return str(path)


def test_cutoff_prints_value_and_rule(rw_file, capsys):
    assert main(["cutoff", rw_file, "--query", "local-deadlock", "--fair", "strong"]) == OK
    out = capsys.readouterr().out
    assert out.startswith("5 ") and "alternation-free" in out


def test_check_emits_witness(rw_file, tmp_path, capsys):
    wfile = tmp_path / "w.json"
    code = main(["check", rw_file, "-n", "5", "--query", "local-deadlock", "--fair", "strong", "--witness", str(wfile)])
    assert code == FOUND
    assert "DeadlockFound" in capsys.readouterr().out
    run = run_from_json(json.loads(wfile.read_text()))
    assert validate_run(reader_writer(), 5, run)


def test_check_json(rw_file, capsys):
    assert main(["check", rw_file, "-n", "2", "--query", "global-deadlock", "--json"]) == OK
    data = json.loads(capsys.readouterr().out)
    assert data["verdicts"][0]["result"] == "NoDeadlock"
    assert set(data) >= {"analysis", "cutoffs", "verdicts", "timings"}


def test_fair_without_value_picks_strong_for_deadlocks(rw_file, capsys):
    assert main(["cutoff", rw_file, "--query", "local-deadlock", "--fair"]) == OK
    assert capsys.readouterr().out.startswith("5 ")


def test_parse_helpers():
    assert parse_query("local-deadlock:tw") == LocalDeadlock("tw")
    assert parse_query("global-deadlock") == GlobalDeadlock()
    assert parse_query("target:r") == Target("r")
    assert parse_fairness("auto", Target("r")).kind == "uncond"
    assert parse_fairness(None, Target("r")).kind == "none"


def test_validate_reports_consistency(rw_file, capsys):
    assert main(["validate", rw_file, "--query", "local-deadlock", "--fair", "strong", "--initializing"]) == OK
    assert "Consistent" in capsys.readouterr().out


def test_analyze(rw_file, capsys):
    assert main(["analyze", rw_file]) == OK
    out = capsys.readouterr().out
    assert "|G_B| = 2" in out and "k1 = 3" in out
    assert main(["analyze", rw_file, "--json"]) == OK
    assert json.loads(capsys.readouterr().out)["analysis"]["guards"]["G_B_count"] == 2


def test_table(rw_file, capsys):
    assert main(["cutoff", rw_file, "--table"]) == OK
    assert "global-deadlock" in capsys.readouterr().out


def test_inapplicable_row_exit_code(tmp_path, capsys):
    path = tmp_path / "q.gp"
    assert main(["example", "quadratic", "-o", str(path)]) == OK
    assert main(["cutoff", str(path), "--query", "local-deadlock"]) == INAPPLICABLE
    assert "quadratic lower bound" in capsys.readouterr().out


def test_usage_errors(rw_file, capsys):
    assert main(["bogus"]) == INPUT_ERROR
    assert main(["check", rw_file, "-n", "3", "--query", "local-deadlock", "--fair", "uncond"]) == INPUT_ERROR
    assert main(["check", rw_file, "-n", "3", "--query", "nonsense"]) == INPUT_ERROR
    assert main(["check", "/nonexistent.gp", "-n", "3", "--query", "global-deadlock"]) == INPUT_ERROR


def test_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.gp"
    path.write_text("system conjunctive\ntemplate B {\n}\n")
    assert main(["analyze", str(path)]) == INPUT_ERROR
    assert "must declare at least init" in capsys.readouterr().err


def test_budget_exit_code(tmp_path, monkeypatch):
    path = tmp_path / "q.gp"
    assert main(["example", "quadratic", "-o", str(path)]) == OK
    assert main(["check", str(path), "-n", "9", "--query", "local-deadlock:ql", "--budget-states", "20"]) == RESOURCE_LIMIT
    monkeypatch.setenv("GPV_BUDGET_STATES", "20")
    assert main(["check", str(path), "-n", "9", "--query", "local-deadlock:ql"]) == RESOURCE_LIMIT


def test_example_height_keeps_guards(capsys):
    counts = []
    for h in ("2", "4"):
        assert main(["example", "quadratic", "--cycles", "4", "--height", h]) == OK
        spec = parse_protocol(capsys.readouterr().out)
        counts.append(len({t.guard for t in spec.B.transitions if not t.guard.trivial}))
    assert counts[0] == counts[1]
    assert main(["example", "quadratic", "--cycles", "5"]) == INPUT_ERROR


@pytest.mark.skipif(shutil.which("gpv") is None, reason="console script not installed")
def test_console_script(rw_file):
    proc = subprocess.run(["gpv", "cutoff", rw_file, "--query", "global-deadlock"], capture_output=True, text=True)
    assert proc.returncode == OK and "StaticallyImpossible" in proc.stdout
