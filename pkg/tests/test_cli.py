import json
import subprocess
import sys

import pytest

from sgrwr.cli import EXIT_BACKEND, EXIT_CONFIG, EXIT_OK, main, parse_seeds
from sgrwr.orchestrator import read_trace, strip_wall_time
from sgrwr.tasks import TaskInstance


def run(*argv):
    return main([str(a) for a in argv])


def report_of(out):
    return json.loads((out / "report.json").read_text())


def test_parse_seeds():
    assert parse_seeds("0..99") == range(100)
    assert parse_seeds("7") == range(7, 8)


def test_gen_writes_one_file_per_seed(tmp_path):
    assert run("gen", "--env", "numqa", "--seeds", "0..99", "--out", tmp_path / "n") == EXIT_OK
    files = sorted((tmp_path / "n").glob("*.json"))
    assert len(files) == 100
    assert TaskInstance.from_json(files[0].read_bytes()).family == "numqa"
    assert run("gen", "--env", "trv2", "--seeds", "0..9", "--out", tmp_path / "t") == EXIT_OK
    assert len(list((tmp_path / "t").glob("*.json"))) == 10


def test_gen_refuses_nonempty_dir(tmp_path, capsys):
    (tmp_path / "x.txt").write_text("x")
    assert run("gen", "--env", "trv1", "--seeds", "0..1", "--out", tmp_path) == EXIT_CONFIG
    assert "--force" in capsys.readouterr().err
    assert run("gen", "--env", "trv1", "--seeds", "0..1", "--out", tmp_path, "--force") == EXIT_OK


def test_run_reference_numqa(tmp_path):
    out = tmp_path / "run"
    assert run("run", "--method", "rwr", "--env", "numqa", "--seeds", "0..9", "--out", out) == EXIT_OK
    (row,) = report_of(out)
    assert row["success_rate"] == 1.0 and row["trials"] == 10
    assert len(list((out / "traces").glob("*.jsonl"))) == 10
    assert (out / "report.txt").read_text().startswith("method")


def test_run_from_generated_tasks(tmp_path):
    run("gen", "--env", "trv1", "--seeds", "0..4", "--out", tmp_path / "tasks")
    out = tmp_path / "run"
    assert run("run", "--method", "rwr", "--tasks", tmp_path / "tasks", "--out", out) == EXIT_OK
    assert report_of(out)[0]["successes"] == 5


def test_run_refuses_existing_traces(tmp_path):
    args = ("run", "--method", "rwr", "--env", "trv1", "--seeds", "0..1", "--out", tmp_path)
    assert run(*args) == EXIT_OK
    assert run(*args) == EXIT_CONFIG
    assert run(*args, "--force") == EXIT_OK


@pytest.mark.parametrize(
    "extra",
    [
        ("--method", "react", "--backend", "reference"),
        ("--method", "rwr", "--backend", "live"),
        ("--method", "rwr", "--backend", "reference", "--endpoint", "http://x"),
        ("--method", "rwr", "--backend", "scripted:"),
        ("--method", "rwr", "--backend", "reference", "--seeds", "9..1"),
        ("--method", "rwr", "--backend", "carrier-pigeon"),
    ],
)
def test_misconfiguration_exits_2(tmp_path, extra):
    args = ["run", "--env", "numqa", "--seeds", "0..0", "--out", tmp_path, *extra]
    assert run(*args) == EXIT_CONFIG


def test_missing_transcript_exits_2(tmp_path):
    assert run("run", "--method", "react", "--tasks", "g0", "--backend", f"scripted:{tmp_path}/none.json",
               "--out", tmp_path / "o") == EXIT_CONFIG


def test_live_backend_down_exits_1(tmp_path):
    args = ["run", "--method", "rwr", "--env", "numqa", "--seeds", "0..0", "--backend", "live",
            "--endpoint", "http://127.0.0.1:9", "--model", "m", "--out", tmp_path, "--config"]
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_retries": 1, "timeout": 2}))
    assert run(*args, cfg) == EXIT_BACKEND
    (row,) = report_of(tmp_path)
    assert row["failure_histogram"] == {"backend": 1}


def test_config_file_and_key_rejection(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"method": "rwr", "env": "trv2", "seeds": "0..2", "out": str(tmp_path / "o")}))
    assert run("run", "--config", cfg) == EXIT_OK
    assert report_of(tmp_path / "o")[0]["env"] == "trv2"
    cfg.write_text(json.dumps({"method": "rwr", "env": "trv2", "seeds": "0..2", "api_key": "sk-123"}))
    assert run("run", "--config", cfg) == EXIT_CONFIG
    cfg.write_text(json.dumps({"method": "rwr", "colour": "red"}))
    assert run("run", "--config", cfg) == EXIT_CONFIG


@pytest.mark.parametrize("method", ["rwr", "rwr-limit", "react", "react-limit"])
def test_golden_transcripts_via_cli(tmp_path, method):
    out = tmp_path / method
    assert run("run", "--method", method, "--tasks", "g0", "--backend", "scripted:golden", "--out", out) == EXIT_OK
    assert report_of(out)[0]["success_rate"] == 1.0
    if method == "react":
        (trace_file,) = (out / "traces").glob("*.jsonl")
        assert "expand(" in trace_file.read_text()


def test_parallel_matches_serial(tmp_path):
    common = ("run", "--method", "rwr", "--env", "trv2", "--seeds", "0..15")
    assert run(*common, "--parallel", "1", "--out", tmp_path / "p1") == EXIT_OK
    assert run(*common, "--parallel", "8", "--out", tmp_path / "p8") == EXIT_OK
    assert report_of(tmp_path / "p1") == report_of(tmp_path / "p8")
    for a in sorted((tmp_path / "p1" / "traces").iterdir()):
        b = tmp_path / "p8" / "traces" / a.name
        assert strip_wall_time(a.read_text()) == strip_wall_time(b.read_text())


def test_report_recompute_and_merge(tmp_path, capsys):
    run("run", "--method", "rwr", "--env", "numqa", "--seeds", "0..4", "--out", tmp_path / "a")
    run("run", "--method", "rwr", "--env", "numqa", "--seeds", "5..7", "--out", tmp_path / "b")
    capsys.readouterr()
    assert run("report", tmp_path / "a", "--json") == EXIT_OK
    assert json.loads(capsys.readouterr().out) == report_of(tmp_path / "a")
    assert run("report", tmp_path / "a", tmp_path / "b", "--out", tmp_path / "m") == EXIT_OK
    (merged,) = report_of(tmp_path / "m")
    assert merged["trials"] == 8 and merged["successes"] == 8
    assert run("report", tmp_path / "empty") == EXIT_CONFIG


def test_show(tmp_path, capsys):
    run("run", "--method", "rwr", "--env", "trv1", "--seeds", "0..0", "--out", tmp_path)
    (trace_file,) = (tmp_path / "traces").glob("*.jsonl")
    capsys.readouterr()
    assert run("show", trace_file) == EXIT_OK
    text = capsys.readouterr().out
    headers = [line for line in text.splitlines() if line.startswith("== iteration")]
    assert headers == [f"== iteration {i}" + h.split(f"== iteration {i}", 1)[1] for i, h in enumerate(headers)]
    assert "mode: TOOL" in text and "traverse_room" in text and "outcome: success" in text
    assert len(headers) == len(read_trace(trace_file).iterations)


def test_show_corrupt_trace(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"record": "header"}\n{oops\n')
    assert run("show", bad) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert run("show", tmp_path / "missing.jsonl") == EXIT_CONFIG


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "sgrwr.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "gen" in proc.stdout
