"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import json
import os
import time

import pytest

import conftest
from checks import api_log_lines, astar_mismatches, dsl_mismatches, household_problems, numqa_problems, run_golden
from sgrwr.agents import ScriptedBackend
from sgrwr.cli import EXIT_OK, main
from sgrwr.envs import g0_task
from sgrwr.envs.babyai import gen_numqa
from sgrwr.orchestrator import (
    EpisodeLimits,
    RwrBackends,
    graph_token_count,
    read_trace,
    run_fullgraph_episode,
    run_rwr_episode,
    strip_wall_time,
)
from sgrwr.orchestrator.scripts import reference_rwr_backends

GOLDEN = ("rwr", "rwr-limit", "react", "react-limit")


def record(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_dsl_oracle_equivalence():
    start = time.perf_counter()
    bad = dsl_mismatches(1000, seed=1)
    elapsed = time.perf_counter() - start
    record(1, not bad and elapsed < 30, f"{len(bad)} mismatches in 1000 pairs, {elapsed:.2f}s")


def test_criterion_2_astar_optimality():
    start = time.perf_counter()
    compared, bad = astar_mismatches(200, seed=1)
    elapsed = time.perf_counter() - start
    record(2, compared == 200 and not bad and elapsed < 60, f"{len(bad)} mismatches in {compared} worlds, {elapsed:.2f}s")


def test_criterion_3_numqa_uniqueness():
    problems = numqa_problems(range(100))
    record(3, not problems, f"{100 - len(problems)}/100 unique with matching oracle" + (f"; {problems[:3]}" if problems else ""))


def _cli_run(out, env, seeds):
    rc = main(["run", "--method", "rwr", "--backend", "reference", "--env", env, "--seeds", seeds, "--out", str(out)])
    (row,) = json.loads((out / "report.json").read_text())
    return rc, row, [read_trace(p) for p in sorted((out / "traces").glob("*.jsonl"))]


def _shape_problems(env, traces):
    problems = []
    for trace in traces:
        if not trace.success:
            continue
        modes = [it.planner_turn["mode"] for it in trace.iterations]
        if "QUERY" not in modes:
            problems.append(f"{trace.task_id}: no QUERY iteration")
        if env.startswith("trv") and not any(
            r.get("tool") == "traverse_room" for it in trace.iterations for r in it.tool_results
        ):
            problems.append(f"{trace.task_id}: no traverse_room call")
    return problems


def test_criterion_4_hermetic_end_to_end(tmp_path):
    start = time.perf_counter()
    parts, problems, ok = [], [], True
    for env, seeds in (("numqa", "0..99"), ("trv1", "0..49"), ("trv2", "0..49")):
        rc, row, traces = _cli_run(tmp_path / env, env, seeds)
        problems += _shape_problems(env, traces)
        ok &= rc == EXIT_OK and row["success_rate"] == 1.0
        parts.append(f"{env} {row['success_rate']:.2f}")
    elapsed = time.perf_counter() - start
    ok &= not problems and elapsed < 300
    record(4, ok, ", ".join(parts) + f", {elapsed:.1f}s" + (f"; {problems[:3]}" if problems else ""))


def test_criterion_5_golden_replay():
    results = {m: run_golden(m) for m in GOLDEN}
    succeeded = [m for m, r in results.items() if r.trace.success]
    react_n = len(results["react"].trace.iterations)
    limit_n = len(results["react-limit"].trace.iterations)
    leaks = api_log_lines(results["rwr-limit"].history)
    ok = len(succeeded) == 4 and limit_n > react_n and not leaks
    record(5, ok, f"{len(succeeded)}/4 replays succeed; react {react_n} vs react-limit {limit_n} actions; "
                  f"{len(leaks)} API log lines in rwr-limit planner history")


def test_criterion_6_retriever_robustness():
    task = g0_task()
    query = "[Explanation]\nlook\n[Mode]\nQUERY\n[Content]\nHow many green balls are in room_A?"
    good = '```sgq\ncount(nodes(type="ball", color="green") | in_room("room_A"))\n```'
    verifier = reference_rwr_backends("numqa").verifier
    planner = ScriptedBackend([query, "[Explanation]\nok\n[Mode]\nSOLUTION\n[Content]\npurple"])
    first = run_rwr_episode(task, RwrBackends(planner, ScriptedBackend(['```sgq\nnodes(type=\n```', good]), verifier))
    attempts = first.trace.iterations[0].retrieval_attempts
    debug_ok = len(attempts) == 2 and "error" in attempts[0] and "error" not in attempts[1]
    debug_ok &= first.history[3].content.startswith("Retrieved information:")

    planner = ScriptedBackend([query, "[Explanation]\nok\n[Mode]\nSOLUTION\n[Content]\npurple"])
    bad = ScriptedBackend(["```sgq\n)\n```", "no fence", '```sgq\nattrs("ghost")\n```'])
    second = run_rwr_episode(task, RwrBackends(planner, bad, verifier), EpisodeLimits())
    obs = second.trace.iterations[0].observation
    fail_ok = obs.startswith("RETRIEVAL FAILED") and len(second.trace.iterations) == 2 and second.trace.success
    record(6, debug_ok and fail_ok,
           f"self-debug recorded {len(attempts)} attempts; 3 errors gave {obs.split(':')[0]!r} and the episode went on "
           f"for {len(second.trace.iterations)} iterations")


def test_criterion_7_household_preconditions():
    passing, failing, problems = household_problems("vh1")
    ok = passing == 8 and failing >= 1 and not problems
    record(7, ok, f"{passing}/8 golden plans succeed; {failing} open-less plans fail at putin" + (f"; {problems}" if problems else ""))


def test_criterion_8_determinism(tmp_path):
    diffs = []
    for name, argv in (
        ("reference", ["--method", "rwr", "--backend", "reference", "--env", "trv2", "--seeds", "0..19"]),
        ("scripted", ["--method", "react-limit", "--backend", "scripted:golden", "--tasks", "g0"]),
    ):
        outs = []
        for i in range(2):
            out = tmp_path / f"{name}{i}"
            assert main(["run", *argv, "--out", str(out)]) == EXIT_OK
            outs.append({p.name: strip_wall_time(p.read_text()) for p in (out / "traces").glob("*.jsonl")})
        if outs[0] != outs[1]:
            diffs.append(name)
    reports = []
    for n in ("1", "8"):
        out = tmp_path / f"par{n}"
        main(["run", "--method", "rwr", "--env", "numqa", "--seeds", "0..39", "--parallel", n, "--out", str(out)])
        reports.append((out / "report.json").read_text())
    ok = not diffs and reports[0] == reports[1]
    record(8, ok, f"repeat runs identical: {not diffs}; --parallel 8 report equals --parallel 1: {reports[0] == reports[1]}")


def test_criterion_9_token_accounting():
    over = []
    for seed in range(100):
        trace = run_rwr_episode(gen_numqa(seed), reference_rwr_backends("numqa")).trace
        over += [(seed, it.t) for it in trace.iterations if it.planner_tokens_in >= trace.graph_tokens]
    under = []
    for seed in range(20):
        task = gen_numqa(seed)
        for style in ("zeroshot", "cot"):
            trace = run_fullgraph_episode(task, ScriptedBackend([task.oracle.answer]), style).trace
            if trace.iterations[0].tokens_in < graph_token_count(task):
                under.append((seed, style))
    record(9, not over and not under,
           f"{len(over)} rwr iterations at or above the graph token count; {len(under)} fullgraph runs below it")


@pytest.mark.skipif(
    not (os.environ.get("SGRWR_LIVE_ENDPOINT") and os.environ.get("SGRWR_LIVE_MODEL")),
    reason="set SGRWR_LIVE_ENDPOINT and SGRWR_LIVE_MODEL to run the live smoke test",
)
def test_criterion_10_live_smoke(tmp_path):
    rc = main([
        "run", "--method", "rwr", "--env", "numqa", "--seeds", "0..0", "--backend", "live",
        "--endpoint", os.environ["SGRWR_LIVE_ENDPOINT"], "--model", os.environ["SGRWR_LIVE_MODEL"],
        "--out", str(tmp_path),
    ])
    record(10, rc == EXIT_OK, f"live numqa episode exit code {rc}")


def test_criterion_10_status_line():
    if not (os.environ.get("SGRWR_LIVE_ENDPOINT") and os.environ.get("SGRWR_LIVE_MODEL")):
        line = "SKIP criterion 10: no live endpoint configured (optional, non-blocking)"
        print(line)
        conftest.ACCEPTANCE_LINES.append(line)
