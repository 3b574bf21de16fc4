"""Command line harness: generate tasks, run episodes, aggregate reports, show traces.

Exit codes: 0 when every episode ran to an outcome (solved or not), 1 when
any episode ended on a backend failure, 2 on misconfiguration.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .agents.backends import BackendConfig, LiveBackend
from .envs import ENV_NAMES, g0_task, make_task
from .orchestrator import (
    METHODS,
    EpisodeLimits,
    EpisodeTrace,
    RwrBackends,
    TraceError,
    build_report,
    read_trace,
    render_table,
    run_fullgraph_episode,
    run_react_episode,
    run_rwr_episode,
    run_rwr_limit_episode,
    write_trace,
)
from .orchestrator.scripts import (
    TranscriptError,
    golden_transcript,
    load_transcript,
    reference_rwr_backends,
    scripted_agent,
    scripted_rwr_backends,
)
from .tasks import TaskInstance

EXIT_OK, EXIT_BACKEND, EXIT_CONFIG = 0, 1, 2
CONFIG_KEYS = {
    "method",
    "env",
    "seeds",
    "tasks",
    "backend",
    "endpoint",
    "model",
    "parallel",
    "max_iterations",
    "out",
    "force",
    "temperature",
    "seed",
    "timeout",
    "max_retries",
}


class ConfigError(ValueError):
    pass


def parse_seeds(text: str) -> range:
    """``A..B`` (inclusive) or a single seed."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise ConfigError(f"seeds must look like A..B, got {text!r}") from None
    if lo < 0 or hi < lo:
        raise ConfigError(f"bad seed range {text!r}")
    return range(lo, hi + 1)


@dataclass
class RunConfig:
    method: str
    env: str | None
    seeds: range | None
    tasks: str | None = None
    backend: str = "reference"
    endpoint: str | None = None
    model: str | None = None
    parallel: int = 1
    max_iterations: int = 20
    out: Path = Path("runs")
    force: bool = False
    live: dict = field(default_factory=dict)

    def check(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if self.tasks is None:
            if self.env not in ENV_NAMES:
                raise ConfigError(f"unknown env {self.env!r}; expected one of {', '.join(ENV_NAMES)}")
            if self.seeds is None:
                raise ConfigError("--seeds is required unless --tasks is given")
        if self.parallel < 1 or self.max_iterations < 1:
            raise ConfigError("--parallel and --max-iterations must be at least 1")
        kind = self.backend.split(":", 1)[0]
        if kind not in ("reference", "scripted", "live"):
            raise ConfigError(f"unknown backend {self.backend!r}; expected reference, scripted:PATH or live")
        if kind == "live":
            if not self.endpoint or not self.model:
                raise ConfigError("the live backend needs --endpoint and --model")
        elif self.endpoint or self.model:
            raise ConfigError(f"--endpoint and --model only apply to the live backend, not {kind}")
        if kind == "scripted" and not self.backend.partition(":")[2]:
            raise ConfigError("the scripted backend needs a path: scripted:PATH")
        if kind == "reference" and not self.method.startswith("rwr"):
            raise ConfigError(f"reference backends play the RwR roles only; {self.method} needs scripted or live")


def load_config_file(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("the config file must hold a JSON object")
    if any("key" in k.lower() for k in data):
        raise ConfigError("API keys are read from the SGRWR_API_KEY environment variable, never from config files")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def run_config(args: argparse.Namespace) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            values[key] = flag
    seeds = values.get("seeds")
    cfg = RunConfig(
        method=values.get("method", "rwr"),
        env=values.get("env"),
        seeds=parse_seeds(str(seeds)) if seeds is not None else None,
        tasks=values.get("tasks"),
        backend=values.get("backend", "reference"),
        endpoint=values.get("endpoint"),
        model=values.get("model"),
        parallel=int(values.get("parallel", 1)),
        max_iterations=int(values.get("max_iterations", 20)),
        out=Path(values.get("out", "runs")),
        force=bool(values.get("force", False)),
        live={k: values[k] for k in ("temperature", "seed", "timeout", "max_retries") if k in values},
    )
    cfg.check()
    return cfg


def load_tasks(cfg: RunConfig) -> list[TaskInstance]:
    if cfg.tasks is not None:
        if cfg.tasks == "g0":
            return [g0_task()]
        path = Path(cfg.tasks)
        files = sorted(path.glob("*.json")) if path.is_dir() else [path]
        if not files:
            raise ConfigError(f"no task files in {path}")
        try:
            return [TaskInstance.from_json(f.read_bytes()) for f in files]
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load tasks from {path}: {exc}") from None
    try:
        return [make_task(cfg.env, seed) for seed in cfg.seeds]
    except (ValueError, IndexError) as exc:
        raise ConfigError(str(exc)) from None


class EpisodeRunner:
    """Builds per-episode backends and dispatches to the right driver."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.limits = EpisodeLimits(max_iterations=cfg.max_iterations)
        kind, _, path = cfg.backend.partition(":")
        self.kind = kind
        self.transcript = None
        self.live = None
        if kind == "scripted":
            try:
                self.transcript = golden_transcript(cfg.method) if path == "golden" else load_transcript(path)
            except (TranscriptError, KeyError) as exc:
                raise ConfigError(str(exc)) from None
        elif kind == "live":
            self.live = LiveBackend(BackendConfig(cfg.endpoint, cfg.model, **cfg.live))

    def rwr_backends(self, family: str) -> RwrBackends:
        if self.kind == "reference":
            return reference_rwr_backends(family)
        if self.kind == "scripted":
            return scripted_rwr_backends(self.transcript)
        return RwrBackends(self.live, self.live, self.live, self.live, self.live)

    def agent(self):
        return scripted_agent(self.transcript) if self.kind == "scripted" else self.live

    def __call__(self, task: TaskInstance) -> EpisodeTrace:
        method = self.cfg.method
        if method == "rwr":
            return run_rwr_episode(task, self.rwr_backends(task.family), self.limits).trace
        if method == "rwr-limit":
            return run_rwr_limit_episode(task, self.rwr_backends(task.family), self.limits).trace
        if method in ("react", "react-limit"):
            return run_react_episode(task, self.agent(), "full" if method == "react" else "limit", self.limits).trace
        return run_fullgraph_episode(task, self.agent(), method.removeprefix("fullgraph-")).trace


def run_episodes(cfg: RunConfig, tasks: Sequence[TaskInstance]) -> list[EpisodeTrace]:
    runner = EpisodeRunner(cfg)
    if cfg.parallel == 1:
        return [runner(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=cfg.parallel) as pool:
        return list(pool.map(runner, tasks))


def _refuse_nonempty(directory: Path, force: bool) -> None:
    if directory.exists() and any(directory.iterdir()) and not force:
        raise ConfigError(f"{directory} is not empty; pass --force to write into it")


def write_report(rows: list[dict], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(render_table(rows) + "\n", encoding="utf-8")


def cmd_gen(args: argparse.Namespace) -> int:
    if args.env not in ENV_NAMES:
        raise ConfigError(f"unknown env {args.env!r}; expected one of {', '.join(ENV_NAMES)}")
    out = Path(args.out)
    _refuse_nonempty(out, args.force)
    seeds = parse_seeds(args.seeds)
    try:
        tasks = [make_task(args.env, s) for s in seeds]
    except (ValueError, IndexError) as exc:
        raise ConfigError(str(exc)) from None
    out.mkdir(parents=True, exist_ok=True)
    for task in tasks:
        (out / f"{task.id}.json").write_bytes(task.to_json())
    print(f"wrote {len(tasks)} task files to {out}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    cfg = run_config(args)
    tasks = load_tasks(cfg)
    _refuse_nonempty(cfg.out / "traces", cfg.force)
    traces = run_episodes(cfg, tasks)
    for trace in traces:
        write_trace(trace, cfg.out / "traces")
    rows = build_report(traces)
    write_report(rows, cfg.out)
    print(render_table(rows))
    backend_failures = sum(1 for t in traces if t.outcome and t.outcome.reason == "backend")
    if backend_failures:
        print(f"{backend_failures} episode(s) ended on a backend failure", file=sys.stderr)
        return EXIT_BACKEND
    return EXIT_OK


def trace_files(directory: Path) -> list[Path]:
    sub = directory / "traces"
    return sorted((sub if sub.is_dir() else directory).glob("*.jsonl"))


def cmd_report(args: argparse.Namespace) -> int:
    traces = []
    for d in args.dirs:
        files = trace_files(Path(d))
        if not files:
            raise ConfigError(f"no traces under {d}")
        traces += [read_trace(f) for f in files]
    rows = build_report(traces)
    if args.out:
        write_report(rows, Path(args.out))
    print(json.dumps(rows, indent=2, sort_keys=True) if args.json else render_table(rows))
    return EXIT_OK


def render_trace(trace: EpisodeTrace) -> str:
    lines = [
        f"task {trace.task_id} ({trace.env}) with {trace.method}",
        f"instruction: {trace.instruction}",
        f"scene graph tokens: {trace.graph_tokens}",
    ]
    for it in trace.iterations:
        lines.append("")
        lines.append(f"== iteration {it.t}  tokens in={it.tokens_in} out={it.tokens_out}")
        turn = it.planner_turn or {}
        for key in ("explanation", "thought", "mode", "content", "action", "reply"):
            if turn.get(key):
                lines.append(f"{key}: {turn[key]}")
        for attempt in it.retrieval_attempts:
            if "program_source" in attempt:
                status = f"error: {attempt['error']}" if "error" in attempt else "ran"
                lines.append(f"  query program ({status}): {attempt['program_source']}")
            elif "action" in attempt:
                lines.append(f"  api: {attempt['action']}")
        for res in it.tool_results:
            lines.append(f"  tool {res.get('tool', '?')}: {res.get('result', res.get('error'))}")
        if it.observation:
            lines.append("observation: " + it.observation.replace("\n", "\n  "))
    outcome = trace.outcome
    verdict = "success" if outcome and outcome.success else f"failure ({outcome.reason if outcome else 'none'})"
    if outcome and outcome.detail:
        verdict += f": {outcome.detail}"
    lines += ["", f"outcome: {verdict}"]
    return "\n".join(lines)


def cmd_show(args: argparse.Namespace) -> int:
    path = Path(args.trace)
    if not path.is_file():
        raise ConfigError(f"no trace file {path}")
    print(render_trace(read_trace(path)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgrwr", description="Scene-graph reason-while-retrieve harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write task JSON files")
    gen.add_argument("--env", required=True, choices=ENV_NAMES)
    gen.add_argument("--seeds", required=True, help="A..B, inclusive")
    gen.add_argument("--out", required=True)
    gen.add_argument("--force", action="store_true")
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="run episodes and write traces plus a report")
    run.add_argument("--config", help="JSON file with run settings; flags override it")
    run.add_argument("--method", choices=METHODS)
    run.add_argument("--env", choices=ENV_NAMES)
    run.add_argument("--seeds", help="A..B, inclusive")
    run.add_argument("--tasks", help="task JSON file or directory (or g0) instead of --env/--seeds")
    run.add_argument("--backend", help="reference | scripted:PATH | scripted:golden | live")
    run.add_argument("--endpoint")
    run.add_argument("--model")
    run.add_argument("--parallel", type=int)
    run.add_argument("--max-iterations", dest="max_iterations", type=int)
    run.add_argument("--out")
    run.add_argument("--force", action="store_true")
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", help="recompute a report from trace directories")
    report.add_argument("dirs", nargs="+")
    report.add_argument("--out")
    report.add_argument("--json", action="store_true")
    report.set_defaults(func=cmd_report)

    show = sub.add_parser("show", help="pretty-print one episode trace")
    show.add_argument("trace")
    show.set_defaults(func=cmd_show)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
