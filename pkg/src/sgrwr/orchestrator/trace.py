"""Episode traces and their JSONL form: a header line, one line per iteration, a footer line."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..tasks import Outcome


class TraceError(ValueError):
    pass


@dataclass
class Iteration:
    t: int
    planner_turn: dict | None
    observation: str | None = None
    retrieval_attempts: list[dict] = field(default_factory=list)
    tool_results: list[dict] = field(default_factory=list)
    tokens_in: int = 0
    tokens_out: int = 0
    tokens_by_role: dict = field(default_factory=dict)

    @property
    def planner_tokens_in(self) -> int:
        return self.tokens_by_role.get("planner", {}).get("tokens_in", 0)

    def to_dict(self) -> dict:
        return {
            "record": "iteration",
            "t": self.t,
            "planner_turn": self.planner_turn,
            "observation": self.observation,
            "retrieval_attempts": self.retrieval_attempts,
            "tool_results": self.tool_results,
            "tokens_in": self.tokens_in,
            "tokens_out": self.tokens_out,
            "tokens_by_role": self.tokens_by_role,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Iteration":
        return cls(
            t=data["t"],
            planner_turn=data.get("planner_turn"),
            observation=data.get("observation"),
            retrieval_attempts=data.get("retrieval_attempts", []),
            tool_results=data.get("tool_results", []),
            tokens_in=data["tokens_in"],
            tokens_out=data["tokens_out"],
            tokens_by_role=data.get("tokens_by_role", {}),
        )


@dataclass
class EpisodeTrace:
    task_id: str
    method: str
    env: str
    family: str
    instruction: str
    iterations: list[Iteration] = field(default_factory=list)
    outcome: Outcome | None = None
    solution: dict | None = None
    graph_tokens: int = 0
    wall_time: float = 0.0

    def check(self) -> None:
        for i, it in enumerate(self.iterations):
            if it.t != i:
                raise TraceError(f"iteration {i} has t={it.t}")
            if it.tokens_in < 0 or it.tokens_out < 0:
                raise TraceError(f"iteration {i} has negative token counts")

    @property
    def success(self) -> bool:
        return bool(self.outcome and self.outcome.success)

    def records(self) -> list[dict[str, Any]]:
        header = {
            "record": "header",
            "task_id": self.task_id,
            "method": self.method,
            "env": self.env,
            "family": self.family,
            "instruction": self.instruction,
            "graph_tokens": self.graph_tokens,
        }
        footer = {
            "record": "footer",
            "outcome": self.outcome.to_dict() if self.outcome else None,
            "solution": self.solution,
            "iterations": len(self.iterations),
            "wall_time": self.wall_time,
        }
        return [header, *(it.to_dict() for it in self.iterations), footer]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in self.records())

    @classmethod
    def from_jsonl(cls, text: str, source: str = "<trace>") -> "EpisodeTrace":
        records = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceError(f"{source}: line {lineno}: not valid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or rec.get("record") not in ("header", "iteration", "footer"):
                raise TraceError(f"{source}: line {lineno}: not a trace record")
            records.append((lineno, rec))
        if not records or records[0][1]["record"] != "header":
            raise TraceError(f"{source}: line 1: missing header record")
        if records[-1][1]["record"] != "footer":
            raise TraceError(f"{source}: line {records[-1][0]}: missing footer record")
        head, foot = records[0][1], records[-1][1]
        try:
            trace = cls(
                task_id=head["task_id"],
                method=head["method"],
                env=head["env"],
                family=head["family"],
                instruction=head["instruction"],
                graph_tokens=head.get("graph_tokens", 0),
                outcome=Outcome.from_dict(foot["outcome"]) if foot.get("outcome") else None,
                solution=foot.get("solution"),
                wall_time=foot.get("wall_time", 0.0),
            )
        except KeyError as exc:
            raise TraceError(f"{source}: header or footer lacks field {exc}") from None
        for lineno, rec in records[1:-1]:
            if rec["record"] != "iteration":
                raise TraceError(f"{source}: line {lineno}: unexpected {rec['record']} record")
            try:
                trace.iterations.append(Iteration.from_dict(rec))
            except KeyError as exc:
                raise TraceError(f"{source}: line {lineno}: iteration lacks field {exc}") from None
        return trace


def strip_wall_time(jsonl: str) -> str:
    out = []
    for line in jsonl.splitlines():
        rec = json.loads(line)
        rec.pop("wall_time", None)
        out.append(json.dumps(rec, sort_keys=True, ensure_ascii=False))
    return "\n".join(out)


def write_trace(trace: EpisodeTrace, directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{trace.method}__{trace.task_id}.jsonl"
    path.write_text(trace.to_jsonl(), encoding="utf-8")
    return path


def read_trace(path: Path) -> EpisodeTrace:
    return EpisodeTrace.from_jsonl(Path(path).read_text(encoding="utf-8"), str(path))
