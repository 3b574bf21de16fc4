"""Task instances, solutions, and grading outcomes shared by all environments."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Protocol

from .scene_graph import SceneGraph, canonical_json, graph_from_dict, graph_to_dict

FAMILIES = ("numqa", "trv1", "trv2", "household")
FAILURE_REASONS = ("wrong_answer", "iteration_cap", "format", "backend", "plan_invalid", "goal_unmet")


@dataclass(frozen=True)
class Solution:
    kind: str  # answer | plan
    answer: str | None = None
    plan: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if (self.answer is None) == (self.plan is None):
            raise ValueError("a solution carries exactly one of answer or plan")

    def to_dict(self) -> dict:
        if self.kind == "answer":
            return {"kind": "answer", "answer": self.answer}
        return {"kind": "plan", "plan": list(self.plan)}


@dataclass(frozen=True)
class Outcome:
    success: bool
    reason: str | None = None
    detail: str | None = None
    step: int | None = None

    @classmethod
    def ok(cls) -> "Outcome":
        return cls(True)

    @classmethod
    def failure(cls, reason: str, detail: str | None = None, step: int | None = None) -> "Outcome":
        return cls(False, reason, detail, step)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"success": self.success}
        if not self.success:
            out["reason"] = self.reason
            if self.detail is not None:
                out["detail"] = self.detail
            if self.step is not None:
                out["step"] = self.step
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Outcome":
        return cls(data["success"], data.get("reason"), data.get("detail"), data.get("step"))


class Oracle(Protocol):
    kind: str

    def grade(self, solution: Solution, graph: SceneGraph) -> Outcome: ...

    def to_dict(self) -> dict: ...


_WORD = re.compile(r"[A-Za-z]+")


def normalize_answer(text: str, vocabulary: tuple[str, ...] = ()) -> str:
    """Reduce a free-text answer to a single lowercase word when possible.

    With a vocabulary, a reply naming exactly one vocabulary word reduces to
    that word ("The box is purple." -> "purple").
    """
    words = [w.lower() for w in _WORD.findall(text)]
    if vocabulary:
        hits = sorted({w for w in words if w in vocabulary})
        if len(hits) == 1:
            return hits[0]
    return text.strip().strip(".!").strip().lower()


@dataclass(frozen=True)
class AnswerOracle:
    answer: str
    vocabulary: tuple[str, ...] = ()
    kind: str = "answer"

    def grade(self, solution: Solution, graph: SceneGraph) -> Outcome:
        if solution.kind != "answer":
            return Outcome.failure("wrong_answer", "expected an answer, got a plan")
        given = normalize_answer(solution.answer, self.vocabulary)
        if given == self.answer.lower():
            return Outcome.ok()
        return Outcome.failure("wrong_answer", f"answered {given!r}")

    def to_dict(self) -> dict:
        return {"kind": "answer", "answer": self.answer, "vocabulary": list(self.vocabulary)}


def oracle_from_dict(data: dict) -> Oracle:
    kind = data["kind"]
    if kind == "answer":
        return AnswerOracle(data["answer"], tuple(data.get("vocabulary", ())))
    if kind == "trv_plan":
        from .envs.babyai import TrvOracle

        return TrvOracle.from_dict(data)
    if kind == "goal_state":
        from .envs.household import GoalOracle

        return GoalOracle.from_dict(data)
    raise ValueError(f"unknown oracle kind {kind!r}")


@dataclass
class TaskInstance:
    id: str
    family: str
    instruction: str
    graph: SceneGraph
    oracle: Oracle
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown task family {self.family!r}")
        expected = "answer" if self.family == "numqa" else ("goal_state" if self.family == "household" else "trv_plan")
        if self.oracle.kind != expected:
            raise ValueError(f"{self.family} tasks need a {expected} oracle, got {self.oracle.kind}")

    @property
    def env(self) -> str:
        return self.metadata.get("env", self.family)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "family": self.family,
            "instruction": self.instruction,
            "graph": graph_to_dict(self.graph),
            "oracle": self.oracle.to_dict(),
            "metadata": self.metadata,
        }

    def to_json(self) -> bytes:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "TaskInstance":
        return cls(
            id=data["id"],
            family=data["family"],
            instruction=data["instruction"],
            graph=graph_from_dict(data["graph"]),
            oracle=oracle_from_dict(data["oracle"]),
            metadata=data.get("metadata", {}),
        )

    @classmethod
    def from_json(cls, data: bytes | str) -> "TaskInstance":
        return cls.from_dict(json.loads(data))


_LIST_MARKER = re.compile(r"^\s*(?:[-*]|\d+[.)])\s+")


def plan_lines(text: str) -> tuple[str, ...]:
    """One action per non-empty line, with list bullets and numbering stripped."""
    lines = []
    for raw in text.splitlines():
        line = _LIST_MARKER.sub("", raw).strip()
        if line:
            lines.append(line)
    return tuple(lines)


def solution_from_text(family: str, text: str) -> Solution:
    if family == "numqa":
        return Solution("answer", answer=text.strip())
    return Solution("plan", plan=plan_lines(text))
