"""The Reasoner: Task Planner turns and Tool Caller dispatch over a tool registry."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

from .agents.backends import Backend
from .agents.formats import FormatError, NoFence, PlannerTurn, extract_fenced, parse_planner_turn
from .agents.messages import ChatMessage, assistant, system, user
from .agents.prompts import assemble_toolcaller_prompt

FORMAT_REMINDER = "Please follow the required format: [Explanation], [Mode] and [Content] sections."


class ToolError(Exception):
    pass


class ToolNotFound(ToolError):
    pass


class ToolArgError(ToolError):
    pass


class ToolRuntimeError(ToolError):
    pass


ARG_KINDS = ("str", "int", "bool", "int_list", "list")


def _kind_ok(kind: str, value: Any) -> bool:
    if kind == "str":
        return isinstance(value, str)
    if kind == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "bool":
        return isinstance(value, bool)
    if kind == "int_list":
        return isinstance(value, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    return isinstance(value, list)


@dataclass(frozen=True)
class ToolSpec:
    name: str
    annotation: str
    arg_schema: dict[str, str]
    handler: Callable[..., str]

    def __post_init__(self) -> None:
        for arg, kind in self.arg_schema.items():
            if kind not in ARG_KINDS:
                raise ValueError(f"{self.name}: unknown kind {kind!r} for {arg}")
            if not re.search(rf"\b{re.escape(arg)}\b", self.annotation):
                raise ValueError(f"{self.name}: annotation does not mention argument {arg!r}")


@dataclass(frozen=True)
class ToolInvocation:
    tool: str
    args: dict[str, Any]

    def to_dict(self) -> dict:
        return {"tool": self.tool, "args": self.args}


class ToolRegistry:
    def __init__(self, tools: Iterable[ToolSpec] = ()):
        self._tools: dict[str, ToolSpec] = {}
        for tool in tools:
            if tool.name in self._tools:
                raise ValueError(f"duplicate tool {tool.name!r}")
            self._tools[tool.name] = tool

    def __iter__(self):
        return iter(self._tools.values())

    def __len__(self) -> int:
        return len(self._tools)

    def __contains__(self, name: str) -> bool:
        return name in self._tools

    def get(self, name: str) -> ToolSpec:
        try:
            return self._tools[name]
        except KeyError:
            known = ", ".join(self._tools) or "none"
            raise ToolNotFound(f"unknown tool {name!r}; available tools: {known}") from None

    def annotations(self) -> list[str]:
        return [t.annotation for t in self._tools.values()]

    def validate(self, invocation: ToolInvocation) -> ToolSpec:
        spec = self.get(invocation.tool)
        missing = sorted(set(spec.arg_schema) - set(invocation.args))
        extra = sorted(set(invocation.args) - set(spec.arg_schema))
        if missing or extra:
            parts = []
            if missing:
                parts.append("missing " + ", ".join(missing))
            if extra:
                parts.append("unexpected " + ", ".join(extra))
            raise ToolArgError(f"{spec.name}: " + "; ".join(parts))
        for arg, kind in spec.arg_schema.items():
            if not _kind_ok(kind, invocation.args[arg]):
                raise ToolArgError(f"{spec.name}: argument {arg} must be {kind}")
        return spec

    def execute(self, invocation: ToolInvocation) -> str:
        spec = self.validate(invocation)
        try:
            return str(spec.handler(**invocation.args))
        except Exception as exc:  # tool failures become observations
            raise ToolRuntimeError(f"{spec.name} failed: {exc}") from exc


def planner_step(history: list[ChatMessage], backend: Backend) -> PlannerTurn:
    """One Task Planner completion, parsed. Appends every reply (and any re-prompt) to ``history``.

    A malformed reply gets one re-prompt; a second malformed reply raises
    :class:`FormatError`.
    """
    reply = backend.complete(history)
    history.append(assistant(reply))
    try:
        return parse_planner_turn(reply)
    except FormatError as first:
        history.append(user(f"Your reply could not be read ({first}). {FORMAT_REMINDER}"))
    reply = backend.complete(history)
    history.append(assistant(reply))
    return parse_planner_turn(reply)


def parse_invocation(reply: str) -> ToolInvocation:
    """Read the Tool Caller's JSON invocation, fenced or bare."""
    try:
        text = extract_fenced(reply, "json")
    except NoFence:
        start, end = reply.find("{"), reply.rfind("}")
        text = reply[start : end + 1] if 0 <= start < end else reply
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ToolArgError(f"tool invocation is not valid JSON: {exc.msg}") from None
    if not isinstance(data, dict) or not isinstance(data.get("tool"), str) or not isinstance(data.get("args"), dict):
        raise ToolArgError('tool invocation must look like {"tool": name, "args": {...}}')
    return ToolInvocation(data["tool"], data["args"])


def toolcaller_messages(registry: ToolRegistry, invocation_text: str) -> list[ChatMessage]:
    return [system(assemble_toolcaller_prompt(registry.annotations())), user(invocation_text)]


def call_tool(registry: ToolRegistry, invocation_text: str, backend: Backend) -> tuple[ToolInvocation | None, str]:
    """Turn a TOOL turn into an invocation via the Tool Caller and run it.

    Returns the invocation and the tool's result string. Raises a
    :class:`ToolError` subclass the caller reports back as an observation.
    """
    reply = backend.complete(toolcaller_messages(registry, invocation_text))
    invocation = parse_invocation(reply)
    return invocation, registry.execute(invocation)


def tool_annotations(tools: Sequence[ToolSpec]) -> list[str]:
    return [t.annotation for t in tools]
