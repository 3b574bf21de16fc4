"""Structured reply formats: planner turns, fenced blocks, and ReAct action lines."""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from typing import Any

MODES = ("QUERY", "TOOL", "SOLUTION")
SECTIONS = ("explanation", "mode", "content")
_MODE_ALIASES = {"QUERY": "QUERY", "TOOL": "TOOL", "TOOL-CALL": "TOOL", "TOOL_CALL": "TOOL", "SOLUTION": "SOLUTION"}
_HEADER = re.compile(r"^[ \t]*\[(explanation|mode|content)\][ \t]*", re.IGNORECASE | re.MULTILINE)


class FormatError(ValueError):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind  # missing_section | missing_mode | bad_mode | duplicate_section


@dataclass(frozen=True)
class PlannerTurn:
    explanation: str
    mode: str
    content: str


def parse_planner_turn(text: str) -> PlannerTurn:
    """Split a planner reply into its three sections. All three are required."""
    headers = list(_HEADER.finditer(text))
    sections: dict[str, str] = {}
    for i, m in enumerate(headers):
        name = m.group(1).lower()
        if name in sections:
            raise FormatError("duplicate_section", f"section [{name.capitalize()}] appears twice")
        end = headers[i + 1].start() if i + 1 < len(headers) else len(text)
        sections[name] = text[m.end() : end].strip()
    if "mode" not in sections:
        raise FormatError("missing_mode", "the reply has no [Mode] section")
    for name in ("explanation", "content"):
        if not sections.get(name):
            raise FormatError("missing_section", f"the reply has no [{name.capitalize()}] section")
    token = sections["mode"].strip().rstrip(".:").strip().upper()
    mode = _MODE_ALIASES.get(token)
    if mode is None:
        raise FormatError("bad_mode", f"unknown mode {sections['mode']!r}; use QUERY, TOOL or SOLUTION")
    return PlannerTurn(sections["explanation"], mode, sections["content"])


def format_planner_turn(turn: PlannerTurn) -> str:
    return f"[Explanation]\n{turn.explanation}\n\n[Mode]\n{turn.mode}\n\n[Content]\n{turn.content}"


class NoFence(ValueError):
    pass


_FENCE = re.compile(r"```[ \t]*([A-Za-z0-9_+-]*)[ \t]*\n?(.*?)```", re.DOTALL)


def extract_fenced(text: str, fence_tag: str) -> str:
    """Body of the first fenced block tagged ``fence_tag``."""
    for m in _FENCE.finditer(text):
        if m.group(1).lower() == fence_tag.lower():
            return m.group(2).strip()
    raise NoFence(f"no ```{fence_tag} fenced block in the reply")


# -- ReAct action lines -------------------------------------------------------


class ActionError(ValueError):
    pass


@dataclass(frozen=True)
class ActionCall:
    name: str
    args: tuple[Any, ...] = ()
    kwargs: tuple[tuple[str, Any], ...] = ()
    raw: str = ""  # the argument text, untouched

    def __str__(self) -> str:
        return f"{self.name}({self.raw})"


_ACTION = re.compile(r"^[ \t]*Action[ \t]*:[ \t]*([A-Za-z_][A-Za-z0-9_]*)[ \t]*\(", re.MULTILINE)


def parse_action(text: str) -> ActionCall:
    """Parse the first ``Action: name(args)`` in a reply.

    ``finish(...)`` takes its argument verbatim (it may span lines). Other
    calls take Python-literal arguments; bare identifiers are read as strings.
    """
    m = _ACTION.search(text)
    if not m:
        raise ActionError("no 'Action: name(args)' line")
    name = m.group(1)
    rest = text[m.end() :]
    close = rest.rfind(")") if name == "finish" else _matching_paren(rest)
    if close < 0:
        raise ActionError("unbalanced parentheses in the action")
    raw = rest[:close].strip()
    if name == "finish":
        return ActionCall(name, (raw,), (), raw)
    args, kwargs = parse_call_args(raw)
    return ActionCall(name, args, kwargs, raw)


def _matching_paren(text: str) -> int:
    depth, quote = 0, None
    for i, ch in enumerate(text):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch in "([{":
            depth += 1
        elif ch in ")]}":
            if depth == 0:
                return i if ch == ")" else -1
            depth -= 1
        elif ch == "\n" and depth == 0:
            return -1
    return -1


def parse_call_args(raw: str) -> tuple[tuple[Any, ...], tuple[tuple[str, Any], ...]]:
    try:
        call = ast.parse(f"f({raw})", mode="eval").body
    except SyntaxError as exc:
        raise ActionError(f"cannot read arguments {raw!r}: {exc.msg}") from None
    assert isinstance(call, ast.Call)

    def value(node: ast.AST) -> Any:
        if isinstance(node, ast.Name):
            return {"true": True, "false": False}.get(node.id, node.id)
        try:
            return ast.literal_eval(node)
        except ValueError:
            raise ActionError(f"argument {ast.unparse(node)!r} is not a literal") from None

    args = tuple(value(a) for a in call.args)
    kwargs = tuple((k.arg, value(k.value)) for k in call.keywords if k.arg is not None)
    return args, kwargs


def parse_call(text: str) -> tuple[str, dict[str, Any]]:
    """Read ``name(key=value, ...)`` from free text; the first call found wins."""
    m = re.search(r"([A-Za-z_][A-Za-z0-9_]*)\s*\(", text)
    if not m:
        raise ActionError("no function call in the text")
    close = _matching_paren(text[m.end() :].replace("\n", " "))
    if close < 0:
        raise ActionError("unbalanced parentheses in the call")
    args, kwargs = parse_call_args(text[m.end() : m.end() + close])
    if args:
        raise ActionError("pass tool arguments by name")
    return m.group(1), dict(kwargs)
