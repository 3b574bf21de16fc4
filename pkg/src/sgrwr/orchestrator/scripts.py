"""Scripted transcripts: per-role reply lists replayed by ScriptedBackend."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from ..agents.backends import ScriptedBackend
from ..agents.reference import reference_backend
from .episodes import RwrBackends

GOLDEN_METHODS = ("rwr", "rwr-limit", "react", "react-limit")
RWR_ROLES = ("planner", "code_writer", "verifier", "tool_caller", "limit_retriever")
SINGLE_AGENT_ROLE = "agent"


class TranscriptError(ValueError):
    pass


def parse_transcript(doc: object, source: str = "<transcript>") -> dict:
    if not isinstance(doc, dict) or not isinstance(doc.get("roles"), dict):
        raise TranscriptError(f"{source}: a transcript is an object with a 'roles' mapping")
    for role, replies in doc["roles"].items():
        if role not in RWR_ROLES and role != SINGLE_AGENT_ROLE:
            raise TranscriptError(f"{source}: unknown role {role!r}")
        if not isinstance(replies, list) or not all(isinstance(r, str) for r in replies):
            raise TranscriptError(f"{source}: replies for {role!r} must be a list of strings")
    return doc


def load_transcript(path: str | Path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise TranscriptError(f"{path}: {exc}") from None
    return parse_transcript(doc, str(path))


def golden_transcript(method: str) -> dict:
    if method not in GOLDEN_METHODS:
        raise KeyError(f"no golden transcript for {method!r}")
    text = resources.files("sgrwr").joinpath(f"data/transcripts/{method}.json").read_text(encoding="utf-8")
    return parse_transcript(json.loads(text), method)


def scripted_rwr_backends(doc: dict) -> RwrBackends:
    """Fresh backends (cursor at zero) for one episode."""
    roles = doc["roles"]
    if "planner" not in roles:
        raise TranscriptError("an rwr transcript needs planner replies")
    return RwrBackends(*(ScriptedBackend(roles[r]) if r in roles else None for r in RWR_ROLES))


def scripted_agent(doc: dict) -> ScriptedBackend:
    if SINGLE_AGENT_ROLE not in doc["roles"]:
        raise TranscriptError("a single-agent transcript needs 'agent' replies")
    return ScriptedBackend(doc["roles"][SINGLE_AGENT_ROLE])


def reference_rwr_backends(family: str) -> RwrBackends:
    """The rule-based backends for every RwR role of one task family."""
    return RwrBackends(*(reference_backend(r, family) for r in RWR_ROLES))
