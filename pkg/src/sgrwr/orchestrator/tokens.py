"""Token accounting for episode traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..agents.messages import ChatMessage

Tokenizer = Callable[[str], int]


def count_tokens(text: str) -> int:
    """Approximate token count: one token per four characters, rounded up."""
    return math.ceil(len(text) / 4)


@dataclass
class RoleTokens:
    tokens_in: int = 0
    tokens_out: int = 0
    calls: int = 0


@dataclass
class TokenMeter:
    """Per-role counters for the iteration in progress."""

    tokenizer: Tokenizer = count_tokens
    roles: dict[str, RoleTokens] = field(default_factory=dict)

    def reset(self) -> None:
        self.roles = {}

    def record(self, role: str, messages: Sequence[ChatMessage], reply: str) -> None:
        entry = self.roles.setdefault(role, RoleTokens())
        entry.tokens_in += sum(self.tokenizer(m.content) for m in messages)
        entry.tokens_out += self.tokenizer(reply)
        entry.calls += 1

    def snapshot(self) -> dict:
        return {
            "tokens_in": sum(r.tokens_in for r in self.roles.values()),
            "tokens_out": sum(r.tokens_out for r in self.roles.values()),
            "by_role": {
                name: {"tokens_in": r.tokens_in, "tokens_out": r.tokens_out, "calls": r.calls}
                for name, r in sorted(self.roles.items())
            },
        }


class MeteredBackend:
    """Wraps a backend and charges every completion to one role on a meter."""

    def __init__(self, backend, role: str, meter: TokenMeter):
        self.backend = backend
        self.role = role
        self.meter = meter
        self.shareable = getattr(backend, "shareable", False)

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        reply = self.backend.complete(messages)
        self.meter.record(self.role, messages, reply)
        return reply
