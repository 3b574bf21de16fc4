"""Chat messages exchanged with language-model backends."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

ROLES = ("system", "user", "assistant")


class MessageError(ValueError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise MessageError(f"unknown role {self.role!r}")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}

    @classmethod
    def from_dict(cls, data: dict) -> "ChatMessage":
        return cls(data["role"], data["content"])


def system(content: str) -> ChatMessage:
    return ChatMessage("system", content)


def user(content: str) -> ChatMessage:
    return ChatMessage("user", content)


def assistant(content: str) -> ChatMessage:
    return ChatMessage("assistant", content)


def check_messages(messages: Sequence[ChatMessage]) -> None:
    """One leading system message, then non-empty user/assistant turns that alternate."""
    if not messages or messages[0].role != "system":
        raise MessageError("messages must begin with a system message")
    previous = "assistant"
    for i, msg in enumerate(messages[1:], 1):
        if msg.role == "system":
            raise MessageError(f"message {i} is a second system message")
        if not msg.content.strip():
            raise MessageError(f"message {i} ({msg.role}) is empty")
        if msg.role == previous:
            raise MessageError(f"message {i} repeats role {msg.role}")
        previous = msg.role
    if previous != "user":
        raise MessageError("the last message must come from the user")
