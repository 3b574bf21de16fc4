"""Completion backends: scripted replay, in-process functions, and a live HTTP client."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import httpx

from .messages import ChatMessage, check_messages

API_KEY_ENV = "SGRWR_API_KEY"


class BackendError(RuntimeError):
    pass


class BackendUnavailable(BackendError):
    pass


class BackendRejected(BackendError):
    def __init__(self, status: int, body: str):
        super().__init__(f"backend rejected the request with HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class ScriptExhausted(BackendError):
    pass


class Backend(Protocol):
    shareable: bool

    def complete(self, messages: Sequence[ChatMessage]) -> str: ...


@dataclass(frozen=True)
class BackendConfig:
    endpoint_url: str
    model_name: str
    temperature: float = 0.0
    seed: int = 0
    timeout: float = 60.0
    max_retries: int = 3


class ScriptedBackend:
    """Replays a fixed list of replies, one per call. Holds a cursor, so one per episode."""

    shareable = False

    def __init__(self, replies: Sequence[str]):
        self.replies = list(replies)
        self.cursor = 0

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        check_messages(messages)
        if self.cursor >= len(self.replies):
            raise ScriptExhausted(f"script has only {len(self.replies)} replies")
        reply = self.replies[self.cursor]
        self.cursor += 1
        return reply


class FunctionBackend:
    """Wraps a pure function of the message history; safe to share."""

    shareable = True

    def __init__(self, fn: Callable[[Sequence[ChatMessage]], str], name: str = "function"):
        self.fn = fn
        self.name = name

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        check_messages(messages)
        return self.fn(messages)


class LiveBackend:
    """JSON-over-HTTP chat completion client with exponential backoff.

    ``max_retries`` counts total attempts. Transport errors and HTTP 429/5xx
    are retried; other non-2xx statuses fail at once.
    """

    shareable = True

    def __init__(
        self,
        config: BackendConfig,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        base_delay: float = 0.5,
    ):
        self.config = config
        self.client = client or httpx.Client(timeout=config.timeout)
        self.sleep = sleep
        self.base_delay = base_delay

    @property
    def url(self) -> str:
        url = self.config.endpoint_url.rstrip("/")
        return url if url.endswith("/chat/completions") else url + "/chat/completions"

    def payload(self, messages: Sequence[ChatMessage]) -> dict:
        return {
            "model": self.config.model_name,
            "messages": [m.to_dict() for m in messages],
            "temperature": self.config.temperature,
            "seed": self.config.seed,
        }

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        check_messages(messages)
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(API_KEY_ENV)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        attempts = max(1, self.config.max_retries)
        last: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                self.sleep(self.base_delay * 2 ** (attempt - 1))
            try:
                response = self.client.post(self.url, json=self.payload(messages), headers=headers)
            except httpx.TransportError as exc:
                last = exc
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last = BackendRejected(response.status_code, response.text)
                continue
            if not 200 <= response.status_code < 300:
                raise BackendRejected(response.status_code, response.text)
            return _reply_text(response)
        if isinstance(last, BackendRejected):
            raise last
        raise BackendUnavailable(f"no response from {self.url} after {attempts} attempts: {last}")


def _reply_text(response: httpx.Response) -> str:
    try:
        data = response.json()
    except ValueError:
        raise BackendRejected(response.status_code, "response is not JSON: " + response.text) from None
    try:
        if "choices" in data:
            return data["choices"][0]["message"]["content"]
        if "message" in data:
            return data["message"]["content"]
        return data["content"]
    except (KeyError, IndexError, TypeError):
        raise BackendRejected(response.status_code, "response has no assistant text: " + response.text) from None
