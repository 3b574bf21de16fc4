"""The Retriever: query writing with self-debugging, execution, and verification.

Only the Verifier's summary leaves this module on success. Query source,
execution errors and rewrite rounds stay inside the returned
:class:`RetrievalOutcome` for tracing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .agents.backends import Backend
from .agents.formats import ActionError, NoFence, extract_fenced, parse_action
from .agents.messages import ChatMessage, assistant, system, user
from .agents.prompts import (
    NOT_ADDRESSED,
    assemble_limit_retriever_prompt,
    assemble_retriever_prompt,
    assemble_verifier_prompt,
)
from .query import GRAMMAR, QueryError, RetrievalResult, evaluate, parse
from .query.api import expand, get_attrs, get_neighbors, render_attrs, render_neighbors
from .scene_graph import NodeNotFound, SceneGraph, Schema

FENCE_TAG = "sgq"


@dataclass(frozen=True)
class RetrievalLimits:
    max_code_attempts: int = 3
    max_verify_rounds: int = 2
    max_api_calls: int = 25


@dataclass(frozen=True)
class RetrievalAttempt:
    query: str
    program_source: str
    parse_or_exec_error: str | None = None
    result: RetrievalResult | None = None

    def __post_init__(self) -> None:
        if (self.parse_or_exec_error is None) == (self.result is None):
            raise ValueError("an attempt records exactly one of an error or a result")

    def to_dict(self) -> dict:
        out = {"query": self.query, "program_source": self.program_source}
        if self.result is not None:
            out["result"] = self.result.render()
        else:
            out["error"] = self.parse_or_exec_error
        return out


@dataclass(frozen=True)
class VerifierVerdict:
    addressed: bool
    summary: str | None = None

    def __post_init__(self) -> None:
        if self.addressed != (self.summary is not None):
            raise ValueError("a summary accompanies exactly the addressed verdicts")


class RetrievalFailed(Exception):
    def __init__(self, query: str, last_error: str, attempts: list | None = None):
        super().__init__(f"{query!r}: {last_error}")
        self.query = query
        self.last_error = last_error
        self.attempts = attempts or []

    def observation(self) -> str:
        return f"RETRIEVAL FAILED: {self.last_error}"


@dataclass
class RetrievalOutcome:
    summary: str
    attempts: list = field(default_factory=list)
    verdicts: list[VerifierVerdict] = field(default_factory=list)


def normalize_verdict(reply: str) -> str:
    return reply.strip().strip("\"'`").strip().rstrip(".!;:").strip().strip("\"'`").casefold()


def verify(query: str, execution_outputs: list[str], backend: Backend) -> VerifierVerdict:
    if not execution_outputs:
        raise ValueError("verify needs at least one execution output")
    body = f"Request: {query}\n\nQuery output:\n" + "\n\n".join(execution_outputs)
    reply = backend.complete([system(assemble_verifier_prompt()), user(body)])
    if normalize_verdict(reply) == NOT_ADDRESSED.casefold():
        return VerifierVerdict(False)
    return VerifierVerdict(True, reply.strip())


class Retriever:
    def __init__(
        self,
        graph: SceneGraph,
        schema: Schema,
        env_explanation: str,
        code_writer: Backend,
        verifier: Backend,
        limits: RetrievalLimits = RetrievalLimits(),
    ):
        self.graph = graph
        self.schema = schema
        self.code_writer = code_writer
        self.verifier = verifier
        self.limits = limits
        self.system_prompt = assemble_retriever_prompt(schema, env_explanation, GRAMMAR)

    def run_program(self, reply: str) -> tuple[str, RetrievalResult]:
        source = extract_fenced(reply, FENCE_TAG)
        return source, evaluate(parse(source, self.schema), self.graph)

    def retrieve(self, query: str) -> RetrievalOutcome:
        if not query.strip():
            raise ValueError("empty retrieval query")
        history: list[ChatMessage] = [system(self.system_prompt), user(f"Request: {query}")]
        attempts: list[RetrievalAttempt] = []
        verdicts: list[VerifierVerdict] = []
        last_error = ""
        for round_no in range(self.limits.max_verify_rounds):
            result = None
            for _ in range(self.limits.max_code_attempts):
                reply = self.code_writer.complete(history)
                history.append(assistant(reply))
                try:
                    source, result = self.run_program(reply)
                except (NoFence, QueryError, NodeNotFound) as exc:
                    last_error = str(exc)
                    attempts.append(RetrievalAttempt(query, _source_or_reply(reply), last_error))
                    history.append(user(f"Execution error: {last_error}\nPlease rewrite the query."))
                    continue
                attempts.append(RetrievalAttempt(query, source, result=result))
                break
            if result is None:
                raise RetrievalFailed(query, f"no runnable query after {self.limits.max_code_attempts} attempts; last error: {last_error}", attempts)
            verdict = verify(query, [result.render()], self.verifier)
            verdicts.append(verdict)
            if verdict.addressed:
                return RetrievalOutcome(verdict.summary, attempts, verdicts)
            last_error = "the query output did not address the request"
            if round_no + 1 < self.limits.max_verify_rounds:
                history.append(user("That output does not answer the request. Please write a different query."))
        raise RetrievalFailed(query, last_error, attempts)


def _source_or_reply(reply: str) -> str:
    try:
        return extract_fenced(reply, FENCE_TAG)
    except NoFence:
        return reply


# -- API-only retriever (the "limit" variant) ----------------------------------


@dataclass(frozen=True)
class ApiCall:
    action: str
    observation: str

    def to_dict(self) -> dict:
        return {"action": self.action, "observation": self.observation}


LIMIT_APIS = ("get_neighbors", "get_attrs")


FULL_APIS = ("expand",)


def run_api_action(graph: SceneGraph, name: str, args: tuple, allowed: tuple[str, ...] = LIMIT_APIS) -> str:
    """Execute one lookup API call and render its observation."""
    if name not in allowed:
        raise ActionError(f"unknown API {name!r}; available: {', '.join(allowed)}")
    if len(args) != 1 or not isinstance(args[0], (str, int)):
        raise ActionError(f"{name} takes one node id")
    node_id = str(args[0])
    if name == "get_neighbors":
        return render_neighbors(get_neighbors(graph, node_id))
    if name == "get_attrs":
        return render_attrs(node_id, get_attrs(graph, node_id))
    return expand(graph, node_id).render()


class LimitRetriever:
    """Answers a request through get_neighbors/get_attrs calls in a private loop."""

    def __init__(self, graph: SceneGraph, schema: Schema, env_explanation: str, backend: Backend, limits: RetrievalLimits = RetrievalLimits()):
        self.graph = graph
        self.backend = backend
        self.limits = limits
        self.system_prompt = assemble_limit_retriever_prompt(schema, env_explanation)

    def retrieve(self, query: str) -> RetrievalOutcome:
        if not query.strip():
            raise ValueError("empty retrieval query")
        history: list[ChatMessage] = [system(self.system_prompt), user(f"Request: {query}")]
        calls: list[ApiCall] = []
        while len(calls) < self.limits.max_api_calls:
            reply = self.backend.complete(history)
            history.append(assistant(reply))
            try:
                action = parse_action(reply)
                if action.name == "finish":
                    summary = action.raw.strip().strip("\"'")
                    if not summary or normalize_verdict(summary) == NOT_ADDRESSED.casefold():
                        raise RetrievalFailed(query, "the lookup finished without an answer", calls)
                    return RetrievalOutcome(summary, calls, [VerifierVerdict(True, summary)])
                observation = run_api_action(self.graph, action.name, action.args)
            except ActionError as exc:
                observation = f"INVALID ACTION: {exc}"
                action = None
            except NodeNotFound as exc:
                observation = f"ERROR: {exc}"
            calls.append(ApiCall(str(action) if action else reply.strip()[:200], observation))
            history.append(user(f"Observation: {observation}"))
        raise RetrievalFailed(query, f"API budget of {self.limits.max_api_calls} calls exhausted", calls)
