"""Episode drivers: the reason-while-retrieve loop, its API-only retriever variant, and the baselines."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..agents.backends import Backend, BackendError
from ..agents.formats import ActionError, FormatError, parse_action
from ..agents.messages import ChatMessage, assistant, system, user
from ..agents.prompts import assemble_fullgraph_prompt, assemble_planner_prompt, assemble_react_prompt
from ..envs import EnvProfile, env_profile
from ..envs.household import SimState
from ..reasoner import ToolError, ToolInvocation, ToolRegistry, call_tool, planner_step
from ..retriever import (
    FULL_APIS,
    LIMIT_APIS,
    LimitRetriever,
    RetrievalFailed,
    RetrievalLimits,
    Retriever,
    run_api_action,
)
from ..scene_graph import NodeNotFound, textualize
from ..tasks import Outcome, Solution, TaskInstance, solution_from_text
from .tokens import MeteredBackend, TokenMeter, count_tokens
from .trace import EpisodeTrace, Iteration

OBS_RETRIEVED = "Retrieved information:\n"
OBS_TOOL = "Tool result:\n"
OBS_TOOL_ERROR = "TOOL ERROR: "
OBS_INVALID = "INVALID ACTION: "

METHODS = ("rwr", "rwr-limit", "react", "react-limit", "fullgraph-zeroshot", "fullgraph-cot")

API_ANNOTATIONS = {
    "expand": 'expand("node_id") shows a node\'s attributes and every node joined to it, with their attributes.',
    "get_neighbors": 'get_neighbors("node_id") lists the ids of the nodes joined to a node.',
    "get_attrs": 'get_attrs("node_id") shows one node\'s attributes.',
}


@dataclass(frozen=True)
class EpisodeLimits:
    max_iterations: int = 20
    retrieval: RetrievalLimits = RetrievalLimits()

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class RwrBackends:
    planner: Backend
    code_writer: Backend | None = None
    verifier: Backend | None = None
    tool_caller: Backend | None = None
    limit_retriever: Backend | None = None


@dataclass
class EpisodeResult:
    solution: Solution | None
    trace: EpisodeTrace
    history: list[ChatMessage] = field(default_factory=list)


def graph_token_count(task: TaskInstance, profile: EnvProfile | None = None) -> int:
    profile = profile or env_profile(task.family)
    return count_tokens(textualize(task.graph, profile.schema))


def start_node(task: TaskInstance) -> str:
    if task.family == "household":
        return SimState.from_graph(task.graph).agent
    return "root"


class _Episode:
    """Shared bookkeeping: meter, trace, wall clock."""

    def __init__(self, task: TaskInstance, method: str, profile: EnvProfile | None):
        self.task = task
        self.profile = profile or env_profile(task.family)
        self.meter = TokenMeter()
        self.trace = EpisodeTrace(
            task.id, method, task.env, task.family, task.instruction, graph_tokens=graph_token_count(task, self.profile)
        )
        self.started = time.perf_counter()

    def metered(self, backend: Backend | None, role: str) -> MeteredBackend | None:
        return MeteredBackend(backend, role, self.meter) if backend is not None else None

    def close_iteration(self, iteration: Iteration) -> None:
        snap = self.meter.snapshot()
        iteration.tokens_in = snap["tokens_in"]
        iteration.tokens_out = snap["tokens_out"]
        iteration.tokens_by_role = snap["by_role"]
        self.trace.iterations.append(iteration)
        self.meter.reset()

    def finish(self, solution: Solution | None, outcome: Outcome, history: list[ChatMessage]) -> EpisodeResult:
        self.trace.outcome = outcome
        self.trace.solution = solution.to_dict() if solution else None
        self.trace.wall_time = round(time.perf_counter() - self.started, 6)
        self.trace.check()
        return EpisodeResult(solution, self.trace, history)

    def grade(self, text: str) -> tuple[Solution, Outcome]:
        solution = solution_from_text(self.task.family, text)
        return solution, self.task.oracle.grade(solution, self.task.graph)


def _planner_history(profile: EnvProfile, task: TaskInstance) -> list[ChatMessage]:
    prompt = assemble_planner_prompt(
        profile.schema,
        profile.explanation,
        profile.action_space,
        [t.annotation for t in profile.tools],
        profile.few_shot,
    )
    return [system(prompt), user(f"Task: {task.instruction}")]


def _run_planner_loop(ep: _Episode, backends: RwrBackends, retrieve, limits: EpisodeLimits) -> EpisodeResult:
    """The loop shared by both RwR variants. ``retrieve(query)`` returns (observation, attempt dicts)."""
    planner = ep.metered(backends.planner, "planner")
    tool_caller = ep.metered(backends.tool_caller, "tool_caller")
    registry = ToolRegistry(ep.profile.tools)
    history = _planner_history(ep.profile, ep.task)
    for t in range(limits.max_iterations):
        iteration = Iteration(t, None)
        try:
            turn = planner_step(history, planner)
        except FormatError as exc:
            ep.close_iteration(iteration)
            return ep.finish(None, Outcome.failure("format", str(exc)), history)
        except BackendError as exc:
            ep.close_iteration(iteration)
            return ep.finish(None, Outcome.failure("backend", str(exc)), history)
        iteration.planner_turn = {"explanation": turn.explanation, "mode": turn.mode, "content": turn.content}
        try:
            if turn.mode == "SOLUTION":
                solution, outcome = ep.grade(turn.content)
                ep.close_iteration(iteration)
                return ep.finish(solution, outcome, history)
            if turn.mode == "QUERY":
                observation, iteration.retrieval_attempts = retrieve(turn.content)
            else:
                observation, iteration.tool_results = _tool_turn(registry, turn.content, tool_caller)
        except BackendError as exc:
            ep.close_iteration(iteration)
            return ep.finish(None, Outcome.failure("backend", str(exc)), history)
        iteration.observation = observation
        history.append(user(observation))
        ep.close_iteration(iteration)
    return ep.finish(None, Outcome.failure("iteration_cap", f"no solution after {limits.max_iterations} iterations"), history)


def _tool_turn(registry: ToolRegistry, content: str, tool_caller: Backend | None) -> tuple[str, list[dict]]:
    if tool_caller is None:
        return OBS_TOOL_ERROR + "no tool caller is configured", [{"request": content, "error": "no tool caller"}]
    try:
        invocation, result = call_tool(registry, content, tool_caller)
    except ToolError as exc:
        return OBS_TOOL_ERROR + str(exc), [{"request": content, "error": str(exc)}]
    return OBS_TOOL + result, [{"request": content, **invocation.to_dict(), "result": result}]


def run_rwr_episode(
    task: TaskInstance,
    backends: RwrBackends,
    limits: EpisodeLimits = EpisodeLimits(),
    profile: EnvProfile | None = None,
) -> EpisodeResult:
    ep = _Episode(task, "rwr", profile)
    retriever = Retriever(
        task.graph,
        ep.profile.schema,
        ep.profile.explanation,
        ep.metered(backends.code_writer, "code_writer"),
        ep.metered(backends.verifier, "verifier"),
        limits.retrieval,
    )

    def retrieve(query: str) -> tuple[str, list[dict]]:
        try:
            outcome = retriever.retrieve(query)
        except RetrievalFailed as exc:
            return exc.observation(), [a.to_dict() for a in exc.attempts]
        return OBS_RETRIEVED + outcome.summary, [a.to_dict() for a in outcome.attempts]

    return _run_planner_loop(ep, backends, retrieve, limits)


def run_rwr_limit_episode(
    task: TaskInstance,
    backends: RwrBackends,
    limits: EpisodeLimits = EpisodeLimits(),
    profile: EnvProfile | None = None,
) -> EpisodeResult:
    ep = _Episode(task, "rwr-limit", profile)
    retriever = LimitRetriever(
        task.graph,
        ep.profile.schema,
        ep.profile.explanation,
        ep.metered(backends.limit_retriever, "limit_retriever"),
        limits.retrieval,
    )

    def retrieve(query: str) -> tuple[str, list[dict]]:
        try:
            outcome = retriever.retrieve(query)
        except RetrievalFailed as exc:
            return exc.observation(), [a.to_dict() for a in exc.attempts]
        return OBS_RETRIEVED + outcome.summary, [a.to_dict() for a in outcome.attempts]

    return _run_planner_loop(ep, backends, retrieve, limits)


def run_react_episode(
    task: TaskInstance,
    backend: Backend,
    api_profile: str = "full",
    limits: EpisodeLimits = EpisodeLimits(),
    profile: EnvProfile | None = None,
) -> EpisodeResult:
    if api_profile not in ("full", "limit"):
        raise ValueError(f"unknown api profile {api_profile!r}")
    ep = _Episode(task, "react" if api_profile == "full" else "react-limit", profile)
    apis = FULL_APIS if api_profile == "full" else LIMIT_APIS
    registry = ToolRegistry(ep.profile.tools)
    agent = ep.metered(backend, "agent")
    prompt = assemble_react_prompt(
        ep.profile.schema,
        ep.profile.explanation,
        ep.profile.action_space,
        [API_ANNOTATIONS[a] for a in apis] + registry.annotations(),
        ep.profile.plan_task,
    )
    history = [system(prompt), user(f"Task: {task.instruction}\nStart node: {start_node(task)}")]
    for t in range(limits.max_iterations):
        iteration = Iteration(t, None)
        try:
            reply = agent.complete(history)
        except BackendError as exc:
            ep.close_iteration(iteration)
            return ep.finish(None, Outcome.failure("backend", str(exc)), history)
        history.append(assistant(reply))
        thought = reply.split("Action", 1)[0].removeprefix("Thought:").strip()
        try:
            action = parse_action(reply)
        except ActionError as exc:
            observation = OBS_INVALID + str(exc)
            iteration.planner_turn = {"thought": thought, "action": None}
        else:
            iteration.planner_turn = {"thought": thought, "action": str(action)}
            if action.name == "finish":
                solution, outcome = ep.grade(action.raw)
                ep.close_iteration(iteration)
                return ep.finish(solution, outcome, history)
            observation = _react_observation(task, registry, apis, action, iteration)
        iteration.observation = observation
        history.append(user(f"Observation: {observation}"))
        ep.close_iteration(iteration)
    return ep.finish(None, Outcome.failure("iteration_cap", f"no solution after {limits.max_iterations} iterations"), history)


def _react_observation(task, registry: ToolRegistry, apis, action, iteration: Iteration) -> str:
    if action.name in registry:
        if action.args:
            return OBS_INVALID + f"{action.name} takes keyword arguments only"
        invocation = ToolInvocation(action.name, dict(action.kwargs))
        try:
            result = registry.execute(invocation)
        except ToolError as exc:
            iteration.tool_results = [{**invocation.to_dict(), "error": str(exc)}]
            return OBS_TOOL_ERROR + str(exc)
        iteration.tool_results = [{**invocation.to_dict(), "result": result}]
        return result
    try:
        result = run_api_action(task.graph, action.name, action.args, apis)
    except ActionError as exc:
        return OBS_INVALID + str(exc)
    except NodeNotFound as exc:
        return f"ERROR: {exc}"
    iteration.retrieval_attempts = [{"action": str(action), "observation": result}]
    return result


def _fullgraph_answer(profile: EnvProfile, family: str, reply: str) -> str:
    if profile.plan_task:
        return "\n".join(line.strip() for line in reply.splitlines() if profile.is_action(line.strip()))
    lines = [line.strip() for line in reply.splitlines() if line.strip()]
    last = lines[-1] if lines else ""
    for prefix in ("final answer:", "answer:"):
        if last.lower().startswith(prefix):
            last = last[len(prefix) :].strip()
    return last


def run_fullgraph_episode(
    task: TaskInstance,
    backend: Backend,
    prompt_style: str = "zeroshot",
    profile: EnvProfile | None = None,
) -> EpisodeResult:
    ep = _Episode(task, f"fullgraph-{prompt_style}", profile)
    prompt = assemble_fullgraph_prompt(
        ep.profile.explanation,
        ep.profile.action_space,
        textualize(task.graph, ep.profile.schema),
        prompt_style,
        ep.profile.plan_task,
    )
    history = [system(prompt), user(f"Task: {task.instruction}")]
    iteration = Iteration(0, None)
    try:
        reply = ep.metered(backend, "agent").complete(history)
    except BackendError as exc:
        ep.close_iteration(iteration)
        return ep.finish(None, Outcome.failure("backend", str(exc)), history)
    history.append(assistant(reply))
    iteration.planner_turn = {"reply": reply}
    answer = _fullgraph_answer(ep.profile, task.family, reply)
    solution, outcome = ep.grade(answer)
    ep.close_iteration(iteration)
    return ep.finish(solution, outcome, history)
