import json

import pytest

from sgrwr.agents import FormatError, ScriptedBackend
from sgrwr.agents.messages import system, user
from sgrwr.agents.reference import reference_backend
from sgrwr.envs import env_profile
from sgrwr.envs.babyai import TRAVERSE_ROOM_TOOL, gen_numqa
from sgrwr.reasoner import (
    FORMAT_REMINDER,
    ToolArgError,
    ToolInvocation,
    ToolNotFound,
    ToolRegistry,
    ToolRuntimeError,
    ToolSpec,
    call_tool,
    parse_invocation,
    planner_step,
)

REGISTRY = ToolRegistry([TRAVERSE_ROOM_TOOL])
SOLUTION = "[Explanation]\ndone\n[Mode]\nSOLUTION\n[Content]\ngreen"


def fresh_history(task):
    return [system("planner prompt"), user(f"Task: {task.instruction}")]


def test_reference_planner_first_turn_asks_for_identifier_rooms():
    task = gen_numqa(0)
    q = task.metadata["question"]
    turn = planner_step(fresh_history(task), reference_backend("planner", "numqa"))
    assert turn.mode == "QUERY"
    assert f'type "{q["obj"]}"' in turn.content and f'color "{q["color"]}"' in turn.content
    assert "inside each room" in turn.content


def test_solution_turn_is_terminal():
    history = fresh_history(gen_numqa(0))
    turn = planner_step(history, ScriptedBackend([SOLUTION]))
    assert (turn.mode, turn.content) == ("SOLUTION", "green")
    assert history[-1].content == SOLUTION


def test_one_reprompt_then_format_error():
    history = fresh_history(gen_numqa(0))
    with pytest.raises(FormatError):
        planner_step(history, ScriptedBackend(["no sections here", "still none"]))
    assert [m.role for m in history] == ["system", "user", "assistant", "user", "assistant"]
    assert FORMAT_REMINDER in history[3].content


def test_reprompt_recovers():
    history = fresh_history(gen_numqa(0))
    assert planner_step(history, ScriptedBackend(["oops", SOLUTION])).mode == "SOLUTION"


def _caller(invocation: dict):
    return ScriptedBackend([json.dumps(invocation)])


def test_call_tool_runs_traverse_room():
    args = {"top_left": [0, 0], "size": [5, 5], "obstacles": [[2, 1, "box_1"], [2, 2, "ball_2"], [2, 3, "box_3"]],
            "start": [1, 2], "goal": [3, 2]}
    invocation, result = call_tool(REGISTRY, "use traverse_room from (1,2) to (3,2)", _caller({"tool": "traverse_room", "args": args}))
    assert invocation == ToolInvocation("traverse_room", args)
    assert result == "obstacles to remove: ball_2"


def test_call_tool_with_reference_caller():
    text = 'traverse_room(top_left=[0, 0], size=[5, 5], obstacles=[], start=[1, 1], goal=[3, 3])'
    _, result = call_tool(REGISTRY, text, reference_backend("tool_caller", "trv1"))
    assert result == "obstacles to remove: none"


def test_unknown_tool():
    with pytest.raises(ToolNotFound, match="teleport"):
        call_tool(REGISTRY, "teleport me", _caller({"tool": "teleport", "args": {}}))


def test_missing_argument():
    args = {"top_left": [0, 0], "size": [5, 5], "obstacles": [], "start": [1, 1]}
    with pytest.raises(ToolArgError, match="missing goal"):
        call_tool(REGISTRY, "x", _caller({"tool": "traverse_room", "args": args}))


def test_wrong_argument_kind():
    args = {"top_left": "corner", "size": [5, 5], "obstacles": [], "start": [1, 1], "goal": [2, 2]}
    with pytest.raises(ToolArgError, match="top_left"):
        call_tool(REGISTRY, "x", _caller({"tool": "traverse_room", "args": args}))


def test_handler_failure_is_wrapped():
    args = {"top_left": [0, 0], "size": [5, 5], "obstacles": [], "start": [1, 1], "goal": [9, 9]}
    with pytest.raises(ToolRuntimeError, match="traverse_room failed"):
        call_tool(REGISTRY, "x", _caller({"tool": "traverse_room", "args": args}))


def test_invocation_parsing():
    assert parse_invocation('```json\n{"tool": "t", "args": {}}\n```') == ToolInvocation("t", {})
    assert parse_invocation('Sure: {"tool": "t", "args": {"a": 1}} ok') == ToolInvocation("t", {"a": 1})
    for bad in ("nothing", '{"tool": 3, "args": {}}', '{"tool": "t"}'):
        with pytest.raises(ToolArgError):
            parse_invocation(bad)


def test_registry_rules():
    spec = ToolSpec("double", "double(x: int) - twice x", {"x": "int"}, lambda x: str(2 * x))
    with pytest.raises(ValueError):
        ToolRegistry([spec, spec])
    with pytest.raises(ValueError):
        ToolSpec("bad", "bad() - nothing", {"x": "int"}, lambda x: x)
    registry = ToolRegistry([spec])
    assert registry.execute(ToolInvocation("double", {"x": 4})) == "8"
    with pytest.raises(ToolArgError):
        registry.execute(ToolInvocation("double", {"x": True}))


def test_tools_are_pure():
    args = {"top_left": [0, 0], "size": [6, 6], "obstacles": [[2, 2, "a"], [3, 3, "b"]], "start": [1, 1], "goal": [4, 4]}
    results = {REGISTRY.execute(ToolInvocation("traverse_room", args)) for _ in range(5)}
    assert len(results) == 1


def test_trv_profile_registers_the_tool():
    assert [t.name for t in env_profile("trv2").tools] == ["traverse_room"]
