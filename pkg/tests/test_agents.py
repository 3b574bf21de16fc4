import json
import re

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgrwr.agents import (
    BackendConfig,
    BackendRejected,
    BackendUnavailable,
    FormatError,
    LiveBackend,
    NoFence,
    PlannerTurn,
    ScriptedBackend,
    ScriptExhausted,
    extract_fenced,
    format_planner_turn,
    parse_planner_turn,
)
from sgrwr.agents.formats import ActionError, parse_action
from sgrwr.agents.messages import MessageError, assistant, check_messages, system, user
from sgrwr.agents.prompts import (
    NOT_ADDRESSED,
    PromptError,
    assemble_planner_prompt,
    assemble_retriever_prompt,
    assemble_toolcaller_prompt,
    assemble_verifier_prompt,
)
from sgrwr.envs import env_profile, g0_task
from sgrwr.envs.household import household_task
from sgrwr.envs.babyai import BABYAI_SCHEMA, NODE_TYPES, NUMQA_EXPLANATION, TRAVERSE_ROOM_ANNOTATION, gen_numqa, gen_trv
from sgrwr.query import GRAMMAR

MESSAGES = [system("sys"), user("hi")]


def test_message_shape_rules():
    check_messages(MESSAGES)
    for bad in ([user("hi")], [system("a"), system("b"), user("c")], [system("a"), user("b"), user("c")],
                [system("a"), user(" ")], [system("a"), user("b"), assistant("c")]):
        with pytest.raises(MessageError):
            check_messages(bad)


def test_scripted_backend_replays_then_exhausts():
    backend = ScriptedBackend(["r1", "r2"])
    assert backend.complete(MESSAGES) == "r1"
    assert backend.complete(MESSAGES) == "r2"
    with pytest.raises(ScriptExhausted):
        backend.complete(MESSAGES)
    assert not backend.shareable


def _live(handler, retries=3, sleeps=None):
    client = httpx.Client(transport=httpx.MockTransport(handler))
    config = BackendConfig("http://llm.test/v1", "m", max_retries=retries)
    return LiveBackend(config, client, sleep=(sleeps.append if sleeps is not None else (lambda s: None)))


def test_live_backend_request_shape(monkeypatch):
    monkeypatch.setenv("SGRWR_API_KEY", "sekrit")
    seen = []

    def handler(request):
        seen.append(request)
        return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": "hello"}}]})

    assert _live(handler).complete(MESSAGES) == "hello"
    (request,) = seen
    assert str(request.url) == "http://llm.test/v1/chat/completions"
    assert request.headers["Authorization"] == "Bearer sekrit"
    body = json.loads(request.content)
    assert body == {"model": "m", "messages": [m.to_dict() for m in MESSAGES], "temperature": 0.0, "seed": 0}


def test_live_backend_retries_with_backoff():
    calls, sleeps = [], []

    def handler(request):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(503, text="busy")
        return httpx.Response(200, json={"message": {"content": "ok"}})

    assert _live(handler, sleeps=sleeps).complete(MESSAGES) == "ok"
    assert len(calls) == 3 and sleeps == [0.5, 1.0]


def test_live_backend_rejects_4xx_at_once():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401, text="no key")

    with pytest.raises(BackendRejected) as err:
        _live(handler).complete(MESSAGES)
    assert err.value.status == 401 and "no key" in err.value.body and len(calls) == 1


def test_live_backend_unavailable_after_retries():
    calls = []

    def handler(request):
        calls.append(1)
        raise httpx.ConnectError("refused")

    with pytest.raises(BackendUnavailable):
        _live(handler, retries=4).complete(MESSAGES)
    assert len(calls) == 4


def test_live_backend_garbled_body():
    with pytest.raises(BackendRejected):
        _live(lambda r: httpx.Response(200, text="<html>")).complete(MESSAGES)


def test_parse_planner_turn():
    turn = parse_planner_turn("[Explanation]\nneed room list\n[Mode]\nQUERY\n[Content]\nList all room ids")
    assert turn == PlannerTurn("need room list", "QUERY", "List all room ids")
    assert parse_planner_turn("[explanation] x\n[mode] tool-call\n[content] y").mode == "TOOL"


@pytest.mark.parametrize(
    "text, kind",
    [
        ("[Explanation]\nx\n[Mode]\nANSWER\n[Content]\ny", "bad_mode"),
        ("[Mode]\nSOLUTION\n[Content]\ngreen", "missing_section"),
        ("[Explanation]\nx\n[Content]\ny", "missing_mode"),
        ("[Explanation]\nx\n[Mode]\nQUERY", "missing_section"),
        ("just prose", "missing_mode"),
        ("[Explanation]\na\n[Explanation]\nb\n[Mode]\nQUERY\n[Content]\nc", "duplicate_section"),
    ],
)
def test_planner_format_errors(text, kind):
    with pytest.raises(FormatError) as err:
        parse_planner_turn(text)
    assert err.value.kind == kind


section_text = st.text(st.characters(blacklist_characters="[]\r", blacklist_categories=("Cs",)), min_size=1).filter(
    lambda s: s.strip() == s and s.strip()
)


@settings(max_examples=300)
@given(section_text, st.sampled_from(["QUERY", "TOOL", "SOLUTION"]), section_text)
def test_planner_turn_round_trip(explanation, mode, content):
    turn = PlannerTurn(explanation, mode, content)
    assert parse_planner_turn(format_planner_turn(turn)) == turn


def test_extract_fenced():
    assert extract_fenced("a\n```sgq\nnodes()\n```\n", "sgq") == "nodes()"
    assert extract_fenced("```sgq\nfirst\n```\n```sgq\nsecond\n```", "sgq") == "first"
    assert extract_fenced("```python\nx\n```\n```sgq\ny\n```", "sgq") == "y"
    with pytest.raises(NoFence):
        extract_fenced("nodes()", "sgq")


def test_parse_action():
    call = parse_action('Thought: look\nAction: get_attrs("door_1")')
    assert (call.name, call.args) == ("get_attrs", ("door_1",))
    assert parse_action("Action: finish(the door\nis yellow)").args == ("the door\nis yellow",)
    assert parse_action("Action: expand(room_A)").args == ("room_A",)
    with pytest.raises(ActionError):
        parse_action("Thought: nothing to do")
    with pytest.raises(ActionError):
        parse_action('Action: get_attrs("door_1"')


def test_numqa_planner_prompt_has_no_action_space():
    profile = env_profile("numqa")
    prompt = assemble_planner_prompt(profile.schema, profile.explanation, None, [], profile.few_shot)
    assert "Actions available" not in prompt
    assert prompt == assemble_planner_prompt(profile.schema, profile.explanation, None, [], profile.few_shot)


def test_trv_planner_prompt_lists_actions_and_tool():
    profile = env_profile("trv1")
    prompt = assemble_planner_prompt(
        profile.schema, profile.explanation, profile.action_space, [t.annotation for t in profile.tools], profile.few_shot
    )
    for verb in ("pickup(", "remove(", "open("):
        assert verb in prompt
    assert TRAVERSE_ROOM_ANNOTATION in prompt


def test_missing_prompt_inputs():
    with pytest.raises(PromptError):
        assemble_planner_prompt(BABYAI_SCHEMA, "  ", None, [], [])
    with pytest.raises(PromptError):
        assemble_retriever_prompt(BABYAI_SCHEMA, NUMQA_EXPLANATION, "")


def test_other_prompts():
    assert NOT_ADDRESSED in assemble_verifier_prompt()
    assert GRAMMAR in assemble_retriever_prompt(BABYAI_SCHEMA, NUMQA_EXPLANATION, GRAMMAR)
    annotations = [TRAVERSE_ROOM_ANNOTATION, "double(x: int) - twice x"]
    prompt = assemble_toolcaller_prompt(annotations)
    assert all(a in prompt for a in annotations)


def _mentions(text, node_id):
    return re.search(rf"(?<![\w-]){re.escape(node_id)}(?![\w-])", text) is not None


@pytest.mark.parametrize("task", [gen_numqa(0), gen_trv(0, "trv2"), g0_task(), household_task("vh1", 3)], ids=lambda t: t.id)
def test_prompts_never_embed_instance_ids(task):
    profile = env_profile(task.family)
    tools = [t.annotation for t in profile.tools]
    prompts = [
        assemble_planner_prompt(profile.schema, profile.explanation, profile.action_space, tools, profile.few_shot),
        assemble_retriever_prompt(profile.schema, profile.explanation, GRAMMAR),
        assemble_verifier_prompt(),
        assemble_toolcaller_prompt(tools),
    ]
    # "root" is both the root node id and a schema type name
    for node_id in set(task.graph.nodes) - set(NODE_TYPES):
        for prompt in prompts:
            assert not _mentions(prompt, node_id), (task.id, node_id)
