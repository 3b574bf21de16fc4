"""Rule-based reference agents.

Each one is a pure function of the message history it is shown, so the same
history always produces the same reply. They play their roles perfectly for
the query phrasings the reference planner uses, which makes the full loop
runnable without a language model.
"""

from __future__ import annotations

import json
import re
from typing import Callable, Sequence

from ..envs import babyai
from ..envs.household import parse_household_goals, plan_for_goals
from ..scene_graph import parse_attrs
from .backends import FunctionBackend
from .formats import PlannerTurn, format_planner_turn, parse_call
from .messages import ChatMessage

OBS_RETRIEVED = "Retrieved information:\n"
OBS_TOOL = "Tool result:\n"


# -- reading rendered results --------------------------------------------------


def parse_rows(text: str) -> list[tuple[str, dict]]:
    """Node or group rows ``- id: k=v, ...`` from a rendered result."""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line.startswith("- ") or " -[" in line:
            continue
        body = line[2:]
        node_id, _, attrs = body.partition(": ")
        try:
            rows.append((node_id.strip(), parse_attrs(attrs) if attrs else {}))
        except ValueError:
            continue
    return rows


_EDGE_ROW = re.compile(r"^- (\S+) -\[(\w+)\]-> (\S+)$")


def parse_edge_rows(text: str) -> list[tuple[str, str, str]]:
    return [m.groups() for m in (_EDGE_ROW.match(line.strip()) for line in text.splitlines()) if m]


# -- planner scaffolding ---------------------------------------------------------


def _task_text(messages: Sequence[ChatMessage]) -> str:
    first = next(m.content for m in messages if m.role == "user")
    return first.removeprefix("Task:").strip()


def _exchanges(messages: Sequence[ChatMessage]) -> dict[str, str]:
    """Map each QUERY/TOOL content the planner sent to the observation it got back."""
    out: dict[str, str] = {}
    convo = [m for m in messages if m.role != "system"]
    for mine, reply in zip(convo, convo[1:]):
        if mine.role != "assistant" or reply.role != "user":
            continue
        from .formats import FormatError, parse_planner_turn

        try:
            turn = parse_planner_turn(mine.content)
        except FormatError:
            continue
        text = reply.content
        if text.startswith(OBS_RETRIEVED) or text.startswith(OBS_TOOL):
            out[turn.content] = text.split("\n", 1)[1] if "\n" in text else ""
    return out


def _turn(explanation: str, mode: str, content: str) -> str:
    return format_planner_turn(PlannerTurn(explanation, mode, content))


def _ask(known: dict[str, str], query: str, why: str) -> str | None:
    return None if query in known else _turn(why, "QUERY", query)


def _filters_text(**filters) -> str:
    return " and ".join(f"{k} {json.dumps(v)}" for k, v in filters.items())


def numqa_query_ident(obj: str, color: str) -> str:
    return f"How many nodes with {_filters_text(type=obj, color=color)} are inside each room?"


NUMQA_QUERY_DOORS = "Which rooms does each door connect?"


def numqa_query_targets(target: str) -> str:
    return f"How many nodes with {_filters_text(type=target)} are inside each room?"


def numqa_query_colors(target: str, room: str) -> str:
    return f"What are the type and color of each node with {_filters_text(type=target)} in room {json.dumps(room)}?"


def numqa_planner(messages: Sequence[ChatMessage]) -> str:
    q = babyai.parse_numqa_instruction(_task_text(messages))
    if q is None:
        return _turn("The task does not follow the NumQ&A template.", "SOLUTION", "unknown")
    known = _exchanges(messages)
    q1 = numqa_query_ident(q["obj"], q["color"])
    step = _ask(known, q1, f"Find the room holding exactly {q['num']} {q['color']} {q['obj']} nodes.")
    if step:
        return step
    ident = [r for r, a in parse_rows(known[q1]) if a.get("count") == q["num"]]
    if not ident:
        return _turn("No room matches the identifier clause.", "SOLUTION", "unknown")
    step = _ask(known, NUMQA_QUERY_DOORS, f"{ident[0]} is the identifier room. Find the rooms next to it.")
    if step:
        return step
    doors: dict[str, set[str]] = {}
    for door, _, room in parse_edge_rows(known[NUMQA_QUERY_DOORS]):
        doors.setdefault(door, set()).add(room)
    nearby = sorted({r for rooms in doors.values() if ident[0] in rooms for r in rooms} - {ident[0]})
    q3 = numqa_query_targets(q["target"])
    step = _ask(known, q3, f"Rooms next to {ident[0]}: {', '.join(nearby)}. Find which of them holds a {q['target']}.")
    if step:
        return step
    holders = [r for r, a in parse_rows(known[q3]) if r in nearby and a.get("count", 0) > 0]
    if not holders:
        return _turn(f"No {q['target']} lies next to {ident[0]}.", "SOLUTION", "unknown")
    q4 = numqa_query_colors(q["target"], holders[0])
    step = _ask(known, q4, f"{holders[0]} holds the {q['target']}. Get its color.")
    if step:
        return step
    colors = [a["color"] for _, a in parse_rows(known[q4]) if "color" in a]
    answer = colors[0] if colors else "unknown"
    return _turn(f"The {q['target']} in {holders[0]} is {answer}.", "SOLUTION", answer)


def trv_query_type(node_type: str) -> str:
    return f"List the attributes of every node with {_filters_text(type=node_type)}."


def trv_query_contents(room: str) -> str:
    return f"List the attributes of every node inside {json.dumps(room)}."


_TRV_TARGET = re.compile(r"pick up the (\w+) (\w+)", re.IGNORECASE)
_REMOVAL = re.compile(r"obstacles to remove:\s*(.*)")


def _removals(text: str) -> list[str]:
    m = _REMOVAL.search(text)
    if not m or m.group(1).strip() == "none":
        return []
    return [x.strip() for x in m.group(1).split(",") if x.strip()]


def _room_of(rooms: dict[str, dict], cell) -> str | None:
    for rid, a in rooms.items():
        room = babyai.Room(rid, tuple(a["coordinate"]), tuple(a["size"]))
        if room.contains(tuple(cell)):
            return rid
    return None


def _tool_call(top_left, size, obstacles, start, goal) -> str:
    obs = json.dumps([[x, y, i] for x, y, i in obstacles])
    return (
        f"traverse_room(top_left={list(top_left)}, size={list(size)}, obstacles={obs}, "
        f"start={list(start)}, goal={list(goal)})"
    )


def trv_planner(messages: Sequence[ChatMessage]) -> str:
    m = _TRV_TARGET.search(_task_text(messages))
    if m is None:
        return _turn("The task names no target object.", "SOLUTION", "")
    color, kind = m.group(1).lower(), m.group(2).lower()
    known = _exchanges(messages)
    for node_type, why in (
        ("room", "Get the rooms and their extent."),
        ("door", "Get the doors, their colors and whether they are locked."),
        ("agent", "Get the agent's position."),
    ):
        step = _ask(known, trv_query_type(node_type), why)
        if step:
            return step
    rooms = dict(parse_rows(known[trv_query_type("room")]))
    doors = dict(parse_rows(known[trv_query_type("door")]))
    agents = parse_rows(known[trv_query_type("agent")])
    if not rooms or not doors or not agents:
        return _turn("The scene lacks rooms, doors or an agent.", "SOLUTION", "")
    contents: dict[str, dict[str, dict]] = {}
    for rid in sorted(rooms):
        step = _ask(known, trv_query_contents(rid), f"List what lies in {rid}.")
        if step:
            return step
        contents[rid] = {i: a for i, a in parse_rows(known[trv_query_contents(rid)]) if a.get("type") != "agent"}
    agent_cell = agents[0][1]["coordinate"]
    room_a = _room_of(rooms, agent_cell)
    target = next(
        ((rid, i, a) for rid in sorted(contents) for i, a in contents[rid].items() if a.get("type") == kind and a.get("color") == color),
        None,
    )
    if room_a is None or target is None:
        return _turn("The agent or the target could not be located.", "SOLUTION", "")
    room_b, target_id, target_attrs = target
    box = {rid: babyai.Room(rid, tuple(a["coordinate"]), tuple(a["size"])) for rid, a in rooms.items()}
    door_id, door = next(
        (
            (d, a)
            for d, a in sorted(doors.items())
            if {r for c in babyai.neighbors4(tuple(a["coordinate"])) for r in (room_a, room_b) if box[r].contains(c)}
            == {room_a, room_b}
        ),
        (None, None),
    )
    if door_id is None:
        return _turn("No door joins the two rooms.", "SOLUTION", "")
    door_cell = tuple(door["coordinate"])
    front = {r: next(c for c in babyai.neighbors4(door_cell) if box[r].contains(c)) for r in (room_a, room_b)}
    key = None
    if door.get("is_locked"):
        key = next((i for i, a in sorted(contents[room_a].items()) if a.get("type") == "key" and a.get("color") == door["color"]), None)
        if key is None:
            return _turn(f"No {door['color']} key is in {room_a}.", "SOLUTION", "")
    tool_a = _tool_call(
        rooms[room_a]["coordinate"],
        rooms[room_a]["size"],
        [(*a["coordinate"], i) for i, a in sorted(contents[room_a].items()) if i != key],
        agent_cell,
        front[room_a],
    )
    if tool_a not in known:
        what = f"the cell {list(front[room_a])} in front of {door_id}"
        return _turn(f"Find what blocks the way from the agent to {what}.", "TOOL", tool_a)
    tool_b = _tool_call(
        rooms[room_b]["coordinate"],
        rooms[room_b]["size"],
        [(*a["coordinate"], i) for i, a in sorted(contents[room_b].items()) if i != target_id],
        target_attrs["coordinate"],
        front[room_b],
    )
    if tool_b not in known:
        return _turn(f"Find what blocks the way from {door_id} to {target_id} in {room_b}.", "TOOL", tool_b)
    plan = [f"pickup({key})"] if key else []
    plan += [f"remove({x})" for x in _removals(known[tool_a])]
    plan.append(f"open({door_id})")
    plan += [f"remove({x})" for x in reversed(_removals(known[tool_b]))]
    plan.append(f"pickup({target_id})")
    return _turn("Collect the key, clear both sides of the door and take the target.", "SOLUTION", "\n".join(plan))


def household_query(class_name: str) -> str:
    return f"List the attributes of every node with {_filters_text(class_name=class_name)}."


def household_planner(messages: Sequence[ChatMessage]) -> str:
    try:
        goals = parse_household_goals(_task_text(messages))
    except ValueError:
        return _turn("The task states no goal.", "SOLUTION", "")
    known = _exchanges(messages)
    classes: list[str] = []
    for g in goals:
        for c in (g.subject, g.object):
            if c and c not in classes:
                classes.append(c)
    found: dict[str, tuple[int, list[str], list[str]]] = {}
    for c in classes:
        step = _ask(known, household_query(c), f"Get the id, properties and states of the {c}.")
        if step:
            return step
        rows = [a for _, a in parse_rows(known[household_query(c)]) if a.get("class_name") == c]
        if not rows:
            return _turn(f"There is no {c} in the house.", "SOLUTION", "")
        first = min(rows, key=lambda a: a["id"])
        found[c] = (first["id"], first.get("properties", []), first.get("states", []))
    plan = plan_for_goals(goals, found.__getitem__)
    return _turn("All objects are known; here is the plan.", "SOLUTION", "\n".join(plan))


PLANNERS: dict[str, Callable[[Sequence[ChatMessage]], str]] = {
    "numqa": numqa_planner,
    "trv1": trv_planner,
    "trv2": trv_planner,
    "household": household_planner,
}


# -- retriever side --------------------------------------------------------------

_VALUE = r'"(?:[^"\\]|\\.)*"|-?\d+|true|false'
_PAIR = re.compile(rf"(\w+) ({_VALUE})")


def _filters_source(text: str) -> str | None:
    pairs = []
    for part in re.split(r"\s+and\s+|,\s*", text.strip()):
        m = _PAIR.fullmatch(part.strip())
        if not m:
            return None
        pairs.append(f"{m.group(1)}={m.group(2)}")
    return ", ".join(pairs)


def _singular(noun: str) -> str:
    return babyai._SINGULAR.get(noun, noun)


def _count_by(m: re.Match) -> str | None:
    f = _filters_source(m["f"])
    return f and f'nodes({f}) | count_by("inside")'


def _project(m: re.Match) -> str | None:
    f = _filters_source(m["f"])
    fields = ", ".join(x for x in re.split(r"\s+and\s+|,\s*", m["fields"].strip()) if x)
    if not f or not re.fullmatch(r"[\w, ]+", fields):
        return None
    room = f' | in_room("{m["room"]}")' if m["room"] else ""
    return f"nodes({f}){room} | project({fields})"


def _select(m: re.Match) -> str | None:
    f = _filters_source(m["f"])
    return f and f"nodes({f})"


QUERY_TEMPLATES: tuple[tuple[re.Pattern, Callable[[re.Match], str | None]], ...] = (
    (re.compile(r"How many nodes with (?P<f>.+?) are inside each (?:room|node)\?"), _count_by),
    (re.compile(r"Which rooms does each door connect\?"), lambda m: 'edges(rel="connects")'),
    (
        re.compile(r"What (?:is|are) the (?P<fields>[\w ,]+?) of each node with (?P<f>.+?)(?: in room \"(?P<room>[^\"]+)\")?\?"),
        _project,
    ),
    (re.compile(r"List the attributes of every node inside \"(?P<id>[^\"]+)\"\."), lambda m: f'nodes() | inside("{m["id"]}")'),
    (re.compile(r"List the attributes of every node with (?P<f>.+?)\."), _select),
    (
        re.compile(r"How many (?P<color>\w+) (?P<noun>\w+) are in (?P<room>[\w-]+)\?"),
        lambda m: f'count(nodes(type="{_singular(m["noun"])}", color="{m["color"]}") | in_room("{m["room"]}"))',
    ),
    (re.compile(r"attributes of (?P<id>[\w-]+)'s neighbors"), lambda m: f'neighbors("{m["id"]}")'),
)


def translate_query(text: str) -> str | None:
    for pattern, build in QUERY_TEMPLATES:
        m = pattern.search(text)
        if m:
            source = build(m)
            if source:
                return source
    return None


def _request(messages: Sequence[ChatMessage]) -> str:
    first = next(m.content for m in messages if m.role == "user")
    head = first.split("\n\n", 1)[0]
    return head.removeprefix("Request:").strip()


def code_writer(messages: Sequence[ChatMessage]) -> str:
    source = translate_query(_request(messages))
    if source is None:
        return "This request does not match any query I know how to write."
    return f"```sgq\n{source}\n```"


_HOW_MANY = re.compile(r"How many (?P<what>.+?) are in (?P<room>[\w-]+)\?")


def verifier(messages: Sequence[ChatMessage]) -> str:
    body = messages[-1].content
    request = _request(messages)
    output = body.split("Query output:\n", 1)[1] if "Query output:\n" in body else body
    output = output.strip()
    m = _HOW_MANY.search(request)
    count = re.fullmatch(r"count = (\d+)", output)
    if m and count:
        n = int(count.group(1))
        words = m["what"].split()
        if n == 1 and words:
            words[-1] = _singular(words[-1])
        return f"{m['room']} contains {n} {' '.join(words)}"
    return output


def tool_caller(messages: Sequence[ChatMessage]) -> str:
    name, args = parse_call(messages[-1].content)
    return json.dumps({"tool": name, "args": args})


_NEIGHBORS_OF = re.compile(r"(?:\"(?P<q>[^\"]+)\"|(?P<w>[\w-]+))'s neighbors|neighbors of \"?(?P<n>[\w-]+)\"?")


def limit_retriever(messages: Sequence[ChatMessage]) -> str:
    """Looks up a node's neighbors, then each neighbor's attributes."""
    m = _NEIGHBORS_OF.search(_request(messages))
    if m is None:
        return "Thought: this request needs a global search I cannot afford.\nAction: finish(NOT ADDRESSED)"
    node = m["q"] or m["w"] or m["n"]
    observations = [x.content.removeprefix("Observation: ") for x in messages if x.role == "user"][1:]
    if not observations:
        return f'Thought: start from {node}.\nAction: get_neighbors("{node}")'
    listing = observations[0]
    if not listing.startswith("neighbors: "):
        return "Thought: the lookup failed.\nAction: finish(NOT ADDRESSED)"
    ids = [] if listing.endswith("(none)") else listing.removeprefix("neighbors: ").split(", ")
    done = len(observations) - 1
    if done < len(ids):
        return f'Thought: read the attributes of {ids[done]}.\nAction: get_attrs("{ids[done]}")'
    summary = "; ".join(observations[1:]) if ids else f"{node} has no neighbors"
    return f"Thought: every neighbor is known.\nAction: finish({summary})"


REFERENCE_ROLES = ("planner", "code_writer", "verifier", "tool_caller", "limit_retriever")


def reference_backend(role: str, family: str) -> FunctionBackend:
    if role == "planner":
        return FunctionBackend(PLANNERS[family], f"reference-planner-{family}")
    fn = {
        "code_writer": code_writer,
        "verifier": verifier,
        "tool_caller": tool_caller,
        "limit_retriever": limit_retriever,
    }.get(role)
    if fn is None:
        raise KeyError(f"no reference backend for role {role!r}")
    return FunctionBackend(fn, f"reference-{role}")
