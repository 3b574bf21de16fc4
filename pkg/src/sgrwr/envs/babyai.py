"""Multi-room grid world: scene graphs, NumQ&A and traversal tasks, plan grading.

Coordinates are ``(col, row)`` with the origin at the top-left of the grid.
A room's ``top_left`` and ``size`` include its walls; adjacent rooms share a
wall, and doors sit on shared wall cells.
"""

from __future__ import annotations

import heapq
import random
import re
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from ..reasoner import ToolSpec
from ..scene_graph import (
    AttrSpec,
    Edge,
    EdgeTypeSpec,
    Node,
    NodeTypeSpec,
    SceneGraph,
    Schema,
)
from ..tasks import AnswerOracle, Outcome, Solution, TaskInstance

Cell = tuple[int, int]

COLORS = ("red", "green", "blue", "purple", "yellow", "grey")
ITEM_TYPES = ("key", "box", "ball")
NODE_TYPES = ("root", "room", "agent", "key", "door", "box", "ball")
ROOT_ID = "root"
AGENT_ID = "agent_0"
BIG = 10**6
MAX_GEN_ATTEMPTS = 10_000


class GeneratorError(RuntimeError):
    pass


class Unreachable(ValueError):
    pass


# -- schema -------------------------------------------------------------------

_TYPE = AttrSpec("type", "str", "The element type: one of root, room, agent, key, door, box, ball.")
_COLOR = AttrSpec("color", "str", "Color of a door or an item: red, green, blue, purple, yellow or grey.")
_COORD_ITEM = AttrSpec("coordinate", "int_list", "The [col, row] grid cell the element occupies.")

BABYAI_SCHEMA = Schema(
    profile_name="babyai",
    type_attr="type",
    prose_preamble=(
        "The scene graph describes a grid world made of rectangular rooms, organized as a hierarchy: "
        "a single root node, the room nodes, and the agent, items and doors that belong to rooms. "
        "Grid cells are [col, row] pairs counted from the top-left corner of the whole grid. "
        "A room's coordinate and size include its surrounding walls; neighboring rooms share a wall, "
        "and a door is a cell on that shared wall."
    ),
    node_types=(
        NodeTypeSpec("root", (_TYPE,), "The top of the hierarchy; every room is inside it."),
        NodeTypeSpec(
            "room",
            (
                _TYPE,
                AttrSpec("coordinate", "int_list", "The [col, row] of the room's top-left corner (a wall cell)."),
                AttrSpec("size", "int_list", "The [width, height] of the room in cells, walls included."),
            ),
            "A rectangular room.",
        ),
        NodeTypeSpec("agent", (_TYPE, _COORD_ITEM), "The agent that carries out plans."),
        NodeTypeSpec("key", (_TYPE, _COLOR, _COORD_ITEM), "A key; it unlocks doors of its own color."),
        NodeTypeSpec("box", (_TYPE, _COLOR, _COORD_ITEM), "A box."),
        NodeTypeSpec("ball", (_TYPE, _COLOR, _COORD_ITEM), "A ball."),
        NodeTypeSpec(
            "door",
            (
                _TYPE,
                _COLOR,
                AttrSpec("is_locked", "bool", "True when the door is locked."),
                AttrSpec("coordinate", "int_list", "The [col, row] wall cell the door occupies."),
            ),
            "A door between two rooms.",
            edge_counts=(("connects", 2),),
        ),
    ),
    edge_types=(
        EdgeTypeSpec(
            "inside",
            "An agent, item or door is inside a room; a room is inside the root.",
            endpoints=(
                ("room", "root"),
                ("agent", "room"),
                ("key", "room"),
                ("box", "room"),
                ("ball", "room"),
                ("door", "room"),
            ),
        ),
        EdgeTypeSpec(
            "connects",
            "A door connects to a room it opens into; every door has exactly two.",
            endpoints=(("door", "room"),),
        ),
    ),
)

NUMQA_EXPLANATION = (
    "The scene is a grid world of 9 rooms laid out 3 by 3. Doors join neighboring rooms, and "
    "two rooms are next to each other exactly when a door connects them. Keys, boxes and balls "
    "of various colors lie inside the rooms."
)

TRV_EXPLANATION = (
    "The scene is a grid world of two rooms joined by a door. The agent walks between free cells "
    "of a room; it cannot pass walls, closed doors, or cells occupied by objects. A locked door "
    "opens only if the agent holds a key of the door's color. An object standing in front of a "
    "door blocks it until the object is removed."
)

TRV_ACTION_SPACE = (
    "pickup(node_id): walk to an object and pick it up.\n"
    "remove(node_id): walk to an object and remove it from the scene.\n"
    "open(node_id): walk to a door and open it; a locked door needs a held key of its color.\n"
    "Write the plan as one action per line, e.g. pickup(ex_key_1)."
)


# -- world model --------------------------------------------------------------


@dataclass(frozen=True)
class Room:
    id: str
    top_left: Cell
    size: tuple[int, int]

    def interior(self) -> list[Cell]:
        x0, y0 = self.top_left
        w, h = self.size
        return [(x, y) for y in range(y0 + 1, y0 + h - 1) for x in range(x0 + 1, x0 + w - 1)]

    def contains(self, cell: Cell) -> bool:
        x0, y0 = self.top_left
        w, h = self.size
        return x0 < cell[0] < x0 + w - 1 and y0 < cell[1] < y0 + h - 1


@dataclass(frozen=True)
class Door:
    id: str
    color: str
    is_locked: bool
    cell: Cell
    room_pair: tuple[str, str]


@dataclass(frozen=True)
class Item:
    id: str
    type: str
    color: str
    cell: Cell
    room: str


@dataclass(frozen=True)
class Agent:
    cell: Cell
    room: str
    id: str = AGENT_ID


@dataclass(frozen=True)
class GridWorld:
    rooms: tuple[Room, ...]
    doors: tuple[Door, ...]
    items: tuple[Item, ...]
    agent: Agent | None = None

    def room(self, room_id: str) -> Room:
        return next(r for r in self.rooms if r.id == room_id)

    def item(self, item_id: str) -> Item | None:
        return next((i for i in self.items if i.id == item_id), None)

    def door(self, door_id: str) -> Door | None:
        return next((d for d in self.doors if d.id == door_id), None)

    def room_neighbors(self, room_id: str) -> list[str]:
        out = {b if a == room_id else a for d in self.doors for a, b in [d.room_pair] if room_id in (a, b)}
        return sorted(out)


def neighbors4(cell: Cell) -> list[Cell]:
    x, y = cell
    return [(x + 1, y), (x, y + 1), (x - 1, y), (x, y - 1)]


def build_scene_graph(world: GridWorld) -> SceneGraph:
    nodes = {ROOT_ID: Node(ROOT_ID, {"type": "root"})}
    edges: list[Edge] = []
    for room in world.rooms:
        nodes[room.id] = Node(
            room.id, {"type": "room", "coordinate": list(room.top_left), "size": list(room.size)}
        )
        edges.append(Edge(room.id, ROOT_ID, "inside"))
    for door in world.doors:
        nodes[door.id] = Node(
            door.id,
            {"type": "door", "color": door.color, "is_locked": door.is_locked, "coordinate": list(door.cell)},
        )
        for room_id in door.room_pair:
            edges.append(Edge(door.id, room_id, "connects"))
    agent = world.agent
    if agent is not None:
        nodes[agent.id] = Node(agent.id, {"type": "agent", "coordinate": list(agent.cell)})
        edges.append(Edge(agent.id, agent.room, "inside"))
    for item in world.items:
        nodes[item.id] = Node(item.id, {"type": item.type, "color": item.color, "coordinate": list(item.cell)})
        edges.append(Edge(item.id, item.room, "inside"))
    return SceneGraph("babyai", nodes, tuple(edges), ROOT_ID)


def world_from_graph(graph: SceneGraph) -> GridWorld:
    """Rebuild the grid world a babyai scene graph was built from."""
    rooms, doors, items, agent = [], [], [], None

    def container(node_id: str) -> str:
        return next(e.target for e in graph.out_edges(node_id, "inside"))

    for node in graph:
        kind = node.attrs["type"]
        if kind == "room":
            rooms.append(Room(node.id, tuple(node.attrs["coordinate"]), tuple(node.attrs["size"])))
        elif kind == "door":
            pair = tuple(sorted(e.target for e in graph.out_edges(node.id, "connects")))
            doors.append(
                Door(node.id, node.attrs["color"], node.attrs["is_locked"], tuple(node.attrs["coordinate"]), pair)
            )
        elif kind == "agent":
            agent = Agent(tuple(node.attrs["coordinate"]), container(node.id), node.id)
        elif kind in ITEM_TYPES:
            items.append(
                Item(node.id, kind, node.attrs["color"], tuple(node.attrs["coordinate"]), container(node.id))
            )
    return GridWorld(tuple(rooms), tuple(doors), tuple(items), agent)


# -- traverse_room ------------------------------------------------------------


def traverse_room(
    room_cells: Iterable[Cell],
    blocked: Iterable[tuple[Cell, str]],
    start: Cell,
    goal: Cell,
) -> list[str]:
    """Obstacles on the cheapest 4-connected path from ``start`` to ``goal``.

    Free moves cost 1 and entering an obstacle cell costs ``BIG``, so the
    returned ids form a minimum-cardinality removal set. Ties go to the
    shorter path, then to the lexicographically smallest id sequence.
    """
    cells = {tuple(c) for c in room_cells}
    start, goal = tuple(start), tuple(goal)
    if start not in cells or goal not in cells:
        raise Unreachable(f"start {list(start)} and goal {list(goal)} must both lie inside the room")
    obstacle_at = {tuple(cell): node_id for cell, node_id in blocked}

    def h(cell: Cell) -> int:
        return abs(cell[0] - goal[0]) + abs(cell[1] - goal[1])

    best: dict[Cell, tuple[int, tuple[str, ...]]] = {start: (0, ())}
    heap = [(h(start), (), 0, start)]
    while heap:
        f, seq, g, cell = heapq.heappop(heap)
        if best[cell] != (g, seq):
            continue
        if goal in best and (f, seq) > best[goal]:
            break
        if cell == goal:
            continue
        for nxt in neighbors4(cell):
            if nxt not in cells or nxt == start:
                continue
            if nxt in obstacle_at:
                label = (g + BIG, seq + (obstacle_at[nxt],))
            else:
                label = (g + 1, seq)
            if nxt not in best or label < best[nxt]:
                best[nxt] = label
                heapq.heappush(heap, (label[0] + h(nxt), label[1], label[0], nxt))
    if goal not in best:
        raise Unreachable(f"no path from {list(start)} to {list(goal)} inside the room")
    return list(best[goal][1])


TRAVERSE_ROOM_ANNOTATION = (
    "traverse_room(top_left: int_list, size: int_list, obstacles: list, start: int_list, goal: int_list) - "
    "Within the room with the given top_left coordinate and size, find which objects must be removed "
    "to walk from the start cell to the goal cell; obstacles lists every object in the room as "
    "[col, row, node_id]."
)


def _traverse_room_tool(top_left, size, obstacles, start, goal) -> str:
    room = Room("room", tuple(top_left), tuple(size))
    blocked = []
    for entry in obstacles:
        if not (isinstance(entry, (list, tuple)) and len(entry) == 3):
            raise ValueError("each obstacle must be [col, row, node_id]")
        blocked.append(((int(entry[0]), int(entry[1])), str(entry[2])))
    removal = traverse_room(room.interior(), blocked, tuple(start), tuple(goal))
    return "obstacles to remove: " + (", ".join(removal) if removal else "none")


TRAVERSE_ROOM_TOOL = ToolSpec(
    name="traverse_room",
    annotation=TRAVERSE_ROOM_ANNOTATION,
    arg_schema={"top_left": "int_list", "size": "int_list", "obstacles": "list", "start": "int_list", "goal": "int_list"},
    handler=_traverse_room_tool,
)


# -- NumQ&A -------------------------------------------------------------------


_PLURALS = {"key": "keys", "box": "boxes", "ball": "balls"}
_SINGULAR = {v: k for k, v in _PLURALS.items()}


def numqa_instruction(target: str, num: int, color: str, obj: str) -> str:
    noun = obj if num == 1 else _PLURALS[obj]
    return f"find the color of the {target} in a room next to the room with {num} {color} {noun}"


_NUMQA_RE = re.compile(
    r"find the color of the (\w+) in a room next to the room with (\d+) (\w+) (\w+)", re.IGNORECASE
)


def parse_numqa_instruction(text: str) -> dict | None:
    m = _NUMQA_RE.search(text)
    if not m:
        return None
    noun = m.group(4).lower()
    return {
        "target": m.group(1).lower(),
        "num": int(m.group(2)),
        "color": m.group(3).lower(),
        "obj": _SINGULAR.get(noun, noun),
    }


def _room_contents(graph: SceneGraph, room_id: str) -> list[Node]:
    return [graph.nodes[e.source] for e in graph.in_edges(room_id, "inside")]


def identifier_rooms(graph: SceneGraph, num: int, color: str, obj: str) -> list[str]:
    """Rooms holding exactly ``num`` items of the identifier color and type."""
    rooms = sorted(n.id for n in graph if n.attrs.get("type") == "room")
    return [
        r
        for r in rooms
        if sum(1 for n in _room_contents(graph, r) if n.attrs.get("type") == obj and n.attrs.get("color") == color)
        == num
    ]


def numqa_candidates(graph: SceneGraph, target: str, num: int, color: str, obj: str) -> list[tuple[str, str, str]]:
    """Brute-force answers: ``(identifier room, target node, target color)`` triples."""
    found = []
    for r in identifier_rooms(graph, num, color, obj):
        doors = [e.source for e in graph.in_edges(r, "connects")]
        adjacent = sorted({e.target for d in doors for e in graph.out_edges(d, "connects")} - {r})
        for nb in adjacent:
            for n in _room_contents(graph, nb):
                if n.attrs.get("type") == target:
                    found.append((r, n.id, n.attrs["color"]))
    return found


def _grid_layout(rng: random.Random, cols: int, rows: int, room_size: int) -> tuple[list[Room], list[Door]]:
    step = room_size - 1
    rooms = [
        Room(f"room_{r * cols + c}", (c * step, r * step), (room_size, room_size))
        for r in range(rows)
        for c in range(cols)
    ]
    doors = []
    for r in range(rows):
        for c in range(cols):
            here = rooms[r * cols + c]
            if c + 1 < cols:
                cell = ((c + 1) * step, r * step + rng.randint(1, room_size - 2))
                doors.append((cell, here.id, rooms[r * cols + c + 1].id))
            if r + 1 < rows:
                cell = (c * step + rng.randint(1, room_size - 2), (r + 1) * step)
                doors.append((cell, here.id, rooms[(r + 1) * cols + c].id))
    door_objs = [
        Door(f"door_{i}", rng.choice(COLORS), rng.random() < 0.3, cell, (a, b))
        for i, (cell, a, b) in enumerate(doors)
    ]
    return rooms, door_objs


def _try_numqa(rng: random.Random) -> tuple[GridWorld, dict] | None:
    rooms, doors = _grid_layout(rng, 3, 3, 7)
    world_stub = GridWorld(tuple(rooms), tuple(doors), (), Agent((1, 1), rooms[0].id))
    ident_room = rng.choice(rooms).id
    around = world_stub.room_neighbors(ident_room)
    target = rng.choice(ITEM_TYPES)
    obj = rng.choice([t for t in ITEM_TYPES if t != target])
    color = rng.choice(COLORS)
    num = rng.randint(1, 3)
    target_room = rng.choice(around)

    specs: dict[str, list[tuple[str, str]]] = {}
    for room in rooms:
        total = rng.randint(5, 9)
        chosen: list[tuple[str, str]] = []
        if room.id == ident_room:
            chosen = [(obj, color)] * num
        if room.id == target_room:
            chosen.append((target, rng.choice(COLORS)))
        while len(chosen) < total:
            kind, col = rng.choice(ITEM_TYPES), rng.choice(COLORS)
            if room.id == ident_room and (kind, col) == (obj, color):
                continue
            if room.id in around and kind == target:
                continue
            chosen.append((kind, col))
        specs[room.id] = chosen

    agent_room = rng.choice(rooms)
    items: list[Item] = []
    agent = None
    counter = 0
    for room in rooms:
        cells = room.interior()
        rng.shuffle(cells)
        if room.id == agent_room.id:
            agent = Agent(cells.pop(), room.id)
        for kind, col in specs[room.id]:
            items.append(Item(f"{kind}_{counter}", kind, col, cells.pop(), room.id))
            counter += 1
    world = GridWorld(tuple(rooms), tuple(doors), tuple(items), agent)
    question = {"target": target, "num": num, "color": color, "obj": obj}
    graph = build_scene_graph(world)
    if len(identifier_rooms(graph, num, color, obj)) != 1 or len(numqa_candidates(graph, **question)) != 1:
        return None
    return world, question


def gen_numqa(seed: int) -> TaskInstance:
    rng = random.Random(f"numqa-{seed}")
    for _ in range(MAX_GEN_ATTEMPTS):
        made = _try_numqa(rng)
        if made is None:
            continue
        world, question = made
        graph = build_scene_graph(world)
        ((_, _, answer),) = numqa_candidates(graph, **question)
        return TaskInstance(
            id=f"numqa-{seed}",
            family="numqa",
            instruction=numqa_instruction(**question),
            graph=graph,
            oracle=AnswerOracle(answer, COLORS),
            metadata={"env": "numqa", "seed": seed, "question": question},
        )
    raise GeneratorError(f"no unique-answer NumQ&A instance after {MAX_GEN_ATTEMPTS} attempts (seed {seed})")


# -- traversal ----------------------------------------------------------------


@dataclass(frozen=True)
class TrvAction:
    verb: str
    node_id: str

    def __str__(self) -> str:
        return f"{self.verb}({self.node_id})"


TRV_VERBS = ("pickup", "remove", "open")
_TRV_ACTION = re.compile(r"^\s*(pickup|remove|open)\s*\(\s*[\"']?([A-Za-z0-9_]+)[\"']?\s*\)\s*\.?\s*$", re.IGNORECASE)


def parse_trv_action(line: str) -> TrvAction:
    m = _TRV_ACTION.match(line)
    if not m:
        raise ValueError(f"not a traversal action: {line!r}")
    return TrvAction(m.group(1).lower(), m.group(2))


@dataclass
class _TrvState:
    agent: Cell
    items: dict[str, Item]
    open_doors: set[str] = field(default_factory=set)
    held: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class TrvGrade:
    success: bool
    reason: str | None = None  # plan_invalid | precondition | goal_unmet
    detail: str | None = None
    step: int | None = None


def _passable(world: GridWorld, state: _TrvState, cell: Cell) -> bool:
    if any(i.cell == cell for i in state.items.values()):
        return False
    if any(r.contains(cell) for r in world.rooms):
        return True
    return any(d.cell == cell and d.id in state.open_doors for d in world.doors)


def _reach(world: GridWorld, state: _TrvState, target: Cell) -> Cell | None:
    """A free cell next to ``target`` the agent can walk to, or None."""
    goals = set(neighbors4(target))
    seen = {state.agent}
    queue = deque([state.agent])
    while queue:
        cell = queue.popleft()
        if cell in goals:
            return cell
        for nxt in neighbors4(cell):
            if nxt not in seen and _passable(world, state, nxt):
                seen.add(nxt)
                queue.append(nxt)
    return None


def grade_trv_plan(world: GridWorld, plan: Sequence[TrvAction | str], target_id: str) -> TrvGrade:
    """Simulate a traversal plan; success iff the target ends up held."""
    if world.agent is None:
        return TrvGrade(False, "plan_invalid", "the world has no agent", None)
    state = _TrvState(world.agent.cell, {i.id: i for i in world.items})
    for step, raw in enumerate(plan):
        try:
            action = raw if isinstance(raw, TrvAction) else parse_trv_action(raw)
        except ValueError as exc:
            return TrvGrade(False, "plan_invalid", str(exc), step)
        node = action.node_id
        door = world.door(node)
        item = state.items.get(node)
        if door is None and world.item(node) is None:
            return TrvGrade(False, "plan_invalid", f"no node {node!r}", step)
        if action.verb in ("pickup", "remove"):
            if item is None:
                what = "a door" if door else "no longer in the scene"
                return TrvGrade(False, "precondition", f"{node} is {what}", step)
            stand = _reach(world, state, item.cell)
            if stand is None:
                return TrvGrade(False, "precondition", f"unreachable: {node}", step)
            state.agent = stand
            del state.items[node]
            if action.verb == "pickup":
                state.held.append(node)
        else:
            if door is None:
                return TrvGrade(False, "precondition", f"{node} is not a door", step)
            if node in state.open_doors:
                continue
            stand = _reach(world, state, door.cell)
            if stand is None:
                return TrvGrade(False, "precondition", f"door unreachable: {node}", step)
            keys = [world.item(k) for k in state.held]
            if door.is_locked and not any(k.type == "key" and k.color == door.color for k in keys):
                return TrvGrade(False, "precondition", f"locked: {node}", step)
            state.agent = stand
            state.open_doors.add(node)
    if target_id in state.held:
        return TrvGrade(True)
    return TrvGrade(False, "goal_unmet", f"{target_id} is not held", None)


@dataclass(frozen=True)
class TrvOracle:
    target_id: str
    kind: str = "trv_plan"

    def grade(self, solution: Solution, graph: SceneGraph) -> Outcome:
        if solution.kind != "plan":
            return Outcome.failure("plan_invalid", "expected a plan")
        result = grade_trv_plan(world_from_graph(graph), solution.plan, self.target_id)
        if result.success:
            return Outcome.ok()
        if result.reason == "goal_unmet":
            return Outcome.failure("goal_unmet", result.detail)
        detail = result.detail if result.reason == "plan_invalid" else f"precondition: {result.detail}"
        return Outcome.failure("plan_invalid", detail, result.step)

    def to_dict(self) -> dict:
        return {"kind": "trv_plan", "target_id": self.target_id}

    @classmethod
    def from_dict(cls, data: dict) -> "TrvOracle":
        return cls(data["target_id"])


def door_front(door: Door, room: Room) -> Cell:
    """The interior cell of ``room`` directly in front of ``door``."""
    for cell in neighbors4(door.cell):
        if room.contains(cell):
            return cell
    raise ValueError(f"{door.id} does not open into {room.id}")


def _try_trv(rng: random.Random, variant: str) -> tuple[GridWorld, str, list[str]] | None:
    height = rng.randint(6, 8)
    w0, w1 = rng.randint(6, 8), rng.randint(6, 8)
    room_a = Room("room_0", (0, 0), (w0, height))
    room_b = Room("room_1", (w0 - 1, 0), (w1, height))
    door_color = rng.choice(COLORS)
    door = Door("door_0", door_color, True, (w0 - 1, rng.randint(1, height - 2)), (room_a.id, room_b.id))
    front_a, front_b = door_front(door, room_a), door_front(door, room_b)

    free_a = [c for c in room_a.interior() if c != front_a]
    free_b = [c for c in room_b.interior() if c != front_b]
    rng.shuffle(free_a)
    rng.shuffle(free_b)

    counter = 0
    items: list[Item] = []

    def add(kind: str, color: str, cell: Cell, room: Room) -> Item:
        nonlocal counter
        item = Item(f"{kind}_{counter}", kind, color, cell, room.id)
        counter += 1
        items.append(item)
        return item

    agent = Agent(free_a.pop(), room_a.id)
    key = add("key", door_color, free_a.pop(), room_a)
    for color in rng.sample([c for c in COLORS if c != door_color], 2):
        add("key", color, free_a.pop(), room_a)

    target_kind, target_color = rng.choice(("ball", "box")), rng.choice(COLORS)

    def other_object() -> tuple[str, str]:
        while True:
            pick = (rng.choice(("ball", "box")), rng.choice(COLORS))
            if pick != (target_kind, target_color):
                return pick

    obstacle_a = add(*other_object(), front_a, room_a)
    obstacle_b = add(*other_object(), front_b, room_b) if variant == "trv2" else None
    target = add(target_kind, target_color, free_b.pop(), room_b)
    for _ in range(rng.randint(0, 2)):
        add(*other_object(), free_b.pop(), room_b)

    world = GridWorld((room_a, room_b), (door,), tuple(items), agent)
    plan = [f"pickup({key.id})", f"remove({obstacle_a.id})", f"open({door.id})"]
    if obstacle_b is not None:
        plan.append(f"remove({obstacle_b.id})")
    plan.append(f"pickup({target.id})")
    if not grade_trv_plan(world, plan, target.id).success:
        return None
    return world, target.id, plan


def trv_instruction(world: GridWorld, target_id: str) -> str:
    item = world.item(target_id)
    return f"pick up the {item.color} {item.type}"


def gen_trv(seed: int, variant: str) -> TaskInstance:
    if variant not in ("trv1", "trv2"):
        raise ValueError(f"unknown traversal variant {variant!r}")
    rng = random.Random(f"{variant}-{seed}")
    for _ in range(MAX_GEN_ATTEMPTS):
        made = _try_trv(rng, variant)
        if made is None:
            continue
        world, target_id, plan = made
        return TaskInstance(
            id=f"{variant}-{seed}",
            family=variant,
            instruction=trv_instruction(world, target_id),
            graph=build_scene_graph(world),
            oracle=TrvOracle(target_id),
            metadata={"env": variant, "seed": seed, "reference_plan": plan},
        )
    raise GeneratorError(f"no solvable {variant} instance after {MAX_GEN_ATTEMPTS} attempts (seed {seed})")


def with_agent(world: GridWorld, cell: Cell) -> GridWorld:
    return replace(world, agent=replace(world.agent, cell=cell))
