"""Household graph-state simulator: actions, preconditions, goal grading, fixtures.

Node ids are integers rendered as strings; every node keeps its integer in the
``id`` attribute. The acting character is the lowest-id ``character`` node.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

from ..scene_graph import AttrSpec, Edge, EdgeTypeSpec, Node, NodeTypeSpec, SceneGraph, Schema, load_graph
from ..tasks import Outcome, Solution, TaskInstance

RELATIONSHIPS = ("ON", "INSIDE", "BETWEEN", "CLOSE", "FACING", "HOLDS_RH", "HOLD_LH", "SITTING")
VERBS = ("walk", "grab", "open", "close", "switchon", "switchoff", "sit", "putin", "putback")
TWO_OBJECT_VERBS = ("putin", "putback")
GOAL_RELATIONS = ("ON_state", "OFF_state", "OPEN", "CLOSED", "HEATED", "INSIDE", "ON_top")
FIXTURES = ("vh1", "vh2")
HANDS = ("HOLDS_RH", "HOLD_LH")


class ParseError(ValueError):
    def __init__(self, message: str, column: int):
        super().__init__(f"{message} at column {column}")
        self.column = column


class UnknownObject(ValueError):
    pass


class PreconditionError(ValueError):
    def __init__(self, action: "HouseholdAction", sentence: str):
        super().__init__(f"{action}: {sentence}")
        self.action = action
        self.sentence = sentence


# -- schema -------------------------------------------------------------------

HOUSEHOLD_SCHEMA = Schema(
    profile_name="household",
    type_attr=None,
    prose_preamble=(
        "The scene graph describes a furnished house. Every room, piece of furniture, appliance, "
        "small object and character is a node; edges record spatial relations between them. "
        "Node ids are integers; the character that carries out plans is the character node with "
        "the lowest id."
    ),
    node_types=(
        NodeTypeSpec(
            "object",
            (
                AttrSpec("id", "int", "Integer identifier of the node."),
                AttrSpec("category", "str", "Coarse category such as Rooms, Furniture, Appliances, Food or Characters."),
                AttrSpec("class_name", "str", "Object class, e.g. kitchen, fridge, plum or character."),
                AttrSpec(
                    "properties",
                    "str_list",
                    "Affordances: GRABBABLE, CAN_OPEN, HAS_SWITCH, SITTABLE, CONTAINERS, SURFACES, HEAT_SOURCE and others.",
                ),
                AttrSpec("states", "str_list", "Current states: OPEN or CLOSED, ON or OFF, HEATED."),
                AttrSpec("prefab_name", "str", "Asset name of the object model.", required=False),
                AttrSpec("obj_transform", "blob", "Position, rotation and scale of the model.", required=False),
                AttrSpec("bounding_box", "blob", "Center and size of the model's bounding box.", required=False),
            ),
            "Any element of the house.",
        ),
    ),
    edge_types=(
        EdgeTypeSpec("ON", "The from node rests on top of the to node."),
        EdgeTypeSpec("INSIDE", "The from node is inside the to node (a room or a container)."),
        EdgeTypeSpec("BETWEEN", "The from node (a door) lies between rooms; one edge per room."),
        EdgeTypeSpec("CLOSE", "The from node is near the to node."),
        EdgeTypeSpec("FACING", "The from node faces the to node."),
        EdgeTypeSpec("HOLDS_RH", "The from character holds the to node in its right hand."),
        EdgeTypeSpec("HOLD_LH", "The from character holds the to node in its left hand."),
        EdgeTypeSpec("SITTING", "The from character sits on the to node."),
    ),
)

HOUSEHOLD_EXPLANATION = (
    "The scene is a house with several rooms. A character can walk to objects, manipulate them "
    "and change their states. Tasks are given as the desired final state of some objects."
)

HOUSEHOLD_ACTION_SPACE = (
    "[walk] <class_name> (id): walk to an object.\n"
    "[grab] <class_name> (id): grab an object; the character must have walked to it.\n"
    "[open] <class_name> (id): open an object; the character must have walked to it.\n"
    "[close] <class_name> (id): close an object; the character must have walked to it.\n"
    "[switchon] <class_name> (id): turn an object on; the character must have walked to it.\n"
    "[switchoff] <class_name> (id): turn an object off; the character must have walked to it.\n"
    "[sit] <class_name> (id): sit on an object; the character must have walked to it.\n"
    "[putin] <class_name1> (id1) <class_name2> (id2): put object 1 inside object 2; "
    "the character must hold object 1 and have walked to object 2.\n"
    "[putback] <class_name1> (id1) <class_name2> (id2): put object 1 on object 2; "
    "the character must hold object 1 and have walked to object 2.\n"
    "Write the plan as one action per line."
)


# -- actions ------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectRef:
    class_name: str
    id: int

    def __str__(self) -> str:
        return f"<{self.class_name}> ({self.id})"


@dataclass(frozen=True)
class HouseholdAction:
    verb: str
    args: tuple[ObjectRef, ...]

    def __post_init__(self) -> None:
        want = 2 if self.verb in TWO_OBJECT_VERBS else 1
        if len(self.args) != want:
            raise ValueError(f"[{self.verb}] takes {want} object(s)")

    def __str__(self) -> str:
        return f"[{self.verb}] " + " ".join(str(a) for a in self.args)


_VERB_RE = re.compile(r"\s*\[\s*([A-Za-z]+)\s*\]")
_REF_RE = re.compile(r"\s*<\s*([A-Za-z0-9_]+)\s*>\s*\(\s*(\d+)\s*\)")


def parse_vh_action(line: str) -> HouseholdAction:
    """Parse ``[verb] <class> (id)`` or ``[verb] <class1> (id1) <class2> (id2)``."""
    m = _VERB_RE.match(line)
    if not m:
        col = len(line) - len(line.lstrip()) + 1
        raise ParseError("expected '[verb]'", col)
    verb = m.group(1).lower()
    if verb not in VERBS:
        raise ParseError(f"unknown verb {verb!r}", m.start(1) + 1)
    pos = m.end()
    refs = []
    want = 2 if verb in TWO_OBJECT_VERBS else 1
    while len(refs) < want:
        r = _REF_RE.match(line, pos)
        if not r:
            raise ParseError("expected '<class_name> (id)'", pos + 1)
        refs.append(ObjectRef(r.group(1), int(r.group(2))))
        pos = r.end()
    if line[pos:].strip():
        raise ParseError("unexpected trailing text", pos + 1 + (len(line[pos:]) - len(line[pos:].lstrip())))
    return HouseholdAction(verb, tuple(refs))


# -- simulator ----------------------------------------------------------------


@dataclass(frozen=True)
class SimState:
    """Mutable-by-copy simulator state built from a household scene graph."""

    nodes: dict  # id -> attrs dict (states are lists)
    edges: frozenset  # (source, target, relationship)
    agent: str

    @classmethod
    def from_graph(cls, graph: SceneGraph) -> "SimState":
        chars = [n for n in graph if n.attrs.get("class_name") == "character"]
        if not chars:
            raise UnknownObject("the graph has no character node")
        agent = min(chars, key=lambda n: n.attrs["id"]).id
        nodes = {n.id: {**n.attrs, "states": list(n.attrs.get("states", []))} for n in graph}
        edges = frozenset((e.source, e.target, e.relationship) for e in graph.edges)
        return cls(nodes, edges, agent)

    def to_graph(self) -> SceneGraph:
        nodes = {k: Node(k, dict(v)) for k, v in self.nodes.items()}
        edges = tuple(Edge(s, t, r) for s, t, r in sorted(self.edges))
        return SceneGraph("household", nodes, edges, None)

    def has(self, node_id: str, prop: str) -> bool:
        return prop in self.nodes[node_id].get("properties", [])

    def state(self, node_id: str) -> list[str]:
        return self.nodes[node_id]["states"]

    def held(self) -> dict[str, str]:
        return {t: r for s, t, r in self.edges if s == self.agent and r in HANDS}

    def close_to(self, node_id: str) -> bool:
        return (self.agent, node_id, "CLOSE") in self.edges


def _resolve(state: SimState, ref: ObjectRef) -> str:
    node_id = str(ref.id)
    node = state.nodes.get(node_id)
    if node is None:
        raise UnknownObject(f"no object with id {ref.id}")
    if node.get("class_name") != ref.class_name:
        raise UnknownObject(f"object {ref.id} is a {node.get('class_name')}, not a {ref.class_name}")
    return node_id


def _set_state(states: list[str], add: str, drop: str) -> list[str]:
    return sorted({s for s in states if s != drop} | {add})


def apply(state: SimState, action: HouseholdAction) -> SimState:
    """Apply one action, returning the new state.

    Raises :class:`PreconditionError` naming the violated requirement, or
    :class:`UnknownObject` when a reference does not resolve.
    """
    ids = [_resolve(state, ref) for ref in action.args]
    nodes = {k: {**v, "states": list(v["states"])} for k, v in state.nodes.items()}
    edges = set(state.edges)
    agent = state.agent
    target = ids[0]

    def fail(sentence: str):
        raise PreconditionError(action, sentence)

    def require_close(node_id: str, what: str = "the object") -> None:
        if not state.close_to(node_id):
            fail(f"requires that the character has walked to {what} first")

    def heat_contents(source: str) -> None:
        for s, t, r in list(edges):
            if t == source and r == "INSIDE":
                nodes[s]["states"] = sorted(set(nodes[s]["states"]) | {"HEATED"})

    verb = action.verb
    if verb == "walk":
        edges = {e for e in edges if not (agent in e[:2] and e[2] in ("CLOSE", "SITTING"))}
        edges |= {(agent, target, "CLOSE"), (target, agent, "CLOSE")}
    elif verb == "grab":
        if not state.has(target, "GRABBABLE"):
            fail("requires a grabbable object")
        require_close(target)
        held = state.held()
        if target in held:
            fail("the object is already held")
        for s, t, r in state.edges:
            if s == target and r == "INSIDE" and state.has(t, "CAN_OPEN") and "CLOSED" in state.state(t):
                fail("the object is inside a closed container")
        hand = next((h for h in HANDS if h not in held.values()), None)
        if hand is None:
            fail("requires a free hand")
        edges = {e for e in edges if not (e[0] == target and e[2] in ("INSIDE", "ON"))}
        edges.add((agent, target, hand))
    elif verb in ("open", "close"):
        if not state.has(target, "CAN_OPEN"):
            fail("requires an object that can be opened")
        require_close(target)
        want, other = ("OPEN", "CLOSED") if verb == "open" else ("CLOSED", "OPEN")
        if want in state.state(target):
            fail(f"the object is already {want.lower()}")
        nodes[target]["states"] = _set_state(nodes[target]["states"], want, other)
    elif verb in ("switchon", "switchoff"):
        if not state.has(target, "HAS_SWITCH"):
            fail("requires an object with a switch")
        require_close(target)
        want, other = ("ON", "OFF") if verb == "switchon" else ("OFF", "ON")
        if want in state.state(target):
            fail(f"the object is already {want.lower()}")
        nodes[target]["states"] = _set_state(nodes[target]["states"], want, other)
        if want == "ON" and state.has(target, "HEAT_SOURCE"):
            heat_contents(target)
    elif verb == "sit":
        if not state.has(target, "SITTABLE"):
            fail("requires an object to sit on")
        require_close(target)
        edges.add((agent, target, "SITTING"))
    else:  # putin / putback
        container = ids[1]
        held = state.held()
        if target not in held:
            fail("requires that the character is holding object 1")
        require_close(container, "object 2")
        if verb == "putin" and state.has(container, "CAN_OPEN") and "OPEN" not in state.state(container):
            fail("object 2 must be open")
        edges.discard((agent, target, held[target]))
        edges.add((target, container, "INSIDE" if verb == "putin" else "ON"))
        if verb == "putin" and state.has(container, "HEAT_SOURCE") and "ON" in state.state(container):
            heat_contents(container)
    return SimState(nodes, frozenset(edges), agent)


# -- goals --------------------------------------------------------------------


@dataclass(frozen=True)
class GoalPredicate:
    subject: str
    relation: str
    object: str | None = None

    def __post_init__(self) -> None:
        if self.relation not in GOAL_RELATIONS:
            raise ValueError(f"unknown goal relation {self.relation!r}")
        if (self.relation in ("INSIDE", "ON_top")) != (self.object is not None):
            raise ValueError(f"{self.relation} goals {'need' if self.object is None else 'take no'} object")

    def __str__(self) -> str:
        word = {"ON_state": "ON", "OFF_state": "OFF", "ON_top": "ON"}.get(self.relation, self.relation)
        return f"{self.subject} {word} {self.object}" if self.object else f"{self.subject} {word}"

    @classmethod
    def parse(cls, text: str) -> "GoalPredicate":
        """``tv ON``, ``plum INSIDE garbagecan``, ``plate ON kitchentable``."""
        parts = text.split()
        if len(parts) == 2:
            rel = {"ON": "ON_state", "OFF": "OFF_state"}.get(parts[1], parts[1])
            return cls(parts[0], rel)
        if len(parts) == 3:
            rel = "ON_top" if parts[1] == "ON" else parts[1]
            return cls(parts[0], rel, parts[2])
        raise ValueError(f"cannot read goal {text!r}")

    def to_dict(self) -> dict:
        out = {"subject": self.subject, "relation": self.relation}
        if self.object is not None:
            out["object"] = self.object
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GoalPredicate":
        return cls(data["subject"], data["relation"], data.get("object"))


def goal_holds(state: SimState, goal: GoalPredicate) -> bool:
    """Satisfied when some object of the subject class meets the predicate."""
    subjects = [k for k, v in state.nodes.items() if v.get("class_name") == goal.subject]
    if goal.object is not None:
        rel = "INSIDE" if goal.relation == "INSIDE" else "ON"
        objects = {k for k, v in state.nodes.items() if v.get("class_name") == goal.object}
        return any((s, o, rel) in state.edges for s in subjects for o in objects)
    flag = {"ON_state": "ON", "OFF_state": "OFF"}.get(goal.relation, goal.relation)
    return any(flag in state.nodes[s]["states"] for s in subjects)


@dataclass(frozen=True)
class PlanGrade:
    success: bool
    reason: str | None = None  # plan_invalid | goal_unmet
    detail: str | None = None
    step: int | None = None
    final: SimState | None = None


def grade_plan(initial_graph: SceneGraph, plan, goals) -> PlanGrade:
    """Execute ``plan`` on a private copy of the graph and check every goal."""
    state = SimState.from_graph(initial_graph)
    for step, raw in enumerate(plan):
        try:
            action = raw if isinstance(raw, HouseholdAction) else parse_vh_action(raw)
            state = apply(state, action)
        except (ParseError, UnknownObject, PreconditionError, ValueError) as exc:
            return PlanGrade(False, "plan_invalid", str(exc), step, state)
    unmet = [str(g) for g in goals if not goal_holds(state, g)]
    if unmet:
        return PlanGrade(False, "goal_unmet", "unmet: " + ", ".join(unmet), None, state)
    return PlanGrade(True, final=state)


@dataclass(frozen=True)
class GoalOracle:
    goals: tuple[GoalPredicate, ...]
    kind: str = "goal_state"

    def grade(self, solution: Solution, graph: SceneGraph) -> Outcome:
        if solution.kind != "plan":
            return Outcome.failure("plan_invalid", "expected a plan")
        result = grade_plan(graph, solution.plan, self.goals)
        if result.success:
            return Outcome.ok()
        return Outcome.failure(result.reason, result.detail, result.step)

    def to_dict(self) -> dict:
        return {"kind": "goal_state", "goals": [g.to_dict() for g in self.goals]}

    @classmethod
    def from_dict(cls, data: dict) -> "GoalOracle":
        return cls(tuple(GoalPredicate.from_dict(g) for g in data["goals"]))


def plan_for_goals(goals, lookup) -> list[str]:
    """A straightforward plan reaching ``goals``.

    ``lookup(class_name)`` returns ``(id, properties, states)`` of the object
    to use for that class.
    """

    def ref(class_name: str) -> str:
        return f"<{class_name}> ({lookup(class_name)[0]})"

    plan: list[str] = []
    heated = {g.subject for g in goals if g.relation == "HEATED"}
    for goal in goals:
        s = goal.subject
        if goal.relation in ("ON_state", "OFF_state"):
            verb = "switchon" if goal.relation == "ON_state" else "switchoff"
            plan += [f"[walk] {ref(s)}", f"[{verb}] {ref(s)}"]
        elif goal.relation in ("OPEN", "CLOSED"):
            verb = "open" if goal.relation == "OPEN" else "close"
            plan += [f"[walk] {ref(s)}", f"[{verb}] {ref(s)}"]
        elif goal.relation in ("INSIDE", "ON_top"):
            o = goal.object
            _, props, states = lookup(o)
            plan += [f"[walk] {ref(s)}", f"[grab] {ref(s)}", f"[walk] {ref(o)}"]
            if goal.relation == "INSIDE":
                if "CAN_OPEN" in props and "OPEN" not in states:
                    plan.append(f"[open] {ref(o)}")
                plan.append(f"[putin] {ref(s)} {ref(o)}")
                if s in heated and "HEAT_SOURCE" in props and "HAS_SWITCH" in props and "ON" not in states:
                    plan.append(f"[switchon] {ref(o)}")
            else:
                plan.append(f"[putback] {ref(s)} {ref(o)}")
    return plan


# -- fixtures -----------------------------------------------------------------


def _data(name: str) -> bytes:
    return resources.files("sgrwr").joinpath("data", "household", name).read_bytes()


def load_household_fixture(name: str) -> SceneGraph:
    if name not in FIXTURES:
        raise ValueError(f"unknown household fixture {name!r}; expected one of {FIXTURES}")
    return load_graph(_data(f"{name}.json"))


@dataclass(frozen=True)
class HouseholdTask:
    task_name: str
    instruction: str
    goals: tuple[GoalPredicate, ...]
    split: str  # test | fewshot
    golden_plan: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "task_name": self.task_name,
            "instruction": self.instruction,
            "goals": [g.to_dict() for g in self.goals],
            "split": self.split,
            "golden_plan": list(self.golden_plan),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HouseholdTask":
        return cls(
            data["task_name"],
            data["instruction"],
            tuple(GoalPredicate.from_dict(g) for g in data["goals"]),
            data["split"],
            tuple(data["golden_plan"]),
        )


def household_instruction(task_name: str, goals) -> str:
    return f"{task_name}. Desired final state: {', '.join(str(g) for g in goals)}."


def parse_household_goals(instruction: str) -> tuple[GoalPredicate, ...]:
    m = re.search(r"Desired final state:\s*(.+?)\.?\s*$", instruction)
    if not m:
        raise ValueError("instruction carries no desired final state")
    return tuple(GoalPredicate.parse(part.strip()) for part in m.group(1).split(","))


def load_household_tasks(name: str) -> list[HouseholdTask]:
    if name not in FIXTURES:
        raise ValueError(f"unknown household fixture {name!r}")
    return [HouseholdTask.from_dict(t) for t in json.loads(_data(f"{name}_tasks.json"))]


def household_task(name: str, index: int) -> TaskInstance:
    """The ``index``-th test task of fixture ``name`` as a task instance."""
    tests = [t for t in load_household_tasks(name) if t.split == "test"]
    if not 0 <= index < len(tests):
        raise ValueError(f"{name} has {len(tests)} test tasks; index {index} is out of range")
    task = tests[index]
    return TaskInstance(
        id=f"{name}-{index}",
        family="household",
        instruction=task.instruction,
        graph=load_household_fixture(name),
        oracle=GoalOracle(task.goals),
        metadata={"env": name, "seed": index, "task_name": task.task_name, "reference_plan": list(task.golden_plan)},
    )
