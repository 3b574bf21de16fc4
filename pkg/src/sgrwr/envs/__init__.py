"""Environment profiles: everything an episode needs to know about a task family."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Callable

from ..reasoner import ToolSpec
from ..scene_graph import SceneGraph, Schema, load_graph
from ..tasks import AnswerOracle, TaskInstance
from . import babyai, household

ENV_NAMES = ("numqa", "trv1", "trv2", "vh1", "vh2")


@dataclass(frozen=True)
class EnvProfile:
    family: str
    schema: Schema
    explanation: str
    action_space: str | None
    tools: tuple[ToolSpec, ...]
    few_shot: tuple[str, ...]
    is_action: Callable[[str], bool]

    @property
    def plan_task(self) -> bool:
        return self.action_space is not None


def _parses(parser) -> Callable[[str], bool]:
    def check(line: str) -> bool:
        try:
            parser(line)
        except ValueError:
            return False
        return True

    return check


NUMQA_FEW_SHOT = '''\
Task: find the color of the key in a room next to the room with 2 red balls
[Explanation]
I need the room holding exactly 2 red balls.
[Mode]
QUERY
[Content]
How many nodes with type "ball" and color "red" are inside each room?
Retrieved information:
- ex_room_1: count=2
- ex_room_3: count=1
[Explanation]
ex_room_1 is the identifier room. Next I need which rooms are next to it.
[Mode]
QUERY
[Content]
Which rooms does each door connect?
Retrieved information:
- ex_door_1 -[connects]-> ex_room_1
- ex_door_1 -[connects]-> ex_room_2
[Explanation]
ex_room_2 is next to ex_room_1. I need the color of the key there.
[Mode]
QUERY
[Content]
What are the type and color of each node with type "key" in room "ex_room_2"?
Retrieved information:
- ex_key_4: type="key", color="blue"
[Explanation]
The key next to the identifier room is blue.
[Mode]
SOLUTION
[Content]
blue'''

TRV_FEW_SHOT = '''\
Task: pick up the red box
[Explanation]
I need the rooms, the doors, the agent and the objects in each room.
[Mode]
QUERY
[Content]
List the attributes of every node with type "room".
Retrieved information:
- ex_room_0: type="room", coordinate=[0, 0], size=[6, 6]
- ex_room_1: type="room", coordinate=[5, 0], size=[6, 6]
(... more queries for doors, the agent and each room's contents ...)
[Explanation]
The locked blue door ex_door_0 is at [5, 2]; the blue key is ex_key_1. Find what blocks the way from the agent at [1, 1] to the cell [4, 2] in front of the door.
[Mode]
TOOL
[Content]
traverse_room(top_left=[0, 0], size=[6, 6], obstacles=[[4, 2, "ex_ball_2"]], start=[1, 1], goal=[4, 2])
Tool result:
obstacles to remove: ex_ball_2
[Explanation]
Pick up the key, clear the way, open the door, then take the box ex_box_3.
[Mode]
SOLUTION
[Content]
pickup(ex_key_1)
remove(ex_ball_2)
open(ex_door_0)
pickup(ex_box_3)'''

HOUSEHOLD_FEW_SHOT = '''\
Task: store the mug. Desired final state: mug INSIDE kitchencabinet.
[Explanation]
I need the ids, properties and states of the mug and the kitchen cabinet.
[Mode]
QUERY
[Content]
List the attributes of every node with class_name "mug".
Retrieved information:
- 9012: category="Props", class_name="mug", id=9012, properties=["GRABBABLE"], states=[]
(... the same query for kitchencabinet returns 9003, properties include CAN_OPEN, states=["CLOSED"] ...)
[Explanation]
The cabinet is closed, so it must be opened before putting the mug in.
[Mode]
SOLUTION
[Content]
[walk] <mug> (9012)
[grab] <mug> (9012)
[walk] <kitchencabinet> (9003)
[open] <kitchencabinet> (9003)
[putin] <mug> (9012) <kitchencabinet> (9003)'''


def env_profile(family: str) -> EnvProfile:
    if family == "numqa":
        return EnvProfile(
            "numqa", babyai.BABYAI_SCHEMA, babyai.NUMQA_EXPLANATION, None, (), (NUMQA_FEW_SHOT,), lambda line: False
        )
    if family in ("trv1", "trv2"):
        return EnvProfile(
            family,
            babyai.BABYAI_SCHEMA,
            babyai.TRV_EXPLANATION,
            babyai.TRV_ACTION_SPACE,
            (babyai.TRAVERSE_ROOM_TOOL,),
            (TRV_FEW_SHOT,),
            _parses(babyai.parse_trv_action),
        )
    if family == "household":
        return EnvProfile(
            "household",
            household.HOUSEHOLD_SCHEMA,
            household.HOUSEHOLD_EXPLANATION,
            household.HOUSEHOLD_ACTION_SPACE,
            (),
            (HOUSEHOLD_FEW_SHOT,),
            _parses(household.parse_vh_action),
        )
    raise ValueError(f"unknown task family {family!r}")


def make_task(env: str, seed: int) -> TaskInstance:
    if env == "numqa":
        return babyai.gen_numqa(seed)
    if env in ("trv1", "trv2"):
        return babyai.gen_trv(seed, env)
    if env in household.FIXTURES:
        return household.household_task(env, seed)
    raise ValueError(f"unknown environment {env!r}; expected one of {ENV_NAMES}")


G0_QUESTION = {"target": "box", "num": 1, "color": "green", "obj": "ball"}


def load_g0() -> SceneGraph:
    """The two-room fixture: one green ball and a yellow key in room_A, a purple box in room_B."""
    return load_graph(resources.files("sgrwr").joinpath("data/g0.json").read_bytes())


def g0_task() -> TaskInstance:
    return TaskInstance(
        id="g0-numqa",
        family="numqa",
        instruction=babyai.numqa_instruction(**G0_QUESTION),
        graph=load_g0(),
        oracle=AnswerOracle("purple", babyai.COLORS),
        metadata={"env": "numqa", "fixture": "g0", "question": G0_QUESTION},
    )
