import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from checks import astar_mismatches, numqa_problems
from sgrwr.envs.babyai import (
    BABYAI_SCHEMA,
    ITEM_TYPES,
    Door,
    GridWorld,
    Item,
    Room,
    TrvAction,
    Unreachable,
    build_scene_graph,
    door_front,
    gen_numqa,
    gen_trv,
    grade_trv_plan,
    parse_numqa_instruction,
    parse_trv_action,
    traverse_room,
    world_from_graph,
)
from sgrwr.scene_graph import validate
from sgrwr.tasks import Solution, TaskInstance


def test_one_room_world_graph():
    room = Room("room_0", (0, 0), (5, 5))
    world = GridWorld((room,), (), (Item("ball_0", "ball", "red", (2, 2), "room_0"),))
    graph = build_scene_graph(world)
    assert len(graph.nodes) == 3 and len(graph.edges) == 2
    assert validate(graph, BABYAI_SCHEMA) == []


def test_numqa_world_shape():
    graph = gen_numqa(0).graph
    kinds = [n.attrs["type"] for n in graph]
    assert kinds.count("root") == 1 and kinds.count("room") == 9 and kinds.count("door") == 12
    assert validate(graph, BABYAI_SCHEMA) == []


def test_numqa_is_deterministic():
    assert gen_numqa(7).to_json() == gen_numqa(7).to_json()
    assert gen_numqa(7).to_json() != gen_numqa(8).to_json()


def test_numqa_answers_are_unique_and_match_brute_force():
    assert numqa_problems(range(100)) == []


def test_numqa_instruction_round_trip():
    task = gen_numqa(3)
    assert parse_numqa_instruction(task.instruction) == task.metadata["question"]


def test_task_json_round_trip():
    for task in (gen_numqa(1), gen_trv(1, "trv2")):
        again = TaskInstance.from_json(task.to_json())
        assert again.to_json() == task.to_json()


def _obstacles_at_door(task):
    world = world_from_graph(task.graph)
    door = world.doors[0]
    fronts = {door_front(door, world.room(r)) for r in door.room_pair}
    return world, door, [i for i in world.items if i.cell in fronts]


def test_trv1_has_agent_side_obstacle_only():
    world, door, blocking = _obstacles_at_door(gen_trv(0, "trv1"))
    assert [i.room for i in blocking] == [world.agent.room]


def test_trv2_has_obstacles_on_both_sides():
    _, _, blocking = _obstacles_at_door(gen_trv(0, "trv2"))
    assert len(blocking) == 2 and len({i.room for i in blocking}) == 2


@pytest.mark.parametrize("variant", ["trv1", "trv2"])
def test_trv_key_rules(variant):
    for seed in range(20):
        world, door, blocking = _obstacles_at_door(gen_trv(seed, variant))
        keys = [i for i in world.items if i.type == "key" and i.room == world.agent.room]
        assert door.is_locked
        assert len(keys) == 3
        assert sum(k.color == door.color for k in keys) == 1
        assert all(i.type != "key" for i in blocking)


@pytest.mark.parametrize("variant", ["trv1", "trv2"])
def test_reference_plans_grade_success(variant):
    for seed in range(100):
        task = gen_trv(seed, variant)
        plan = task.metadata["reference_plan"]
        assert task.oracle.grade(Solution("plan", plan=tuple(plan)), task.graph).success, (variant, seed)


def test_plan_without_remove_cannot_reach_door():
    task = gen_trv(0, "trv1")
    world = world_from_graph(task.graph)
    plan = [a for a in task.metadata["reference_plan"] if not a.startswith("remove")]
    result = grade_trv_plan(world, plan, task.oracle.target_id)
    assert (result.reason, result.step) == ("precondition", 1)
    assert "door unreachable" in result.detail


def test_open_without_key_is_locked():
    task = gen_trv(0, "trv1")
    world = world_from_graph(task.graph)
    plan = [a for a in task.metadata["reference_plan"] if not a.startswith("pickup(key")]
    result = grade_trv_plan(world, plan, task.oracle.target_id)
    assert result.reason == "precondition" and result.detail.startswith("locked")


def test_decoy_key_does_not_open_the_door():
    task = gen_trv(2, "trv1")
    world = world_from_graph(task.graph)
    door = world.doors[0]
    decoy = next(i for i in world.items if i.type == "key" and i.color != door.color)
    plan = [f"pickup({decoy.id})" if a.startswith("pickup(key") else a for a in task.metadata["reference_plan"]]
    assert grade_trv_plan(world, plan, task.oracle.target_id).detail.startswith("locked")


def test_unknown_node_is_plan_invalid():
    task = gen_trv(0, "trv1")
    outcome = task.oracle.grade(Solution("plan", plan=("pickup(node_99)",)), task.graph)
    assert outcome.reason == "plan_invalid"


def test_stopping_early_is_goal_unmet():
    task = gen_trv(0, "trv1")
    outcome = task.oracle.grade(Solution("plan", plan=tuple(task.metadata["reference_plan"][:-1])), task.graph)
    assert outcome.reason == "goal_unmet"


def test_parse_trv_action():
    assert parse_trv_action(' pickup("key_0")') == TrvAction("pickup", "key_0")
    with pytest.raises(ValueError):
        parse_trv_action("walk(key_0)")


def test_traverse_empty_room():
    cells = Room("r", (0, 0), (5, 5)).interior()
    assert traverse_room(cells, [], (1, 1), (3, 3)) == []


def test_traverse_single_corridor_blocker():
    # 5x5 interior corridor: only row 2 is open, with a box in the middle
    cells = [(x, 2) for x in range(1, 6)]
    assert traverse_room(cells, [((3, 2), "box_9")], (1, 2), (5, 2)) == ["box_9"]


def test_traverse_prefers_fewest_removals_then_ids():
    cells = [(x, y) for x in range(1, 4) for y in range(1, 4)]
    blocked = [((2, 1), "b"), ((2, 2), "a"), ((2, 3), "c")]
    assert traverse_room(cells, blocked, (1, 2), (3, 2)) == ["a"]


def test_traverse_goal_outside_room():
    cells = Room("r", (0, 0), (5, 5)).interior()
    with pytest.raises(Unreachable):
        traverse_room(cells, [], (1, 1), (9, 9))


def test_traverse_walled_off_goal():
    cells = [(1, 1), (3, 1)]
    with pytest.raises(Unreachable):
        traverse_room(cells, [], (1, 1), (3, 1))


def test_traverse_matches_exhaustive_search():
    compared, bad = astar_mismatches(200, seed=0)
    assert compared == 200 and bad == []


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_traverse_property(seed):
    assert astar_mismatches(1, seed=seed)[1] == []


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["numqa", "trv1", "trv2"]))
def test_generated_graphs_validate(seed, env):
    task = gen_numqa(seed) if env == "numqa" else gen_trv(seed, env)
    assert validate(task.graph, BABYAI_SCHEMA) == []
    assert all(n.attrs["type"] in ITEM_TYPES + ("root", "room", "agent", "door") for n in task.graph)


def test_world_graph_round_trip():
    task = gen_trv(4, "trv2")
    assert build_scene_graph(world_from_graph(task.graph)) == task.graph


def test_door_cells_lie_on_shared_walls():
    world = world_from_graph(gen_numqa(5).graph)
    for door in world.doors:
        a, b = (world.room(r) for r in door.room_pair)
        assert not a.contains(door.cell) and not b.contains(door.cell)
        door_front(door, a), door_front(door, b)


def test_door_type_is_a_door():
    assert isinstance(world_from_graph(gen_trv(0, "trv1").graph).doors[0], Door)
