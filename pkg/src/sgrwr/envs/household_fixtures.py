"""Builder for the bundled household fixtures.

The JSON files under ``sgrwr/data/household`` are the output of
:func:`write_fixtures`; tests rebuild them and compare byte for byte.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from ..scene_graph import Edge, Node, SceneGraph, save_graph
from .household import GoalPredicate, HouseholdTask, grade_plan, household_instruction, plan_for_goals

G, O, C, SW, SIT, SURF, HEAT = (
    "GRABBABLE",
    "CAN_OPEN",
    "CONTAINERS",
    "HAS_SWITCH",
    "SITTABLE",
    "SURFACES",
    "HEAT_SOURCE",
)

# class_name -> (category, properties, initial states)
CATALOG: dict[str, tuple[str, tuple[str, ...], tuple[str, ...]]] = {
    # furniture
    "kitchentable": ("Furniture", (SURF, "MOVABLE"), ()),
    "kitchencounter": ("Furniture", (SURF,), ()),
    "kitchencabinet": ("Furniture", (O, C), ("CLOSED",)),
    "kitchenchair": ("Furniture", (SIT, "MOVABLE"), ()),
    "sofa": ("Furniture", (SIT, "LIEABLE"), ()),
    "coffeetable": ("Furniture", (SURF,), ()),
    "tvstand": ("Furniture", (SURF,), ()),
    "bookshelf": ("Furniture", (C, SURF), ()),
    "desk": ("Furniture", (SURF,), ()),
    "chair": ("Furniture", (SIT, "MOVABLE"), ()),
    "bed": ("Furniture", (SIT, "LIEABLE", SURF), ()),
    "nightstand": ("Furniture", (SURF, O, C), ("CLOSED",)),
    "closet": ("Furniture", (O, C), ("CLOSED",)),
    "dresser": ("Furniture", (O, C), ("CLOSED",)),
    "bathroomcabinet": ("Furniture", (O, C), ("CLOSED",)),
    "bathroomcounter": ("Furniture", (SURF,), ()),
    "towelrack": ("Furniture", (SURF,), ()),
    "wallshelf": ("Furniture", (SURF,), ()),
    # appliances
    "fridge": ("Appliances", (O, C, "HAS_PLUG"), ("CLOSED",)),
    "microwave": ("Appliances", (O, C, SW, HEAT, "HAS_PLUG"), ("CLOSED", "OFF")),
    "toaster": ("Appliances", (C, SW, HEAT, "HAS_PLUG"), ("OFF",)),
    "stove": ("Appliances", (O, C, SW, HEAT), ("CLOSED", "OFF")),
    "dishwasher": ("Appliances", (O, C, SW), ("CLOSED", "OFF")),
    "coffeemaker": ("Appliances", (SW, C, "HAS_PLUG"), ("OFF",)),
    "washingmachine": ("Appliances", (O, C, SW), ("CLOSED", "OFF")),
    "sink": ("Furniture", (C,), ()),
    "faucet": ("Props", (SW,), ("OFF",)),
    "garbagecan": ("Props", (O, C), ("CLOSED",)),
    "toilet": ("Furniture", (SIT, O, C), ("CLOSED",)),
    "bathtub": ("Furniture", (C,), ()),
    # electronics and lighting
    "tv": ("Electronics", (SW, "HAS_PLUG", "LOOKABLE"), ("OFF",)),
    "computer": ("Electronics", (SW, "LOOKABLE"), ("OFF",)),
    "cpuscreen": ("Electronics", ("LOOKABLE",), ()),
    "keyboard": ("Electronics", (G,), ()),
    "mouse": ("Electronics", (G,), ()),
    "radio": ("Electronics", (SW, G), ("OFF",)),
    "cellphone": ("Electronics", (SW, G), ("OFF",)),
    "remotecontrol": ("Electronics", (G, SW), ("OFF",)),
    "alarmclock": ("Electronics", (G, SW), ("ON",)),
    "tablelamp": ("Lamps", (SW, "HAS_PLUG"), ("ON",)),
    "floorlamp": ("Lamps", (SW, "HAS_PLUG"), ("OFF",)),
    "ceilinglamp": ("Lamps", (SW,), ("ON",)),
    "lightswitch": ("Electronics", (SW,), ("ON",)),
    "powersocket": ("Electronics", (), ()),
    # food and kitchenware
    "plate": ("Props", (G, "RECIPIENT", SURF), ()),
    "salmon": ("Food", (G, "EATABLE", "CUTTABLE"), ()),
    "breadslice": ("Food", (G, "EATABLE", "CUTTABLE"), ()),
    "cupcake": ("Food", (G, "EATABLE"), ()),
    "plum": ("Food", (G, "EATABLE"), ()),
    "apple": ("Food", (G, "EATABLE"), ()),
    "bananas": ("Food", (G, "EATABLE"), ()),
    "cereal": ("Food", (G, "EATABLE"), ()),
    "milk": ("Food", (G, "DRINKABLE", "POURABLE"), ()),
    "juice": ("Food", (G, "DRINKABLE", "POURABLE"), ()),
    "chips": ("Food", (G, "EATABLE"), ()),
    "mug": ("Props", (G, "RECIPIENT"), ()),
    "wineglass": ("Props", (G, "RECIPIENT"), ()),
    "waterglass": ("Props", (G, "RECIPIENT"), ()),
    "bowl": ("Props", (G, "RECIPIENT"), ()),
    "cutleryfork": ("Props", (G,), ()),
    "cutleryknife": ("Props", (G,), ()),
    "fryingpan": ("Props", (G, C), ()),
    "cookingpot": ("Props", (G, C), ()),
    "dishbowl": ("Props", (G, "RECIPIENT"), ()),
    # household objects
    "book": ("Props", (G, O, "READABLE"), ("CLOSED",)),
    "pillow": ("Props", (G, "MOVABLE"), ()),
    "candle": ("Props", (G,), ()),
    "clock": ("Decor", (), ()),
    "plant": ("Decor", ("MOVABLE",), ()),
    "wallpictureframe": ("Decor", ("LOOKABLE",), ()),
    "curtains": ("Props", (O,), ("OPEN",)),
    "window": ("Doors", (O,), ("CLOSED",)),
    "rug": ("Decor", (), ()),
    "door": ("Doors", (O,), ("OPEN",)),
    "clothespile": ("Props", (G,), ()),
    "hanger": ("Props", (G,), ()),
    "clothesshirt": ("Props", (G, "CLOTHES"), ()),
    "clothespants": ("Props", (G, "CLOTHES"), ()),
    "slippers": ("Props", (G, "CLOTHES"), ()),
    "towel": ("Props", (G,), ()),
    "barsoap": ("Props", (G,), ()),
    "toothbrush": ("Props", (G,), ()),
    "toothpaste": ("Props", (G, O), ("CLOSED",)),
    "hairproduct": ("Props", (G,), ()),
    "facecream": ("Props", (G,), ()),
    "deodorant": ("Props", (G,), ()),
    "mirror": ("Decor", ("LOOKABLE",), ()),
    "newspaper": ("Props", (G, "READABLE"), ()),
    "coffeecup": ("Props", (G, "RECIPIENT"), ()),
    "character": ("Characters", (), ()),
}

# room -> list of (class_name, count, placement); placement is None, ("ON", cls) or ("INSIDE", cls)
VH1_LAYOUT = {
    "kitchen": [
        ("kitchentable", 1, None),
        ("kitchencounter", 1, None),
        ("kitchencabinet", 2, None),
        ("kitchenchair", 2, None),
        ("fridge", 1, None),
        ("microwave", 1, ("ON", "kitchencounter")),
        ("toaster", 1, ("ON", "kitchencounter")),
        ("coffeemaker", 1, ("ON", "kitchencounter")),
        ("stove", 1, None),
        ("dishwasher", 1, None),
        ("sink", 1, None),
        ("faucet", 1, None),
        ("garbagecan", 1, None),
        ("wallshelf", 1, None),
        ("ceilinglamp", 1, None),
        ("lightswitch", 1, None),
        ("plate", 1, ("ON", "kitchencounter")),
        ("salmon", 1, ("ON", "kitchencounter")),
        ("plum", 1, ("ON", "kitchencounter")),
        ("breadslice", 1, ("ON", "kitchentable")),
        ("cupcake", 1, ("ON", "kitchentable")),
        ("mug", 1, ("ON", "kitchentable")),
        ("apple", 1, ("ON", "kitchentable")),
        ("bananas", 1, ("ON", "kitchentable")),
        ("cereal", 1, ("INSIDE", "kitchencabinet")),
        ("chips", 1, ("INSIDE", "kitchencabinet")),
        ("milk", 1, ("INSIDE", "fridge")),
        ("juice", 1, ("INSIDE", "fridge")),
        ("wineglass", 1, ("ON", "wallshelf")),
        ("waterglass", 1, ("ON", "wallshelf")),
        ("bowl", 1, ("INSIDE", "kitchencabinet")),
        ("cutleryfork", 2, ("ON", "kitchentable")),
        ("cutleryknife", 1, ("ON", "kitchentable")),
        ("fryingpan", 1, ("ON", "stove")),
        ("cookingpot", 1, ("ON", "stove")),
        ("dishbowl", 1, ("INSIDE", "dishwasher")),
        ("window", 1, None),
        ("rug", 1, None),
    ],
    "livingroom": [
        ("sofa", 1, None),
        ("coffeetable", 1, None),
        ("tvstand", 1, None),
        ("tv", 1, ("ON", "tvstand")),
        ("remotecontrol", 1, ("ON", "coffeetable")),
        ("tablelamp", 1, ("ON", "coffeetable")),
        ("floorlamp", 1, None),
        ("bookshelf", 1, None),
        ("book", 3, ("ON", "bookshelf")),
        ("pillow", 2, ("ON", "sofa")),
        ("desk", 1, None),
        ("chair", 1, None),
        ("computer", 1, ("ON", "desk")),
        ("cpuscreen", 1, ("ON", "desk")),
        ("keyboard", 1, ("ON", "desk")),
        ("mouse", 1, ("ON", "desk")),
        ("radio", 1, ("ON", "bookshelf")),
        ("candle", 1, ("ON", "coffeetable")),
        ("clock", 1, None),
        ("plant", 2, None),
        ("wallpictureframe", 2, None),
        ("curtains", 2, None),
        ("window", 1, None),
        ("powersocket", 1, None),
        ("lightswitch", 1, None),
        ("ceilinglamp", 1, None),
        ("rug", 1, None),
    ],
    "bedroom": [
        ("bed", 1, None),
        ("nightstand", 2, None),
        ("closet", 1, None),
        ("dresser", 1, None),
        ("chair", 1, None),
        ("pillow", 2, ("ON", "bed")),
        ("alarmclock", 1, ("ON", "nightstand")),
        ("cellphone", 1, ("ON", "nightstand")),
        ("hanger", 2, ("INSIDE", "closet")),
        ("clothesshirt", 1, ("INSIDE", "closet")),
        ("clothespants", 1, ("INSIDE", "dresser")),
        ("clothespile", 1, None),
        ("slippers", 1, None),
        ("wallpictureframe", 1, None),
        ("curtains", 1, None),
        ("window", 1, None),
        ("lightswitch", 1, None),
        ("ceilinglamp", 1, None),
    ],
    "bathroom": [
        ("bathroomcabinet", 1, None),
        ("bathroomcounter", 1, None),
        ("sink", 1, None),
        ("faucet", 1, None),
        ("toilet", 1, None),
        ("bathtub", 1, None),
        ("towelrack", 1, None),
        ("towel", 2, ("ON", "towelrack")),
        ("barsoap", 1, ("ON", "bathroomcounter")),
        ("toothbrush", 1, ("ON", "bathroomcounter")),
        ("toothpaste", 1, ("ON", "bathroomcounter")),
        ("hairproduct", 1, ("INSIDE", "bathroomcabinet")),
        ("facecream", 1, ("INSIDE", "bathroomcabinet")),
        ("deodorant", 1, ("ON", "bathroomcounter")),
        ("mirror", 1, None),
        ("washingmachine", 1, None),
        ("rug", 1, None),
        ("lightswitch", 1, None),
        ("ceilinglamp", 1, None),
    ],
}

# A second house: different room order, ids and furniture arrangement.
VH2_LAYOUT = {
    "livingroom": [
        ("sofa", 1, None),
        ("tvstand", 1, None),
        ("tv", 1, ("ON", "tvstand")),
        ("coffeetable", 1, None),
        ("tablelamp", 1, ("ON", "tvstand")),
        ("remotecontrol", 1, ("ON", "sofa")),
        ("bookshelf", 2, None),
        ("book", 4, ("ON", "bookshelf")),
        ("radio", 1, ("ON", "bookshelf")),
        ("pillow", 3, ("ON", "sofa")),
        ("floorlamp", 2, None),
        ("candle", 2, ("ON", "coffeetable")),
        ("newspaper", 1, ("ON", "coffeetable")),
        ("plant", 1, None),
        ("clock", 1, None),
        ("wallpictureframe", 3, None),
        ("curtains", 2, None),
        ("window", 2, None),
        ("lightswitch", 1, None),
        ("ceilinglamp", 2, None),
        ("rug", 1, None),
    ],
    "kitchen": [
        ("kitchencounter", 2, None),
        ("kitchentable", 1, None),
        ("kitchencabinet", 3, None),
        ("kitchenchair", 4, None),
        ("fridge", 1, None),
        ("stove", 1, None),
        ("microwave", 1, ("ON", "kitchencounter")),
        ("toaster", 1, ("ON", "kitchencounter")),
        ("sink", 1, None),
        ("faucet", 1, None),
        ("garbagecan", 1, None),
        ("plate", 1, ("ON", "kitchencounter")),
        ("salmon", 1, ("ON", "kitchentable")),
        ("plum", 1, ("ON", "kitchentable")),
        ("breadslice", 1, ("ON", "kitchencounter")),
        ("cupcake", 1, ("ON", "kitchencounter")),
        ("mug", 1, ("ON", "kitchencounter")),
        ("milk", 1, ("INSIDE", "fridge")),
        ("apple", 2, ("INSIDE", "fridge")),
        ("cereal", 1, ("INSIDE", "kitchencabinet")),
        ("bowl", 2, ("INSIDE", "kitchencabinet")),
        ("cutleryfork", 1, ("ON", "kitchentable")),
        ("cutleryknife", 1, ("ON", "kitchentable")),
        ("cookingpot", 1, ("ON", "stove")),
        ("wineglass", 2, ("INSIDE", "kitchencabinet")),
        ("ceilinglamp", 1, None),
        ("lightswitch", 1, None),
    ],
    "bathroom": [
        ("bathroomcabinet", 1, None),
        ("bathroomcounter", 1, None),
        ("sink", 1, None),
        ("faucet", 1, None),
        ("toilet", 1, None),
        ("bathtub", 1, None),
        ("towel", 3, ("ON", "bathroomcounter")),
        ("barsoap", 1, ("ON", "bathtub")),
        ("toothbrush", 2, ("ON", "bathroomcounter")),
        ("toothpaste", 1, ("INSIDE", "bathroomcabinet")),
        ("mirror", 1, None),
        ("lightswitch", 1, None),
        ("ceilinglamp", 1, None),
    ],
    "bedroom": [
        ("bed", 1, None),
        ("nightstand", 1, None),
        ("desk", 1, None),
        ("chair", 2, None),
        ("computer", 1, ("ON", "desk")),
        ("cpuscreen", 1, ("ON", "desk")),
        ("keyboard", 1, ("ON", "desk")),
        ("mouse", 1, ("ON", "desk")),
        ("closet", 1, None),
        ("clothesshirt", 2, ("INSIDE", "closet")),
        ("hanger", 3, ("INSIDE", "closet")),
        ("cellphone", 1, ("ON", "bed")),
        ("alarmclock", 1, ("ON", "nightstand")),
        ("slippers", 1, None),
        ("window", 1, None),
        ("curtains", 1, None),
        ("lightswitch", 1, None),
        ("ceilinglamp", 1, None),
        ("powersocket", 2, None),
    ],
}

FIXTURE_SPECS = {
    # name: (layout, first id, agent room, inert character room, seat, right hand, left hand)
    "vh1": (VH1_LAYOUT, 100, "kitchen", "livingroom", "sofa", "newspaper", "coffeecup"),
    "vh2": (VH2_LAYOUT, 200, "bedroom", "livingroom", "sofa", "newspaper", "coffeecup"),
}

# task name, goals, split
TASK_SPECS = (
    ("WatchTV", ("tv ON",), "test"),
    ("Turn off tablelamp", ("tablelamp OFF",), "test"),
    ("put the soap in the bathroomcabinet", ("barsoap INSIDE bathroomcabinet",), "test"),
    ("throw away plum", ("plum INSIDE garbagecan",), "test"),
    ("make toast", ("breadslice INSIDE toaster", "breadslice HEATED"), "test"),
    ("put the salmon in the fridge", ("salmon INSIDE fridge",), "test"),
    ("heat up the cupcake", ("cupcake INSIDE microwave", "cupcake HEATED"), "test"),
    ("set the plate on the kitchentable", ("plate ON kitchentable",), "test"),
    ("store the mug", ("mug INSIDE kitchencabinet",), "fewshot"),
    ("turn on the computer", ("computer ON",), "fewshot"),
)


def _blobs(rng: random.Random) -> tuple[dict, dict]:
    pos = [round(rng.uniform(-10, 10), 3), round(rng.uniform(0, 2), 3), round(rng.uniform(-10, 10), 3)]
    size = [round(rng.uniform(0.05, 2), 3) for _ in range(3)]
    transform = {"position": pos, "rotation": [0.0, round(rng.uniform(0, 1), 3), 0.0, 1.0], "scale": [1.0, 1.0, 1.0]}
    box = {"center": pos, "size": size}
    return transform, box


def build_fixture(name: str) -> SceneGraph:
    layout, first_id, agent_room, char_room, seat, rh, lh = FIXTURE_SPECS[name]
    rng = random.Random(name)
    nodes: dict[str, Node] = {}
    edges: list[Edge] = []
    next_id = first_id
    prefab_counts: dict[str, int] = {}

    def add(class_name: str) -> str:
        nonlocal next_id
        category, props, states = CATALOG[class_name] if class_name in CATALOG else ("Rooms", (), ())
        prefab_counts[class_name] = prefab_counts.get(class_name, 0) + 1
        transform, box = _blobs(rng)
        node_id = str(next_id)
        nodes[node_id] = Node(
            node_id,
            {
                "id": next_id,
                "category": category,
                "class_name": class_name,
                "properties": sorted(set(props)),
                "states": sorted(states),
                "prefab_name": f"{class_name.capitalize()}_{prefab_counts[class_name]:02d}",
                "obj_transform": transform,
                "bounding_box": box,
            },
        )
        next_id += 1
        return node_id

    agent = add("character")
    rooms = {room: add(room) for room in layout}
    for room, entries in layout.items():
        first_of: dict[str, str] = {}
        for class_name, count, placement in entries:
            for _ in range(count):
                node_id = add(class_name)
                first_of.setdefault(class_name, node_id)
                edges.append(Edge(node_id, rooms[room], "INSIDE"))
                if placement is not None:
                    rel, host = placement
                    host_id = first_of[host]
                    edges.append(Edge(node_id, host_id, rel))
                    edges.append(Edge(node_id, host_id, "CLOSE"))
                    edges.append(Edge(host_id, node_id, "CLOSE"))
        for left, right in (("sofa", "tv"), ("chair", "computer"), ("sofa", "tvstand")):
            if left in first_of and right in first_of:
                edges.append(Edge(first_of[left], first_of[right], "FACING"))

    room_ids = list(rooms.values())
    for a, b in zip(room_ids, room_ids[1:]):
        door = add("door")
        edges.append(Edge(door, a, "INSIDE"))
        edges.append(Edge(door, a, "BETWEEN"))
        edges.append(Edge(door, b, "BETWEEN"))

    edges.append(Edge(agent, rooms[agent_room], "INSIDE"))
    other = add("character")
    edges.append(Edge(other, rooms[char_room], "INSIDE"))
    seat_id = next(
        i for i, n in nodes.items() if n.attrs["class_name"] == seat and Edge(i, rooms[char_room], "INSIDE") in edges
    )
    edges += [Edge(other, seat_id, "SITTING"), Edge(other, seat_id, "CLOSE"), Edge(seat_id, other, "CLOSE")]
    for hand, cls in (("HOLDS_RH", rh), ("HOLD_LH", lh)):
        edges.append(Edge(other, add(cls), hand))
    return SceneGraph("household", nodes, tuple(edges), None)


def reference_plan(graph: SceneGraph, goals: tuple[GoalPredicate, ...]) -> list[str]:
    """Golden plan from the initial graph, using the lowest-id object of each class."""

    def lookup(class_name: str) -> tuple[int, list[str], list[str]]:
        node = min((n for n in graph if n.attrs["class_name"] == class_name), key=lambda n: n.attrs["id"])
        return node.attrs["id"], node.attrs["properties"], node.attrs["states"]

    return plan_for_goals(goals, lookup)


def build_tasks(name: str) -> list[HouseholdTask]:
    graph = build_fixture(name)
    tasks = []
    for task_name, goal_texts, split in TASK_SPECS:
        goals = tuple(GoalPredicate.parse(t) for t in goal_texts)
        plan = reference_plan(graph, goals)
        if not grade_plan(graph, plan, goals).success:
            raise AssertionError(f"{name}: golden plan for {task_name!r} does not reach its goals")
        tasks.append(HouseholdTask(task_name, household_instruction(task_name, goals), goals, split, tuple(plan)))
    return tasks


def fixture_bytes(name: str) -> tuple[bytes, bytes]:
    graph = save_graph(build_fixture(name))
    tasks = json.dumps([t.to_dict() for t in build_tasks(name)], indent=1, sort_keys=True).encode() + b"\n"
    return graph, tasks


def write_fixtures(directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for name in FIXTURE_SPECS:
        graph, tasks = fixture_bytes(name)
        (directory / f"{name}.json").write_bytes(graph)
        (directory / f"{name}_tasks.json").write_bytes(tasks)


if __name__ == "__main__":
    write_fixtures(Path(__file__).resolve().parent.parent / "data" / "household")
