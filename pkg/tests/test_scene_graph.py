import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_babyai_doc, random_household_doc
from sgrwr.envs.babyai import BABYAI_SCHEMA, NODE_TYPES
from sgrwr.envs.household import HOUSEHOLD_SCHEMA, RELATIONSHIPS
from sgrwr.scene_graph import (
    GraphFormatError,
    GraphParseError,
    GraphValidationError,
    Schema,
    Violation,
    canonical,
    format_attrs,
    graph_from_dict,
    graph_to_dict,
    load_graph,
    load_schema,
    parse_attrs,
    render_schema,
    save_graph,
    save_schema,
    textualize,
    validate,
)


def test_g0_shape(g0):
    assert len(g0.nodes) == 8
    assert len(g0.edges) == 8
    assert g0.root_id == "root"
    assert validate(g0, BABYAI_SCHEMA) == []
    assert sorted(e.target for e in g0.out_edges("door_1", "connects")) == ["room_A", "room_B"]


def test_g0_round_trip_is_byte_identical(g0):
    from importlib import resources

    raw = resources.files("sgrwr").joinpath("data/g0.json").read_bytes()
    assert save_graph(load_graph(raw)) == canonical(raw) == raw


def test_door_without_is_locked(g0):
    doc = graph_to_dict(g0)
    for node in doc["nodes"]:
        if node["id"] == "door_1":
            del node["is_locked"]
    assert validate(graph_from_dict(doc), BABYAI_SCHEMA) == [Violation("door_1", "missing attr is_locked")]


def test_household_unknown_relationship():
    doc = random_household_doc(random.Random(3))
    ids = [n["id"] for n in doc["nodes"]]
    doc["edges"] = [{"from": ids[0], "to": ids[-1], "relationship": "NEXT_TO"}]
    violations = validate(graph_from_dict(doc), HOUSEHOLD_SCHEMA)
    assert len(violations) == 1
    assert "unknown relationship NEXT_TO" in violations[0].rule


def test_door_needs_two_connects_edges(g0):
    doc = graph_to_dict(g0)
    doc["edges"] = [e for e in doc["edges"] if not (e["from"] == "door_1" and e["to"] == "room_B")]
    assert any("connects" in v.rule for v in validate(graph_from_dict(doc), BABYAI_SCHEMA))


def test_empty_object_is_a_format_error():
    with pytest.raises(GraphFormatError, match="nodes"):
        load_graph(b"{}")


def test_malformed_json_reports_byte_offset():
    with pytest.raises(GraphParseError) as err:
        load_graph(b'{"nodes": [1, 2,, 3]}')
    assert err.value.offset == 16


def test_offset_counts_bytes_not_characters():
    with pytest.raises(GraphParseError) as err:
        load_graph('{"é": ]}'.encode())
    assert err.value.offset == len('{"é": '.encode())


def test_edge_to_missing_node_is_rejected():
    doc = {"profile": "babyai", "nodes": [{"id": "root", "type": "root"}], "edges": [{"from": "x", "to": "root", "relationship": "inside"}]}
    with pytest.raises(GraphFormatError, match="missing node"):
        graph_from_dict(doc)


def test_unknown_profile():
    with pytest.raises(GraphFormatError, match="profile"):
        graph_from_dict({"profile": "minecraft", "nodes": [], "edges": []})


def test_textualize_g0(g0):
    text = textualize(g0, BABYAI_SCHEMA)
    lines = text.splitlines()
    assert len(lines) == 16
    assert lines[0].startswith("agent_0: ")
    assert all(" -[" in line for line in lines[8:])
    assert text == textualize(g0, BABYAI_SCHEMA)
    assert 'door_1: type="door", color="yellow", coordinate=[4, 2], is_locked=true' in lines


def test_textualize_single_room():
    doc = {"profile": "babyai", "nodes": [{"id": "root", "type": "root"}], "edges": []}
    assert textualize(graph_from_dict(doc), BABYAI_SCHEMA) == 'root: type="root"'


def test_textualize_refuses_invalid_graph(g0):
    doc = graph_to_dict(g0)
    doc["nodes"][0]["colour"] = "red"
    with pytest.raises(GraphValidationError):
        textualize(graph_from_dict(doc), BABYAI_SCHEMA)


def test_textualize_drops_blobs():
    doc = random_household_doc(random.Random(5))
    text = textualize(graph_from_dict(doc), HOUSEHOLD_SCHEMA)
    assert "obj_transform" not in text and "position" not in text


def test_render_schema_mentions_every_type_and_relationship():
    grid = render_schema(BABYAI_SCHEMA)
    for name in NODE_TYPES:
        assert f"- {name}" in grid
    household = render_schema(HOUSEHOLD_SCHEMA)
    for rel in RELATIONSHIPS:
        assert f"- {rel}:" in household
    assert render_schema(BABYAI_SCHEMA) == grid


def test_render_empty_schema_is_preamble_only():
    assert render_schema(Schema("babyai", prose_preamble="Just words.")) == "Just words."


def test_schema_json_round_trip():
    for schema in (BABYAI_SCHEMA, HOUSEHOLD_SCHEMA):
        assert load_schema(save_schema(schema)) == schema


def test_attrs_text_round_trip():
    attrs = {"type": "door", "color": "red", "coordinate": [1, 2], "is_locked": False, "states": ["ON"]}
    assert parse_attrs(format_attrs(attrs)) == attrs


def _random_doc(seed: int) -> dict:
    rng = random.Random(seed)
    return random_babyai_doc(rng) if seed % 2 else random_household_doc(rng)


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 10**9))
def test_save_load_round_trip(seed):
    doc = _random_doc(seed)
    graph = graph_from_dict(doc)
    data = save_graph(graph)
    assert data == canonical(json.dumps(doc))
    assert save_graph(load_graph(data)) == data
    assert load_graph(data) == graph


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.data())
def test_textualize_sees_every_attribute_change(seed, data):
    doc = random_babyai_doc(random.Random(seed))
    graph = graph_from_dict(doc)
    node = data.draw(st.sampled_from([n for n in doc["nodes"] if n["type"] != "root"]))
    key = data.draw(st.sampled_from(sorted(k for k in node if k not in ("id", "type"))))
    value = node[key]
    if isinstance(value, bool):
        node[key] = not value
    elif isinstance(value, list):
        node[key] = [value[0] + 1, *value[1:]]
    else:
        node[key] = value + "x"
    assert textualize(graph_from_dict(doc), BABYAI_SCHEMA) != textualize(graph, BABYAI_SCHEMA)
