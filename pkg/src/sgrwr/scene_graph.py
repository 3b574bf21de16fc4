"""Attributed scene graphs, their schemas, and their text forms.

A :class:`SceneGraph` is immutable once built. Agents never see it directly;
they are prompted with the rendered :class:`Schema` and reach instance data
only through retrieval.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping

PROFILES = ("babyai", "household")
VALUE_KINDS = ("str", "int", "int_list", "bool", "str_list", "blob")


class NodeNotFound(KeyError):
    def __init__(self, node_id: str):
        super().__init__(node_id)
        self.node_id = node_id

    def __str__(self) -> str:
        return f"node {self.node_id!r} not found"


class GraphLoadError(ValueError):
    pass


class GraphParseError(GraphLoadError):
    """Malformed JSON. ``offset`` is a byte offset into the input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class GraphFormatError(GraphLoadError):
    """Well-formed JSON that is not a graph document of a known profile."""


class GraphValidationError(ValueError):
    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        shown = "; ".join(str(v) for v in violations[:5])
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        super().__init__(f"graph does not conform to schema: {shown}{more}")


def kind_of(value: Any) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, str):
        return "str"
    if isinstance(value, list):
        if value and all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            return "int_list"
        if value and all(isinstance(v, str) for v in value):
            return "str_list"
        if not value:
            return "str_list"
    return "blob"


def value_matches(kind: str, value: Any) -> bool:
    if kind == "blob":
        return True
    actual = kind_of(value)
    if actual == kind:
        return True
    # an empty list is a valid value of either list kind
    return kind in ("int_list", "str_list") and value == []


@dataclass(frozen=True)
class Node:
    id: str
    attrs: Mapping[str, Any]

    def get(self, name: str, default: Any = None) -> Any:
        return self.attrs.get(name, default)


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    relationship: str

    def to_dict(self) -> dict:
        return {"from": self.source, "to": self.target, "relationship": self.relationship}


@dataclass
class SceneGraph:
    profile: str
    nodes: dict[str, Node]
    edges: tuple[Edge, ...] = ()
    root_id: str | None = None
    _adjacency: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.edges = tuple(self.edges)
        for node_id, node in self.nodes.items():
            if not isinstance(node_id, str) or not node_id:
                raise GraphFormatError(f"node ids must be non-empty strings, got {node_id!r}")
            if node.id != node_id:
                raise GraphFormatError(f"node keyed {node_id!r} carries id {node.id!r}")
        for edge in self.edges:
            for end in (edge.source, edge.target):
                if end not in self.nodes:
                    raise GraphFormatError(
                        f"edge {edge.source}-[{edge.relationship}]->{edge.target} "
                        f"references missing node {end!r}"
                    )
        if self.root_id is not None and self.root_id not in self.nodes:
            raise GraphFormatError(f"root {self.root_id!r} is not a node")
        adjacency: dict[str, list[tuple[str, str, Edge]]] = defaultdict(list)
        for edge in self.edges:
            adjacency[edge.source].append((edge.target, edge.relationship, edge))
            adjacency[edge.target].append((edge.source, edge.relationship, edge))
        self._adjacency = dict(adjacency)

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise NodeNotFound(node_id) from None

    def neighbors(self, node_id: str, relationship: str | None = None) -> list[str]:
        """Sorted ids adjacent to ``node_id``, ignoring edge direction."""
        self.node(node_id)
        found = {
            other
            for other, rel, _ in self._adjacency.get(node_id, ())
            if relationship is None or rel == relationship
        }
        return sorted(found)

    def out_edges(self, node_id: str, relationship: str | None = None) -> list[Edge]:
        return [
            e
            for _, _, e in self._adjacency.get(node_id, ())
            if e.source == node_id and (relationship is None or e.relationship == relationship)
        ]

    def in_edges(self, node_id: str, relationship: str | None = None) -> list[Edge]:
        return [
            e
            for _, _, e in self._adjacency.get(node_id, ())
            if e.target == node_id and (relationship is None or e.relationship == relationship)
        ]

    def __iter__(self) -> Iterator[Node]:
        return iter(self.nodes.values())

    def __len__(self) -> int:
        return len(self.nodes)


# -- schema -------------------------------------------------------------------


@dataclass(frozen=True)
class AttrSpec:
    name: str
    kind: str
    semantics: str
    required: bool = True

    def __post_init__(self) -> None:
        if self.kind not in VALUE_KINDS:
            raise ValueError(f"unknown value kind {self.kind!r}")


@dataclass(frozen=True)
class NodeTypeSpec:
    type_name: str
    attrs: tuple[AttrSpec, ...]
    semantics: str = ""
    # outgoing relationship -> exact number of such edges every node of this type has
    edge_counts: tuple[tuple[str, int], ...] = ()

    def attr(self, name: str) -> AttrSpec | None:
        for spec in self.attrs:
            if spec.name == name:
                return spec
        return None


@dataclass(frozen=True)
class EdgeTypeSpec:
    relationship: str
    semantics: str
    # allowed (from_type, to_type) pairs; empty means unconstrained
    endpoints: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Schema:
    profile_name: str
    node_types: tuple[NodeTypeSpec, ...] = ()
    edge_types: tuple[EdgeTypeSpec, ...] = ()
    prose_preamble: str = ""
    # attribute holding the node type; None means every node has the single node type
    type_attr: str | None = None

    def node_type(self, name: str) -> NodeTypeSpec | None:
        for spec in self.node_types:
            if spec.type_name == name:
                return spec
        return None

    def edge_type(self, relationship: str) -> EdgeTypeSpec | None:
        for spec in self.edge_types:
            if spec.relationship == relationship:
                return spec
        return None

    def type_of(self, node: Node) -> str | None:
        if self.type_attr is None:
            return self.node_types[0].type_name if self.node_types else None
        value = node.attrs.get(self.type_attr)
        return value if isinstance(value, str) else None

    def attribute_names(self) -> list[str]:
        names = {a.name for t in self.node_types for a in t.attrs}
        return sorted(names)

    def relationships(self) -> list[str]:
        return [e.relationship for e in self.edge_types]

    def attr_kind(self, name: str) -> str | None:
        for t in self.node_types:
            spec = t.attr(name)
            if spec is not None:
                return spec.kind
        return None

    def to_dict(self) -> dict:
        return {
            "profile_name": self.profile_name,
            "type_attr": self.type_attr,
            "prose_preamble": self.prose_preamble,
            "node_types": [
                {
                    "type_name": t.type_name,
                    "semantics": t.semantics,
                    "edge_counts": dict(t.edge_counts),
                    "attributes": [
                        {"name": a.name, "kind": a.kind, "semantics": a.semantics, "required": a.required}
                        for a in t.attrs
                    ],
                }
                for t in self.node_types
            ],
            "edge_types": [
                {
                    "relationship": e.relationship,
                    "semantics": e.semantics,
                    "endpoints": [list(p) for p in e.endpoints],
                }
                for e in self.edge_types
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Schema":
        node_types = tuple(
            NodeTypeSpec(
                type_name=t["type_name"],
                semantics=t.get("semantics", ""),
                edge_counts=tuple(sorted(t.get("edge_counts", {}).items())),
                attrs=tuple(
                    AttrSpec(a["name"], a["kind"], a.get("semantics", ""), a.get("required", True))
                    for a in t.get("attributes", ())
                ),
            )
            for t in data.get("node_types", ())
        )
        edge_types = tuple(
            EdgeTypeSpec(
                relationship=e["relationship"],
                semantics=e.get("semantics", ""),
                endpoints=tuple(tuple(p) for p in e.get("endpoints", ())),
            )
            for e in data.get("edge_types", ())
        )
        return cls(
            profile_name=data["profile_name"],
            node_types=node_types,
            edge_types=edge_types,
            prose_preamble=data.get("prose_preamble", ""),
            type_attr=data.get("type_attr"),
        )


@dataclass(frozen=True)
class Violation:
    subject: str
    rule: str

    def __str__(self) -> str:
        return f"{self.subject}: {self.rule}"


def edge_label(edge: Edge) -> str:
    return f"{edge.source}-[{edge.relationship}]->{edge.target}"


def validate(graph: SceneGraph, schema: Schema) -> list[Violation]:
    """Return every way ``graph`` fails to conform to ``schema``; empty if it conforms."""
    out: list[Violation] = []
    if graph.profile != schema.profile_name:
        out.append(Violation("graph", f"profile {graph.profile!r} does not match schema {schema.profile_name!r}"))

    if schema.node_type("root") is not None:
        if graph.root_id is None:
            out.append(Violation("graph", "missing root node"))
        elif schema.type_of(graph.nodes[graph.root_id]) != "root":
            out.append(Violation(graph.root_id, "root node must have type root"))

    types: dict[str, str | None] = {}
    for node in graph:
        type_name = schema.type_of(node)
        spec = schema.node_type(type_name) if type_name is not None else None
        types[node.id] = type_name if spec is not None else None
        if spec is None:
            out.append(Violation(node.id, f"unknown node type {node.attrs.get(schema.type_attr)!r}"))
            continue
        for attr in spec.attrs:
            if attr.name not in node.attrs:
                if attr.required:
                    out.append(Violation(node.id, f"missing attr {attr.name}"))
            elif not value_matches(attr.kind, node.attrs[attr.name]):
                out.append(Violation(node.id, f"attr {attr.name} must be {attr.kind}"))
        for name in sorted(node.attrs):
            if spec.attr(name) is None:
                out.append(Violation(node.id, f"unknown attr {name} for type {type_name}"))
        for rel, expected in spec.edge_counts:
            actual = len(graph.out_edges(node.id, rel))
            if actual != expected:
                out.append(Violation(node.id, f"needs exactly {expected} {rel} edges, has {actual}"))

    for edge in graph.edges:
        spec = schema.edge_type(edge.relationship)
        if spec is None:
            out.append(Violation(edge_label(edge), f"unknown relationship {edge.relationship}"))
            continue
        if spec.endpoints:
            pair = (types.get(edge.source), types.get(edge.target))
            if None not in pair and pair not in spec.endpoints:
                out.append(
                    Violation(edge_label(edge), f"{edge.relationship} cannot link {pair[0]} to {pair[1]}")
                )
    return out


# -- JSON ---------------------------------------------------------------------


def canonical_json(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def canonical(data: bytes | str) -> bytes:
    """Canonical byte form of a JSON document: sorted keys, no insignificant whitespace."""
    return canonical_json(_decode_json(data))


def _decode_json(data: bytes | str) -> Any:
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GraphParseError(f"invalid UTF-8: {exc.reason}", exc.start) from None
    else:
        text = data
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise GraphParseError(exc.msg, offset) from None


def graph_from_dict(doc: Any) -> SceneGraph:
    if not isinstance(doc, dict):
        raise GraphFormatError("graph document must be a JSON object")
    for key in ("nodes", "edges", "profile"):
        if key not in doc:
            raise GraphFormatError(f"graph document missing {key!r}")
    extra = set(doc) - {"profile", "nodes", "edges"}
    if extra:
        raise GraphFormatError(f"unexpected top-level keys {sorted(extra)}")
    profile = doc["profile"]
    if profile not in PROFILES:
        raise GraphFormatError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    if not isinstance(doc["nodes"], list) or not isinstance(doc["edges"], list):
        raise GraphFormatError("'nodes' and 'edges' must be arrays")

    nodes: dict[str, Node] = {}
    for i, raw in enumerate(doc["nodes"]):
        if not isinstance(raw, dict) or "id" not in raw:
            raise GraphFormatError(f"nodes[{i}] must be an object with an 'id'")
        raw_id = raw["id"]
        attrs = dict(raw)
        if isinstance(raw_id, bool) or not isinstance(raw_id, (str, int)):
            raise GraphFormatError(f"nodes[{i}].id must be a string or integer")
        if isinstance(raw_id, int):
            node_id = str(raw_id)  # integer ids stay in attrs, household style
        else:
            node_id = raw_id
            del attrs["id"]
        if node_id in nodes:
            raise GraphFormatError(f"duplicate node id {node_id!r}")
        nodes[node_id] = Node(node_id, attrs)

    edges = []
    for i, raw in enumerate(doc["edges"]):
        if not isinstance(raw, dict) or set(raw) != {"from", "to", "relationship"}:
            raise GraphFormatError(f"edges[{i}] must have exactly 'from', 'to', 'relationship'")
        for end in ("from", "to"):
            value = raw[end]
            node = nodes.get(str(value)) if isinstance(value, (str, int)) and not isinstance(value, bool) else None
            if node is None:
                raise GraphFormatError(f"edges[{i}].{end} references missing node {value!r}")
            if isinstance(value, int) != ("id" in node.attrs):
                raise GraphFormatError(f"edges[{i}].{end} must use the same id type as its node")
        source, target = str(raw["from"]), str(raw["to"])
        if not isinstance(raw["relationship"], str):
            raise GraphFormatError(f"edges[{i}].relationship must be a string")
        edges.append(Edge(source, target, raw["relationship"]))

    root_id = None
    if profile == "babyai":
        root_id = next((n.id for n in nodes.values() if n.attrs.get("type") == "root"), None)
    return SceneGraph(profile, nodes, tuple(edges), root_id)


def graph_to_dict(graph: SceneGraph) -> dict:
    nodes = []
    for node in graph.nodes.values():
        entry = dict(node.attrs)
        if "id" not in entry:
            entry["id"] = node.id
        nodes.append(entry)
    def ref(node_id: str) -> str | int:
        attrs = graph.nodes[node_id].attrs
        return attrs["id"] if "id" in attrs else node_id

    edges = [{"from": ref(e.source), "to": ref(e.target), "relationship": e.relationship} for e in graph.edges]
    return {"profile": graph.profile, "nodes": nodes, "edges": edges}


def load_graph(data: bytes | str) -> SceneGraph:
    return graph_from_dict(_decode_json(data))


def save_graph(graph: SceneGraph) -> bytes:
    return canonical_json(graph_to_dict(graph))


def load_schema(data: bytes | str) -> Schema:
    return Schema.from_dict(_decode_json(data))


def save_schema(schema: Schema) -> bytes:
    return canonical_json(schema.to_dict())


# -- text forms ---------------------------------------------------------------


def format_value(value: Any) -> str:
    return json.dumps(value, ensure_ascii=False)


def format_attrs(attrs: Mapping[str, Any], first: str | None = None) -> str:
    keys = sorted(attrs)
    if first is not None and first in attrs:
        keys.remove(first)
        keys.insert(0, first)
    return ", ".join(f"{k}={format_value(attrs[k])}" for k in keys)


def parse_attrs(text: str) -> dict[str, Any]:
    """Inverse of :func:`format_attrs`."""
    decoder = json.JSONDecoder()
    attrs: dict[str, Any] = {}
    pos = 0
    text = text.strip()
    while pos < len(text):
        eq = text.find("=", pos)
        if eq < 0:
            raise ValueError(f"expected key=value at column {pos}")
        key = text[pos:eq].strip()
        value, end = decoder.raw_decode(text, eq + 1)
        attrs[key] = value
        pos = end
        if text.startswith(", ", pos):
            pos += 2
        elif pos < len(text):
            raise ValueError(f"expected ', ' at column {pos}")
    return attrs


def reasoning_attrs(node: Node, schema: Schema | None = None) -> dict[str, Any]:
    """Attributes worth showing to a language model; opaque blobs are dropped."""
    out = {}
    for name, value in node.attrs.items():
        kind = schema.attr_kind(name) if schema is not None else None
        if kind == "blob" or (kind is None and kind_of(value) == "blob"):
            continue
        out[name] = value
    return out


def textualize(graph: SceneGraph, schema: Schema) -> str:
    """Full line-oriented listing of the graph: node lines by id, then edge lines."""
    violations = validate(graph, schema)
    if violations:
        raise GraphValidationError(violations)
    lines = [
        f"{node_id}: {format_attrs(reasoning_attrs(graph.nodes[node_id], schema), first=schema.type_attr)}"
        for node_id in sorted(graph.nodes)
    ]
    for edge in sorted(graph.edges, key=lambda e: (e.source, e.relationship, e.target)):
        lines.append(f"{edge.source} -[{edge.relationship}]-> {edge.target}")
    return "\n".join(lines)


def render_schema(schema: Schema) -> str:
    parts = [schema.prose_preamble.strip()] if schema.prose_preamble.strip() else []
    if schema.node_types:
        lines = ["Node types:"]
        for t in schema.node_types:
            lines.append(f"- {t.type_name}: {t.semantics}" if t.semantics else f"- {t.type_name}")
            for a in t.attrs:
                optional = ", optional" if not a.required else ""
                lines.append(f"    {a.name} ({a.kind}{optional}): {a.semantics}")
            for rel, count in t.edge_counts:
                lines.append(f"    has exactly {count} outgoing {rel} edges")
        parts.append("\n".join(lines))
    if schema.edge_types:
        lines = ["Edge relationships (stored from -> to):"]
        for e in schema.edge_types:
            lines.append(f"- {e.relationship}: {e.semantics}")
        parts.append("\n".join(lines))
    return "\n\n".join(parts)


def node_lines(nodes: Iterable[Node], schema: Schema) -> list[str]:
    return [f"{n.id}: {format_attrs(reasoning_attrs(n, schema), first=schema.type_attr)}" for n in nodes]
