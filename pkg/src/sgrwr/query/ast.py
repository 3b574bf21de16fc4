"""Query AST nodes and the canonical source printer."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

Value = Union[str, int, bool]


@dataclass(frozen=True)
class Filter:
    name: str
    value: Value


# primaries


@dataclass(frozen=True)
class Nodes:
    filters: tuple[Filter, ...] = ()


@dataclass(frozen=True)
class Edges:
    filters: tuple[Filter, ...] = ()


@dataclass(frozen=True)
class Neighbors:
    node_id: str
    via: str | None = None


@dataclass(frozen=True)
class Attrs:
    node_id: str
    fields: tuple[str, ...] = ()


@dataclass(frozen=True)
class Count:
    inner: "Query"


# stages


@dataclass(frozen=True)
class InRoom:
    node_id: str


@dataclass(frozen=True)
class Inside:
    node_id: str


@dataclass(frozen=True)
class Where:
    filters: tuple[Filter, ...]


@dataclass(frozen=True)
class CountStage:
    pass


@dataclass(frozen=True)
class Project:
    fields: tuple[str, ...]


@dataclass(frozen=True)
class CountBy:
    relationship: str


Primary = Union[Nodes, Edges, Neighbors, Attrs, Count]
Stage = Union[InRoom, Inside, Where, CountStage, Project, CountBy]


@dataclass(frozen=True)
class Pipe:
    source: Primary
    stages: tuple[Stage, ...]


Query = Union[Primary, Pipe]


def _value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return json.dumps(v, ensure_ascii=False)


def _filters(filters: tuple[Filter, ...]) -> str:
    return ", ".join(f"{f.name}={_value(f.value)}" for f in filters)


def to_source(node: Query | Stage) -> str:
    """Render an AST back to query text that parses to an equal AST."""
    match node:
        case Nodes(filters):
            return f"nodes({_filters(filters)})"
        case Edges(filters):
            return f"edges({_filters(filters)})"
        case Neighbors(node_id, None):
            return f"neighbors({_value(node_id)})"
        case Neighbors(node_id, via):
            return f"neighbors({_value(node_id)}, via={_value(via)})"
        case Attrs(node_id, fields):
            return f"attrs({', '.join([_value(node_id), *fields])})"
        case Count(inner):
            return f"count({to_source(inner)})"
        case Pipe(source, stages):
            return " | ".join([to_source(source), *(to_source(s) for s in stages)])
        case InRoom(node_id):
            return f"in_room({_value(node_id)})"
        case Inside(node_id):
            return f"inside({_value(node_id)})"
        case Where(filters):
            return f"where({_filters(filters)})"
        case CountStage():
            return "count()"
        case Project(fields):
            return f"project({', '.join(fields)})"
        case CountBy(rel):
            return f"count_by({_value(rel)})"
    raise TypeError(f"not a query node: {node!r}")


def depth(node: Query | Stage) -> int:
    match node:
        case Count(inner):
            return 1 + depth(inner)
        case Pipe(source, stages):
            return 1 + max([depth(source), *(depth(s) for s in stages)])
    return 1
