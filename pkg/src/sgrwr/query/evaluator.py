"""Evaluation of parsed queries against a scene graph."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..scene_graph import Node, SceneGraph, format_attrs, reasoning_attrs
from .ast import (
    Attrs,
    Count,
    CountBy,
    CountStage,
    Edges,
    Filter,
    InRoom,
    Inside,
    Neighbors,
    Nodes,
    Pipe,
    Project,
    Query,
    Where,
    to_source,
)

ROW_CAP = 512


@dataclass(frozen=True)
class Row:
    id: str
    attrs: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RetrievalResult:
    kind: str  # nodes | edges | groups | scalar
    rows: tuple[Row, ...] = ()
    scalar: int | None = None
    source_query: str = ""
    truncated: bool = False

    def render(self) -> str:
        """Plain-text form handed to the Verifier. Never includes the query source."""
        if self.kind == "scalar":
            return f"count = {self.scalar}"
        if not self.rows:
            return "(no results)"
        if self.kind == "edges":
            lines = [f"- {row.id}" for row in self.rows]
        else:
            lines = [
                f"- {row.id}: {format_attrs(row.attrs, first='type')}" if row.attrs else f"- {row.id}"
                for row in self.rows
            ]
        if self.truncated:
            lines.append(f"(truncated to the first {ROW_CAP} rows)")
        return "\n".join(lines)


def matches(actual: Any, wanted: Any) -> bool:
    """Typed equality; a scalar also matches a list attribute that contains it."""
    if isinstance(actual, list):
        return any(matches(item, wanted) for item in actual)
    return type(actual) is type(wanted) and actual == wanted


def _node_row(node: Node) -> Row:
    return Row(node.id, reasoning_attrs(node))


def _edge_row_id(edge) -> str:
    return f"{edge.source} -[{edge.relationship}]-> {edge.target}"


def _is_containment(rel: str) -> bool:
    return rel.lower() == "inside"


def _containers(graph: SceneGraph, node_id: str) -> set[str]:
    """Every node reachable from ``node_id`` by following containment edges outward."""
    seen: set[str] = set()
    frontier = [node_id]
    while frontier:
        current = frontier.pop()
        for edge in graph.out_edges(current):
            if _is_containment(edge.relationship) and edge.target not in seen:
                seen.add(edge.target)
                frontier.append(edge.target)
    return seen


def _filter_rows(rows: list[Row], filters: tuple[Filter, ...]) -> list[Row]:
    return [r for r in rows if all(f.name in r.attrs and matches(r.attrs[f.name], f.value) for f in filters)]


class _Evaluator:
    def __init__(self, graph: SceneGraph):
        self.graph = graph

    def run(self, query: Query) -> tuple[str, list[Row], int | None]:
        match query:
            case Nodes(filters):
                rows = [
                    _node_row(n)
                    for n in self.graph
                    if all(f.name in n.attrs and matches(n.attrs[f.name], f.value) for f in filters)
                ]
                return "nodes", rows, None
            case Edges(filters):
                wanted = {f.name: f.value for f in filters}
                rows = {}
                for e in self.graph.edges:
                    fields = {"from": e.source, "rel": e.relationship, "to": e.target}
                    if all(matches(fields[k], v) for k, v in wanted.items()):
                        rows[_edge_row_id(e)] = Row(
                            _edge_row_id(e), {"from": e.source, "relationship": e.relationship, "to": e.target}
                        )
                return "edges", list(rows.values()), None
            case Neighbors(node_id, via):
                ids = self.graph.neighbors(node_id, via)
                return "nodes", [_node_row(self.graph.nodes[i]) for i in ids], None
            case Attrs(node_id, fields):
                row = _node_row(self.graph.node(node_id))
                if fields:
                    row = Row(row.id, {k: row.attrs[k] for k in fields if k in row.attrs})
                return "nodes", [row], None
            case Count(inner):
                _, rows, _ = self.run(inner)
                return "scalar", [], len(rows)
            case Pipe(source, stages):
                kind, rows, scalar = self.run(source)
                for stage in stages:
                    kind, rows, scalar = self.stage(stage, kind, rows)
                return kind, rows, scalar
        raise TypeError(f"not a query: {query!r}")

    def stage(self, stage, kind: str, rows: list[Row]) -> tuple[str, list[Row], int | None]:
        match stage:
            case InRoom(node_id):
                self.graph.node(node_id)
                return kind, [r for r in rows if node_id in _containers(self.graph, r.id)], None
            case Inside(node_id):
                self.graph.node(node_id)
                direct = {
                    e.source
                    for e in self.graph.in_edges(node_id)
                    if _is_containment(e.relationship)
                }
                return kind, [r for r in rows if r.id in direct], None
            case Where(filters):
                if kind == "edges":
                    renamed = tuple(Filter("relationship" if f.name == "rel" else f.name, f.value) for f in filters)
                    return kind, _filter_rows(rows, renamed), None
                return kind, _filter_rows(rows, filters), None
            case CountStage():
                return "scalar", [], len(rows)
            case Project(fields):
                return kind, [Row(r.id, {k: r.attrs[k] for k in fields if k in r.attrs}) for r in rows], None
            case CountBy(rel):
                counts: dict[str, int] = {}
                for r in rows:
                    for target in sorted({e.target for e in self.graph.out_edges(r.id, rel)}):
                        counts[target] = counts.get(target, 0) + 1
                return "groups", [Row(t, {"count": n}) for t, n in counts.items()], None
        raise TypeError(f"not a stage: {stage!r}")


def evaluate(query: Query, graph: SceneGraph) -> RetrievalResult:
    """Run ``query`` on ``graph``. Unknown node ids raise :class:`NodeNotFound`."""
    kind, rows, scalar = _Evaluator(graph).run(query)
    source = to_source(query)
    if kind == "scalar":
        return RetrievalResult("scalar", (), scalar, source, False)
    rows = sorted(rows, key=lambda r: r.id)
    truncated = len(rows) > ROW_CAP
    return RetrievalResult(kind, tuple(rows[:ROW_CAP]), None, source, truncated)
