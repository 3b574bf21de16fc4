"""Fixed-capacity graph APIs used by the ReAct-style baselines.

``expand`` is the curated one-hop view; ``get_neighbors`` and ``get_attrs``
split it into two weaker calls, so ``expand(x)`` carries exactly the
information of ``get_attrs(x)`` plus ``get_attrs(n)`` for every
``n in get_neighbors(x)``.
"""

from __future__ import annotations

from typing import Any

from ..scene_graph import SceneGraph, format_attrs, reasoning_attrs
from .evaluator import RetrievalResult, Row


def get_neighbors(graph: SceneGraph, node_id: str) -> list[str]:
    return graph.neighbors(node_id)


def get_attrs(graph: SceneGraph, node_id: str) -> dict[str, Any]:
    return reasoning_attrs(graph.node(node_id))


def expand(graph: SceneGraph, node_id: str) -> RetrievalResult:
    ids = sorted({node_id, *get_neighbors(graph, node_id)})
    rows = tuple(Row(i, get_attrs(graph, i)) for i in ids)
    return RetrievalResult("nodes", rows, None, f'expand("{node_id}")', False)


def render_neighbors(ids: list[str]) -> str:
    return "neighbors: " + (", ".join(ids) if ids else "(none)")


def render_attrs(node_id: str, attrs: dict[str, Any]) -> str:
    return f"{node_id}: {format_attrs(attrs, first='type')}"
