from .api import expand, get_attrs, get_neighbors
from .ast import Query, to_source
from .evaluator import ROW_CAP, RetrievalResult, Row, evaluate, matches
from .parser import (
    GRAMMAR,
    MAX_DEPTH,
    QueryError,
    QuerySyntaxError,
    QueryTypeError,
    UnknownAttributeError,
    parse,
)

__all__ = [
    "GRAMMAR",
    "MAX_DEPTH",
    "ROW_CAP",
    "Query",
    "QueryError",
    "QuerySyntaxError",
    "QueryTypeError",
    "RetrievalResult",
    "Row",
    "UnknownAttributeError",
    "evaluate",
    "expand",
    "get_attrs",
    "get_neighbors",
    "matches",
    "parse",
    "to_source",
]
