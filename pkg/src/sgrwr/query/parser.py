"""Recursive-descent parser for the scene-graph query language (sgq).

Parsing binds the query to a schema: attribute and relationship names must
exist in it, and stages must make sense for what the pipe produces so far.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..scene_graph import Schema
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
    Stage,
    Where,
    depth,
)

MAX_DEPTH = 16
EDGE_FILTER_KEYS = ("from", "rel", "to")
GROUP_FILTER_KEYS = ("count",)

GRAMMAR = """\
query     := pipe
pipe      := primary { "|" stage }
primary   := "nodes" "(" [filters] ")" | "edges" "(" [filters] ")"
           | "neighbors" "(" id ["," "via" "=" str] ")"
           | "attrs" "(" id ["," fieldlist] ")"
           | "count" "(" pipe ")"
stage     := "in_room" "(" id ")" | "inside" "(" id ")"
           | "where" "(" filters ")" | "count" "(" ")"
           | "project" "(" fieldlist ")" | "count_by" "(" str ")"
filters   := filter { "," filter }
filter    := ident "=" (str | int | bool)
fieldlist := ident { "," ident }
id, str   := double-quoted string; bool := true | false"""


class QueryError(ValueError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


class QuerySyntaxError(QueryError):
    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        detail = f"{message}; expected one of {', '.join(expected)}" if expected else message
        super().__init__(detail, line, column)
        self.expected = expected


class UnknownAttributeError(QueryError):
    def __init__(self, name: str, suggestion: str | None, line: int, column: int, what: str = "attribute"):
        hint = f"; did you mean {suggestion!r}?" if suggestion else ""
        super().__init__(f"unknown {what} {name!r}{hint}", line, column)
        self.name = name
        self.suggestion = suggestion


class QueryTypeError(QueryError):
    pass


def edit_distance(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def nearest(name: str, candidates: list[str], limit: int = 2) -> str | None:
    scored = sorted((edit_distance(name, c), c) for c in candidates)
    return scored[0][1] if scored and scored[0][0] <= limit else None


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT STR INT PUNCT EOF
    text: str
    value: object
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>-?[0-9]+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>[(),=|])
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            if source[pos] == '"':
                raise QuerySyntaxError("unterminated string", line, col)
            raise QuerySyntaxError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "ident":
            tokens.append(Token("IDENT", text, text, line, col))
        elif kind == "int":
            tokens.append(Token("INT", text, int(text), line, col))
        elif kind == "str":
            try:
                value = json.loads(text)
            except json.JSONDecodeError:
                raise QuerySyntaxError("invalid string escape", line, col) from None
            tokens.append(Token("STR", text, value, line, col))
        elif kind == "punct":
            tokens.append(Token("PUNCT", text, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", None, line, pos - line_start + 1))
    return tokens


PRIMARY_WORDS = ("attrs", "count", "edges", "neighbors", "nodes")
STAGE_WORDS = ("count", "count_by", "in_room", "inside", "project", "where")


class _Parser:
    def __init__(self, source: str, schema: Schema):
        self.tokens = tokenize(source)
        self.pos = 0
        self.schema = schema
        self.attributes = schema.attribute_names()
        self.relationships = schema.relationships()
        self.nesting = 0

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def fail(self, expected: tuple[str, ...] | list[str], tok: Token | None = None) -> QuerySyntaxError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        return QuerySyntaxError(f"unexpected {found}", tok.line, tok.column, tuple(expected))

    def punct(self, text: str) -> Token:
        tok = self.tok
        if tok.kind != "PUNCT" or tok.text != text:
            raise self.fail((repr(text),))
        self.pos += 1
        return tok

    def at_punct(self, text: str) -> bool:
        return self.tok.kind == "PUNCT" and self.tok.text == text

    def take(self, kind: str, what: str) -> Token:
        tok = self.tok
        if tok.kind != kind:
            raise self.fail((what,))
        self.pos += 1
        return tok

    # grammar

    def query(self) -> Query:
        q, _ = self.pipe()
        if self.tok.kind != "EOF":
            raise self.fail(("'|'", "end of input"))
        return q

    def pipe(self) -> tuple[Query, str]:
        source, kind = self.primary()
        stages: list[Stage] = []
        while self.at_punct("|"):
            bar = self.tok
            self.pos += 1
            if kind == "scalar":
                raise QueryTypeError("a count cannot be piped into further stages", bar.line, bar.column)
            stage, kind = self.stage(kind)
            stages.append(stage)
        return (Pipe(source, tuple(stages)) if stages else source), kind

    def primary(self) -> tuple[Query, str]:
        tok = self.tok
        if tok.kind != "IDENT" or tok.text not in PRIMARY_WORDS:
            raise self.fail([repr(w) for w in PRIMARY_WORDS])
        self.pos += 1
        self.punct("(")
        word = tok.text
        if word == "nodes":
            filters = self.filters_opt(self.bind_attribute)
            self.punct(")")
            return Nodes(filters), "nodes"
        if word == "edges":
            filters = self.filters_opt(self.bind_edge_key)
            self.punct(")")
            return Edges(filters), "edges"
        if word == "neighbors":
            node_id = self.take("STR", "node id string").value
            via = None
            if self.at_punct(","):
                self.pos += 1
                kw = self.tok
                if kw.kind != "IDENT" or kw.text != "via":
                    raise self.fail(("'via'",))
                self.pos += 1
                self.punct("=")
                rel_tok = self.take("STR", "relationship string")
                via = self.bind_relationship(rel_tok)
            self.punct(")")
            return Neighbors(node_id, via), "nodes"
        if word == "attrs":
            node_id = self.take("STR", "node id string").value
            fields: tuple[str, ...] = ()
            if self.at_punct(","):
                self.pos += 1
                fields = self.fieldlist()
            self.punct(")")
            return Attrs(node_id, fields), "nodes"
        # count(pipe)
        self.nesting += 1
        if self.nesting * 2 > MAX_DEPTH:
            raise QuerySyntaxError(f"query nested deeper than {MAX_DEPTH}", tok.line, tok.column)
        inner, kind = self.pipe()
        self.nesting -= 1
        if kind == "scalar":
            raise QueryTypeError("count() of a count is not meaningful", tok.line, tok.column)
        self.punct(")")
        return Count(inner), "scalar"

    def stage(self, kind: str) -> tuple[Stage, str]:
        tok = self.tok
        if tok.kind != "IDENT" or tok.text not in STAGE_WORDS:
            raise self.fail([repr(w) for w in STAGE_WORDS])
        self.pos += 1
        word = tok.text
        allowed = {
            "nodes": STAGE_WORDS,
            "edges": ("count", "where"),
            "groups": ("count", "where"),
        }[kind]
        if word not in allowed:
            raise QueryTypeError(f"stage {word}() does not apply to {kind} results", tok.line, tok.column)
        self.punct("(")
        if word in ("in_room", "inside"):
            node_id = self.take("STR", "node id string").value
            self.punct(")")
            return (InRoom(node_id) if word == "in_room" else Inside(node_id)), kind
        if word == "where":
            binder = {"nodes": self.bind_attribute, "edges": self.bind_edge_key, "groups": self.bind_group_key}[kind]
            filters = self.filters(binder)
            self.punct(")")
            return Where(filters), kind
        if word == "count":
            self.punct(")")
            return CountStage(), "scalar"
        if word == "project":
            fields = self.fieldlist()
            self.punct(")")
            return Project(fields), kind
        rel = self.bind_relationship(self.take("STR", "relationship string"))
        self.punct(")")
        return CountBy(rel), "groups"

    def filters_opt(self, binder) -> tuple[Filter, ...]:
        if self.at_punct(")"):
            return ()
        return self.filters(binder)

    def filters(self, binder) -> tuple[Filter, ...]:
        out = [self.filter(binder)]
        while self.at_punct(","):
            self.pos += 1
            out.append(self.filter(binder))
        return tuple(out)

    def filter(self, binder) -> Filter:
        name_tok = self.take("IDENT", "attribute name")
        binder(name_tok)
        self.punct("=")
        tok = self.tok
        if tok.kind in ("STR", "INT"):
            value = tok.value
        elif tok.kind == "IDENT" and tok.text in ("true", "false"):
            value = tok.text == "true"
        else:
            raise self.fail(("string", "integer", "true", "false"))
        self.pos += 1
        return Filter(name_tok.text, value)

    def fieldlist(self) -> tuple[str, ...]:
        names = []
        while True:
            tok = self.take("IDENT", "attribute name")
            self.bind_attribute(tok)
            names.append(tok.text)
            if not self.at_punct(","):
                return tuple(names)
            self.pos += 1

    # schema binding

    def bind_attribute(self, tok: Token) -> None:
        if tok.text not in self.attributes:
            raise UnknownAttributeError(tok.text, nearest(tok.text, self.attributes), tok.line, tok.column)

    def bind_edge_key(self, tok: Token) -> None:
        if tok.text not in EDGE_FILTER_KEYS:
            keys = list(EDGE_FILTER_KEYS)
            raise UnknownAttributeError(tok.text, nearest(tok.text, keys), tok.line, tok.column, "edge field")

    def bind_group_key(self, tok: Token) -> None:
        if tok.text not in GROUP_FILTER_KEYS:
            raise UnknownAttributeError(tok.text, "count", tok.line, tok.column, "group field")

    def bind_relationship(self, tok: Token) -> str:
        rel = tok.value
        if rel not in self.relationships:
            raise UnknownAttributeError(
                rel, nearest(rel, self.relationships), tok.line, tok.column, "relationship"
            )
        return rel


def parse(source: str | bytes, schema: Schema) -> Query:
    """Parse and schema-bind one query. Raises a :class:`QueryError` subclass on bad input."""
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    query = _Parser(source, schema).query()
    if depth(query) > MAX_DEPTH:
        raise QuerySyntaxError(f"query nested deeper than {MAX_DEPTH}", 1, 1)
    return query
