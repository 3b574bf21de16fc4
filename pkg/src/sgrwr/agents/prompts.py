"""System prompts for every agent, assembled from fixed templates.

Templates hold only schema-level knowledge; graph instance data reaches the
agents through retrieval, never through these prompts (the full-graph
baseline is the one deliberate exception).
"""

from __future__ import annotations

from typing import Sequence

from ..scene_graph import Schema, render_schema

NOT_ADDRESSED = "NOT ADDRESSED"


class PromptError(ValueError):
    pass


PLANNER_TEMPLATE = """\
You solve tasks in a scene that is stored as a scene graph. You work together with a Retriever, \
which looks things up in the graph for you, and a tool executor, which runs functions for you. \
Below you get a description of the scene, the graph schema and, for planning tasks, the actions \
the agent in the scene can take.
You cannot see the graph itself. Ask the Retriever for every fact about the scene that you need.

{environment}

Scene graph schema:
{schema}
{action_space}
[Response Modes and Formats]
Every reply uses exactly one mode:
1. QUERY: work out which information is missing and ask the Retriever for it.
2. TOOL: run one function from the list below to settle a substep.
3. SOLUTION: state the solution of the task.

Functions:
{tools}

Write every reply in this shape:

[Explanation]
Your reasoning, kept short.

[Mode]
QUERY, TOOL or SOLUTION. A SOLUTION ends the conversation, so send it only when the whole solution is known.

[Content]
QUERY: a single sentence requesting the information, naming the schema attributes you need.
TOOL: the function name followed by every argument value, written as name(arg=value, ...). Take every value from retrieved graph data.
SOLUTION: the solution only.
{examples}"""

CODE_WRITER_TEMPLATE = """\
You translate information requests about a scene graph into queries written in sgq, a small \
graph query language.

{environment}

Scene graph schema:
{schema}

sgq grammar:
{grammar}

Meaning of the constructs:
- nodes(k=v, ...) selects the nodes whose attributes equal every given value; a list attribute matches when it contains the value.
- edges(rel=..., from=..., to=...) selects edges; results list "from -[relationship]-> to".
- neighbors(id, via=rel) lists the nodes joined to id by an edge in either direction, optionally of one relationship.
- attrs(id, field, ...) shows one node, optionally only some fields.
- in_room(id) keeps nodes contained in id, directly or through a chain of containment edges; inside(id) keeps only direct contents.
- where(...) filters the rows so far; project(...) keeps only the named fields; count() or count(query) counts rows.
- count_by(rel) groups rows by the node each row points to with a rel edge and counts each group; where(count=n) filters the groups.

Reply with one query in a fenced block, like ```sgq nodes(type="room")```, and nothing else.
When a query fails you will be shown the error. Write a corrected query."""

VERIFIER_TEMPLATE = """\
You are shown an information request about a scene graph and the output of the query that was \
run for it. Judge whether the output answers the request. If it answers it, even only in part, \
reply with a short summary of the output covering what was asked and nothing more.

If it does not answer the request, reply with exactly: NOT ADDRESSED"""

TOOL_CALLER_TEMPLATE = """\
You convert a message that asks to use a tool into a structured tool invocation. The available \
tools are:

{tools}

Reply with only a JSON object of the form {{"tool": "<name>", "args": {{"<argument>": <value>, ...}}}} \
that names every argument of the tool. You may wrap it in a ```json fenced block."""

REACT_TEMPLATE = """\
You solve tasks in a scene stored as a scene graph by exploring it through API calls.

{environment}

Scene graph schema:
{schema}
{action_space}
Work in steps. Each step is one reply:
Thought: what you know and what to do next.
Action: one call, such as {example_call}

After every Action you receive an Observation with its result.
Available calls:
{apis}
finish(solution): end the task with the solution. {finish_hint}"""

LIMIT_RETRIEVER_TEMPLATE = """\
You answer information requests about a scene graph by calling two lookup APIs.

{environment}

Scene graph schema:
{schema}

Work in steps. Each step is one reply:
Thought: what you have found and what to look up next.
Action: exactly one of
  get_neighbors("node_id") lists the ids of the nodes joined to a node,
  get_attrs("node_id") shows one node's attributes,
  finish(summary) ends the lookup with a short summary answering the request.
After every Action you receive an Observation."""

FULLGRAPH_TEMPLATE = """\
Solve the task below using the scene graph listed after it.

{environment}
{action_space}
Scene graph (one node per line, then one edge per line):
{graph}
"""

ZEROSHOT_SUFFIX = "Reply with only the final {what}."
COT_SUFFIX = "Think step by step. Then give the final {what} at the end of your reply, {where}."


def _require(**values) -> None:
    for name, value in values.items():
        if value is None or (isinstance(value, str) and not value.strip()):
            raise PromptError(f"missing prompt input: {name}")


def render_tools(annotations: Sequence[str]) -> str:
    return "\n".join(annotations) if annotations else "(none)"


def _action_block(action_space: str | None) -> str:
    return f"\nActions available to the agent:\n{action_space}\n" if action_space else ""


def assemble_planner_prompt(
    schema: Schema,
    env_explanation: str,
    action_space: str | None,
    tool_annotations: Sequence[str],
    few_shot: Sequence[str],
) -> str:
    _require(schema=schema, env_explanation=env_explanation)
    examples = ""
    if few_shot:
        examples = "\nExamples:\n\n" + "\n\n".join(ex.strip() for ex in few_shot)
    return PLANNER_TEMPLATE.format(
        environment=env_explanation.strip(),
        schema=render_schema(schema),
        action_space=_action_block(action_space),
        tools=render_tools(tool_annotations),
        examples=examples,
    )


def assemble_retriever_prompt(schema: Schema, env_explanation: str, grammar_text: str) -> str:
    _require(schema=schema, env_explanation=env_explanation, grammar_text=grammar_text)
    return CODE_WRITER_TEMPLATE.format(
        environment=env_explanation.strip(), schema=render_schema(schema), grammar=grammar_text.strip()
    )


def assemble_verifier_prompt() -> str:
    return VERIFIER_TEMPLATE


def assemble_toolcaller_prompt(tool_annotations: Sequence[str]) -> str:
    return TOOL_CALLER_TEMPLATE.format(tools=render_tools(tool_annotations))


def assemble_react_prompt(
    schema: Schema,
    env_explanation: str,
    action_space: str | None,
    api_annotations: Sequence[str],
    plan_task: bool,
) -> str:
    _require(schema=schema, env_explanation=env_explanation)
    hint = (
        "Give the plan as one action per line inside the parentheses."
        if plan_task
        else "Give only the answer inside the parentheses."
    )
    return REACT_TEMPLATE.format(
        environment=env_explanation.strip(),
        schema=render_schema(schema),
        action_space=_action_block(action_space),
        example_call='expand("node_id")' if any(a.startswith("expand") for a in api_annotations) else 'get_attrs("node_id")',
        apis=render_tools(api_annotations),
        finish_hint=hint,
    )


def assemble_limit_retriever_prompt(schema: Schema, env_explanation: str) -> str:
    _require(schema=schema, env_explanation=env_explanation)
    return LIMIT_RETRIEVER_TEMPLATE.format(environment=env_explanation.strip(), schema=render_schema(schema))


def assemble_fullgraph_prompt(
    env_explanation: str, action_space: str | None, graph_text: str, style: str, plan_task: bool
) -> str:
    _require(env_explanation=env_explanation, graph_text=graph_text)
    if style not in ("zeroshot", "cot"):
        raise PromptError(f"unknown prompt style {style!r}")
    what = "plan, one action per line" if plan_task else "answer"
    where = "each action on its own line" if plan_task else "alone on the last line"
    suffix = ZEROSHOT_SUFFIX.format(what=what) if style == "zeroshot" else COT_SUFFIX.format(what=what, where=where)
    body = FULLGRAPH_TEMPLATE.format(
        environment=env_explanation.strip(), action_space=_action_block(action_space), graph=graph_text
    )
    return body + "\n" + suffix
