"""Episode drivers, traces, token accounting and reports."""

from .episodes import (
    API_ANNOTATIONS,
    METHODS,
    OBS_RETRIEVED,
    OBS_TOOL,
    EpisodeLimits,
    EpisodeResult,
    RwrBackends,
    graph_token_count,
    run_fullgraph_episode,
    run_react_episode,
    run_rwr_episode,
    run_rwr_limit_episode,
    start_node,
)
from .report import REPORT_FIELDS, build_report, render_table
from .tokens import MeteredBackend, TokenMeter, count_tokens
from .trace import EpisodeTrace, Iteration, TraceError, read_trace, strip_wall_time, write_trace

__all__ = [
    "API_ANNOTATIONS",
    "METHODS",
    "OBS_RETRIEVED",
    "OBS_TOOL",
    "EpisodeLimits",
    "EpisodeResult",
    "EpisodeTrace",
    "Iteration",
    "MeteredBackend",
    "REPORT_FIELDS",
    "RwrBackends",
    "TokenMeter",
    "TraceError",
    "build_report",
    "count_tokens",
    "graph_token_count",
    "read_trace",
    "render_table",
    "run_fullgraph_episode",
    "run_react_episode",
    "run_rwr_episode",
    "run_rwr_limit_episode",
    "start_node",
    "strip_wall_time",
    "write_trace",
]
