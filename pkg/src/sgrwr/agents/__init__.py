from .backends import (
    Backend,
    BackendConfig,
    BackendError,
    BackendRejected,
    BackendUnavailable,
    FunctionBackend,
    LiveBackend,
    ScriptedBackend,
    ScriptExhausted,
)
from .formats import FormatError, NoFence, PlannerTurn, extract_fenced, format_planner_turn, parse_planner_turn
from .messages import ChatMessage

__all__ = [
    "Backend",
    "BackendConfig",
    "BackendError",
    "BackendRejected",
    "BackendUnavailable",
    "ChatMessage",
    "FormatError",
    "FunctionBackend",
    "LiveBackend",
    "NoFence",
    "PlannerTurn",
    "ScriptExhausted",
    "ScriptedBackend",
    "extract_fenced",
    "format_planner_turn",
    "parse_planner_turn",
]
