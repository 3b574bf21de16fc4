"""Schema-guided reasoning over scene graphs with a planner/retriever agent loop."""

__version__ = "0.1.0"
