"""Aggregate episode traces into per (method, env) report rows."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .trace import EpisodeTrace

REPORT_FIELDS = (
    "method",
    "env",
    "trials",
    "successes",
    "success_rate",
    "failure_histogram",
    "mean_iterations",
    "mean_tokens_per_iteration",
)


@dataclass
class _Tally:
    trials: int = 0
    successes: int = 0
    failures: Counter = field(default_factory=Counter)
    iterations: int = 0
    tokens: int = 0


def build_report(traces: Iterable[EpisodeTrace]) -> list[dict]:
    tallies: dict[tuple[str, str], _Tally] = {}
    for trace in traces:
        tally = tallies.setdefault((trace.method, trace.env), _Tally())
        tally.trials += 1
        if trace.success:
            tally.successes += 1
        else:
            tally.failures[trace.outcome.reason if trace.outcome else "unknown"] += 1
        tally.iterations += len(trace.iterations)
        tally.tokens += sum(it.tokens_in + it.tokens_out for it in trace.iterations)
    rows = []
    for (method, env), tally in sorted(tallies.items()):
        rows.append(
            {
                "method": method,
                "env": env,
                "trials": tally.trials,
                "successes": tally.successes,
                "success_rate": tally.successes / tally.trials,
                "failure_histogram": dict(sorted(tally.failures.items())),
                "mean_iterations": round(tally.iterations / tally.trials, 6),
                "mean_tokens_per_iteration": round(tally.tokens / tally.iterations, 6) if tally.iterations else 0.0,
            }
        )
    return rows


def render_table(rows: list[dict]) -> str:
    headers = ["method", "env", "trials", "successes", "success_rate", "failures", "mean_iter", "tokens/iter"]
    body = [
        [
            r["method"],
            r["env"],
            str(r["trials"]),
            str(r["successes"]),
            f"{r['success_rate']:.2f}",
            ", ".join(f"{k}={v}" for k, v in r["failure_histogram"].items()) or "-",
            f"{r['mean_iterations']:.2f}",
            f"{r['mean_tokens_per_iteration']:.1f}",
        ]
        for r in rows
    ]
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in body]
    return "\n".join(lines)
