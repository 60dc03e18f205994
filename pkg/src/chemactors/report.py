"""Render a handling trace as a swimlane figure.

One lane per session (falling back to the actor name for unlabeled
records), one marker per trace record along the step axis, colored by
outcome.  Meant as a quick visual companion to the tab-separated trace
file, not as a precise analysis tool.
"""

from __future__ import annotations

from typing import Iterable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.lines import Line2D

from .runtime import TraceStep

_OUTCOME_STYLE = {
    "handled": ("tab:green", "o"),
    "stashed": ("tab:orange", "s"),
    "dead-letter": ("tab:red", "x"),
    "flush": ("tab:blue", "^"),
}


def _style(outcome: str) -> tuple[str, str]:
    if outcome.startswith("flush("):
        return _OUTCOME_STYLE["flush"]
    return _OUTCOME_STYLE.get(outcome, ("tab:gray", "."))


def render_trace_figure(steps: Iterable[TraceStep], path: str,
                        title: str | None = None) -> str:
    """Write a swimlane plot of ``steps`` to ``path`` and return the path."""
    steps = list(steps)
    lanes: list[str] = []
    for s in steps:
        lane = s.client or s.actor
        if lane not in lanes:
            lanes.append(lane)
    if not lanes:
        lanes = ["(empty trace)"]

    height = max(2.0, 0.6 * len(lanes) + 1.2)
    width = max(6.0, min(0.22 * max(len(steps), 1) + 2.0, 18.0))
    fig, ax = plt.subplots(figsize=(width, height))

    lane_index = {lane: i for i, lane in enumerate(lanes)}
    for s in steps:
        color, marker = _style(s.outcome)
        y = lane_index[s.client or s.actor]
        ax.scatter(s.step, y, c=color, marker=marker, s=36, zorder=3)
        if s.outcome == "handled" and len(steps) <= 80:
            ax.annotate(s.kind, (s.step, y), textcoords="offset points",
                        xytext=(0, 7), fontsize=7, ha="center")

    ax.set_yticks(range(len(lanes)))
    ax.set_yticklabels(lanes)
    ax.set_xlabel("trace step")
    ax.set_ylim(-0.8, len(lanes) - 0.2)
    ax.grid(axis="x", alpha=0.25)
    if title:
        ax.set_title(title)
    ax.legend(handles=[
        Line2D([], [], color=c, marker=m, linestyle="", label=name)
        for name, (c, m) in _OUTCOME_STYLE.items()
    ], loc="upper left", fontsize=8, framealpha=0.6)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
