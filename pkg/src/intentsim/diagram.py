"""Temporal emergence diagram over windowed intention clusters.

The repository is partitioned into fixed-width tick windows. A cluster is
*emergent* in the first window where it appears (the baseline of already
seen clusters grows as windows are consumed, so each cluster has exactly
one birth). The origin of an emergent cluster is the agent with the
globally earliest repository tick in it; any other agent contributing to
the same cluster in the emergence window or the one after it, strictly
after the origin tick, is recorded as influenced. The influence map keys
each influenced agent to the set of clusters that reached it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

from .clustering import Clustering
from .mining import IntentionRepository

DIAGRAM_SCHEMA = 1
DEFAULT_WINDOW_TICKS = 1200


@dataclass(frozen=True)
class WindowSpec:
    window_ticks: int = DEFAULT_WINDOW_TICKS
    n_windows: int = 1

    def __post_init__(self) -> None:
        if self.window_ticks <= 0:
            raise ValueError("window_ticks must be > 0")
        if self.n_windows < 0:
            raise ValueError("n_windows must be >= 0")

    @classmethod
    def for_span(cls, total_ticks: int, window_ticks: int = DEFAULT_WINDOW_TICKS) -> "WindowSpec":
        if total_ticks <= 0:
            return cls(window_ticks=window_ticks, n_windows=0)
        n = (total_ticks + window_ticks - 1) // window_ticks
        return cls(window_ticks=window_ticks, n_windows=n)


# Per window: cluster id -> {agent id -> first tick of that agent in the window}.
WindowedClusters = list[dict[int, dict[int, int]]]


def window_partition(
    repo: IntentionRepository,
    clustering: Clustering,
    spec: WindowSpec,
    warn_sink: Callable[[str], None] | None = None,
) -> WindowedClusters:
    """Group repository entries by (window, cluster, agent) first occurrence."""
    windows: WindowedClusters = [dict() for _ in range(spec.n_windows)]
    for idx, entry in enumerate(repo.entries):
        cluster = int(clustering.assignments[idx])
        if cluster < 0:
            if warn_sink is not None:
                warn_sink(
                    f"record {entry.record_id} has no cluster assignment (zero vector); skipped"
                )
            continue
        w = entry.tick // spec.window_ticks
        if w >= len(windows):
            # Entries past the declared span extend the window list.
            windows.extend(dict() for _ in range(w - len(windows) + 1))
        agents = windows[w].setdefault(cluster, {})
        previous = agents.get(entry.agent_id)
        if previous is None or entry.tick < previous:
            agents[entry.agent_id] = entry.tick
    return windows


def emergent_diff(current_clusters: set[int], seen_before: set[int]) -> set[int]:
    """Clusters newly present relative to everything already seen."""
    return set(current_clusters) - set(seen_before)


def attribute_origin(cluster_id: int, windows: WindowedClusters) -> tuple[int, int]:
    """(agent, tick) of the globally earliest entry in the cluster."""
    best: tuple[int, int] | None = None  # (tick, agent)
    for window in windows:
        for agent, tick in window.get(cluster_id, {}).items():
            key = (tick, agent)
            if best is None or key < best:
                best = key
    if best is None:
        raise ValueError(f"cluster {cluster_id} has no members")
    return best[1], best[0]


def find_influenced(
    cluster_id: int,
    origin_agent: int,
    origin_tick: int,
    window_index: int,
    windows: WindowedClusters,
) -> list[tuple[int, int]]:
    """Agents reached by the cluster within its two-window horizon.

    Returns (agent, window) pairs sorted by (window, agent); an agent
    appearing in both windows counts once, at the earlier one.
    """
    influenced: dict[int, int] = {}
    horizon = [window_index]
    if window_index + 1 < len(windows):
        horizon.append(window_index + 1)
    for w in horizon:
        for agent, tick in windows[w].get(cluster_id, {}).items():
            if agent == origin_agent or tick <= origin_tick:
                continue
            if agent not in influenced:
                influenced[agent] = w
    return sorted(influenced.items(), key=lambda kv: (kv[1], kv[0]))


@dataclass(frozen=True)
class EmergencePoint:
    cluster_id: int
    origin_agent: int
    influenced_agent: int
    window: int


@dataclass
class EmergenceDiagram:
    window_ticks: int
    n_windows: int
    cluster_labels: dict[int, str] = field(default_factory=dict)
    cluster_nodes: list[tuple[int, int]] = field(default_factory=list)  # (window, cluster)
    agent_nodes: list[tuple[int, int]] = field(default_factory=list)  # (window, agent)
    emergence_windows: dict[int, int] = field(default_factory=dict)  # cluster -> window
    origins: dict[int, tuple[int, int]] = field(default_factory=dict)  # cluster -> (agent, tick)
    points: list[EmergencePoint] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "diagram_schema": DIAGRAM_SCHEMA,
            "window_ticks": self.window_ticks,
            "n_windows": self.n_windows,
            "cluster_labels": {str(k): v for k, v in sorted(self.cluster_labels.items())},
            "cluster_nodes": [list(node) for node in self.cluster_nodes],
            "agent_nodes": [list(node) for node in self.agent_nodes],
            "emergence_windows": {str(k): v for k, v in sorted(self.emergence_windows.items())},
            "origins": {
                str(k): {"agent": a, "tick": t} for k, (a, t) in sorted(self.origins.items())
            },
            "points": [
                {
                    "cluster": p.cluster_id,
                    "origin": p.origin_agent,
                    "influenced": p.influenced_agent,
                    "window": p.window,
                }
                for p in self.points
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "EmergenceDiagram":
        if data.get("diagram_schema") != DIAGRAM_SCHEMA:
            raise ValueError(
                f"unsupported diagram_schema {data.get('diagram_schema')!r} (expected {DIAGRAM_SCHEMA})"
            )
        return cls(
            window_ticks=data["window_ticks"],
            n_windows=data["n_windows"],
            cluster_labels={int(k): v for k, v in data.get("cluster_labels", {}).items()},
            cluster_nodes=[tuple(node) for node in data.get("cluster_nodes", [])],
            agent_nodes=[tuple(node) for node in data.get("agent_nodes", [])],
            emergence_windows={int(k): v for k, v in data.get("emergence_windows", {}).items()},
            origins={
                int(k): (v["agent"], v["tick"]) for k, v in data.get("origins", {}).items()
            },
            points=[
                EmergencePoint(
                    cluster_id=p["cluster"],
                    origin_agent=p["origin"],
                    influenced_agent=p["influenced"],
                    window=p["window"],
                )
                for p in data.get("points", [])
            ],
        )


InfluenceMap = dict[int, set[int]]


def build_diagram(
    repo: IntentionRepository,
    clustering: Clustering,
    spec: WindowSpec,
    cluster_labels: dict[int, str] | None = None,
    warn_sink: Callable[[str], None] | None = None,
) -> tuple[EmergenceDiagram, InfluenceMap, list[EmergencePoint]]:
    """Walk every window, birth new clusters, and record influence points."""
    windows = window_partition(repo, clustering, spec, warn_sink)
    diagram = EmergenceDiagram(
        window_ticks=spec.window_ticks,
        n_windows=len(windows),
        cluster_labels=dict(cluster_labels or {}),
    )
    influence: InfluenceMap = {}
    points: list[EmergencePoint] = []
    seen: set[int] = set()
    agent_nodes: set[tuple[int, int]] = set()
    for w, window in enumerate(windows):
        fresh = emergent_diff(set(window), seen)
        for cluster_id in sorted(fresh):
            origin_agent, origin_tick = attribute_origin(cluster_id, windows)
            diagram.cluster_nodes.append((w, cluster_id))
            diagram.emergence_windows[cluster_id] = w
            diagram.origins[cluster_id] = (origin_agent, origin_tick)
            agent_nodes.add((w, origin_agent))
            for agent, agent_window in find_influenced(
                cluster_id, origin_agent, origin_tick, w, windows
            ):
                point = EmergencePoint(
                    cluster_id=cluster_id,
                    origin_agent=origin_agent,
                    influenced_agent=agent,
                    window=agent_window,
                )
                points.append(point)
                agent_nodes.add((agent_window, agent))
                influence.setdefault(agent, set()).add(cluster_id)
        seen |= fresh
    diagram.agent_nodes = sorted(agent_nodes)
    diagram.points = points
    return diagram, influence, points


def influence_from_points(points: list[EmergencePoint]) -> InfluenceMap:
    """Projection of the point list onto the per-agent influence sets."""
    influence: InfluenceMap = {}
    for p in points:
        influence.setdefault(p.influenced_agent, set()).add(p.cluster_id)
    return influence


# --- rendering ---------------------------------------------------------------


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def render_dot(diagram: EmergenceDiagram) -> str:
    lines = ["digraph intention_emergence {", "  rankdir=LR;"]
    for window, cluster in diagram.cluster_nodes:
        label = diagram.cluster_labels.get(cluster, f"cluster {cluster}")
        lines.append(
            f'  "c{cluster}_w{window}" [shape=box, label="w{window}: {_dot_escape(label)}"];'
        )
    for window, agent in diagram.agent_nodes:
        lines.append(f'  "agent{agent}_w{window}" [shape=ellipse, label="agent {agent}"];')
    for p in diagram.points:
        origin_window = diagram.emergence_windows.get(p.cluster_id, p.window)
        lines.append(
            f'  "agent{p.origin_agent}_w{origin_window}" -> "agent{p.influenced_agent}_w{p.window}"'
            f' [label="c{p.cluster_id}@w{p.window}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_json(diagram: EmergenceDiagram) -> str:
    return json.dumps(diagram.to_json_dict(), sort_keys=True, indent=2) + "\n"


def render_svg(diagram: EmergenceDiagram) -> str:
    """Minimal timeline: windows as columns, agents as rows, arrows for influence."""
    agents = sorted({a for _, a in diagram.agent_nodes})
    col_w, row_h, margin = 160, 40, 60
    width = margin * 2 + max(1, diagram.n_windows) * col_w
    height = margin * 2 + max(1, len(agents)) * row_h
    row_of = {agent: i for i, agent in enumerate(agents)}

    def x_of(window: int) -> int:
        return margin + window * col_w + col_w // 2

    def y_of(agent: int) -> int:
        return margin + row_of[agent] * row_h + row_h // 2

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        '  <style>text { font-family: sans-serif; font-size: 12px; }</style>',
    ]
    for w in range(diagram.n_windows):
        parts.append(f'  <text x="{x_of(w) - 30}" y="{margin - 20}">window {w}</text>')
    for agent in agents:
        parts.append(f'  <text x="10" y="{y_of(agent) + 4}">agent {agent}</text>')
    for window, cluster in diagram.cluster_nodes:
        label = diagram.cluster_labels.get(cluster, f"cluster {cluster}")
        origin_agent, _ = diagram.origins.get(cluster, (None, None))
        if origin_agent is None or origin_agent not in row_of:
            continue
        x, y = x_of(window), y_of(origin_agent)
        parts.append(
            f'  <rect x="{x - 55}" y="{y - 14}" width="110" height="24" fill="none" stroke="black"/>'
        )
        short = label if len(label) <= 18 else label[:17] + "…"
        parts.append(f'  <text x="{x - 50}" y="{y + 2}">{_xml_escape(short)}</text>')
    for p in diagram.points:
        origin_window = diagram.emergence_windows.get(p.cluster_id, p.window)
        x1, y1 = x_of(origin_window), y_of(p.origin_agent)
        x2, y2 = x_of(p.window), y_of(p.influenced_agent)
        parts.append(
            f'  <line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="black" marker-end="url(#arrow)"/>'
        )
    parts.insert(
        1,
        '  <defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="8" refY="4" orient="auto">'
        '<path d="M0,0 L8,4 L0,8 z"/></marker></defs>',
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _xml_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def render_diagram(diagram: EmergenceDiagram, fmt: str) -> str:
    if fmt == "dot":
        return render_dot(diagram)
    if fmt == "json":
        return render_json(diagram)
    if fmt == "svg":
        return render_svg(diagram)
    raise ValueError(f"unknown diagram format {fmt!r} (use dot, json, or svg)")
