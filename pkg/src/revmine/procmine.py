"""Event logs of the writing process and Directly-Follows Graph discovery."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .features import active_time_s
from .sessionizer import Session

START = "Start"
END = "End"
REVISE = "Revise"


def write_recipe(k: int) -> str:
    if k < 1:
        raise ValueError("recipe ordinals start at 1")
    return f"WriteRecipe{k}"


@dataclass(frozen=True)
class Event:
    activity: str
    duration_s: float = 0.0


Trace = tuple[Event, ...]


@dataclass(frozen=True)
class EventLog:
    """A multiset of traces; order of ``traces`` carries no meaning."""

    traces: tuple[Trace, ...] = ()
    name: str = ""

    def __len__(self) -> int:
        return len(self.traces)

    def __add__(self, other: EventLog) -> EventLog:
        return EventLog(self.traces + other.traces, self.name or other.name)

    @classmethod
    def from_activities(cls, traces: Iterable[Sequence[str]], name: str = "") -> EventLog:
        return cls(tuple(tuple(Event(a) for a in t) for t in traces), name)


@dataclass(frozen=True)
class Edge:
    frequency: int
    mean_duration_s: float


@dataclass(frozen=True)
class Dfg:
    nodes: frozenset[str]
    edges: Mapping[tuple[str, str], Edge] = field(default_factory=dict)

    @property
    def total_frequency(self) -> int:
        return sum(e.frequency for e in self.edges.values())


def user_trace(sessions: Sequence[Session]) -> Trace:
    """Start, then per recipe a write activity and one Revise per revision entry, then End."""
    events = [Event(START)]
    for s in sorted(sessions, key=lambda s: s.recipe_ordinal):
        events.append(Event(write_recipe(s.recipe_ordinal), active_time_s(s.draft.keystrokes)))
        events.extend(Event(REVISE, active_time_s(r.keystrokes)) for r in s.revisions)
    events.append(Event(END))
    return tuple(events)


def build_event_log(
    sessions: Mapping[str, Sequence[Session]],
    group: str | None = None,
    groups: Mapping[str, str | None] | None = None,
) -> EventLog:
    """One trace per user; with *group* set, only users whose ``groups[user]`` matches."""
    traces = []
    for user in sorted(sessions):
        if group is not None and (groups or {}).get(user) != group:
            continue
        if sessions[user]:
            traces.append(user_trace(sessions[user]))
    return EventLog(tuple(traces), group or "")


def discover_dfg(log: EventLog) -> Dfg:
    """Nodes are the activities present; edge (u, v) counts every time v directly follows u.

    An edge's mean duration is the mean duration of the v events reached through it.
    """
    if not log.traces:
        raise ValueError("cannot discover a DFG from an empty event log")
    nodes: set[str] = set()
    counts: dict[tuple[str, str], int] = {}
    durations: dict[tuple[str, str], list[float]] = {}
    for trace in log.traces:
        nodes.update(e.activity for e in trace)
        for a, b in zip(trace, trace[1:]):
            key = (a.activity, b.activity)
            counts[key] = counts.get(key, 0) + 1
            durations.setdefault(key, []).append(b.duration_s)
    edges = {k: Edge(counts[k], math.fsum(durations[k]) / counts[k]) for k in sorted(counts)}
    return Dfg(frozenset(nodes), edges)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(dfg: Dfg, name: str = "dfg", comment: str | None = None) -> str:
    """Render *dfg* as DOT with sorted nodes and edges, edges labelled ``n=<freq>, t̄=<mean>s``."""
    lines = []
    if comment:
        lines.extend(f"// {c}" for c in comment.splitlines())
    lines.append(f"digraph {_quote(name)} {{")
    lines.append("  rankdir=LR;")
    lines.append("  node [shape=box];")
    for n in sorted(dfg.nodes):
        lines.append(f"  {_quote(n)};")
    for (u, v), e in sorted(dfg.edges.items()):
        label = f"n={e.frequency}, t̄={e.mean_duration_s:.2f}s"
        lines.append(f"  {_quote(u)} -> {_quote(v)} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
