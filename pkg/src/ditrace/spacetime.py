"""Space-time graphs of simulation runs.

Each node gets a vertical line of points ordered by local occurrence; an
arrow joins the point where a transition leaves its source to the point where
it reaches its sink. A transition fanned out to several channels leaves from a
single emission point.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .simulator import SimTrace, to_ticks


class InconsistentTraceError(ValueError):
    pass


class UnknownPointError(KeyError):
    pass


class UnresolvableConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class Point:
    node: str
    index: int
    time: float
    label: str
    kind: str  # "emit" or "arrive"
    step: int
    wait: bool = False

    @property
    def ref(self) -> tuple[str, int]:
        return (self.node, self.index)

    def to_json(self) -> dict:
        return {"node": self.node, "index": self.index, "time": self.time, "label": self.label,
                "kind": self.kind, "step": self.step, "wait": self.wait}


@dataclass(frozen=True)
class Arrow:
    source: tuple[str, int]
    sink: tuple[str, int]
    event: int
    channel: str

    def to_json(self) -> dict:
        return {"from": list(self.source), "to": list(self.sink), "event": self.event, "channel": self.channel}


@dataclass
class CausalGraph:
    lines: dict[str, list[Point]] = field(default_factory=dict)
    arrows: list[Arrow] = field(default_factory=list)

    def point(self, ref) -> Point:
        node, index = ref if not isinstance(ref, Point) else ref.ref
        try:
            return self.lines[node][index]
        except (KeyError, IndexError):
            raise UnknownPointError(ref) from None

    def points(self) -> list[Point]:
        return [p for node in sorted(self.lines) for p in self.lines[node]]

    def successors(self, ref) -> list[tuple[str, int]]:
        node, index = ref
        out = [a.sink for a in self._out.get(ref, ())]
        if index + 1 < len(self.lines[node]):
            out.append((node, index + 1))
        return out

    def __post_init__(self):
        self.reindex()

    def reindex(self):
        self._out: dict[tuple[str, int], list[Arrow]] = {}
        for a in self.arrows:
            self._out.setdefault(a.source, []).append(a)

    def find(self, node: str, label: str, occurrence: int = 0, kind: str = "arrive") -> Point | None:
        hits = [p for p in self.lines.get(node, ()) if p.label == label and p.kind == kind]
        return hits[occurrence] if occurrence < len(hits) else None

    def to_json(self) -> dict:
        return {
            "lines": {n: [p.to_json() for p in pts] for n, pts in sorted(self.lines.items())},
            "arrows": [a.to_json() for a in self.arrows],
        }


def build(trace: SimTrace, nodes: Iterable[str] = ()) -> CausalGraph:
    """Space-time graph of the delivered part of ``trace``.

    ``nodes`` adds empty lines for nodes that never appear in the run.
    """
    raw: dict[str, list[tuple]] = {n: [] for n in nodes}
    emitted = {}
    for ev in trace.events:
        if ev.arrival_time <= ev.emit_time:
            raise InconsistentTraceError(f"event {ev.id} does not move forward in time")
        if ev.deliver_step is not None and ev.deliver_step <= ev.emit_step:
            raise InconsistentTraceError(f"event {ev.id} delivered before it was emitted")
        if ev.emission not in emitted:
            emitted[ev.emission] = ev
            raw.setdefault(ev.source[0], []).append(
                (ev.emit_step, ev.emit_time, ev.label("source"), "emit", False, ("e", ev.emission)))
        if ev.deliver_step is not None:
            raw.setdefault(ev.sink[0], []).append(
                (ev.deliver_step, ev.arrival_time, ev.label("sink"), "arrive", ev.rendezvous, ("d", ev.id)))
    g = CausalGraph()
    where = {}
    for node, items in raw.items():
        items.sort()
        line, last = [], None
        for i, (step, time, label, kind, wait, key) in enumerate(items):
            if last is not None and time < last:
                raise InconsistentTraceError(f"points on {node} are not time ordered")
            last = time
            line.append(Point(node, i, to_ticks(time), label, kind, step, wait))
            where[key] = (node, i)
        g.lines[node] = line
    for ev in trace.events:
        if ev.deliver_step is not None:
            g.arrows.append(Arrow(where[("e", ev.emission)], where[("d", ev.id)], ev.id, ev.channel))
    g.arrows.sort(key=lambda a: a.event)
    g.reindex()
    return g


def causally_related(g: CausalGraph, p, q) -> bool:
    """True iff a non-empty path of vertical steps and arrows leads from p to q."""
    src, dst = g.point(p).ref, g.point(q).ref
    seen = set()
    queue = deque(g.successors(src))
    while queue:
        r = queue.popleft()
        if r == dst:
            return True
        if r in seen:
            continue
        seen.add(r)
        queue.extend(g.successors(r))
    return False


@dataclass
class OrderVerdict:
    ok: bool
    violations: list[dict]
    checked: int


def check_order(g: CausalGraph, constraints: Sequence, occurrences: Iterable[int] | None = None) -> OrderVerdict:
    """Check that each ``first`` transition precedes its ``then`` on the node.

    A constraint is any object with ``node``, ``first`` and ``then`` (labels of
    arriving transitions), optionally with ``occurrence``. Without an
    occurrence it is checked for every cycle k: the k-th ``first`` must come
    before the k-th ``then``. A ``then`` with no matching ``first`` counts as
    a violation.
    """
    violations, checked = [], 0
    for c in constraints:
        node, first, then = _fields(c)
        if node not in g.lines:
            raise UnresolvableConstraintError(f"no line for node {node!r}")
        fixed_k = getattr(c, "occurrence", None) if not isinstance(c, dict) else c.get("occurrence")
        if fixed_k is not None:
            ks = [fixed_k]
        elif occurrences is not None:
            ks = list(occurrences)
        else:
            n_then = sum(1 for p in g.lines[node] if p.label == then and p.kind == "arrive")
            ks = range(n_then)
        for k in ks:
            a, b = g.find(node, first, k), g.find(node, then, k)
            if b is None:
                if fixed_k is not None:
                    raise UnresolvableConstraintError(f"{node}: no occurrence {k} of {then}")
                continue
            checked += 1
            if a is None or a.index > b.index:
                violations.append({"node": node, "first": first, "then": then, "occurrence": k,
                                   "first_time": None if a is None else a.time, "then_time": b.time})
    return OrderVerdict(not violations, violations, checked)


def _fields(c):
    if isinstance(c, dict):
        return c["node"], c["first"], c["then"]
    if isinstance(c, (tuple, list)):
        return c[0], c[1], c[2]
    return c.node, c.first, c.then


def _q(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def to_dot(g: CausalGraph) -> str:
    out = ["digraph spacetime {", "  rankdir=TB;", "  node [shape=point];"] if g.lines else ["digraph spacetime {"]
    for node in sorted(g.lines):
        pts = g.lines[node]
        out.append(f"  subgraph {_q('cluster_' + node)} {{")
        out.append(f"    label={_q(node)};")
        for p in pts:
            attrs = f"xlabel={_q(f'{p.label} {p.time:g}')}"
            if p.wait:
                attrs += ", shape=box"
            out.append(f"    {_q(f'{node}:{p.index}')} [{attrs}];")
        for p, nxt in zip(pts, pts[1:]):
            style = "bold" if nxt.wait else "solid"
            out.append(f"    {_q(f'{node}:{p.index}')} -> {_q(f'{node}:{nxt.index}')} [arrowhead=none, style={style}];")
        out.append("  }")
    for a in g.arrows:
        src, dst = f"{a.source[0]}:{a.source[1]}", f"{a.sink[0]}:{a.sink[1]}"
        out.append(f"  {_q(src)} -> {_q(dst)} [label={_q(a.channel)}];")
    out.append("}")
    return "\n".join(out) + "\n"


def to_json_text(g: CausalGraph) -> str:
    return json.dumps(g.to_json(), sort_keys=True, ensure_ascii=False, indent=1) + "\n"


def emit(g: CausalGraph, format: str = "dot") -> str:  # noqa: A002
    if format == "dot":
        return to_dot(g)
    if format == "json":
        return to_json_text(g)
    raise ValueError(f"unknown format {format!r}")


def from_json(doc) -> CausalGraph:
    """Rebuild a graph from its JSON rendering without the originating trace."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    g = CausalGraph()
    for node, pts in doc["lines"].items():
        g.lines[node] = [
            Point(p["node"], p["index"], p["time"], p["label"], p["kind"], p["step"], p.get("wait", False))
            for p in pts
        ]
    g.arrows = [Arrow(tuple(a["from"]), tuple(a["to"]), a["event"], a["channel"]) for a in doc["arrows"]]
    g.reindex()
    return g
