"""Decomposition checking, substitution/separation side conditions, renaming."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import trace_core as tc
from .trace_core import Trace, TraceStructure, validate_circuit_spec

CONDITIONS = ("closed", "output_interference", "computation_interference", "boundary")


@dataclass(frozen=True)
class Decomposition:
    target: TraceStructure
    parts: tuple[TraceStructure, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("a decomposition needs at least one part")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"part{i}" for i in range(1, len(self.parts) + 1)))

    @property
    def network(self) -> list[TraceStructure]:
        """S0 = reflected target, followed by the parts."""
        return [tc.reflect(self.target), *self.parts]


@dataclass
class Condition:
    holds: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"holds": self.holds, **self.details}


@dataclass
class DecompositionReport:
    closed: Condition
    output_interference: Condition
    computation_interference: Condition
    boundary: Condition

    @property
    def holds(self) -> bool:
        return all(getattr(self, c).holds for c in CONDITIONS)

    @property
    def failing(self) -> list[str]:
        return [c for c in CONDITIONS if not getattr(self, c).holds]

    def to_json(self) -> dict:
        out = {c: getattr(self, c).to_json() for c in CONDITIONS}
        out["holds"] = self.holds
        out["first_failure"] = self.failing[0] if self.failing else None
        out["failing"] = self.failing
        return out


def close_network(d: Decomposition) -> TraceStructure:
    return tc.weave_all(d.network)


def _closed(net: list[TraceStructure], labels: list[str], strict_forks: bool) -> Condition:
    outs = set().union(*(s.outputs for s in net))
    ins = set().union(*(s.inputs for s in net))
    details = {
        "unconsumed_outputs": sorted(outs - ins),
        "unproduced_inputs": sorted(ins - outs),
    }
    ok = outs == ins
    if strict_forks:
        readers: dict[str, list[str]] = {}
        for lab, s in zip(labels, net):
            for a in s.inputs:
                readers.setdefault(a, []).append(lab)
        multi = {a: sorted(r) for a, r in sorted(readers.items()) if len(r) > 1}
        details["multi_reader_inputs"] = multi
        ok = ok and not multi
    return Condition(ok, details)


def _output_interference(net: list[TraceStructure], labels: list[str]) -> Condition:
    clashes = []
    for (i, s), (j, u) in itertools.combinations(enumerate(net), 2):
        for a in sorted(s.outputs & u.outputs):
            clashes.append({"symbol": a, "components": [labels[i], labels[j]]})
    return Condition(not clashes, {"clashes": clashes})


def _computation_interference(net: list[TraceStructure], labels: list[str]) -> Condition:
    """Scan the reachable joint-state product for outputs some reader refuses."""
    alphabet = sorted(set().union(*(s.alphabet for s in net)))
    owners = {a: [k for k, s in enumerate(net) if a in s.alphabet] for a in alphabet}
    start = tuple(s.traces.initial for s in net)
    seen = {start: ()}
    queue = deque([start])
    violations = []
    while queue:
        joint = queue.popleft()
        trace = seen[joint]
        for a in alphabet:
            nxt = list(joint)
            refusers = []
            for k in owners[a]:
                q = net[k].traces.step(joint[k], a)
                if q is None:
                    refusers.append(k)
                else:
                    nxt[k] = q
            if not refusers:
                nxt = tuple(nxt)
                if nxt not in seen:
                    seen[nxt] = trace + (a,)
                    queue.append(nxt)
                continue
            for i in owners[a]:
                if a in net[i].outputs and i not in refusers:
                    violations.append(
                        {
                            "trace": list(trace),
                            "symbol": a,
                            "producer": labels[i],
                            "producer_index": i,
                            "refused_by": [labels[k] for k in refusers],
                        }
                    )
    violations.sort(key=lambda v: (len(v["trace"]), v["trace"], v["symbol"], v["producer_index"]))
    return Condition(not violations, {"joint_states": len(seen), "violations": violations})


def _boundary(net: list[TraceStructure]) -> Condition:
    s0 = net[0]
    closed = tc.weave_all(net)
    seen = tc.project(closed, s0.alphabet)
    if seen.traces.same_language(s0.traces):
        return Condition(True, {})
    diff = _distinguishing_trace(seen.traces, s0.traces)
    return Condition(
        False,
        {
            "trace": list(diff),
            "in_network": seen.traces.accepts(diff),
            "in_target": s0.traces.accepts(diff),
        },
    )


def _distinguishing_trace(x: tc.RegularTraceSet, y: tc.RegularTraceSet) -> Trace:
    symbols = sorted(x.alphabet | y.alphabet)
    start = (x.initial, y.initial)
    seen = {start}
    queue = deque([(start, ())])
    while queue:
        (p, q), w = queue.popleft()
        if (p in x.accepting) != (q in y.accepting):
            return w
        for a in symbols:
            nxt = (x.step(p, a), y.step(q, a))
            if nxt != (None, None) and nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, w + (a,)))
    raise ValueError("trace sets are equal")


def check_decomposition(d: Decomposition, strict_forks: bool = False) -> DecompositionReport:
    validate_circuit_spec(d.target)
    for p in d.parts:
        validate_circuit_spec(p)
    net = d.network
    labels = ["target~", *d.names]
    return DecompositionReport(
        closed=_closed(net, labels, strict_forks),
        output_interference=_output_interference(net, labels),
        computation_interference=_computation_interference(net, labels),
        boundary=_boundary(net),
    )


def _alpha(x: TraceStructure | Sequence[TraceStructure]) -> set[str]:
    if isinstance(x, TraceStructure):
        return set(x.alphabet)
    return set().union(*(s.alphabet for s in x))


def check_substitution(r0, r1, r2, r3, s) -> tuple[bool, dict]:
    """Alphabet side condition for substituting ``s -> (r2, r3)`` into ``r0 -> (r1, s)``.

    ``r1`` (and ``r2``, ``r3``) may be lists standing for several parts.
    """
    outer = _alpha(r0) | _alpha(r1)
    inner = _alpha(r2) | _alpha(r3)
    shared = outer & inner
    a_s = _alpha(s)
    diagnostics = {
        "leaked_internals": sorted(shared - a_s),
        "missing_from_overlap": sorted(a_s - shared),
    }
    return shared == a_s, diagnostics


def check_separation(r: Sequence[TraceStructure], s: Sequence[TraceStructure]) -> tuple[bool, dict]:
    """Side conditions for weaving two decompositions part by part.

    ``r[0]`` and ``s[0]`` are the decomposed components; the rest are parts.
    """
    if len(r) != len(s):
        raise ValueError(f"decompositions have different lengths ({len(r)} and {len(s)})")
    if len(r) < 2:
        raise ValueError("each list needs the component and at least one part")
    internal_r = _alpha(list(r[1:])) - set(r[0].alphabet)
    internal_s = _alpha(list(s[1:])) - set(s[0].alphabet)
    shared_internal = sorted(internal_r & internal_s)
    clashes = []
    outs = [set(r[i].outputs) | set(s[i].outputs) for i in range(len(r))]
    for i, j in itertools.combinations(range(1, len(r)), 2):
        for a in sorted(outs[i] & outs[j]):
            clashes.append({"symbol": a, "parts": [i, j]})
    boundary_outs = set(r[0].inputs) | set(s[0].inputs)  # outputs of the reflections
    for i in range(1, len(r)):
        for a in sorted(outs[i] & boundary_outs):
            clashes.append({"symbol": a, "parts": [i, 0]})
    ok = not shared_internal and not clashes
    return ok, {"shared_internals": shared_internal, "output_clashes": clashes}


def rename(r: TraceStructure, mapping: Mapping[str, str]) -> TraceStructure:
    return tc.rename(r, mapping)


def rename_decomposition(d: Decomposition, mapping: Mapping[str, str]) -> Decomposition:
    return Decomposition(
        tc.rename(d.target, mapping),
        tuple(tc.rename(p, mapping) for p in d.parts),
        d.names,
    )


def internal_symbols(d: Decomposition) -> set[str]:
    return _alpha(list(d.parts)) - set(d.target.alphabet)
