"""Discrete-event simulation of networks of event automata and level gates.

Every event on a channel is one transition (a toggle) of the wire. Event
automata consume symbols named after their ports; level gates derive their
input levels from the parity of the edges received so far.

Times are integer counts of ``1/RESOLUTION`` tick so that runs are exact and
reproducible; JSON documents carry them as tick values.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from . import trace_core as tc
from .switch_networks import latch_next
from .spec_language import parse, spec, unparse
from .trace_core import TraceStructure

RESOLUTION = 1000
LEVEL_KINDS = ("AND", "OR", "XOR", "C_LEVEL", "LATCH")


class SimulationError(Exception):
    pass


class MalformedNetworkError(SimulationError):
    pass


class NetworkMismatchError(SimulationError):
    pass


def to_units(x) -> int:
    return round(float(x) * RESOLUTION)


def to_ticks(u: int) -> float:
    return u / RESOLUTION


@dataclass(frozen=True)
class DelayModel:
    """``fixed(d)``, ``uniform(lo, hi)`` or ``table([d0, d1, ...])``; values in ticks."""

    kind: str = "fixed"
    params: tuple = (1,)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if self.kind not in ("fixed", "uniform", "table"):
            raise MalformedNetworkError(f"unknown delay kind {self.kind!r}")
        values = [to_units(v) for v in self.params]
        if not values or min(values) <= 0:
            raise MalformedNetworkError(f"delays must be strictly positive: {self.kind}{self.params}")
        if self.kind == "uniform" and (len(values) != 2 or values[0] > values[1]):
            raise MalformedNetworkError(f"uniform delay needs lo <= hi: {self.params}")
        object.__setattr__(self, "_units", tuple(values))

    def sample(self, rng: random.Random, occurrence: int = 0) -> int:
        u = self._units
        if self.kind == "fixed":
            return u[0]
        if self.kind == "uniform":
            return rng.randint(u[0], u[1])
        return u[min(occurrence, len(u) - 1)]

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_json(cls, doc) -> DelayModel:
        if isinstance(doc, (int, float)):
            return cls("fixed", (doc,))
        return cls(doc["kind"], tuple(doc["params"]))


def fixed(d) -> DelayModel:
    return DelayModel("fixed", (d,))


def uniform(lo, hi) -> DelayModel:
    return DelayModel("uniform", (lo, hi))


@dataclass(frozen=True)
class ComponentInstance:
    """An event automaton (``kind="event"`` with a ``spec``) or a level gate.

    Level gates have ``inputs`` and a single ``output``; ``invert`` lists inputs
    read through a bubble. An optional ``protocol`` structure over the gate's
    port names states the order in which its edges are expected.
    """

    id: str
    kind: str
    spec: TraceStructure | None = None
    inputs: tuple[str, ...] = ()
    output: str | None = None
    invert: frozenset[str] = frozenset()
    protocol: TraceStructure | None = None
    delay: DelayModel = field(default_factory=DelayModel)
    port_delays: Mapping[str, DelayModel] = field(default_factory=dict)
    arbitration_delay: DelayModel | None = None
    arbitration: str = "random"
    init: Mapping[str, bool] = field(default_factory=dict)

    @property
    def in_ports(self) -> tuple[str, ...]:
        if self.kind == "event":
            return tuple(sorted(self.spec.inputs))
        return tuple(self.inputs)

    @property
    def out_ports(self) -> tuple[str, ...]:
        if self.kind == "event":
            return tuple(sorted(self.spec.outputs))
        return (self.output,)

    def to_json(self) -> dict:
        doc = {"id": self.id, "kind": self.kind, "delay": self.delay.to_json()}
        if self.kind == "event":
            doc["spec"] = tc.to_json(self.spec)
            if self.spec.source is not None:
                doc["expr"] = unparse(self.spec)
        else:
            doc["inputs"] = list(self.inputs)
            doc["output"] = self.output
            doc["invert"] = sorted(self.invert)
            if self.init:
                doc["init"] = dict(sorted(self.init.items()))
        if self.protocol is not None:
            doc["protocol"] = tc.to_json(self.protocol)
        if self.port_delays:
            doc["port_delays"] = {k: v.to_json() for k, v in sorted(self.port_delays.items())}
        if self.arbitration_delay is not None:
            doc["arbitration_delay"] = self.arbitration_delay.to_json()
        if self.arbitration != "random":
            doc["arbitration"] = self.arbitration
        return doc

    @classmethod
    def from_json(cls, doc) -> ComponentInstance:
        def structure(key):
            v = doc.get(key)
            if v is None:
                return None
            if isinstance(v, str):
                return spec(v)
            return tc.from_json(v)

        kind = doc["kind"]
        spec_ = structure("spec")
        if kind == "event" and "expr" in doc:
            # the expression is kept for printing; an explicit structure wins
            spec_ = spec(doc["expr"]) if spec_ is None else spec_.with_source(parse(doc["expr"]))
        return cls(
            id=doc["id"],
            kind=kind,
            spec=spec_,
            inputs=tuple(doc.get("inputs", ())),
            output=doc.get("output"),
            invert=frozenset(doc.get("invert", ())),
            protocol=structure("protocol"),
            delay=DelayModel.from_json(doc.get("delay", 1)),
            port_delays={k: DelayModel.from_json(v) for k, v in doc.get("port_delays", {}).items()},
            arbitration_delay=(
                DelayModel.from_json(doc["arbitration_delay"]) if "arbitration_delay" in doc else None
            ),
            arbitration=doc.get("arbitration", "random"),
            init={k: bool(v) for k, v in doc.get("init", {}).items()},
        )


@dataclass(frozen=True)
class Channel:
    """Point-to-point wire. Channels sharing an isochronic ``fork`` id draw one
    delay per emission from the fork's model and add their own ``skew``."""

    id: str
    source: tuple[str, str]
    sink: tuple[str, str]
    delay: DelayModel = field(default_factory=DelayModel)
    fork: str | None = None
    skew: float = 0

    def to_json(self) -> dict:
        doc = {"id": self.id, "from": list(self.source), "to": list(self.sink), "delay": self.delay.to_json()}
        if self.fork is not None:
            doc["fork"] = self.fork
        if self.skew:
            doc["skew"] = self.skew
        return doc

    @classmethod
    def from_json(cls, doc) -> Channel:
        return cls(
            id=doc["id"],
            source=tuple(doc["from"]),
            sink=tuple(doc["to"]),
            delay=DelayModel.from_json(doc.get("delay", 1)),
            fork=doc.get("fork"),
            skew=doc.get("skew", 0),
        )


@dataclass(frozen=True)
class Fork:
    id: str
    delay: DelayModel
    isochronic: bool = True

    def to_json(self) -> dict:
        return {"id": self.id, "delay": self.delay.to_json(), "isochronic": self.isochronic}


@dataclass(frozen=True)
class Network:
    nodes: tuple[ComponentInstance, ...]
    channels: tuple[Channel, ...]
    forks: tuple[Fork, ...] = ()
    # inputs tied to the environment at their initial level, as (node, port)
    drivers: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        for name in ("nodes", "channels", "forks"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "drivers", tuple(tuple(d) for d in self.drivers))

    def node(self, node_id: str) -> ComponentInstance:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def validate(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise MalformedNetworkError("duplicate node ids")
        nodes = {n.id: n for n in self.nodes}
        forks = {f.id for f in self.forks}
        chan_ids = [c.id for c in self.channels]
        if len(set(chan_ids)) != len(chan_ids):
            raise MalformedNetworkError("duplicate channel ids")
        for n in self.nodes:
            if n.kind == "event":
                if n.spec is None:
                    raise MalformedNetworkError(f"event node {n.id} has no spec")
                tc.validate_circuit_spec(n.spec)
            elif n.kind in LEVEL_KINDS:
                if n.output is None or not n.inputs:
                    raise MalformedNetworkError(f"gate {n.id} needs inputs and an output")
                arity = {"C_LEVEL": 2, "LATCH": 2}.get(n.kind)
                if arity and len(n.inputs) != arity:
                    raise MalformedNetworkError(f"{n.kind} gate {n.id} needs {arity} inputs")
            else:
                raise MalformedNetworkError(f"node {n.id} has unknown kind {n.kind!r}")
        fed = set()
        for d in self.drivers:
            if d[0] not in nodes or d[1] not in nodes[d[0]].in_ports:
                raise MalformedNetworkError(f"driver {d} does not name an input port")
            fed.add(d)
        for c in self.channels:
            src, dst = nodes.get(c.source[0]), nodes.get(c.sink[0])
            if src is None or dst is None:
                raise MalformedNetworkError(f"channel {c.id} refers to an unknown node")
            if c.source[1] not in src.out_ports:
                raise MalformedNetworkError(f"channel {c.id}: {c.source[1]} is not an output of {src.id}")
            if c.sink[1] not in dst.in_ports:
                raise MalformedNetworkError(f"channel {c.id}: {c.sink[1]} is not an input of {dst.id}")
            if c.fork is not None and c.fork not in forks:
                raise MalformedNetworkError(f"channel {c.id} names unknown fork {c.fork}")
            if c.skew < 0:
                raise MalformedNetworkError(f"channel {c.id} has negative skew")
            fed.add(c.sink)
        for n in self.nodes:
            for p in n.in_ports:
                if (n.id, p) not in fed:
                    raise MalformedNetworkError(f"input {n.id}.{p} is not fed by any channel")

    def to_json(self) -> dict:
        return {
            "nodes": [n.to_json() for n in self.nodes],
            "channels": [c.to_json() for c in self.channels],
            "forks": [f.to_json() for f in self.forks],
            "drivers": [list(d) for d in self.drivers],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1, ensure_ascii=False)

    @classmethod
    def from_json(cls, doc) -> Network:
        return cls(
            nodes=tuple(ComponentInstance.from_json(n) for n in doc["nodes"]),
            channels=tuple(Channel.from_json(c) for c in doc["channels"]),
            forks=tuple(
                Fork(f["id"], DelayModel.from_json(f["delay"]), f.get("isochronic", True))
                for f in doc.get("forks", ())
            ),
            drivers=tuple(doc.get("drivers", ())),
        )


class InterferenceKind(str, Enum):
    COMPUTATION = "computation"
    TRANSMISSION = "transmission"
    OUTPUT = "output"


@dataclass(frozen=True)
class InterferenceReport:
    kind: InterferenceKind
    time: int
    location: str
    events: tuple[int, ...]
    state: int | None = None
    symbol: str | None = None
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "time": to_ticks(self.time),
            "location": self.location,
            "events": list(self.events),
            "state": self.state,
            "symbol": self.symbol,
            "detail": self.detail,
        }

    @classmethod
    def from_json(cls, doc) -> InterferenceReport:
        return cls(
            InterferenceKind(doc["kind"]),
            to_units(doc["time"]),
            doc["location"],
            tuple(doc["events"]),
            doc.get("state"),
            doc.get("symbol"),
            doc.get("detail", ""),
        )


@dataclass
class SimEvent:
    """One transition travelling along one channel."""

    id: int
    emission: int
    channel: str
    source: tuple[str, str]
    sink: tuple[str, str]
    rising: bool
    emit_time: int
    arrival_time: int
    emit_step: int
    causes: tuple[int, ...]
    deliver_step: int | None = None
    accepted: bool | None = None
    rendezvous: bool = False

    def label(self, side: str = "sink") -> str:
        port = self.sink[1] if side == "sink" else self.source[1]
        return port + ("↑" if self.rising else "↓")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "emission": self.emission,
            "channel": self.channel,
            "from": list(self.source),
            "to": list(self.sink),
            "edge": "up" if self.rising else "down",
            "emit_time": to_ticks(self.emit_time),
            "arrival_time": to_ticks(self.arrival_time),
            "emit_step": self.emit_step,
            "deliver_step": self.deliver_step,
            "causes": list(self.causes),
            "accepted": self.accepted,
            "rendezvous": self.rendezvous,
        }

    @classmethod
    def from_json(cls, doc) -> SimEvent:
        return cls(
            id=doc["id"],
            emission=doc["emission"],
            channel=doc["channel"],
            source=tuple(doc["from"]),
            sink=tuple(doc["to"]),
            rising=doc["edge"] == "up",
            emit_time=to_units(doc["emit_time"]),
            arrival_time=to_units(doc["arrival_time"]),
            emit_step=doc["emit_step"],
            deliver_step=doc.get("deliver_step"),
            causes=tuple(doc.get("causes", ())),
            accepted=doc.get("accepted"),
            rendezvous=doc.get("rendezvous", False),
        )


@dataclass
class SimTrace:
    events: list[SimEvent]
    interference: list[InterferenceReport]
    halted: bool = False
    seed: int | None = None

    def delivered(self) -> list[SimEvent]:
        return sorted((e for e in self.events if e.deliver_step is not None), key=lambda e: e.deliver_step)

    def jsonl(self) -> str:
        lines = [json.dumps(e.to_json(), sort_keys=True, ensure_ascii=False) for e in self.events]
        summary = {
            "summary": True,
            "seed": self.seed,
            "events": len(self.events),
            "halted": self.halted,
            "interference": [r.to_json() for r in self.interference],
        }
        lines.append(json.dumps(summary, sort_keys=True, ensure_ascii=False))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> SimTrace:
        events, reports, halted, seed = [], [], False, None
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            if doc.get("summary"):
                reports = [InterferenceReport.from_json(r) for r in doc.get("interference", ())]
                halted = doc.get("halted", False)
                seed = doc.get("seed")
            else:
                events.append(SimEvent.from_json(doc))
        return cls(events, reports, halted, seed)


# --------------------------------------------------------------------------
# node behaviour


def gate_value(node: ComponentInstance, levels: Mapping[str, bool], current: bool) -> bool:
    vals = [levels[p] != (p in node.invert) for p in node.inputs]
    if node.kind == "AND":
        return all(vals)
    if node.kind == "OR":
        return any(vals)
    if node.kind == "XOR":
        return sum(vals) % 2 == 1
    if node.kind == "C_LEVEL":
        return vals[0] if vals[0] == vals[1] else current
    if node.kind == "LATCH":
        x, e = vals
        return latch_next(x, e, current)
    raise SimulationError(f"unknown gate kind {node.kind}")


def arbitrate(candidates: Sequence[str], rng: random.Random, policy: str = "random",
              enabled_since: Mapping[str, int] | None = None) -> str:
    """Pick one of several mutually exclusive outputs.

    ``random`` draws uniformly from the seeded generator; ``fifo`` takes the
    output enabled longest, ties going to the smaller name.
    """
    cands = sorted(candidates)
    if len(cands) == 1:
        return cands[0]
    if policy == "random":
        return cands[rng.randrange(len(cands))]
    if policy == "fifo":
        since = enabled_since or {}
        return min(cands, key=lambda c: (since.get(c, 0), c))
    raise SimulationError(f"unknown arbitration policy {policy!r}")


class _Halt(Exception):
    pass


class _Run:
    def __init__(self, net: Network, seed: int, on_interference: str, latch_window: float, tie_shuffle: bool):
        net.validate()
        if on_interference not in ("halt", "log"):
            raise SimulationError(f"on_interference must be 'halt' or 'log', not {on_interference!r}")
        self.net = net
        self.rng = random.Random(seed)
        self.tie_rng = random.Random(seed ^ 0x5EED) if tie_shuffle else None
        self.halt = on_interference == "halt"
        self.latch_window = to_units(latch_window)
        self.nodes = {n.id: n for n in net.nodes}
        self.forks = {f.id: f for f in net.forks}
        self.out_channels: dict[tuple[str, str], list[Channel]] = {}
        for c in net.channels:
            self.out_channels.setdefault(c.source, []).append(c)
        self.chan_level = {c.id: False for c in net.channels}
        self.chan_inflight = {c.id: 0 for c in net.channels}
        self.chan_count = {c.id: 0 for c in net.channels}
        self.fork_count: dict[str, int] = {}
        self.port_count: dict[tuple[str, str], int] = {}
        self.queue: list = []
        self.seq = 0
        self.step = 0
        self.now = 0
        self.events: list[SimEvent] = []
        self.reports: list[InterferenceReport] = []
        self.emissions = 0
        # per-node state
        self.state: dict[str, int] = {}
        self.pending: dict[str, dict[str, int]] = {}  # node -> {port: token}
        self.tokens: dict[int, tuple] = {}
        self.enabled_since: dict[str, dict[str, int]] = {}
        self.levels: dict[str, dict[str, bool]] = {}
        self.out_level: dict[str, bool] = {}
        self.proto: dict[str, int | None] = {}
        self.last_delivery: dict[str, int | None] = {}
        self.last_edge_time: dict[tuple[str, str], int] = {}


    # -- bookkeeping ------------------------------------------------------
    def report(self, kind, location, events, state=None, symbol=None, detail=""):
        self.reports.append(InterferenceReport(kind, self.now, location, tuple(events), state, symbol, detail))
        if self.halt:
            raise _Halt()

    def push(self, time: int, kind: str, payload):
        self.seq += 1
        tie = self.tie_rng.random() if self.tie_rng else 0
        heapq.heappush(self.queue, (time, tie, self.seq, kind, payload))

    def delay_for(self, node: ComponentInstance, port: str) -> int:
        model = node.port_delays.get(port, node.delay)
        k = self.port_count.get((node.id, port), 0)
        return model.sample(self.rng, k)

    # -- emission ---------------------------------------------------------
    def emit(self, node_id: str, port: str):
        causes = () if self.last_delivery[node_id] is None else (self.last_delivery[node_id],)
        self.step += 1
        emission = self.emissions
        self.emissions += 1
        self.port_count[(node_id, port)] = self.port_count.get((node_id, port), 0) + 1
        fork_base: dict[str, int] = {}
        for c in self.out_channels.get((node_id, port), ()):
            if c.fork is not None:
                f = self.forks[c.fork]
                if f.isochronic:
                    if c.fork not in fork_base:
                        k = self.fork_count.get(c.fork, 0)
                        fork_base[c.fork] = f.delay.sample(self.rng, k)
                        self.fork_count[c.fork] = k + 1
                    d = fork_base[c.fork]
                else:
                    d = f.delay.sample(self.rng, self.chan_count[c.id])
            else:
                d = c.delay.sample(self.rng, self.chan_count[c.id])
            d += to_units(c.skew)
            self.chan_count[c.id] += 1
            self.chan_level[c.id] = not self.chan_level[c.id]
            ev = SimEvent(
                id=len(self.events),
                emission=emission,
                channel=c.id,
                source=(node_id, port),
                sink=c.sink,
                rising=self.chan_level[c.id],
                emit_time=self.now,
                arrival_time=self.now + d,
                emit_step=self.step,
                causes=causes,
            )
            self.events.append(ev)
            if self.chan_inflight[c.id]:
                self.report(InterferenceKind.TRANSMISSION, c.id, (ev.id,), symbol=port,
                            detail="second event emitted while one is in flight")
            self.chan_inflight[c.id] += 1
            self.push(ev.arrival_time, "deliver", ev.id)

    # -- event automata -----------------------------------------------------
    def schedule_event_node(self, node: ComponentInstance):
        t = node.spec.traces
        q = self.state[node.id]
        pend = self.pending[node.id]
        since = self.enabled_since[node.id]
        outputs = [a for a in t.enabled(q) if a in node.spec.outputs]
        for a in list(pend):
            if a not in outputs:
                token = pend.pop(a)
                self.tokens.pop(token, None)
                self.report(InterferenceKind.COMPUTATION, node.id, (), state=q, symbol=a,
                            detail="scheduled output disabled before it fired")
        for a in list(since):
            if a not in outputs:
                del since[a]
        for a in outputs:
            since.setdefault(a, self.now)

        def conflict(x, y):
            return t.step(t.step(q, x), y) is None or t.step(t.step(q, y), x) is None

        free = [a for a in outputs if a not in pend and not any(conflict(a, p) for p in pend)]
        while free:
            a = free[0]
            group = [b for b in free if b == a or conflict(a, b)]
            extra = 0
            if len(group) > 1:
                a = arbitrate(group, self.rng, node.arbitration, since)
                if node.arbitration_delay is not None:
                    extra = node.arbitration_delay.sample(self.rng)
            self.fire_later(node, a, self.delay_for(node, a) + extra)
            free = [b for b in free if b not in group]

    def fire_later(self, node: ComponentInstance, port: str, delay: int):
        self.seq += 1
        token = self.seq
        self.pending[node.id][port] = token
        self.tokens[token] = (node.id, port)
        self.push(self.now + delay, "fire", token)

    def deliver_event_node(self, node: ComponentInstance, ev: SimEvent):
        t = node.spec.traces
        q = self.state[node.id]
        sym = ev.sink[1]
        nxt = t.step(q, sym)
        if nxt is None:
            ev.accepted = False
            self.report(InterferenceKind.COMPUTATION, node.id, (ev.id,), state=q, symbol=sym,
                        detail="symbol not enabled")
            return
        ev.accepted = True
        self.state[node.id] = nxt
        ev.rendezvous = self._waiting(t, nxt, node.spec.inputs)
        self.schedule_event_node(node)

    @staticmethod
    def _waiting(t, q, inputs) -> bool:
        return sum(1 for a in t.enabled(q) if a in inputs) >= 2

    # -- level gates ---------------------------------------------------------
    def advance_protocol(self, node: ComponentInstance, symbol: str, ev_ids, what: str) -> bool:
        if node.protocol is None or self.proto[node.id] is None:
            return True
        q = self.proto[node.id]
        nxt = node.protocol.traces.step(q, symbol)
        if nxt is None:
            self.proto[node.id] = None  # stop monitoring after the first deviation
            self.report(InterferenceKind.COMPUTATION, node.id, ev_ids, state=q, symbol=symbol,
                        detail=f"{what} out of protocol order")
            return False
        self.proto[node.id] = nxt
        return True

    def deliver_gate(self, node: ComponentInstance, ev: SimEvent):
        port = ev.sink[1]
        lv = self.levels[node.id]
        lv[port] = ev.rising
        if node.kind == "LATCH":
            x, e = node.inputs
            other = e if port == x else x
            falling_e = (port == e and not ev.rising) or (other == e and not lv[e])
            last = self.last_edge_time.get((node.id, other))
            if falling_e and last is not None and self.now - last <= self.latch_window:
                self.report(InterferenceKind.COMPUTATION, node.id, (ev.id,), symbol=port,
                            detail="data edge races falling enable")
        self.last_edge_time[(node.id, port)] = self.now
        ev.accepted = self.advance_protocol(node, port, (ev.id,), "input edge")
        if node.protocol is not None and self.proto[node.id] is not None:
            ev.rendezvous = self._waiting(node.protocol.traces, self.proto[node.id], node.protocol.inputs)
        self.evaluate_gate(node, ev.id)

    def evaluate_gate(self, node: ComponentInstance, cause: int | None):
        driven = self.out_level[node.id]
        target = gate_value(node, self.levels[node.id], driven)
        pend = self.pending[node.id]
        if node.output in pend:
            if target == driven:
                token = pend.pop(node.output)
                self.tokens.pop(token, None)
                self.report(InterferenceKind.COMPUTATION, node.id, () if cause is None else (cause,),
                            symbol=node.output, detail="glitch: pending output edge cancelled")
        elif target != driven:
            self.fire_later(node, node.output, self.delay_for(node, node.output))

    # -- main loop ------------------------------------------------------------
    def start(self):
        sinks: dict[tuple[str, str], list[str]] = {}
        for c in self.net.channels:
            sinks.setdefault(c.sink, []).append(c.id)
        for (node, port), chans in sorted(sinks.items()):
            if len(chans) > 1:
                self.report(InterferenceKind.OUTPUT, node, (), symbol=port,
                            detail=f"input {node}.{port} driven by channels {sorted(chans)}")
        for n in self.net.nodes:
            self.pending[n.id] = {}
            self.enabled_since[n.id] = {}
            self.last_delivery[n.id] = None
            if n.protocol is not None:
                self.proto[n.id] = n.protocol.traces.initial
            if n.kind == "event":
                self.state[n.id] = n.spec.traces.initial
            else:
                self.levels[n.id] = {p: bool(n.init.get(p, False)) for p in n.inputs}
                self.out_level[n.id] = bool(n.init.get(n.output, False))
        for n in self.net.nodes:
            if n.kind == "event":
                self.schedule_event_node(n)
            else:
                self.evaluate_gate(n, None)

    def run(self, horizon: int, until: int | None):
        delivered = 0
        halted = False
        try:
            self.start()
            while self.queue and delivered < horizon:
                time, _tie, _seq, kind, payload = heapq.heappop(self.queue)
                if until is not None and time > until:
                    break
                self.now = time
                if kind == "fire":
                    where = self.tokens.pop(payload, None)
                    if where is None:
                        continue
                    node_id, port = where
                    node = self.nodes[node_id]
                    del self.pending[node_id][port]
                    if node.kind == "event":
                        self.state[node_id] = node.spec.traces.step(self.state[node_id], port)
                        self.emit(node_id, port)
                        self.schedule_event_node(node)
                    else:
                        self.out_level[node_id] = not self.out_level[node_id]
                        self.emit(node_id, port)
                        self.advance_protocol(node, port, (), "output edge")
                else:
                    ev = self.events[payload]
                    self.chan_inflight[ev.channel] -= 1
                    self.step += 1
                    ev.deliver_step = self.step
                    delivered += 1
                    node = self.nodes[ev.sink[0]]
                    self.last_delivery[node.id] = ev.id
                    if node.kind == "event":
                        self.deliver_event_node(node, ev)
                    else:
                        self.deliver_gate(node, ev)
        except _Halt:
            halted = True
        return halted


def simulate(
    net: Network,
    horizon: int = 1000,
    seed: int = 0,
    on_interference: str = "halt",
    until: float | None = None,
    latch_window: float = 0,
    tie_shuffle: bool = False,
) -> SimTrace:
    """Run ``net`` until ``horizon`` deliveries (or simulated time ``until``).

    ``on_interference="halt"`` stops at the first report; ``"log"`` records it,
    drops the offending symbol at event automata and carries on.
    """
    run = _Run(net, seed, on_interference, latch_window, tie_shuffle)
    halted = run.run(horizon, None if until is None else to_units(until))
    return SimTrace(run.events, run.reports, halted, seed)


# --------------------------------------------------------------------------
# replay


@dataclass
class ReplayResult:
    ok: bool
    reports: list[InterferenceReport]
    problems: list[str]


def replay(trace: SimTrace, net: Network) -> ReplayResult:
    """Re-execute the logged emissions and deliveries in step order.

    Confirms every automaton transition and every gate output edge, and
    re-derives the computation-interference reports from the log.
    """
    net.validate()
    nodes = {n.id: n for n in net.nodes}
    chans = {c.id: c for c in net.channels}
    problems: list[str] = []
    reports: list[InterferenceReport] = []
    for ev in trace.events:
        c = chans.get(ev.channel)
        if c is None or c.source != ev.source or c.sink != ev.sink:
            raise NetworkMismatchError(f"event {ev.id} does not match channel {ev.channel}")

    state = {n.id: n.spec.traces.initial for n in net.nodes if n.kind == "event"}
    proto = {n.id: n.protocol.traces.initial for n in net.nodes if n.protocol is not None}
    levels = {n.id: {p: bool(n.init.get(p, False)) for p in n.inputs} for n in net.nodes if n.kind != "event"}
    out_level = {n.id: bool(n.init.get(n.output, False)) for n in net.nodes if n.kind != "event"}
    excited = {n.id: False for n in net.nodes if n.kind != "event"}
    for nid in excited:
        excited[nid] = gate_value(nodes[nid], levels[nid], out_level[nid]) != out_level[nid]
    chan_level = {c: False for c in chans}
    delivered_ids = set()

    steps = []
    branches: dict[int, list[SimEvent]] = {}
    for ev in trace.events:
        if ev.emission not in branches:
            steps.append((ev.emit_step, "emit", ev))
        branches.setdefault(ev.emission, []).append(ev)
        if ev.deliver_step is not None:
            steps.append((ev.deliver_step, "deliver", ev))
    steps.sort(key=lambda s: (s[0], s[1] == "deliver"))

    def proto_step(nid, sym, ev_ids, what, time):
        if nid not in proto or proto[nid] is None:
            return
        nxt = nodes[nid].protocol.traces.step(proto[nid], sym)
        if nxt is None:
            reports.append(InterferenceReport(InterferenceKind.COMPUTATION, time, nid, tuple(ev_ids),
                                              proto[nid], sym, f"{what} out of protocol order"))
            proto[nid] = None
        else:
            proto[nid] = nxt

    for _step, kind, ev in steps:
        if kind == "emit":
            nid, port = ev.source
            node = nodes[nid]
            if ev.causes and not any(c in delivered_ids for c in ev.causes):
                problems.append(f"event {ev.id} emitted before its cause was delivered")
            if node.kind == "event":
                nxt = node.spec.traces.step(state[nid], port)
                if nxt is None or port not in node.spec.outputs:
                    problems.append(f"{nid} emitted {port} in state {state[nid]} where it is not enabled")
                else:
                    state[nid] = nxt
            else:
                if not excited[nid]:
                    problems.append(f"gate {nid} emitted {port} without being excited")
                out_level[nid] = not out_level[nid]
                excited[nid] = gate_value(node, levels[nid], out_level[nid]) != out_level[nid]
                proto_step(nid, port, (), "output edge", ev.emit_time)
            for e in branches[ev.emission]:
                chan_level[e.channel] = not chan_level[e.channel]
                if chan_level[e.channel] != e.rising:
                    problems.append(f"event {e.id} has the wrong edge direction")
        else:
            delivered_ids.add(ev.id)
            nid, port = ev.sink
            node = nodes[nid]
            if node.kind == "event":
                nxt = node.spec.traces.step(state[nid], port)
                if nxt is None:
                    if ev.accepted is not False:
                        problems.append(f"{nid} cannot accept {port} in state {state[nid]}")
                    reports.append(InterferenceReport(InterferenceKind.COMPUTATION, ev.arrival_time, nid,
                                                      (ev.id,), state[nid], port, "symbol not enabled"))
                else:
                    state[nid] = nxt
            else:
                levels[nid][port] = ev.rising
                proto_step(nid, port, (ev.id,), "input edge", ev.arrival_time)
                was = excited[nid]
                excited[nid] = gate_value(node, levels[nid], out_level[nid]) != out_level[nid]
                if was and not excited[nid]:
                    reports.append(InterferenceReport(InterferenceKind.COMPUTATION, ev.arrival_time, nid,
                                                      (ev.id,), None, node.output,
                                                      "glitch: pending output edge cancelled"))
    expected = [r for r in trace.interference if r.kind == InterferenceKind.COMPUTATION]
    ok = not problems and _same_reports(expected, reports)
    if not _same_reports(expected, reports):
        problems.append("computation-interference reports differ from the log")
    return ReplayResult(ok, reports, problems)


def _same_reports(a: Iterable[InterferenceReport], b: Iterable[InterferenceReport]) -> bool:
    key = lambda r: (r.time, r.location, r.symbol, r.detail, r.events)  # noqa: E731
    return sorted(map(key, a)) == sorted(map(key, b))
