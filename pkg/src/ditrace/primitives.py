"""Built-in components: the basic DI primitives, event-mode gate models, the
Q-element gate network and the token-ring allocation interface."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from . import trace_core as tc
from .composition import Decomposition
from .simulator import (
    Channel,
    ComponentInstance,
    DelayModel,
    Fork,
    Network,
    SimTrace,
    fixed,
    uniform,
)
from .spec_language import spec
from .trace_core import TraceStructure


class PrimitiveKind(str, Enum):
    WIRE = "WIRE"
    IWIRE = "IWIRE"
    FORK = "FORK"
    C_ELEMENT = "C_ELEMENT"
    TOGGLE = "TOGGLE"
    MERGE = "MERGE"
    SEQUENCER = "SEQUENCER"


# (text, default port names in the order make() expects them)
TABLE = {
    PrimitiveKind.WIRE: ("pref*[a?;b!]", ("a", "b")),
    PrimitiveKind.IWIRE: ("pref*[b!;a?]", ("a", "b")),
    PrimitiveKind.FORK: ("pref*[a?;b!||c!]", ("a", "b", "c")),
    PrimitiveKind.C_ELEMENT: ("pref*[a?||b?;c!]", ("a", "b", "c")),
    PrimitiveKind.TOGGLE: ("pref*[a?;b!;a?;c!]", ("a", "b", "c")),
    PrimitiveKind.MERGE: ("pref*[(a?|b?);c!]", ("a", "b", "c")),
    PrimitiveKind.SEQUENCER: ("pref*[a?;p!] || pref*[b?;q!] || pref*[n?;(p!|q!)]", ("a", "b", "n", "p", "q")),
}


def text(kind: PrimitiveKind | str) -> str:
    return TABLE[PrimitiveKind(kind)][0]


def make(kind: PrimitiveKind | str, ports: Sequence[str] | None = None) -> TraceStructure:
    """Instantiate a primitive, renaming its default ports to ``ports``."""
    kind = PrimitiveKind(kind)
    source, defaults = TABLE[kind]
    base = spec(source)
    if ports is None:
        return base
    ports = tuple(ports)
    if len(ports) != len(defaults):
        raise ValueError(f"{kind.value} takes {len(defaults)} ports, got {len(ports)}")
    if len(set(ports)) != len(ports):
        raise ValueError(f"duplicate port names in {ports}")
    return tc.rename(base, dict(zip(defaults, ports)))


# --------------------------------------------------------------------------
# event-mode views of level gates


def gate_event_spec(function, inputs: Sequence[str] = ("a", "b"), output: str = "c") -> TraceStructure:
    """Event-mode behaviour of a level gate computing ``function``.

    Every symbol is one transition of its wire. An input may change only while
    the output is stable; an excited output fires. Starts with all wires low.
    """
    inputs = tuple(inputs)

    def value(levels):
        return bool(function(*levels))

    def step(state, sym):
        levels, z = state
        excited = value(levels) != z
        if sym == output:
            return (levels, not z) if excited else None
        if excited:
            return None
        k = inputs.index(sym)
        return (levels[:k] + (not levels[k],) + levels[k + 1:], z)

    start = (tuple(False for _ in inputs), value(tuple(False for _ in inputs)))
    traces = tc.build_dfa(set(inputs) | {output}, start, step, lambda s: True)
    return TraceStructure(frozenset(inputs), frozenset({output}), traces)


def and_gate(inputs=("a", "b"), output="c") -> TraceStructure:
    return gate_event_spec(lambda *v: all(v), inputs, output)


def or_gate(inputs=("a", "b"), output="c") -> TraceStructure:
    return gate_event_spec(lambda *v: any(v), inputs, output)


# --------------------------------------------------------------------------
# Q-element


@dataclass(frozen=True)
class OrderConstraint:
    """``first`` must precede ``then`` on ``node``; labels like ``"y1↑"``."""

    node: str
    first: str
    then: str

    def to_json(self) -> dict:
        return {"node": self.node, "first": self.first, "then": self.then}


# the two pairs that only the isochronic forks keep in order
Q_ELEMENT_CONSTRAINTS = (
    OrderConstraint("B", "y1↑", "u↑"),
    OrderConstraint("A", "x1↓", "u↓"),
)


def q_element_network(
    delay: DelayModel | None = None,
    x_skew: tuple[float, float] = (0, 0),
    y_skew: tuple[float, float] = (0, 0),
    u_delays: tuple[DelayModel, DelayModel] | None = None,
) -> Network:
    """Q-element built from a level C-element and two and-gates.

    ``x_skew`` adds extra delay to the (x1, x2) branches of the xi fork and
    ``y_skew`` to the (y1, y2) branches of the yi fork. The X and Y nodes play
    the environment: X raises xi and waits for xo, Y waits for yo then answers
    on yi.
    """
    d = delay or uniform(1, 5)
    ua, ub = u_delays or (d, d)
    nodes = (
        ComponentInstance("X", "event", spec=spec("pref*[xi!;xo?]"), delay=d),
        ComponentInstance("Y", "event", spec=spec("pref*[yo?;yi!]"), delay=d),
        ComponentInstance(
            "C", "C_LEVEL", inputs=("x2", "y2"), output="u", delay=d,
            protocol=spec("pref*[(x2?||y2?);u!;(x2?||y2?);u!]"),
        ),
        # yo = x1 and not u
        ComponentInstance(
            "A", "AND", inputs=("x1", "u"), output="yo", invert=frozenset({"u"}), delay=d,
            protocol=spec("pref(x1?;*[yo!;u?;yo!;x1?;(u?||x1?)])"),
        ),
        # xo = u and not y1
        ComponentInstance(
            "B", "AND", inputs=("y1", "u"), output="xo", invert=frozenset({"y1"}), delay=d,
            protocol=spec("pref*[y1?;(u?||y1?);xo!;u?;xo!]"),
        ),
    )
    channels = (
        Channel("xi.x1", ("X", "xi"), ("A", "x1"), fork="xi", skew=x_skew[0]),
        Channel("xi.x2", ("X", "xi"), ("C", "x2"), fork="xi", skew=x_skew[1]),
        Channel("yi.y1", ("Y", "yi"), ("B", "y1"), fork="yi", skew=y_skew[0]),
        Channel("yi.y2", ("Y", "yi"), ("C", "y2"), fork="yi", skew=y_skew[1]),
        Channel("u.A", ("C", "u"), ("A", "u"), delay=ua),
        Channel("u.B", ("C", "u"), ("B", "u"), delay=ub),
        Channel("yo", ("A", "yo"), ("Y", "yo"), delay=d),
        Channel("xo", ("B", "xo"), ("X", "xo"), delay=d),
    )
    forks = (Fork("xi", d, isochronic=True), Fork("yi", d, isochronic=True))
    return Network(nodes, channels, forks)


# --------------------------------------------------------------------------
# token ring

ALLOC_TEXT = "pref*[a1?;p1!;a0?;p0!] || pref*[b?;(q!|p1!;a0?;q!)]"
ALLOC_PARTS = (
    ("sequencer", "pref*[a1?;p1!] || pref*[rq1?;q1!] || pref*[b?;(q1!|p1!)]"),
    ("iwire", "pref*[rq1!;q1?]"),
    ("wire_p0", "pref*[a0?;p0!]"),
    ("wire_q0", "pref*[a0?;q0!]"),
    ("merge", "pref*[(q1?|q0?);q!]"),
)
ALLOC_BOUNDARY = ("a1", "a0", "b", "p1", "p0", "q")
ALLOC_INTERNAL = ("rq1", "q1", "q0")
MACHINE_TEXT = "pref*[a1?;p1!;a0?;p0!]"


def _suffix(index: int | None):
    return (lambda a: a) if index is None else (lambda a: f"{a}_{index}")


def token_ring_alloc(index: int | None = None) -> tuple[TraceStructure, Decomposition]:
    """The allocation interface of one ring item and its five-part decomposition.

    With an ``index`` every symbol gets a ``_<index>`` suffix.
    """
    target = spec(ALLOC_TEXT)
    parts = [spec(t) for _, t in ALLOC_PARTS]
    if index is not None:
        sfx = _suffix(index)
        target = tc.rename(target, {a: sfx(a) for a in target.alphabet})
        parts = [tc.rename(p, {a: sfx(a) for a in p.alphabet}) for p in parts]
    return target, Decomposition(target, tuple(parts), tuple(n for n, _ in ALLOC_PARTS))


@dataclass(frozen=True)
class MachineSchedule:
    """How the machine behind one ring item behaves.

    ``think`` is the delay before each request, ``use`` the time the resource
    is held; ``idle`` machines never ask.
    """

    think: DelayModel = fixed(1)
    use: DelayModel = fixed(1)
    idle: bool = False


def token_ring(
    n: int,
    machines: Sequence[MachineSchedule] | None = None,
    delay: DelayModel | None = None,
    arbitration: str = "random",
    arbitration_delay: DelayModel | None = None,
) -> Network:
    """Ring of ``n`` allocation items, each decomposed into its five parts.

    The merge of item i feeds the sequencer of item i+1; an initially firing
    wire on the link from the last item to item 0 puts the single token in
    circulation.
    """
    if n < 1:
        raise ValueError("a ring needs at least one item")
    d = delay or fixed(1)
    machines = tuple(machines) if machines is not None else (MachineSchedule(),) * n
    if len(machines) != n:
        raise ValueError(f"{len(machines)} machine schedules for {n} items")
    nodes, channels = [], []
    for i in range(n):
        kinds = dict(ALLOC_PARTS)
        for part, body in kinds.items():
            nodes.append(ComponentInstance(
                f"{part}_{i}", "event", spec=spec(body), delay=d,
                arbitration=arbitration if part == "sequencer" else "random",
                arbitration_delay=arbitration_delay if part == "sequencer" else None,
            ))
        m = machines[i]
        stub = tc.reflect(spec(MACHINE_TEXT))
        if m.idle:
            stub = tc.epsilon(stub.inputs, stub.outputs)
        nodes.append(ComponentInstance(
            f"machine_{i}", "event", spec=stub, delay=d,
            port_delays={"a1": m.think, "a0": m.use},
        ))
        wire = [
            ("rq1", f"iwire_{i}", f"sequencer_{i}"),
            ("q1", f"sequencer_{i}", f"iwire_{i}"),
            ("q1", f"sequencer_{i}", f"merge_{i}"),
            ("q0", f"wire_q0_{i}", f"merge_{i}"),
            ("a1", f"machine_{i}", f"sequencer_{i}"),
            ("p1", f"sequencer_{i}", f"machine_{i}"),
            ("a0", f"machine_{i}", f"wire_p0_{i}"),
            ("a0", f"machine_{i}", f"wire_q0_{i}"),
            ("p0", f"wire_p0_{i}", f"machine_{i}"),
        ]
        for port, src, dst in wire:
            channels.append(Channel(f"{port}_{i}:{dst}", (src, port), (dst, port), delay=d))
    nodes.append(ComponentInstance("token", "event", spec=spec("pref*[b!;q?]"), delay=d))
    for i in range(n):
        src = f"merge_{i}"
        if i == n - 1:
            channels.append(Channel(f"q_{i}:token", (src, "q"), ("token", "q"), delay=d))
        else:
            channels.append(Channel(f"q_{i}:sequencer_{i + 1}", (src, "q"), (f"sequencer_{i + 1}", "b"), delay=d))
    channels.append(Channel("b:sequencer_0", ("token", "b"), ("sequencer_0", "b"), delay=d))
    return Network(tuple(nodes), tuple(channels))


def _ring_size(net: Network) -> int:
    return sum(1 for node in net.nodes if node.id.startswith("merge_"))


def boundary_trace(trace: SimTrace, net: Network, i: int) -> tuple[str, ...]:
    """What the environment of item ``i`` observes, as Alloc symbols.

    Inputs of the item count when the environment emits them, outputs when
    they reach the environment. One emission feeding two readers counts once.
    """
    inside = {f"{part}_{i}" for part, _ in ALLOC_PARTS}
    steps = []
    seen = set()
    for ev in trace.events:
        src_in, dst_in = ev.source[0] in inside, ev.sink[0] in inside
        if src_in == dst_in:
            continue
        if dst_in:
            if ev.emission in seen:
                continue
            seen.add(ev.emission)
            steps.append((ev.emit_step, ev.sink[1]))
        elif ev.deliver_step is not None:
            steps.append((ev.deliver_step, ev.source[1]))
    return tuple(sym for _, sym in sorted(steps))


def check_conformance(trace: SimTrace, net: Network) -> list[tuple[int, tuple[str, ...]]]:
    """Items whose observed boundary trace falls outside the Alloc spec."""
    target = spec(ALLOC_TEXT)
    bad = []
    for i in range(_ring_size(net)):
        obs = boundary_trace(trace, net, i)
        if not target.contains(obs):
            bad.append((i, obs))
    return bad


def token_holders(trace: SimTrace, net: Network) -> list[dict[str, int]]:
    """Token location counts after every simulation step.

    A token sits in the injector, in flight on a ring link, or inside an item
    between its b arrival and its q emission.
    """
    n = _ring_size(net)
    moves = []  # (step, holder losing the token, holder gaining it)
    for ev in trace.events:
        if ev.source[1] not in ("q", "b") or ev.sink[1] not in ("q", "b"):
            continue
        owner = "token" if ev.source[0] == "token" else f"item_{ev.source[0].rsplit('_', 1)[1]}"
        taker = "token" if ev.sink[0] == "token" else f"item_{ev.sink[0].rsplit('_', 1)[1]}"
        moves.append((ev.emit_step, owner, f"link:{ev.channel}"))
        if ev.deliver_step is not None:
            moves.append((ev.deliver_step, f"link:{ev.channel}", taker))
    count = {"token": 1, **{f"item_{i}": 0 for i in range(n)}}
    count.update({f"link:{c.id}": 0 for c in net.channels if c.source[1] == "q" or c.source[1] == "b"})
    history = [dict(count)]
    for _, lose, gain in sorted(moves):
        count[lose] -= 1
        count[gain] += 1
        history.append(dict(count))
    return history


def token_conserved(trace: SimTrace, net: Network) -> bool:
    return all(
        sum(h.values()) == 1 and all(v in (0, 1) for v in h.values())
        for h in token_holders(trace, net)
    )


def sequencer_matches_table() -> bool:
    """The first Alloc part is the basic sequencer with renamed ports."""
    renamed = make(PrimitiveKind.SEQUENCER, ("a1", "rq1", "b", "p1", "q1"))
    return tc.equals(renamed, spec(ALLOC_PARTS[0][1]))


def all_primitives() -> dict[str, TraceStructure]:
    return {k.value: make(k) for k in PrimitiveKind}
