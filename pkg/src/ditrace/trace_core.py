"""Trace structures over regular trace sets.

A trace structure is a triple ``<inputs, outputs, traces>`` where ``traces`` is a
regular set of finite symbol sequences. Trace sets are stored as minimal
deterministic acceptors in a canonical numbering, so two structures are equal
(``==``) exactly when their alphabets and languages coincide.

Missing transitions lead to an implicit dead state; every stored state is live
(can reach an accepting state), except the lone initial state of the empty set.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

Symbol = str
Trace = tuple[str, ...]

DEFAULT_ENUMERATION_LIMIT = 12


class TraceError(Exception):
    """Base class for errors raised by the trace calculus."""


class EnumerationBoundError(TraceError):
    pass


class InvalidSpecError(TraceError):
    """Raised when a structure is not a valid circuit specification."""


@dataclass(frozen=True)
class RegularTraceSet:
    """Canonical minimal DFA. ``transitions`` is a sorted tuple of ``(state, symbol, state)``."""

    alphabet: frozenset[str]
    n_states: int
    initial: int
    accepting: frozenset[int]
    transitions: tuple[tuple[int, str, int], ...]
    _delta: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_delta", {(p, a): q for p, a, q in self.transitions})

    def step(self, state: int | None, symbol: str) -> int | None:
        if state is None:
            return None
        return self._delta.get((state, symbol))

    def run(self, trace: Iterable[str], state: int | None = None) -> int | None:
        q = self.initial if state is None else state
        for a in trace:
            q = self._delta.get((q, a))
            if q is None:
                return None
        return q

    def accepts(self, trace: Iterable[str]) -> bool:
        return self.run(trace) in self.accepting

    def is_empty(self) -> bool:
        return not self.accepting

    def enabled(self, state: int) -> list[str]:
        """Symbols with a live successor from ``state``, sorted."""
        return sorted(a for a in self.alphabet if (state, a) in self._delta)

    def same_language(self, other: RegularTraceSet) -> bool:
        """Language equality, ignoring declared alphabets."""
        return (
            self.n_states == other.n_states
            and self.accepting == other.accepting
            and self.transitions == other.transitions
        )

    def access_strings(self) -> dict[int, Trace]:
        """Shortlex-least trace reaching each state."""
        out = {self.initial: ()}
        queue = deque([self.initial])
        symbols = sorted(self.alphabet)
        while queue:
            p = queue.popleft()
            for a in symbols:
                q = self._delta.get((p, a))
                if q is not None and q not in out:
                    out[q] = out[p] + (a,)
                    queue.append(q)
        return out


def build_dfa(
    alphabet: Iterable[str],
    start: Hashable,
    step: Callable[[Hashable, str], Hashable | None],
    accepting: Callable[[Hashable], bool],
) -> RegularTraceSet:
    """Explore an implicit DFA from ``start`` and return its canonical form."""
    symbols = sorted(set(alphabet))
    index = {start: 0}
    order = [start]
    delta: dict[tuple[int, str], int] = {}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        i = index[s]
        for a in symbols:
            t = step(s, a)
            if t is None:
                continue
            j = index.get(t)
            if j is None:
                j = index[t] = len(order)
                order.append(t)
                queue.append(t)
            delta[(i, a)] = j
    final = {index[s] for s in order if accepting(s)}
    return _canonical(frozenset(symbols), len(order), 0, final, delta)


def _canonical(
    alphabet: frozenset[str],
    n: int,
    initial: int,
    accepting: set[int],
    delta: Mapping[tuple[int, str], int],
) -> RegularTraceSet:
    symbols = sorted(alphabet)
    # trim to live states
    preds: dict[int, set[int]] = {}
    for (p, _a), q in delta.items():
        preds.setdefault(q, set()).add(p)
    live = set(accepting)
    queue = deque(accepting)
    while queue:
        q = queue.popleft()
        for p in preds.get(q, ()):
            if p not in live:
                live.add(p)
                queue.append(p)
    if initial not in live:
        return RegularTraceSet(alphabet, 1, 0, frozenset(), ())
    trans = {k: v for k, v in delta.items() if k[0] in live and v in live}

    # Moore refinement; the dead state is the implicit class -1
    states = sorted(live)
    cls = {s: int(s in accepting) for s in states}
    while True:
        sigs = {
            s: (cls[s], tuple(cls[trans[(s, a)]] if (s, a) in trans else -1 for a in symbols))
            for s in states
        }
        numbering: dict[tuple, int] = {}
        new = {s: numbering.setdefault(sigs[s], len(numbering)) for s in states}
        if len(numbering) == len(set(cls.values())):
            cls = new
            break
        cls = new

    # renumber blocks by BFS over sorted symbols
    rep_delta = {}
    for (p, a), q in trans.items():
        rep_delta[(cls[p], a)] = cls[q]
    start = cls[initial]
    ids = {start: 0}
    queue = deque([start])
    out = []
    while queue:
        b = queue.popleft()
        for a in symbols:
            c = rep_delta.get((b, a))
            if c is None:
                continue
            if c not in ids:
                ids[c] = len(ids)
                queue.append(c)
            out.append((ids[b], a, ids[c]))
    final = frozenset(ids[cls[s]] for s in states if s in accepting)
    return RegularTraceSet(alphabet, len(ids), 0, final, tuple(sorted(out)))


def trace_set_from_words(alphabet: Iterable[str], words: Iterable[Sequence[str]]) -> RegularTraceSet:
    """Finite trace set, via a prefix tree."""
    words = {tuple(w) for w in words}
    alphabet = set(alphabet) | {a for w in words for a in w}
    prefixes = {w[:i] for w in words for i in range(len(w) + 1)}
    return build_dfa(
        alphabet,
        (),
        lambda s, a: s + (a,) if s + (a,) in prefixes else None,
        lambda s: s in words,
    )


def _with_alphabet(ts: RegularTraceSet, alphabet: frozenset[str]) -> RegularTraceSet:
    if ts.alphabet == alphabet:
        return ts
    return RegularTraceSet(alphabet, ts.n_states, ts.initial, ts.accepting, ts.transitions)


def _determinize(
    alphabet: Iterable[str],
    starts: Iterable[int],
    eps: Mapping[int, set[int]],
    trans: Mapping[tuple[int, str], set[int]],
    final: set[int],
) -> RegularTraceSet:
    def closure(states):
        seen = set(states)
        stack = list(states)
        while stack:
            s = stack.pop()
            for t in eps.get(s, ()):
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)

    def step(S, a):
        nxt = set()
        for s in S:
            nxt |= trans.get((s, a), set())
        return closure(nxt) if nxt else None

    return build_dfa(alphabet, closure(starts), step, lambda S: bool(S & final))


class _NFA:
    """Scratch epsilon-NFA assembled from canonical acceptors."""

    def __init__(self):
        self.n = 0
        self.eps: dict[int, set[int]] = {}
        self.trans: dict[tuple[int, str], set[int]] = {}

    def fresh(self) -> int:
        self.n += 1
        return self.n - 1

    def embed(self, ts: RegularTraceSet, rename: Callable[[str], str | None] = lambda a: a):
        """Copy ``ts``; symbols mapped to ``None`` become epsilon moves."""
        base = self.n
        self.n += ts.n_states
        for p, a, q in ts.transitions:
            b = rename(a)
            if b is None:
                self.eps.setdefault(base + p, set()).add(base + q)
            else:
                self.trans.setdefault((base + p, b), set()).add(base + q)
        return base + ts.initial, {base + f for f in ts.accepting}

    def add_eps(self, p: int, q: int):
        self.eps.setdefault(p, set()).add(q)


@dataclass(frozen=True)
class TraceStructure:
    """``<inputs, outputs, traces>``; ``source`` optionally keeps the expression it came from."""

    inputs: frozenset[str]
    outputs: frozenset[str]
    traces: RegularTraceSet
    source: object = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        inputs, outputs = frozenset(self.inputs), frozenset(self.outputs)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        alpha = inputs | outputs
        if not self.traces.alphabet <= alpha:
            extra = sorted(self.traces.alphabet - alpha)
            raise TraceError(f"trace alphabet has undeclared symbols {extra}")
        object.__setattr__(self, "traces", _with_alphabet(self.traces, alpha))

    @property
    def alphabet(self) -> frozenset[str]:
        return self.inputs | self.outputs

    def __repr__(self) -> str:
        return (
            f"TraceStructure(inputs={sorted(self.inputs)}, outputs={sorted(self.outputs)}, "
            f"states={self.traces.n_states})"
        )

    def with_source(self, source) -> TraceStructure:
        return TraceStructure(self.inputs, self.outputs, self.traces, source)

    def contains(self, trace: Iterable[str]) -> bool:
        return contains(self, trace)

    def to_json(self) -> dict:
        return to_json(self)


def structure(inputs: Iterable[str], outputs: Iterable[str], words: Iterable[Sequence[str]]) -> TraceStructure:
    """Structure with a finite trace set."""
    inputs, outputs = frozenset(inputs), frozenset(outputs)
    return TraceStructure(inputs, outputs, trace_set_from_words(inputs | outputs, words))


def input_symbol(name: str) -> TraceStructure:
    """``a?`` = <{a}, {}, {a}>."""
    return structure({name}, (), [(name,)])


def output_symbol(name: str) -> TraceStructure:
    """``b!`` = <{}, {b}, {b}>."""
    return structure((), {name}, [(name,)])


def empty(inputs: Iterable[str] = (), outputs: Iterable[str] = ()) -> TraceStructure:
    return structure(inputs, outputs, [])


def epsilon(inputs: Iterable[str] = (), outputs: Iterable[str] = ()) -> TraceStructure:
    return structure(inputs, outputs, [()])


def concat(r: TraceStructure, s: TraceStructure) -> TraceStructure:
    nfa = _NFA()
    r0, rf = nfa.embed(r.traces)
    s0, sf = nfa.embed(s.traces)
    for f in rf:
        nfa.add_eps(f, s0)
    alpha = r.alphabet | s.alphabet
    ts = _determinize(alpha, [r0], nfa.eps, nfa.trans, sf)
    return TraceStructure(r.inputs | s.inputs, r.outputs | s.outputs, ts)


def union(r: TraceStructure, s: TraceStructure) -> TraceStructure:
    nfa = _NFA()
    r0, rf = nfa.embed(r.traces)
    s0, sf = nfa.embed(s.traces)
    alpha = r.alphabet | s.alphabet
    ts = _determinize(alpha, [r0, s0], nfa.eps, nfa.trans, rf | sf)
    return TraceStructure(r.inputs | s.inputs, r.outputs | s.outputs, ts)


def repeat(r: TraceStructure) -> TraceStructure:
    nfa = _NFA()
    hub = nfa.fresh()
    r0, rf = nfa.embed(r.traces)
    nfa.add_eps(hub, r0)
    for f in rf:
        nfa.add_eps(f, hub)
    ts = _determinize(r.alphabet, [hub], nfa.eps, nfa.trans, {hub})
    return TraceStructure(r.inputs, r.outputs, ts)


def pref(r: TraceStructure) -> TraceStructure:
    t = r.traces
    if t.is_empty():
        return r
    everything = frozenset(range(t.n_states))  # canonical states are all live
    ts = _canonical(t.alphabet, t.n_states, t.initial, everything, t._delta)
    return TraceStructure(r.inputs, r.outputs, ts)


def project(r: TraceStructure, keep: Iterable[str]) -> TraceStructure:
    keep = frozenset(keep)
    nfa = _NFA()
    r0, rf = nfa.embed(r.traces, lambda a: a if a in keep else None)
    ts = _determinize(r.alphabet & keep, [r0], nfa.eps, nfa.trans, rf)
    return TraceStructure(r.inputs & keep, r.outputs & keep, ts)


def weave(r: TraceStructure, s: TraceStructure) -> TraceStructure:
    ra, sa = r.alphabet, s.alphabet
    rt, st = r.traces, s.traces

    def step(pair, a):
        x, y = pair
        if a in ra:
            x = rt._delta.get((x, a))
            if x is None:
                return None
        if a in sa:
            y = st._delta.get((y, a))
            if y is None:
                return None
        return (x, y)

    ts = build_dfa(
        ra | sa,
        (rt.initial, st.initial),
        step,
        lambda pair: pair[0] in rt.accepting and pair[1] in st.accepting,
    )
    return TraceStructure(r.inputs | s.inputs, r.outputs | s.outputs, ts)


def weave_all(structures: Iterable[TraceStructure]) -> TraceStructure:
    structures = list(structures)
    out = structures[0]
    for s in structures[1:]:
        out = weave(out, s)
    return out


def reflect(r: TraceStructure) -> TraceStructure:
    return TraceStructure(r.outputs, r.inputs, r.traces)


def rename(r: TraceStructure, mapping: Mapping[str, str]) -> TraceStructure:
    """Rename symbols; names missing from ``mapping`` are kept."""
    full = {a: mapping.get(a, a) for a in r.alphabet}
    if len(set(full.values())) != len(full):
        raise TraceError(f"renaming is not injective on the alphabet: {dict(sorted(full.items()))}")
    nfa = _NFA()
    r0, rf = nfa.embed(r.traces, full.__getitem__)
    ts = _determinize(full.values(), [r0], nfa.eps, nfa.trans, rf)
    return TraceStructure({full[a] for a in r.inputs}, {full[a] for a in r.outputs}, ts)


def equals(r: TraceStructure, s: TraceStructure) -> bool:
    return r == s


def contains(r: TraceStructure, trace: Iterable[str]) -> bool:
    return r.traces.accepts(trace)


def enumerate_traces(r: TraceStructure, n: int, limit: int = DEFAULT_ENUMERATION_LIMIT) -> list[Trace]:
    """Members of ``r`` of length at most ``n``, sorted lexicographically."""
    if n > limit:
        raise EnumerationBoundError(f"enumeration length {n} exceeds limit {limit}")
    t = r.traces
    if t.is_empty():
        return []
    symbols = sorted(t.alphabet)
    out = []
    stack = [((), t.initial)]
    while stack:
        w, q = stack.pop()
        if q in t.accepting:
            out.append(w)
        if len(w) < n:
            for a in reversed(symbols):
                p = t._delta.get((q, a))
                if p is not None:
                    stack.append((w + (a,), p))
    return sorted(out)


def is_prefix_closed(r: TraceStructure) -> bool:
    return pref(r) == r


def validate_circuit_spec(r: TraceStructure) -> None:
    """Raise ``InvalidSpecError`` unless ``r`` is non-empty, prefix-closed, with disjoint alphabets."""
    clash = r.inputs & r.outputs
    if clash:
        raise InvalidSpecError(f"symbols are both input and output: {sorted(clash)}")
    if r.traces.is_empty():
        raise InvalidSpecError("trace set is empty")
    if not is_prefix_closed(r):
        raise InvalidSpecError("trace set is not prefix-closed")


def is_circuit_spec(r: TraceStructure) -> bool:
    try:
        validate_circuit_spec(r)
    except InvalidSpecError:
        return False
    return True


def to_json(r: TraceStructure) -> dict:
    t = r.traces
    return {
        "inputs": sorted(r.inputs),
        "outputs": sorted(r.outputs),
        "states": t.n_states,
        "initial": t.initial,
        "accepting": sorted(t.accepting),
        "transitions": [[p, a, q] for p, a, q in t.transitions],
    }


def dumps(r: TraceStructure) -> str:
    return json.dumps(to_json(r), sort_keys=True)


def from_json(doc: Mapping) -> TraceStructure:
    try:
        inputs = frozenset(doc["inputs"])
        outputs = frozenset(doc["outputs"])
        n = int(doc["states"])
        initial = int(doc["initial"])
        accepting = {int(s) for s in doc["accepting"]}
        delta = {}
        for p, a, q in doc["transitions"]:
            if (p, a) in delta and delta[(p, a)] != q:
                raise TraceError(f"nondeterministic transition from {p} on {a!r}")
            delta[(int(p), str(a))] = int(q)
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceError(f"malformed trace structure document: {exc}") from exc
    alpha = inputs | outputs
    used = {a for _, a in delta}
    if not used <= alpha:
        raise TraceError(f"transitions use undeclared symbols {sorted(used - alpha)}")
    ts = build_dfa(alpha, initial, lambda s, a: delta.get((s, a)), lambda s: s in accepting)
    return TraceStructure(inputs, outputs, ts)
