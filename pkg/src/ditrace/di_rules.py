"""Delay-insensitivity rules decided on minimal acceptors.

In the canonical acceptor of a prefix-closed set every stored state is live and
accepting, and two traces have equal residual languages exactly when they lead
to the same state (``None`` standing for the dead state). The quantified rules
therefore reduce to finite scans over states and symbol pairs.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .trace_core import (
    InvalidSpecError,
    RegularTraceSet,
    Trace,
    TraceStructure,
    enumerate_traces,
    validate_circuit_spec,
)

RULES = ("R0", "R1", "R2", "R2'", "R3'", "R3''", "R3'''")


class DiClass(str, Enum):
    SYNCHRONIZATION = "synchronization"
    DATA_COMMUNICATION = "data-communication"
    ARBITRATION = "arbitration"
    NONE = "none"


@dataclass(frozen=True)
class Witness:
    """A counterexample. In ``explanation``, s is the prefix, a b c are the
    symbols in order and t is the segment."""

    prefix: Trace
    symbols: tuple[str, ...]
    segment: Trace | None = None
    explanation: str = ""

    def to_json(self) -> dict:
        return {
            "prefix": list(self.prefix),
            "symbols": list(self.symbols),
            "segment": None if self.segment is None else list(self.segment),
            "explanation": self.explanation,
        }


@dataclass
class RuleVerdict:
    rule: str
    witnesses: list[Witness] = field(default_factory=list)
    instances: int = 0

    @property
    def holds(self) -> bool:
        return not self.witnesses

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "instances": self.instances,
            "witnesses": [w.to_json() for w in self.witnesses],
        }


@dataclass
class RuleReport:
    verdicts: dict[str, RuleVerdict]
    di_class: DiClass

    @property
    def di(self) -> bool:
        return all(v.holds for v in self.verdicts.values())

    def to_json(self) -> dict:
        return {
            "rules": {k: v.to_json() for k, v in self.verdicts.items()},
            "class": self.di_class.value,
            "di": self.di,
        }


def _sorted_witnesses(ws: list[Witness]) -> list[Witness]:
    """Keep the shortlex-least witness per symbol tuple, in (|s|, s, symbols) order."""
    best: dict[tuple, Witness] = {}
    for w in ws:
        key = (len(w.prefix), w.prefix, len(w.segment or ()), w.segment or ())
        cur = best.get(w.symbols)
        if cur is None or key < (len(cur.prefix), cur.prefix, len(cur.segment or ()), cur.segment or ()):
            best[w.symbols] = w
    return sorted(best.values(), key=lambda w: (len(w.prefix), w.prefix, w.symbols))


def _require_spec(r: TraceStructure) -> None:
    validate_circuit_spec(r)


def _two(t: RegularTraceSet, q, a, b):
    return t.step(t.step(q, a), b)


def _distinguish(t: RegularTraceSet, p, q) -> Trace | None:
    """Shortest ``w`` accepted from exactly one of ``p``, ``q`` (``None`` is dead)."""
    symbols = sorted(t.alphabet)
    seen = {(p, q)}
    queue = deque([(p, q, ())])
    while queue:
        x, y, w = queue.popleft()
        if (x in t.accepting) != (y in t.accepting):
            return w
        for a in symbols:
            nxt = (t.step(x, a), t.step(y, a))
            if nxt == (None, None) or nxt in seen:
                continue
            seen.add(nxt)
            queue.append((*nxt, w + (a,)))
    return None


def _same_direction(r: TraceStructure, a: str, b: str) -> bool:
    return (a in r.inputs and b in r.inputs) or (a in r.outputs and b in r.outputs)


def _opposite(r: TraceStructure, a: str, b: str) -> bool:
    return (a in r.inputs and b in r.outputs) or (a in r.outputs and b in r.inputs)


def check_r0(r: TraceStructure) -> RuleVerdict:
    _require_spec(r)
    t = r.traces
    access = t.access_strings()
    v = RuleVerdict("R0")
    for q in range(t.n_states):
        for a in t.enabled(q):
            v.instances += 1
            if _two(t, q, a, a) is not None:
                v.witnesses.append(Witness(access[q], (a,), None, "s a a is a trace"))
    v.witnesses = _sorted_witnesses(v.witnesses)
    return v


def _commute(r: TraceStructure, rule: str, pair_ok, need_both: bool) -> RuleVerdict:
    t = r.traces
    access = t.access_strings()
    v = RuleVerdict(rule)
    for q in range(t.n_states):
        for a, b in itertools.permutations(sorted(r.alphabet), 2):
            if a > b or not pair_ok(r, a, b):
                continue
            p1, p2 = _two(t, q, a, b), _two(t, q, b, a)
            if need_both and (p1 is None or p2 is None):
                continue
            if p1 is None and p2 is None:
                continue
            v.instances += 1
            if p1 != p2:
                seg = _distinguish(t, p1, p2)
                end = None if p1 is None else t.run(seg, p1)
                side = "s a b t" if end in t.accepting else "s b a t"
                v.witnesses.append(Witness(access[q], (a, b), seg, f"only {side} is a trace"))
    v.witnesses = _sorted_witnesses(v.witnesses)
    return v


def check_r1(r: TraceStructure) -> RuleVerdict:
    _require_spec(r)
    return _commute(r, "R1", _same_direction, need_both=False)


def check_r2(r: TraceStructure) -> RuleVerdict:
    _require_spec(r)
    return _commute(r, "R2", _opposite, need_both=True)


def _r2_prime_segment(t: RegularTraceSet, p1: int, p2: int, c: str) -> Trace | None:
    """Shortest t with t c in L(p1), t in L(p2), t c not in L(p2)."""
    symbols = sorted(t.alphabet)
    seen = {(p1, p2)}
    queue = deque([(p1, p2, ())])
    while queue:
        x, y, w = queue.popleft()
        if t.step(x, c) in t.accepting and y in t.accepting and t.step(y, c) not in t.accepting:
            return w
        for a in symbols:
            nx, ny = t.step(x, a), t.step(y, a)
            if nx is None or ny is None or (nx, ny) in seen:
                continue
            seen.add((nx, ny))
            queue.append((nx, ny, w + (a,)))
    return None


def check_r2_prime(r: TraceStructure, bounded: int | None = None) -> RuleVerdict:
    """Exact by default; ``bounded=n`` quantifies over traces of length <= n instead."""
    _require_spec(r)
    if bounded is not None:
        return _r2_prime_bounded(r, bounded)
    t = r.traces
    access = t.access_strings()
    v = RuleVerdict("R2'")
    alpha = sorted(r.alphabet)
    for q in range(t.n_states):
        for a, b in itertools.permutations(alpha, 2):
            if not _opposite(r, a, b):
                continue
            p1, p2 = _two(t, q, a, b), _two(t, q, b, a)
            if p1 is None or p2 is None:
                continue
            for c in alpha:
                if not _same_direction(r, a, c):
                    continue
                v.instances += 1
                seg = _r2_prime_segment(t, p1, p2, c)
                if seg is not None:
                    v.witnesses.append(
                        Witness(access[q], (a, b, c), seg, "s a b t c and s b a t are traces, s b a t c is not")
                    )
    v.witnesses = _sorted_witnesses(v.witnesses)
    return v


def _r2_prime_bounded(r: TraceStructure, n: int) -> RuleVerdict:
    words = set(enumerate_traces(r, n, limit=max(n, 12)))
    v = RuleVerdict("R2'")
    for w in sorted(words, key=lambda w: (len(w), w)):
        for k in range(len(w) - 2):
            s, a, b, rest = w[:k], w[k], w[k + 1], w[k + 2:]
            if not rest or not _opposite(r, a, b):
                continue
            seg, c = rest[:-1], rest[-1]
            if not _same_direction(r, a, c):
                continue
            if s not in words:
                continue
            v.instances += 1
            bat = s + (b, a) + seg
            if bat in words and bat + (c,) not in words:
                v.witnesses.append(
                    Witness(s, (a, b, c), seg, "s a b t c and s b a t are traces, s b a t c is not")
                )
    v.witnesses = _sorted_witnesses(v.witnesses)
    return v


def disables(r: TraceStructure, a: str, b: str) -> Witness | None:
    """Shortest ``s`` with ``s a``, ``s b`` traces and ``s a b`` not, if any."""
    if a == b:
        raise ValueError("disable relation needs two distinct symbols")
    unknown = {a, b} - r.alphabet
    if unknown:
        raise KeyError(f"unknown symbols {sorted(unknown)}")
    t = r.traces
    access = t.access_strings()
    found = [
        q
        for q in range(t.n_states)
        if t.step(q, a) in t.accepting
        and t.step(q, b) in t.accepting
        and _two(t, q, a, b) not in t.accepting
    ]
    if not found:
        return None
    q = min(found, key=lambda q: (len(access[q]), access[q]))
    return Witness(access[q], (a, b), None, f"{a} disables {b}")


def _r3_pair_ok(variant: str):
    if variant == "R3'":
        return lambda r, a, b: True
    if variant == "R3''":
        return lambda r, a, b: not (a in r.inputs and b in r.inputs)
    if variant == "R3'''":
        return _opposite
    raise ValueError(f"unknown R3 variant {variant!r}")


_VARIANTS = {"prime": "R3'", "double_prime": "R3''", "triple_prime": "R3'''"}


def check_r3(r: TraceStructure, variant: str = "triple_prime") -> RuleVerdict:
    _require_spec(r)
    rule = _VARIANTS.get(variant, variant)
    pair_ok = _r3_pair_ok(rule)
    t = r.traces
    access = t.access_strings()
    v = RuleVerdict(rule)
    for q in range(t.n_states):
        en = t.enabled(q)
        for a, b in itertools.permutations(en, 2):
            if not pair_ok(r, a, b):
                continue
            v.instances += 1
            if _two(t, q, a, b) is None:
                v.witnesses.append(Witness(access[q], (a, b), None, f"{a} disables {b}"))
    v.witnesses = _sorted_witnesses(v.witnesses)
    return v


def classify(r: TraceStructure) -> DiClass:
    if not (check_r0(r).holds and check_r1(r).holds and check_r2_prime(r).holds):
        return DiClass.NONE
    for variant, cls in (
        ("prime", DiClass.SYNCHRONIZATION),
        ("double_prime", DiClass.DATA_COMMUNICATION),
        ("triple_prime", DiClass.ARBITRATION),
    ):
        if check_r3(r, variant).holds:
            return cls
    return DiClass.NONE


def check_di(r: TraceStructure) -> RuleReport:
    verdicts = {
        "R0": check_r0(r),
        "R1": check_r1(r),
        "R2'": check_r2_prime(r),
        "R3'''": check_r3(r, "triple_prime"),
    }
    return RuleReport(verdicts, classify(r))


def check_rule(r: TraceStructure, rule: str) -> RuleVerdict:
    return {
        "R0": check_r0,
        "R1": check_r1,
        "R2": check_r2,
        "R2'": check_r2_prime,
        "R3'": lambda r: check_r3(r, "prime"),
        "R3''": lambda r: check_r3(r, "double_prime"),
        "R3'''": lambda r: check_r3(r, "triple_prime"),
    }[rule](r)


def witness_reproduces(r: TraceStructure, rule: str, w: Witness) -> bool:
    """Replay ``w`` through membership and confirm the clause of ``rule`` fails."""
    s, seg = w.prefix, w.segment or ()
    inn = r.contains
    if not inn(s):
        return False
    if rule == "R0":
        (a,) = w.symbols
        return inn(s + (a, a))
    if rule in ("R1", "R2"):
        a, b = w.symbols
        ok_dir = _same_direction(r, a, b) if rule == "R1" else _opposite(r, a, b)
        if rule == "R2" and not (inn(s + (a, b)) and inn(s + (b, a))):
            return False
        return ok_dir and inn(s + (a, b) + seg) != inn(s + (b, a) + seg)
    if rule == "R2'":
        a, b, c = w.symbols
        return (
            _opposite(r, a, b)
            and _same_direction(r, a, c)
            and inn(s + (a, b) + seg + (c,))
            and inn(s + (b, a) + seg)
            and not inn(s + (b, a) + seg + (c,))
        )
    if rule.startswith("R3"):
        a, b = w.symbols
        return _r3_pair_ok(rule)(r, a, b) and inn(s + (a,)) and inn(s + (b,)) and not inn(s + (a, b))
    raise ValueError(f"unknown rule {rule!r}")


__all__ = [
    "DiClass",
    "InvalidSpecError",
    "RuleReport",
    "RuleVerdict",
    "Witness",
    "check_di",
    "check_r0",
    "check_r1",
    "check_r2",
    "check_r2_prime",
    "check_r3",
    "check_rule",
    "classify",
    "disables",
    "witness_reproduces",
]
