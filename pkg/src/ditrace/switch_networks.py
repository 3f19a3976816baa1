"""Series/parallel switch networks and the gates built from them.

A gate drives its output high through a pull-up network and low through a
pull-down network. When neither conducts the output floats and keeps its
previous value.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Union

MAX_INPUTS = 20


class SwitchError(Exception):
    pass


class MissingVariableError(SwitchError, KeyError):
    pass


class TooManyInputsError(SwitchError):
    pass


class ShortCircuitError(SwitchError):
    def __init__(self, assignments):
        self.assignments = assignments
        super().__init__(f"pull-up and pull-down both conduct at {assignments[0]}")


@dataclass(frozen=True)
class Literal:
    name: str
    negated: bool = False


@dataclass(frozen=True)
class Series:
    children: tuple


@dataclass(frozen=True)
class Parallel:
    children: tuple


@dataclass(frozen=True)
class Const:
    value: bool


SwitchNetwork = Union[Literal, Series, Parallel, Const]


def lit(name: str) -> Literal:
    return Literal(name)


def neg(name: str) -> Literal:
    return Literal(name, True)


def series(*children) -> Series:
    return Series(tuple(children))


def parallel(*children) -> Parallel:
    return Parallel(tuple(children))


def variables(n: SwitchNetwork) -> set[str]:
    if isinstance(n, Literal):
        return {n.name}
    if isinstance(n, Const):
        return set()
    return set().union(*(variables(c) for c in n.children))


def eval(n: SwitchNetwork, assignment: Mapping[str, bool]) -> bool:  # noqa: A001
    """True iff the network connects its two ends under ``assignment``."""
    if isinstance(n, Literal):
        if n.name not in assignment:
            raise MissingVariableError(n.name)
        return bool(assignment[n.name]) != n.negated
    if isinstance(n, Const):
        return n.value
    if isinstance(n, Series):
        return all([eval(c, assignment) for c in n.children])
    if isinstance(n, Parallel):
        return any([eval(c, assignment) for c in n.children])
    raise TypeError(f"not a switch network: {n!r}")


@dataclass(frozen=True)
class Gate:
    inputs: tuple[str, ...]
    pull_up: SwitchNetwork
    pull_down: SwitchNetwork

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        unknown = (variables(self.pull_up) | variables(self.pull_down)) - set(self.inputs)
        if unknown:
            raise SwitchError(f"undeclared variables {sorted(unknown)}")

    def assignments(self):
        if len(self.inputs) > MAX_INPUTS:
            raise TooManyInputsError(f"{len(self.inputs)} inputs exceeds the limit of {MAX_INPUTS}")
        for bits in itertools.product((False, True), repeat=len(self.inputs)):
            yield dict(zip(self.inputs, bits))

    def output(self, assignment: Mapping[str, bool], previous: bool = False) -> bool:
        up, down = eval(self.pull_up, assignment), eval(self.pull_down, assignment)
        if up and down:
            raise ShortCircuitError([dict(assignment)])
        if up:
            return True
        if down:
            return False
        return previous

    def to_json(self) -> dict:
        return {"inputs": list(self.inputs), "pull_up": tree_to_json(self.pull_up),
                "pull_down": tree_to_json(self.pull_down)}

    @classmethod
    def from_json(cls, doc) -> Gate:
        return cls(tuple(doc["inputs"]), tree_from_json(doc["pull_up"]), tree_from_json(doc["pull_down"]))


@dataclass
class ShortReport:
    ok: bool
    violations: list[dict]


def check_no_short(g: Gate) -> ShortReport:
    bad = [a for a in g.assignments() if eval(g.pull_up, a) and eval(g.pull_down, a)]
    return ShortReport(not bad, bad)


class GateClass(str, Enum):
    COMBINATIONAL = "combinational"
    STATE_HOLDING = "state_holding"


def classify_gate(g: Gate) -> GateClass:
    report = check_no_short(g)
    if not report.ok:
        raise ShortCircuitError(report.violations)
    for a in g.assignments():
        if not eval(g.pull_up, a) and not eval(g.pull_down, a):
            return GateClass.STATE_HOLDING
    return GateClass.COMBINATIONAL


def latch_next(x: bool, e: bool, z_before: bool) -> bool:
    """Latch update: copy ``x`` while enabled, hold otherwise."""
    return (x and e) or (z_before and not e)


# Two gates used throughout the tests and examples.

def nand2() -> Gate:
    return Gate(("x1", "x2"), parallel(neg("x1"), neg("x2")), series(lit("x1"), lit("x2")))


def latch() -> Gate:
    return Gate(("x", "e"), series(lit("x"), lit("e")), series(neg("x"), lit("e")))


def tree_to_json(n: SwitchNetwork):
    if isinstance(n, Literal):
        return {"not": n.name} if n.negated else n.name
    if isinstance(n, Const):
        return n.value
    key = "series" if isinstance(n, Series) else "parallel"
    return {key: [tree_to_json(c) for c in n.children]}


def tree_from_json(doc) -> SwitchNetwork:
    if isinstance(doc, bool):
        return Const(doc)
    if isinstance(doc, str):
        return Literal(doc)
    if "not" in doc:
        return Literal(doc["not"], True)
    if "series" in doc:
        return Series(tuple(tree_from_json(c) for c in doc["series"]))
    if "parallel" in doc:
        return Parallel(tuple(tree_from_json(c) for c in doc["parallel"]))
    raise SwitchError(f"bad switch-network node {doc!r}")


def load_gate(text: str) -> Gate:
    return Gate.from_json(json.loads(text))
