"""Textual notation for trace structures.

Grammar, loosest binding first::

    expr   := seq ('|' seq)*
    seq    := weave (';' weave)*
    weave  := unary ('||' unary)*
    unary  := 'pref' unary | atom
    atom   := NAME '?' | NAME '!' | '(' expr ')' | '*' '[' expr ']'

so ``pref*[a?||b?;c!]`` reads as ``pref *[(a? || b?) ; c!]`` and
``(q!|p1!;a0?;q!)`` as ``q! | (p1!;a0?;q!)``. ``#`` starts a comment.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import reduce

from . import trace_core as tc
from .trace_core import TraceStructure


@dataclass(frozen=True)
class Sym:
    name: str
    direction: str  # "?" or "!"


@dataclass(frozen=True)
class Seq:
    items: tuple


@dataclass(frozen=True)
class Alt:
    items: tuple


@dataclass(frozen=True)
class Weave:
    items: tuple


@dataclass(frozen=True)
class Star:
    body: object


@dataclass(frozen=True)
class Pref:
    body: object


SpecExpr = Sym | Seq | Alt | Weave | Star | Pref


@dataclass
class ParseError(Exception):
    position: tuple[int, int]
    message: str
    expected: frozenset[str] = field(default_factory=frozenset)

    def __str__(self) -> str:
        line, col = self.position
        exp = f" (expected {', '.join(sorted(self.expected))})" if self.expected else ""
        return f"{line}:{col}: {self.message}{exp}"


class DirectionConflictError(tc.TraceError):
    pass


_TOKEN = re.compile(
    r"(?P<ws>\s+|\#[^\n]*)"
    r"|(?P<pref>pref\b)(?![?!])"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)(?P<dir>[?!])"
    r"|(?P<op>\|\||[;|*\[\]()])"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(_linecol(text, pos), f"unexpected character {text[pos]!r}",
                             frozenset({"symbol", "operator"}))
        if m.group("pref"):
            tokens.append(("pref", "pref", pos))
        elif m.group("name"):
            tokens.append(("sym", (m.group("name"), m.group("dir")), pos))
        elif m.group("op"):
            tokens.append((m.group("op"), m.group("op"), pos))
        pos = m.end()
    tokens.append(("eof", None, len(text)))
    return tokens


def _linecol(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def fail(self, expected: set[str]):
        kind, value, pos = self.peek()
        what = "end of input" if kind == "eof" else repr(self.text[pos:pos + 1] if kind != "sym" else value[0] + value[1])
        raise ParseError(_linecol(self.text, pos), f"unexpected {what}", frozenset(expected))

    def expect(self, kind: str):
        if self.peek()[0] != kind:
            self.fail({repr(kind)})
        self.i += 1

    def nary(self, op: str, sub, node):
        items = [sub()]
        while self.peek()[0] == op:
            self.i += 1
            items.append(sub())
        if len(items) == 1:
            return items[0]
        flat = []
        for x in items:
            flat.extend(x.items if isinstance(x, node) else (x,))
        return node(tuple(flat))

    def expr(self):
        return self.nary("|", self.seq, Alt)

    def seq(self):
        return self.nary(";", self.weave, Seq)

    def weave(self):
        return self.nary("||", self.unary, Weave)

    def unary(self):
        if self.peek()[0] == "pref":
            self.i += 1
            return Pref(self.unary())
        return self.atom()

    def atom(self):
        kind, value, _ = self.peek()
        if kind == "sym":
            self.i += 1
            return Sym(*value)
        if kind == "(":
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        if kind == "*":
            self.i += 1
            self.expect("[")
            e = self.expr()
            self.expect("]")
            return Star(e)
        self.fail({"symbol", "'('", "'*['", "'pref'"})


def parse(text: str) -> SpecExpr:
    p = _Parser(text)
    e = p.expr()
    if p.peek()[0] != "eof":
        p.fail({"';'", "'|'", "'||'", "end of input"})
    return e


def symbols(e: SpecExpr) -> set[tuple[str, str]]:
    if isinstance(e, Sym):
        return {(e.name, e.direction)}
    if isinstance(e, (Star, Pref)):
        return symbols(e.body)
    return set().union(*(symbols(x) for x in e.items))


def _check_directions(e: SpecExpr) -> None:
    seen: dict[str, str] = {}
    for name, d in sorted(symbols(e)):
        if name in seen and seen[name] != d:
            raise DirectionConflictError(f"symbol {name!r} is used both as input and as output")
        seen[name] = d


def elaborate(e: SpecExpr) -> TraceStructure:
    """Fold the expression into a trace structure; the result keeps ``e`` as its source."""
    _check_directions(e)
    return _elab(e).with_source(e)


def _elab(e: SpecExpr) -> TraceStructure:
    if isinstance(e, Sym):
        return tc.input_symbol(e.name) if e.direction == "?" else tc.output_symbol(e.name)
    if isinstance(e, Star):
        return tc.repeat(_elab(e.body))
    if isinstance(e, Pref):
        return tc.pref(_elab(e.body))
    op = {Seq: tc.concat, Alt: tc.union, Weave: tc.weave}[type(e)]
    return reduce(op, (_elab(x) for x in e.items))


def spec(text: str) -> TraceStructure:
    """Parse and elaborate in one go."""
    return elaborate(parse(text))


_LEVEL = {Alt: 0, Seq: 1, Weave: 2, Pref: 3}
_SEP = {Alt: "|", Seq: ";", Weave: "||"}


def _fmt(e: SpecExpr, context: int) -> str:
    if isinstance(e, Sym):
        return e.name + e.direction
    if isinstance(e, Star):
        return "*[" + _fmt(e.body, 0) + "]"
    if isinstance(e, Pref):
        body = _fmt(e.body, 3)
        return "pref" + (" " if body[0].isalpha() or body[0] == "_" else "") + body
    level = _LEVEL[type(e)]
    text = _SEP[type(e)].join(_fmt(x, level + 1) for x in e.items)
    return f"({text})" if level < context else text


def unparse(obj: SpecExpr | TraceStructure) -> str:
    """Canonical text of an expression.

    A structure that no longer carries its source expression is rendered as
    canonical JSON wrapped with a ``non_expression`` flag.
    """
    if isinstance(obj, TraceStructure):
        if obj.source is None:
            return json.dumps({"non_expression": True, "structure": tc.to_json(obj)}, sort_keys=True)
        obj = obj.source
    return _fmt(obj, 0)
