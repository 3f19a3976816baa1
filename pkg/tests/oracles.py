"""Brute-force reference semantics over explicit word sets.

Everything here works on the plain automata from ``strategies`` or on finite
sets of words, never on the package's canonical acceptors.
"""

from __future__ import annotations

import itertools
from collections import deque

from strategies import RawDFA


def _grow(m: RawDFA, n: int, keep) -> set[tuple]:
    """Depth-first walk over strings of length <= n, abandoning a string as
    soon as no accepting state is reachable; collects those ``keep`` allows."""
    symbols = sorted(m.alphabet)
    good = _productive(m)
    d = m.delta
    out = set()
    stack = [((), 0)] if 0 in good else []
    while stack:
        w, q = stack.pop()
        if keep(q):
            out.add(w)
        if len(w) < n:
            for a in symbols:
                t = d.get((q, a))
                if t in good:
                    stack.append((w + (a,), t))
    return out


def words(m: RawDFA, n: int) -> set[tuple]:
    """All accepted words of length <= n."""
    return _grow(m, n, lambda q: q in m.accepting)


def _productive(m: RawDFA) -> set[int]:
    """States from which some accepting state is reachable."""
    good = set(m.accepting)
    changed = True
    while changed:
        changed = False
        for (q, _a), t in m.trans:
            if t in good and q not in good:
                good.add(q)
                changed = True
    return good


def is_prefix(m: RawDFA, w) -> bool:
    return m.run(w) in _productive(m)


def concat(l1: set, l2: set, n: int) -> set:
    return {u + v for u in l1 for v in l2 if len(u) + len(v) <= n}


def star(lang: set, n: int) -> set:
    """Words of length <= n that split into factors from ``lang``.

    Each candidate carries the set of unfinished last factors (prefixes of
    words in ``lang``); a candidate with none left is dropped."""
    factors = {w[:i] for w in lang for i in range(len(w) + 1)}
    symbols = sorted({a for w in lang for a in w})
    out = set()
    stack = [((), frozenset({()}))]
    while stack:
        w, pending = stack.pop()
        if () in pending:
            out.add(w)
        if len(w) == n:
            continue
        for a in symbols:
            nxt = {x + (a,) for x in pending if x + (a,) in factors}
            if any(x in lang for x in nxt):
                nxt.add(())
            if nxt:
                stack.append((w + (a,), frozenset(nxt)))
    return out


def pref(m: RawDFA, n: int) -> set:
    """Words of length <= n that extend to an accepted word of any length."""
    return _grow(m, n, lambda q: True)


def project(m: RawDFA, keep: set, n: int) -> set:
    """Words w over ``keep`` such that some accepted word restricts to w."""
    hidden = sorted(m.alphabet - keep)
    visible = sorted(m.alphabet & keep)
    d = m.delta

    def closure(states):
        seen = set(states)
        stack = list(states)
        while stack:
            q = stack.pop()
            for a in hidden:
                t = d.get((q, a))
                if t is not None and t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)

    out = set()
    queue = deque([((), closure({0}))])
    while queue:
        w, states = queue.popleft()
        if states & m.accepting:
            out.add(w)
        if len(w) == n:
            continue
        for a in visible:
            nxt = {d[(q, a)] for q in states if (q, a) in d}
            if nxt:
                queue.append((w + (a,), closure(nxt)))
    return out


def restrict(w, alphabet) -> tuple:
    return tuple(a for a in w if a in alphabet)


def weave(m1: RawDFA, m2: RawDFA, n: int) -> set:
    """Words over both alphabets whose restrictions are accepted by each side."""
    symbols = sorted(m1.alphabet | m2.alphabet)
    g1, g2 = _productive(m1), _productive(m2)
    out = set()

    def alive(w):
        return m1.run(restrict(w, m1.alphabet)) in g1 and m2.run(restrict(w, m2.alphabet)) in g2

    stack = [()]
    while stack:
        w = stack.pop()
        if m1.accepts(restrict(w, m1.alphabet)) and m2.accepts(restrict(w, m2.alphabet)):
            out.add(w)
        if len(w) < n:
            stack.extend(w + (a,) for a in symbols if alive(w + (a,)))
    return out


def rename(lang: set, mapping: dict) -> set:
    return {tuple(mapping.get(a, a) for a in w) for w in lang}


# ---------------------------------------------------------------------------
# rules over a finite, prefix-closed word set W (all words of length <= n).
# The flat versions below take W as a set of strings (every pool symbol is one
# letter) and are only practical for small W; ``rule`` uses the word trie.


def _same(ins, a, b):
    return (a in ins) == (b in ins)


def r0(W, ins) -> bool:
    return not any(w[i] == w[i + 1] for w in W for i in range(len(w) - 1))


def r1(W, ins) -> bool:
    for w in W:
        for k in range(len(w) - 1):
            a, b = w[k], w[k + 1]
            if a != b and _same(ins, a, b):
                if w[:k] + b + a + w[k + 2:] not in W:
                    return False
    return True


def r2(W, ins) -> bool:
    for w in W:
        for k in range(len(w) - 1):
            a, b = w[k], w[k + 1]
            if a != b and not _same(ins, a, b) and w[:k] + b + a in W:
                if w[:k] + b + a + w[k + 2:] not in W:
                    return False
    return True


def r2_prime(W, ins) -> bool:
    for w in W:
        c = w[-1:]
        for k in range(len(w) - 2):
            a, b = w[k], w[k + 1]
            if a == b or _same(ins, a, b) or not _same(ins, a, c):
                continue
            swapped = w[:k] + b + a + w[k + 2:-1]
            if swapped in W and swapped + c not in W:
                return False
    return True


def r3(W, ins, variant: str, n: int) -> bool:
    after: dict[str, list] = {}
    for w in W:
        if w:
            after.setdefault(w[:-1], []).append(w[-1])
    for s, nxt in after.items():
        if len(s) + 2 > n:
            continue
        for a, b in itertools.permutations(nxt, 2):
            if variant == "R3''" and a in ins and b in ins:
                continue
            if variant == "R3'''" and _same(ins, a, b):
                continue
            if s + a + b not in W:
                return False
    return True


def flat_rule(W, ins, name: str, n: int) -> bool:
    """Verdict of ``name`` on W, the words of length <= n of a spec."""
    W = {"".join(w) for w in W}
    if name == "R0":
        return r0(W, ins)
    if name == "R1":
        return r1(W, ins)
    if name == "R2":
        return r2(W, ins)
    if name == "R2'":
        return r2_prime(W, ins)
    return r3(W, ins, name, n)


# ---------------------------------------------------------------------------
# The same rules over the trie of W. Every word of length <= n is visited once
# while the trie is built; identical subtrees (equal sets of continuations)
# are shared, so each distinct subproblem is decided once.


class WordTrie:
    def __init__(self, m: RawDFA, n: int):
        if m.accepting != frozenset(range(m.n)):
            raise ValueError("rule oracles expect a prefix-closed automaton")
        self.n = n
        self.inputs = m.inputs
        self.symbols = sorted(m.alphabet)
        self.kids: list[dict] = []  # node -> {symbol: node}
        self.shallowest: list[int] = []  # least word length reaching the node
        self._ids: dict[tuple, int] = {}
        self.words = 0
        self.root = self._visit(m, 0, 0)

    def _visit(self, m, q, depth):
        self.words += 1
        kids = []
        if depth < self.n:
            for a in self.symbols:
                t = m.delta.get((q, a))
                if t is not None:
                    kids.append((a, self._visit(m, t, depth + 1)))
        key = tuple(kids)
        node = self._ids.get(key)
        if node is None:
            node = self._ids[key] = len(self.kids)
            self.kids.append(dict(kids))
            self.shallowest.append(depth)
        elif depth < self.shallowest[node]:
            self.shallowest[node] = depth
        return node

    def after(self, node, *word):
        for a in word:
            if node is None:
                return None
            node = self.kids[node].get(a)
        return node

    def same(self, a, b):
        return (a in self.inputs) == (b in self.inputs)


def _pairs(trie: WordTrie, node):
    return itertools.permutations(trie.kids[node], 2)


def _trie_r0(trie):
    return not any(a in trie.kids[child] for kids in trie.kids for a, child in kids.items())


def _trie_swap(trie, opposite: bool):
    for node in range(len(trie.kids)):
        # b need not be enabled at s: s a b in W with s b missing also breaks R1
        for a, b in itertools.product(trie.kids[node], trie.symbols):
            if a == b or trie.same(a, b) == opposite:
                continue
            x, y = trie.after(node, a, b), trie.after(node, b, a)
            if opposite and (x is None or y is None):
                continue
            if x != y:
                return False
    return True


def _trie_r2_prime(trie):
    memo = {}

    def closed(x, y, cs):
        # every t with t c under x and t under y has t c under y
        key = (x, y, cs)
        if key not in memo:
            kx, ky = trie.kids[x], trie.kids[y]
            memo[key] = all(c not in kx or c in ky for c in cs) and all(
                closed(kx[d], ky[d], cs) for d in kx if d in ky
            )
        return memo[key]

    for node in range(len(trie.kids)):
        for a, b in _pairs(trie, node):
            if trie.same(a, b):
                continue
            x, y = trie.after(node, a, b), trie.after(node, b, a)
            if x is None or y is None:
                continue
            cs = tuple(c for c in trie.symbols if trie.same(a, c))
            if not closed(x, y, cs):
                return False
    return True


def _trie_r3(trie, variant):
    for node, kids in enumerate(trie.kids):
        if trie.shallowest[node] + 2 > trie.n:
            continue
        for a, b in _pairs(trie, node):
            if variant == "R3''" and a in trie.inputs and b in trie.inputs:
                continue
            if variant == "R3'''" and trie.same(a, b):
                continue
            if b not in trie.kids[kids[a]]:
                return False
    return True


def rule(trie: WordTrie, name: str) -> bool:
    """Verdict of ``name`` over the words of length <= trie.n."""
    if name == "R0":
        return _trie_r0(trie)
    if name == "R1":
        return _trie_swap(trie, opposite=False)
    if name == "R2":
        return _trie_swap(trie, opposite=True)
    if name == "R2'":
        return _trie_r2_prime(trie)
    return _trie_r3(trie, name)
