import random

import pytest
from hypothesis import given, settings

import oracles as O
from strategies import RawDFA, random_dfa, specs

from ditrace import di_rules as D
from ditrace import primitives as P
from ditrace import trace_core as tc
from ditrace.spec_language import spec


def all_witnesses_reproduce(r):
    for rule in D.RULES:
        for w in D.check_rule(r, rule).witnesses:
            assert D.witness_reproduces(r, rule, w), (rule, w)


@pytest.mark.parametrize("kind", list(P.PrimitiveKind))
def test_table_primitives_are_di(kind):
    report = D.check_di(spec(P.text(kind)))
    assert report.di
    assert set(report.verdicts) == {"R0", "R1", "R2'", "R3'''"}


def test_classes_of_table_primitives():
    got = {k: D.classify(P.make(k)) for k in P.PrimitiveKind}
    assert got[P.PrimitiveKind.C_ELEMENT] is D.DiClass.SYNCHRONIZATION
    assert got[P.PrimitiveKind.SEQUENCER] is D.DiClass.ARBITRATION
    assert got[P.PrimitiveKind.MERGE] is D.DiClass.DATA_COMMUNICATION
    for k in ("WIRE", "IWIRE", "FORK", "TOGGLE"):
        assert got[P.PrimitiveKind(k)] is D.DiClass.SYNCHRONIZATION


def test_r0():
    assert D.check_r0(P.make("WIRE")).holds
    assert D.check_r0(P.make("C_ELEMENT")).holds
    v = D.check_r0(spec("pref*[a?;a?;b!]"))
    assert not v.holds
    assert v.witnesses[0].prefix == () and v.witnesses[0].symbols == ("a",)


def test_r1_excludes_gates():
    for gate in (P.and_gate(), P.or_gate()):
        v = D.check_r1(gate)
        assert not v.holds
        assert all(D.witness_reproduces(gate, "R1", w) for w in v.witnesses)
        report = D.check_di(gate)
        assert not report.di and not report.verdicts["R1"].holds
        assert D.classify(gate) is D.DiClass.NONE
    for k in ("TOGGLE", "MERGE", "SEQUENCER", "C_ELEMENT"):
        assert D.check_r1(P.make(k)).holds


def test_r2():
    assert D.check_r2(P.make("WIRE")).holds
    assert D.check_r2(P.make("SEQUENCER")).holds
    r = tc.pref(tc.structure({"a"}, {"b", "x", "y"}, ["abx", "bay"]))
    v = D.check_r2(r)
    assert not v.holds and v.witnesses[0].prefix == ()
    all_witnesses_reproduce(r)


def test_r2_prime():
    for k in P.PrimitiveKind:
        assert D.check_r2_prime(P.make(k)).holds
    # c may follow a-then-b but not b-then-a, after an intervening x
    r = tc.pref(tc.structure({"a", "c"}, {"b", "x"}, ["abxc", "bax"]))
    v = D.check_r2_prime(r)
    assert not v.holds
    w = v.witnesses[0]
    assert w.symbols == ("a", "b", "c") and w.segment == ("x",)
    assert D.witness_reproduces(r, "R2'", w)
    # neither order present together: vacuous
    vac = tc.pref(tc.structure({"a"}, {"b"}, ["ab"]))
    v = D.check_r2_prime(vac)
    assert v.holds and v.instances == 0


def test_disables():
    w = D.disables(P.make("SEQUENCER"), "p", "q")
    assert w is not None and "n" in w.prefix
    wire = P.make("WIRE")
    assert D.disables(wire, "a", "b") is None and D.disables(wire, "b", "a") is None
    # by definition a and b exclude each other at the start of a merge
    assert D.disables(P.make("MERGE"), "a", "b").prefix == ()
    with pytest.raises(KeyError):
        D.disables(wire, "a", "z")
    with pytest.raises(ValueError):
        D.disables(wire, "a", "a")


def test_r3_variants():
    assert D.check_r3(P.make("C_ELEMENT"), "prime").holds
    seq = P.make("SEQUENCER")
    assert not D.check_r3(seq, "double_prime").holds
    assert D.check_r3(seq, "triple_prime").holds
    toggle = D.check_r3(P.make("TOGGLE"), "prime")
    assert toggle.holds and toggle.instances == 0


def test_invalid_spec_rejected():
    with pytest.raises(tc.InvalidSpecError):
        D.check_di(tc.structure({"a"}, {"b"}, ["ab"]))
    with pytest.raises(tc.InvalidSpecError):
        D.check_r0(tc.empty({"a"}))


def test_report_json():
    doc = D.check_di(P.and_gate()).to_json()
    assert doc["di"] is False and doc["class"] == "none"
    assert doc["rules"]["R1"]["witnesses"][0]["prefix"] == ["a"]


def test_witnesses_are_shortest_first():
    v = D.check_r1(P.and_gate())
    keys = [(len(w.prefix), w.prefix) for w in v.witnesses]
    assert keys == sorted(keys)


@given(specs())
def test_witnesses_replay(r):
    all_witnesses_reproduce(r)


@given(specs())
def test_class_monotonicity(r):
    r3 = [D.check_r3(r, v).holds for v in ("prime", "double_prime", "triple_prime")]
    assert r3[0] <= r3[1] <= r3[2]
    cls = D.classify(r)
    base = D.check_r0(r).holds and D.check_r1(r).holds and D.check_r2_prime(r).holds
    if cls is D.DiClass.SYNCHRONIZATION:
        assert base and r3[0]
    elif cls is D.DiClass.DATA_COMMUNICATION:
        assert base and r3[1] and not r3[0]
    elif cls is D.DiClass.ARBITRATION:
        assert base and r3[2] and not r3[1]
    else:
        assert not (base and r3[2])


@given(specs())
def test_rules_symmetric_under_reflection(r):
    f = tc.reflect(r)
    for rule in D.RULES:
        if rule == "R3''":
            continue
        assert D.check_rule(r, rule).holds == D.check_rule(f, rule).holds, rule
    assert D.check_di(r).di == D.check_di(f).di


def test_r3_double_prime_is_not_reflection_symmetric():
    merge = P.make("MERGE")
    assert D.check_r3(merge, "double_prime").holds
    assert not D.check_r3(tc.reflect(merge), "double_prime").holds


def test_bounded_r2_prime_agrees():
    rng = random.Random(3)
    for _ in range(300):
        r = random_dfa(rng, prefix_closed=True).to_structure()
        assert D.check_r2_prime(r, bounded=8).holds == D.check_r2_prime(r).holds


def test_trie_oracle_matches_flat_oracle():
    rng = random.Random(5)
    checked = 0
    while checked < 400:
        m = random_dfa(rng, prefix_closed=True)
        W = O.words(m, 7)
        if len(W) > 5000:
            continue
        trie = O.WordTrie(m, 7)
        for rule in D.RULES:
            assert O.rule(trie, rule) == O.flat_rule(W, m.inputs, rule, 7), rule
        checked += 1


@settings(max_examples=60)
@given(specs(max_states=8, pool=("a", "b", "c", "d", "e")))
def test_rules_agree_with_oracle_five_symbols(r):
    m = _raw(r)
    trie = O.WordTrie(m, 10)
    for rule in D.RULES:
        assert D.check_rule(r, rule).holds == O.rule(trie, rule), rule


def _raw(r):
    t = r.traces
    trans = tuple(((q, a), p) for q, a, p in t.transitions)
    return RawDFA(r.inputs, r.outputs, t.n_states, trans, frozenset(range(t.n_states)))
