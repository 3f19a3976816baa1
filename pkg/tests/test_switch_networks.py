import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ditrace import switch_networks as SW
from ditrace.switch_networks import Gate, lit, neg, parallel, series

BITS = (False, True)


def test_eval_nand_pull_up():
    up = SW.nand2().pull_up
    assert SW.eval(up, {"x1": True, "x2": True}) is False
    assert SW.eval(up, {"x1": False, "x2": True}) is True
    assert SW.eval(lit("x"), {"x": True}) is True
    assert SW.eval(SW.latch().pull_up, {"x": True, "e": False}) is False


def test_eval_missing_variable():
    with pytest.raises(SW.MissingVariableError):
        SW.eval(series(lit("a"), lit("b")), {"a": True})


def test_nand_is_combinational_and_computes_nand():
    g = SW.nand2()
    assert SW.check_no_short(g).ok
    assert SW.classify_gate(g) is SW.GateClass.COMBINATIONAL
    for x1, x2 in itertools.product(BITS, BITS):
        for prev in BITS:
            assert g.output({"x1": x1, "x2": x2}, prev) == (not (x1 and x2))


def test_latch_is_state_holding():
    g = SW.latch()
    report = SW.check_no_short(g)
    assert report.ok and report.violations == []
    assert SW.classify_gate(g) is SW.GateClass.STATE_HOLDING
    for x, e, prev in itertools.product(BITS, BITS, BITS):
        assert g.output({"x": x, "e": e}, prev) == SW.latch_next(x, e, prev)


def test_short_is_rejected():
    g = Gate(("x",), lit("x"), lit("x"))
    report = SW.check_no_short(g)
    assert not report.ok and report.violations == [{"x": True}]
    with pytest.raises(SW.ShortCircuitError):
        SW.classify_gate(g)
    with pytest.raises(SW.ShortCircuitError):
        g.output({"x": True})


def test_constant_gate():
    g = Gate((), SW.Const(True), SW.Const(False))
    assert SW.classify_gate(g) is SW.GateClass.COMBINATIONAL
    assert g.output({}) is True


def test_latch_next_truth_table():
    table = {(x, e, z): SW.latch_next(x, e, z) for x, e, z in itertools.product(BITS, repeat=3)}
    for (x, e, z), out in table.items():
        assert out == (x if e else z)
    # holding is a fixpoint, enabling copies the input
    for x, z in itertools.product(BITS, BITS):
        state = z
        for _ in range(3):
            state = SW.latch_next(x, False, state)
        assert state == z
        assert SW.latch_next(x, True, z) == x


def test_input_limit():
    names = tuple(f"v{i}" for i in range(21))
    g = Gate(names, parallel(*map(lit, names)), series(*map(neg, names)))
    with pytest.raises(SW.TooManyInputsError):
        SW.check_no_short(g)


def test_undeclared_variable():
    with pytest.raises(SW.SwitchError):
        Gate(("a",), lit("a"), lit("b"))


def test_json_round_trip():
    for g in (SW.nand2(), SW.latch(), Gate((), SW.Const(False), SW.Const(True))):
        text = json.dumps(g.to_json())
        assert SW.load_gate(text) == g
    with pytest.raises(SW.SwitchError):
        SW.tree_from_json({"xor": ["a", "b"]})


def test_json_schema_example():
    g = SW.load_gate('{"inputs": ["a", "b"], "pull_up": {"parallel": [{"not": "a"}, {"not": "b"}]},'
                     ' "pull_down": {"series": ["a", "b"]}}')
    assert g == Gate(("a", "b"), parallel(neg("a"), neg("b")), series(lit("a"), lit("b")))


# -- equivalence-preserving rewrites ------------------------------------------

VARS = ("a", "b", "c")


def trees():
    leaf = st.builds(lambda n, neg_: SW.Literal(n, neg_), st.sampled_from(VARS), st.booleans())
    return st.recursive(
        leaf,
        lambda kids: st.one_of(
            st.lists(kids, min_size=1, max_size=3).map(lambda cs: SW.Series(tuple(cs))),
            st.lists(kids, min_size=1, max_size=3).map(lambda cs: SW.Parallel(tuple(cs))),
        ),
        max_leaves=6,
    )


def dual(n):
    """Complement by De Morgan: swap series and parallel, negate leaves."""
    if isinstance(n, SW.Literal):
        return SW.Literal(n.name, not n.negated)
    if isinstance(n, SW.Const):
        return SW.Const(not n.value)
    kind = SW.Parallel if isinstance(n, SW.Series) else SW.Series
    return kind(tuple(dual(c) for c in n.children))


def rewrite(n, seed):
    """Boolean-equivalent reshuffle: reverse children, nest, and pad with identities."""
    if isinstance(n, (SW.Literal, SW.Const)):
        if seed % 3 == 0:
            return SW.Series((n, SW.Const(True)))
        if seed % 3 == 1:
            return SW.Parallel((n, n))
        return n
    kids = tuple(rewrite(c, seed + i + 1) for i, c in enumerate(reversed(n.children)))
    if len(kids) > 2 and seed % 2:
        kids = (type(n)(kids[:2]),) + kids[2:]
    return type(n)(kids)


def same_function(x, y):
    return all(
        SW.eval(x, dict(zip(VARS, bits))) == SW.eval(y, dict(zip(VARS, bits)))
        for bits in itertools.product(BITS, repeat=len(VARS))
    )


@settings(max_examples=300)
@given(trees(), trees(), st.integers(0, 50))
def test_classification_survives_rewrites(up, other, seed):
    down = series(dual(up), other)  # never conducts with up
    g = Gate(VARS, up, down)
    h = Gate(VARS, rewrite(up, seed), rewrite(down, seed + 7))
    assert same_function(g.pull_up, h.pull_up) and same_function(g.pull_down, h.pull_down)
    assert SW.check_no_short(g).ok and SW.check_no_short(h).ok
    assert SW.classify_gate(g) is SW.classify_gate(h)


@settings(max_examples=200)
@given(trees())
def test_complementary_networks_compute_the_pull_up(up):
    g = Gate(VARS, up, dual(up))
    assert SW.classify_gate(g) is SW.GateClass.COMBINATIONAL
    for bits in itertools.product(BITS, repeat=len(VARS)):
        a = dict(zip(VARS, bits))
        assert g.output(a, previous=False) == SW.eval(up, a) == g.output(a, previous=True)
