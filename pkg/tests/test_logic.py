import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vertisched.logic import (
    TriState,
    tree_assign,
    tree_eval,
    tree_init,
    tree_release,
)


def test_tristate_digits():
    assert TriState.TRUE.digit == "1"
    assert TriState.FALSE.digit == "0"
    with pytest.raises(ValueError):
        TriState.UNKNOWN.digit
    assert TriState.from_digit(None) is TriState.UNKNOWN
    assert TriState.from_digit(1) is TriState.TRUE
    with pytest.raises(ValueError):
        TriState.from_digit(2)


def test_init_default_order():
    state = tree_init(2)
    outcome = tree_eval(state)
    assert outcome.unknowns == (1, 2)
    assert outcome.query == 1
    assert outcome.intent_label is None


def test_init_single_symbol():
    outcome = tree_eval(tree_init(1))
    assert outcome.unknowns == (1,)
    assert outcome.query == 1


def test_init_reversed_order_queries_lowest_rank():
    state = tree_init(3, {1: 3, 2: 2, 3: 1})
    assert tree_eval(state).query == 3


def test_init_rejects_bad_order():
    with pytest.raises(ValueError):
        tree_init(2, {1: 1, 2: 3})
    with pytest.raises(ValueError):
        tree_init(0)


def test_assign_then_known():
    state = tree_assign(tree_init(2), 1, TriState.TRUE)
    outcome = tree_eval(state)
    assert outcome.known == {1: TriState.TRUE}
    assert outcome.unknowns == (2,)
    assert outcome.query == 2
    assert outcome.sym_facts == ((1, TriState.TRUE),)


def test_contradiction_reverts_to_unknown():
    state = tree_init(2)
    state = tree_assign(state, 1, TriState.TRUE)
    state = tree_assign(state, 1, TriState.FALSE)
    outcome = tree_eval(state)
    assert outcome.contradictions == (1,)
    assert 1 in outcome.unknowns
    assert outcome.query == 1  # re-queried


def test_release_clears_contradiction():
    state = tree_init(2)
    state = tree_assign(state, 1, TriState.TRUE)
    state = tree_assign(state, 1, TriState.FALSE)
    state = tree_release(state, 1, (TriState.TRUE, TriState.FALSE))
    outcome = tree_eval(state)
    assert outcome.contradictions == ()
    assert outcome.query == 1


def test_intent_labels_for_depth_two():
    expectations = {
        (TriState.TRUE, TriState.TRUE): "op_11",
        (TriState.FALSE, TriState.FALSE): "op_00",
        (TriState.TRUE, TriState.FALSE): "op_01",  # symbol 2 false, symbol 1 true
        (TriState.FALSE, TriState.TRUE): "op_10",
    }
    for (v1, v2), label in expectations.items():
        state = tree_init(2)
        state = tree_assign(state, 1, v1)
        state = tree_assign(state, 2, v2)
        assert tree_eval(state).intent_label == label


def test_intent_label_general_depth():
    state = tree_init(3)
    for symbol, value in ((1, TriState.FALSE), (2, TriState.TRUE), (3, TriState.FALSE)):
        state = tree_assign(state, symbol, value)
    assert tree_eval(state).intent_label == "op_010"


def test_unknown_symbol_rejected():
    state = tree_init(2)
    with pytest.raises(ValueError, match="unknown symbol"):
        tree_assign(state, 3, TriState.TRUE)
    with pytest.raises(ValueError, match="unknown symbol"):
        tree_release(state, 0, (TriState.TRUE,))


def test_assign_rejects_unknown_value():
    with pytest.raises(ValueError):
        tree_assign(tree_init(1), 1, TriState.UNKNOWN)


@settings(max_examples=200, deadline=None, derandomize=True)
@given(
    ops=st.lists(
        st.tuples(
            st.sampled_from(["assign", "release"]),
            st.integers(min_value=1, max_value=3),
            st.sampled_from([TriState.TRUE, TriState.FALSE]),
        ),
        max_size=20,
    )
)
def test_eval_never_knows_both_values(ops):
    state = tree_init(3)
    for op, symbol, value in ops:
        if op == "assign":
            state = tree_assign(state, symbol, value)
        else:
            state = tree_release(state, symbol, (value,))
        outcome = tree_eval(state)
        # a contradicted symbol is unknown again and will be re-queried
        for symbol_ in outcome.contradictions:
            assert symbol_ in outcome.unknowns
            assert symbol_ not in outcome.known
        if outcome.unknowns:
            ranks = {state.order[s] for s in outcome.unknowns}
            assert state.order[outcome.query] == min(ranks)
