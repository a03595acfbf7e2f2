from collections import Counter
from pathlib import Path

import pytest
from hypothesis import given, settings
from oracles import brute_matches, fold_actions, oracle_successors
from strategies import small_models

from kmf.builtins import BUILTINS
from kmf.engine import (
    NonGroundError,
    UnknownFunction,
    apply_transition,
    dump_trace,
    eval_computation,
    fnv1a_64,
    state_hash,
    successors,
)
from kmf.syntax import parse_calls, parse_model, parse_predicates, parse_term
from kmf.terms import ActionPredicate, FunctionCall, Lit, Num, Predicate, State, TransitionSpec, Var
from kmf.unify import EMPTY, Substitution, apply, match_precondition

BOARD = parse_model((Path(__file__).parent / "data" / "board.kmf").read_text())


def calls(text):
    return parse_calls(text)


def S(text, name="s"):
    return State(name, parse_predicates(text))


def test_less_than_succeeds():
    assert eval_computation(calls("less_than(2, 20)."), EMPTY) == EMPTY


def test_subtract_binds_result():
    assert eval_computation(calls("subtract(23, 1, C2)."), EMPTY) == {Var("C2"): Num(22)}


def test_failed_test_fails_computation():
    assert eval_computation(calls("greater_than(0, 5)."), EMPTY) is None


def test_divide_by_zero_fails():
    assert eval_computation(calls("divide(1, 0, X)."), EMPTY) is None
    assert eval_computation(calls("divide(1, 4, X)."), EMPTY) == {Var("X"): parse_term("1/4")}


def test_results_thread_through_calls():
    got = eval_computation(calls("add(N, 2, M). multiply(M, M, K). greater_than(K, 20)."), {Var("N"): Num(3)})
    assert got[Var("K")] == Num(25)


def test_unknown_function_is_a_hard_error():
    with pytest.raises(UnknownFunction):
        eval_computation([FunctionCall("sqrt", (Num(4), Var("X")))], EMPTY)


def test_non_ground_argument_is_a_hard_error():
    with pytest.raises(NonGroundError):
        eval_computation([FunctionCall("less_than", (Var("Q"), Num(4)))], EMPTY)


def test_numeric_test_on_literal_fails():
    assert eval_computation(calls("less_than(X, 3)."), {Var("X"): Lit("a")}) is None


@pytest.mark.parametrize(
    "call, expected",
    [
        ("less_or_equal(3, 3).", True),
        ("greater_or_equal(2, 3).", False),
        ("equal(a, a).", True),
        ("not_equal(a, a).", False),
        ("equal(1/2, 0.5).", True),
    ],
)
def test_tests(call, expected):
    assert (eval_computation(calls(call), EMPTY) is not None) == expected


@pytest.mark.parametrize(
    "call, value",
    [("min(3, -1, X).", "-1"), ("max(3, -1, X).", "3"), ("abs(-7/2, X).", "7/2"), ("add(0.1, 0.2, X).", "0.3")],
)
def test_values(call, value):
    assert eval_computation(calls(call), EMPTY)[Var("X")] == parse_term(value)


def test_builtin_table():
    assert {n for n, f in BUILTINS.items() if f.kind == "test"} == {
        "less_than", "less_or_equal", "greater_than", "greater_or_equal", "equal", "not_equal",
    }
    assert {n for n, f in BUILTINS.items() if f.kind == "value"} == {
        "add", "subtract", "multiply", "divide", "min", "max", "abs",
    }


def test_computation_is_pure():
    sigma = Substitution({Var("N"): Num(1)})
    eval_computation(calls("add(N, 1, M)."), sigma)
    assert sigma == {Var("N"): Num(1)}


# board transition -----------------------------------------------------------


def test_board_transition_reaches_expected_state():
    t = BOARD.transitions["board"]
    before, after = BOARD.states["before"], BOARD.states["after"]
    (step,) = successors(before, [t])
    assert step.destination == after
    # the same destination by literal set arithmetic
    (env,) = brute_matches(t.precondition, before.predicates)
    env = dict(env)
    env[Var("C2")] = Num(22)
    assert fold_actions(before.predicates, t.action, env) == after.predicates


@pytest.mark.parametrize("edit", ["waiting(p1, min(20))", "waiting(p1, min(35))"])
def test_board_blocked_by_long_wait(edit):
    before = BOARD.states["before"]
    preds = (before.predicates - set(parse_predicates("waiting(p1, min(2))."))) | set(parse_predicates(edit + "."))
    assert successors(State("x", preds), BOARD.transitions) == []


def test_board_blocked_by_full_bus():
    before = BOARD.states["before"]
    preds = (before.predicates - set(parse_predicates("capacity(b25, 23)."))) | set(parse_predicates("capacity(b25, 0)."))
    t = BOARD.transitions["board"]
    assert match_precondition(t.precondition, State("x", preds))  # precondition still matches
    assert successors(State("x", preds), [t]) == []


def test_two_waiting_passengers_two_steps():
    s = S(
        "is_bus(b). is_bus_stop(bs). is_passenger(p1). is_passenger(p2)."
        "at(b, bs). at(p1, bs). at(p2, bs). capacity(b, 2). waiting(p1, min(1)). waiting(p2, min(3))."
    )
    steps = successors(s, BOARD.transitions)
    assert [st.substitution[Var("P")] for st in steps] == [Lit("p1"), Lit("p2")]


def test_nothing_matches():
    assert successors(S("unrelated."), BOARD.transitions) == []


# action semantics ---------------------------------------------------------


def _t(*actions):
    return TransitionSpec("t", (), (), tuple(ActionPredicate(op, p) for op, p in actions))


def test_add_present_and_delete_absent_are_no_ops():
    s = S("a. b.")
    assert apply_transition(s, _t(("add", Predicate("a"))), EMPTY) == s
    assert apply_transition(s, _t(("delete", Predicate("zzz"))), EMPTY) == s


def test_action_order_matters():
    s = S("a.")
    assert Predicate("a") in apply_transition(s, _t(("delete", Predicate("a")), ("add", Predicate("a"))), EMPTY)
    assert Predicate("a") not in apply_transition(s, _t(("add", Predicate("a")), ("delete", Predicate("a"))), EMPTY)


def test_non_ground_action_rejected():
    with pytest.raises(NonGroundError):
        apply_transition(S("a."), _t(("add", Predicate("p", (Var("X"),)))), EMPTY)


def test_destination_name_is_hash():
    d = apply_transition(S("a."), _t(("add", Predicate("b"))), EMPTY)
    assert d.name == "s" + state_hash(d)


# hashing and trace --------------------------------------------------------


def test_fnv1a_reference_vectors():
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a_64(b"foobar") == 0x85944171F73967E8


def test_state_hash_ignores_name_and_order():
    a = S("p(1). q(a).", "x")
    b = S("q(a). p(1).", "y")
    assert state_hash(a) == state_hash(b)
    assert len(state_hash(a)) == 16
    assert state_hash(S("")) == f"{0xCBF29CE484222325:016x}"


def test_trace_line_format():
    (step,) = successors(BOARD.states["before"], BOARD.transitions)
    line = step.trace_line()
    src, dst = state_hash(BOARD.states["before"]), state_hash(BOARD.states["after"])
    assert line == f"{src} --board{{B=b25, C=23, C2=22, P=p1, S=bs1, T=2}}--> {dst}"
    assert dump_trace([step, step]) == line + "\n" + line + "\n"


# oracle agreement ---------------------------------------------------------


def _ours(state, transitions):
    return Counter(
        (st.transition, frozenset(st.substitution.items()), st.destination.predicates)
        for st in successors(state, transitions)
    )


@settings(max_examples=300, deadline=None)
@given(small_models())
def test_successors_equal_brute_force(model):
    state, transitions = model
    assert _ours(state, transitions) == Counter(oracle_successors(state.predicates, transitions))


@settings(max_examples=100, deadline=None)
@given(small_models())
def test_frame_property(model):
    state, transitions = model
    for st in successors(state, transitions):
        t = next(t for t in transitions if t.name == st.transition)
        touched = {a.predicate for a in t.action}
        touched = {apply(st.substitution, p) for p in touched}
        for p in state.predicates - touched:
            assert p in st.destination
