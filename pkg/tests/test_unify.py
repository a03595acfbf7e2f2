from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_matches
from strategies import VARS, predicates, small_args, small_state

from kmf.syntax import parse_predicates, parse_term
from kmf.terms import Lit, State, Var
from kmf.unify import EMPTY, Substitution, apply, match_precondition, unify


def P(text):
    (p,) = parse_predicates(text + ".")
    return p


def S(text):
    return State("s", parse_predicates(text))


def test_unify_binds_variable():
    assert unify(P("at(P, bs1)"), P("at(p1, bs1)")) == Substitution({Var("P"): Lit("p1")})


def test_unify_literal_mismatch():
    assert unify(P("at(p1, bs1)"), P("at(p1, bs2)")) is None


def test_unify_through_compound():
    got = unify(P("waiting(P, min(T))"), P("waiting(p1, min(2))"))
    assert got == {Var("P"): Lit("p1"), Var("T"): parse_term("2")}


def test_unify_respects_existing_bindings():
    sigma = Substitution({Var("P"): Lit("p2")})
    assert unify(P("at(P, bs1)"), P("at(p1, bs1)"), sigma) is None
    assert unify(P("at(P, S)"), P("at(p2, bs1)"), sigma) == {Var("P"): Lit("p2"), Var("S"): Lit("bs1")}


def test_unify_functor_and_arity_must_match():
    assert unify(P("at(X)"), P("at(a, b)")) is None
    assert unify(P("on(X, b)"), P("at(a, b)")) is None


def test_repeated_variable():
    assert unify(P("p(X, X)"), P("p(a, b)")) is None
    assert unify(P("p(X, X)"), P("p(a, a)")) == {Var("X"): Lit("a")}


def test_substitution_text_is_sorted():
    s = Substitution({Var("V"): Lit("bus1"), Var("A"): Lit("p1"), Var("C"): parse_term("2")})
    assert s.text() == "{A=p1, C=2, V=bus1}"
    assert EMPTY.text() == "{}"


def test_match_two_passengers():
    got = match_precondition(parse_predicates("is_passenger(P)."), S("is_passenger(p1). is_passenger(p2)."))
    assert got == [{Var("P"): Lit("p1")}, {Var("P"): Lit("p2")}]


def test_empty_precondition_matches_once():
    assert match_precondition([], S("a. b(c).")) == [EMPTY]
    assert match_precondition([], S("")) == [EMPTY]


def test_join_on_shared_variable():
    got = match_precondition(parse_predicates("at(P, S). is_bus(P)."), S("at(b25, bs1). is_bus(b25). at(p1, bs1)."))
    assert got == [{Var("P"): Lit("b25"), Var("S"): Lit("bs1")}]


def test_matching_is_not_injective():
    got = match_precondition(parse_predicates("p(X). p(Y)."), S("p(a)."))
    assert got == [{Var("X"): Lit("a"), Var("Y"): Lit("a")}]


def test_no_match():
    assert match_precondition(parse_predicates("q(X)."), S("p(a).")) == []


pre_lists = st.lists(predicates(small_args), max_size=4)


@settings(max_examples=400, deadline=None)
@given(pre_lists, small_state())
def test_match_equals_brute_force(pre, state):
    got = match_precondition(pre, state)
    assert len(got) == len(set(got))
    assert {frozenset(s.items()) for s in got} == brute_matches(pre, state.predicates)


@settings(max_examples=200, deadline=None)
@given(pre_lists, small_state())
def test_soundness_and_idempotence(pre, state):
    for sigma in match_precondition(pre, state):
        for p in pre:
            assert apply(sigma, p) in state
            assert apply(sigma, apply(sigma, p)) == apply(sigma, p)


@given(pre_lists, small_state())
def test_match_order_is_deterministic(pre, state):
    shuffled = State("s", sorted(state.predicates, key=str, reverse=True))
    assert match_precondition(pre, state) == match_precondition(list(reversed(pre)), shuffled)


@given(st.sampled_from(VARS))
def test_variables_only_bind_to_ground_terms(v):
    sigma = unify(v, parse_term("min(2)"))
    assert sigma == {v: parse_term("min(2)")}
