"""Hypothesis generators for terms, states, transitions and whole models."""

from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from kmf.terms import (
    ActionPredicate,
    Compound,
    FunctionCall,
    Lit,
    Model,
    Num,
    Predicate,
    State,
    TransformationRules,
    TransitionSpec,
    Var,
)

LITS = [Lit(n) for n in ("a", "b", "c", "poi1", "bus_2")]
VARS = [Var(n) for n in ("X", "Y", "Z")]
FUNCTORS = ["p", "q", "at", "is_x"]

numbers = st.one_of(
    st.integers(-5, 5).map(Num),
    st.builds(Fraction, st.integers(-9, 9), st.integers(1, 4)).map(Num),
    st.integers(-(2**63), 2**63 - 1).map(Num),
)


def ground_terms(max_depth=2):
    base = st.one_of(st.sampled_from(LITS), numbers)
    return st.recursive(
        base,
        lambda inner: st.builds(Compound, st.sampled_from(["min", "kmh", "f"]), st.lists(inner, min_size=1, max_size=2).map(tuple)),
        max_leaves=3,
    )


def terms(variables=VARS):
    base = st.one_of(st.sampled_from(LITS), st.integers(0, 3).map(Num), st.sampled_from(variables))
    return st.recursive(
        base,
        lambda inner: st.builds(Compound, st.just("min"), st.lists(inner, min_size=1, max_size=1).map(tuple)),
        max_leaves=2,
    )


def predicates(args):
    return st.builds(Predicate, st.sampled_from(FUNCTORS), st.lists(args, max_size=2).map(tuple))


def states(max_size=6, name="s"):
    return st.frozensets(predicates(ground_terms()), max_size=max_size).map(lambda ps: State(name, ps))


# small models for the semantics oracle ------------------------------------

small_ground = st.one_of(st.sampled_from(LITS[:3]), st.integers(0, 3).map(Num))
small_args = st.one_of(small_ground, st.sampled_from(VARS))


def small_state(max_size=6):
    arg = st.one_of(small_ground, st.builds(Compound, st.just("min"), st.tuples(st.integers(0, 3).map(Num))))
    return st.frozensets(predicates(arg), max_size=max_size).map(lambda ps: State("s", ps))


@st.composite
def small_transition(draw, name="t"):
    pattern_arg = st.one_of(small_args, st.builds(Compound, st.just("min"), st.tuples(st.sampled_from(VARS))))
    pre = draw(st.lists(predicates(pattern_arg), max_size=4))
    t = TransitionSpec(name, pre)
    bound = set()
    for p in t.precondition:
        _collect(p, bound)
    bound_list = sorted(bound, key=lambda v: v.name)
    operand = st.one_of(st.sampled_from(bound_list), st.integers(0, 3).map(Num)) if bound_list else st.integers(0, 3).map(Num)
    calls = []
    if draw(st.booleans()):
        fn = draw(st.sampled_from(["less_than", "greater_or_equal", "equal", "not_equal"]))
        calls.append(FunctionCall(fn, (draw(operand), draw(operand))))
    result = None
    if draw(st.booleans()):
        fn = draw(st.sampled_from(["add", "subtract", "multiply", "max"]))
        result = Var("R")
        calls.append(FunctionCall(fn, (draw(operand), draw(operand), result)))
    usable = bound_list + ([result] if result else [])
    act_arg = st.one_of(small_ground, st.sampled_from(usable)) if usable else small_ground
    actions = draw(
        st.lists(st.builds(ActionPredicate, st.sampled_from(["add", "delete"]), predicates(act_arg)), max_size=3)
    )
    return TransitionSpec(name, t.precondition, tuple(calls), tuple(actions))


def _collect(t, out):
    if isinstance(t, Var):
        out.add(t)
    elif isinstance(t, (Compound, Predicate)):
        for a in t.args:
            _collect(a, out)


@st.composite
def small_models(draw):
    state = draw(small_state())
    n = draw(st.integers(1, 3))
    transitions = [draw(small_transition(f"t{i}")) for i in range(n)]
    return state, transitions


# whole models for the round-trip property ---------------------------------


@st.composite
def models(draw):
    n_states = draw(st.integers(0, 3))
    states_ = {f"s{i}": draw(states(name=f"s{i}")) for i in range(n_states)}
    names = sorted(states_)
    initial = draw(st.sampled_from(names)) if names and draw(st.booleans()) else None
    goal = None
    if names and draw(st.booleans()):
        goal = "goal"
        states_[goal] = State(goal, draw(st.frozensets(predicates(terms()), max_size=3)))
    transitions = {}
    for i in range(draw(st.integers(0, 2))):
        t = draw(small_transition(f"move-{i}"))
        transitions[t.name] = t
    rules = None
    if draw(st.booleans()):
        rules = TransformationRules(
            types=draw(st.frozensets(st.sampled_from(["is_a", "is_b"]))),
            fluents=draw(st.dictionaries(st.sampled_from(["cap", "level"]), st.integers(1, 3), max_size=2)),
            wrappers=draw(st.dictionaries(st.sampled_from(["min", "km"]), st.sampled_from(["minutes", "kilometres"]), max_size=2)),
            typing=draw(st.booleans()),
            existential_goals=draw(st.booleans()),
        )
    return Model(states_, transitions, initial, goal, rules)
