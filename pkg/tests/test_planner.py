import json
from dataclasses import replace

import pytest
from oracles import backtrack_matches, bfs_distance, reachable

from kmf.engine import dump_trace
from kmf.planner import (
    BOUND_HIT,
    FRONTIER_EXHAUSTED,
    Plan,
    PlanFailure,
    ValidationError,
    check_invariant,
    find_plan,
    goal_witnesses,
    plan_from_dict,
    plan_json,
    plan_to_dict,
    reachable_states,
    satisfies_goal,
    validate_plan,
)
from kmf.syntax import parse_calls, parse_model, parse_predicates, print_canonical
from kmf.terms import Lit, Model, State, Var

ONE_PASSENGER = """
state start {
  is_vehicle(bus1). is_bus(bus1).
  is_item(p1). is_passenger(p1).
  is_poi(poi1). is_poi(poi2).
  next(poi1, poi2).
  at(bus1, poi1). at(p1, poi1). waiting(p1, min(2)).
  capacity(bus1, %d).
}
state done { at(p1, poi2). }
initial start.
goal done.
"""


def one_passenger(bus, capacity=1):
    m = parse_model(ONE_PASSENGER % capacity)
    return Model(m.states, bus.transitions, m.initial, m.goal, bus.rules)


def S(text):
    return State("s", parse_predicates(text))


def oracle_length(m):
    return bfs_distance(m.initial_state.predicates, list(m.goal_state.predicates), list(m.transitions.values()))


# goal matching ------------------------------------------------------------


def test_goal_subset():
    assert satisfies_goal(S("at(p1, bs2). is_passenger(p1)."), S("at(p1, bs2)."))


def test_goal_with_variable_has_witness():
    s = S("is_passenger(p1). at(p1, bs2). at(b1, bs1).")
    goal = parse_predicates("at(P, bs2). is_passenger(P).")
    assert goal_witnesses(s, goal) == [{Var("P"): Lit("p1")}]
    assert {frozenset(w.items()) for w in goal_witnesses(s, goal)} == backtrack_matches(goal, s.predicates)


def test_goal_not_met():
    assert not satisfies_goal(S("at(p1, bs1)."), S("at(p1, bs2)."))


# search -------------------------------------------------------------------


def test_initial_satisfies_goal_gives_empty_plan(bus):
    m = Model(bus.states, bus.transitions, "serviced", "serviced")
    plan = find_plan(m)
    assert isinstance(plan, Plan) and plan.cost == 0
    validate_plan(m, plan)


def test_one_passenger_three_steps(bus):
    m = one_passenger(bus)
    plan = find_plan(m)
    assert plan.transitions() == ["pickup-agent", "move-to-next-coordinate", "drop-agent"]
    assert oracle_length(m) == 3


def test_full_bus_reports_unsatisfied_goal(bus):
    m = one_passenger(bus, capacity=0)
    got = find_plan(m)
    assert isinstance(got, PlanFailure)
    assert got.reason == FRONTIER_EXHAUSTED
    assert [str(p) for p in got.unsatisfied] == ["at(p1, poi2)"]
    assert oracle_length(m) is None


def test_bound_hit_is_inconclusive(bus):
    got = find_plan(bus, bound=2)
    assert isinstance(got, PlanFailure)
    assert got.reason == BOUND_HIT
    assert got.explored == 2


def test_bound_must_be_positive(bus):
    with pytest.raises(ValueError):
        find_plan(bus, bound=0)


@pytest.mark.parametrize("name, length", [("bus", 6), ("truck", 8)])
def test_bundled_scenarios_are_optimal(name, length, request):
    m = request.getfixturevalue(name)
    plan = find_plan(m, bound=100_000)
    assert plan.cost == length == oracle_length(m)
    validate_plan(m, plan)


def test_reachable_space_matches_oracle(bus):
    ours = {s.predicates for s in reachable_states(bus)}
    assert ours == reachable(bus.initial_state.predicates, list(bus.transitions.values()))


def test_plan_trace_is_deterministic(bus):
    a, b = find_plan(bus), find_plan(parse_model(print_canonical(bus)))
    assert dump_trace(a.steps) == dump_trace(b.steps)
    assert plan_json(a) == plan_json(b)


def test_steps_chain(truck):
    plan = find_plan(truck)
    current = plan.initial
    for step in plan.steps:
        assert step.source == current
        current = step.destination
    assert satisfies_goal(current, truck.goal_state)


# validation ---------------------------------------------------------------


def test_precondition_violation_is_reported(bus):
    plan = find_plan(bus)
    broken = Plan(plan.initial, plan.steps[1:])
    with pytest.raises(ValidationError) as err:
        validate_plan(bus, broken)
    assert err.value.step == 0
    assert err.value.cause in {"precondition", "source-mismatch"}


def test_wrong_substitution_fails_precondition(bus):
    plan = find_plan(bus)
    first = plan.steps[0]
    sigma = dict(first.substitution)
    sigma[Var("S")] = Lit("poi3")
    step = replace(first, substitution=sigma)
    with pytest.raises(ValidationError) as err:
        validate_plan(bus, Plan(plan.initial, (step,) + plan.steps[1:]))
    assert (err.value.step, err.value.cause) == (0, "precondition")


def test_tampered_destination(bus):
    plan = find_plan(bus)
    k = 2
    dest = plan.steps[k].destination
    tampered = State(dest.name, dest.predicates | set(parse_predicates("raining.")))
    steps = list(plan.steps)
    steps[k] = replace(steps[k], destination=tampered)
    with pytest.raises(ValidationError) as err:
        validate_plan(bus, Plan(plan.initial, tuple(steps)))
    assert (err.value.step, err.value.cause) == (k, "destination-mismatch")


def test_plan_short_of_goal(bus):
    plan = find_plan(bus)
    with pytest.raises(ValidationError) as err:
        validate_plan(bus, Plan(plan.initial, plan.steps[:-1]))
    assert err.value.cause == "goal"


def test_unknown_transition(bus):
    doc = plan_to_dict(find_plan(bus))
    doc["steps"][0]["transition"] = "teleport"
    with pytest.raises(ValidationError, match="unknown-transition"):
        plan_from_dict(bus, doc)


# documents ----------------------------------------------------------------


def test_plan_document_round_trip(bus):
    plan = find_plan(bus)
    doc = json.loads(plan_json(plan))
    assert doc["status"] == "solved" and doc["cost"] == 6
    assert set(doc["steps"][0]) == {"transition", "bindings", "destination"}
    back = plan_from_dict(bus, doc)
    assert back == plan


def test_failure_document(bus):
    m = one_passenger(bus, 0)
    doc = plan_to_dict(find_plan(m))
    # the bus can still drive, so both of its positions get expanded
    explored = len(reachable(m.initial_state.predicates, list(m.transitions.values())))
    assert explored == 2
    assert doc == {"status": "failure", "reason": FRONTIER_EXHAUSTED, "explored": explored, "unsatisfied": ["at(p1, poi2)"]}


def test_plan_document_rejects_wrong_destination_hash(bus):
    doc = plan_to_dict(find_plan(bus))
    doc["steps"][3]["destination"] = "0" * 16
    with pytest.raises(ValidationError) as err:
        plan_from_dict(bus, doc)
    assert err.value.step == 3


# invariants ---------------------------------------------------------------


def test_capacity_never_negative(bus):
    report = check_invariant(bus, parse_predicates("capacity(V, C)."), parse_calls("less_than(C, 0)."))
    assert report.holds and report.complete
    assert report.explored == len(reachable_states(bus))


def test_invariant_violation_has_witness(bus):
    report = check_invariant(bus, parse_predicates("aboard(p2, bus1)."))
    assert not report.holds
    assert report.witness.final.predicates >= set(parse_predicates("aboard(p2, bus1)."))
    bad = State("bad", parse_predicates("aboard(p2, bus1)."))
    target = Model(bus.states | {"bad": bad}, bus.transitions, bus.initial, "bad")
    assert report.witness.cost == oracle_length(target)
