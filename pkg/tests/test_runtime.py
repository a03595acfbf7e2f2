import dataclasses
import json
from pathlib import Path

import pytest
from conftest import GOLDEN
from oracles import bfs_distance

from kmf.planner import Plan, PlanFailure, ValidationError, find_plan, plan_to_dict, satisfies_goal
from kmf.runtime import (
    DONE,
    FAILED,
    REPLANNING,
    RUNNING,
    DispatchError,
    ExpertiseTable,
    Invocation,
    Perturbation,
    Query,
    RunError,
    answer,
    default_expertise,
    dispatch,
    event_log_text,
    execute,
    load_script,
    perturb,
    replan,
    replay_events,
    replay_history,
    run_to_dict,
    simulate,
    start_run,
)
from kmf.syntax import parse_predicates
from kmf.terms import Model

DATA = Path(__file__).parent / "data"


def run_until_done(run):
    while run.status == RUNNING:
        run = execute(run)
    return run


def oracle_replan_length(run):
    goal = list(run.model.goal_state.predicates)
    return bfs_distance(run.world.predicates, goal, list(run.model.transitions.values()))


# dispatch -----------------------------------------------------------------


def test_reach_goal_goes_to_planner():
    assert dispatch(Query("reach-goal", "bus"), default_expertise()).to_dict() == {"solver": "planner", "bound": 1_000_000}


def test_validate_trace_goes_to_validator():
    inv = dispatch(Query("validate-trace", "bus", {"plan": {}}), default_expertise())
    assert inv == Invocation("validate_plan", {})


def test_check_invariant_capacity_never_negative(bus):
    q = Query("check-invariant", "bus", {"pattern": "capacity(V, C).", "computation": "less_than(C, 0)."})
    assert dispatch(q, default_expertise()).solver == "reachability"
    report = answer(q, default_expertise(), bus)
    assert report.holds and report.complete


def test_answer_reach_goal(bus):
    plan = answer(Query("reach-goal", "bus"), default_expertise(), bus)
    assert plan.cost == 6


def test_answer_validate_trace(bus):
    doc = plan_to_dict(find_plan(bus))
    assert answer(Query("validate-trace", "bus", {"plan": doc}), default_expertise(), bus).cost == 6
    doc["steps"] = doc["steps"][:-1]
    with pytest.raises(ValidationError):
        answer(Query("validate-trace", "bus", {"plan": doc}), default_expertise(), bus)


def test_unknown_query_kind():
    with pytest.raises(DispatchError):
        Query("make-coffee", "bus")


def test_missing_payload():
    with pytest.raises(DispatchError, match="pattern"):
        Query("check-invariant", "bus")


def test_table_must_be_total():
    with pytest.raises(DispatchError, match="check-invariant"):
        ExpertiseTable.from_dict({"rules": [{"query": "reach-goal", "solver": "planner"}, {"query": "validate-trace", "solver": "v"}]})


def test_first_rule_wins():
    table = ExpertiseTable.from_dict(
        {
            "rules": [
                {"query": "reach-goal", "solver": "planner", "config": {"bound": 10}},
                {"query": "reach-goal", "solver": "other"},
                {"query": "validate-trace", "solver": "validate_plan"},
                {"query": "check-invariant", "solver": "reachability"},
            ]
        }
    )
    q = Query("reach-goal", "bus")
    assert dispatch(q, table) == dispatch(q, table) == Invocation("planner", {"bound": 10})


# execute / perturb / replan -----------------------------------------------


def test_unperturbed_run_finishes(bus):
    run = run_until_done(start_run(bus))
    assert run.status == DONE
    assert satisfies_goal(run.world, bus.goal_state)
    assert run.executed == 6
    replay_history(run)


def test_empty_plan_is_done_immediately(bus):
    m = Model(bus.states, bus.transitions, "serviced", "serviced")
    run = start_run(m)
    assert run.status == DONE and run.plan == ()


def test_removed_bus_detected_at_next_step(bus):
    run = start_run(bus)
    run = perturb(run, delete=["at(bus1, poi1)"])
    assert run.status == RUNNING  # nothing happens until the next execute
    run = execute(run)
    assert run.status == REPLANNING
    assert run.log[-1]["mismatch"] == "precondition"
    assert run.executed == 0


def test_new_passenger_appears(bus):
    run = start_run(bus)
    extra = parse_predicates("waiting(p9, min(0)). is_passenger(p9). at(p9, poi2).")
    after = perturb(run, add=extra)
    assert after.world.predicates == run.world.predicates | set(extra)
    assert isinstance(after.history[-1], Perturbation)


def test_empty_perturbation_keeps_world(bus):
    run = start_run(bus)
    assert perturb(run).world == run.world


def test_non_ground_perturbation_rejected(bus):
    with pytest.raises(RunError, match="ground"):
        perturb(start_run(bus), add=["at(X, poi1)"])


def test_operations_check_status(bus):
    run = start_run(bus)
    with pytest.raises(RunError):
        replan(run)
    done = run_until_done(run)
    with pytest.raises(RunError):
        execute(done)
    with pytest.raises(RunError):
        perturb(done, add=["raining"])


def test_displaced_bus_replans_with_one_extra_move(bus):
    run = start_run(bus)
    run = execute(execute(run))
    remaining = [s.transition for s in run.plan]
    run = perturb(run, delete=["at(bus1, poi2)"], add=["at(bus1, poi1)"])
    run = replan(execute(run))
    assert [s.transition for s in run.plan] == ["move-to-next-coordinate"] + remaining
    assert len(run.plan) == oracle_replan_length(run)
    run = run_until_done(run)
    assert run.status == DONE
    replay_history(run)


def test_goal_reached_by_perturbation(bus):
    run = start_run(bus)
    run = perturb(run, delete=["at(p1, poi1)", "at(p2, poi2)"], add=["at(p1, poi3)", "at(p2, poi3)"])
    run = replan(execute(run))
    assert run.status == DONE and run.plan == ()


def test_zero_capacity_fails_with_diagnosis(bus):
    run = start_run(bus)
    run = perturb(run, delete=["capacity(bus1, 2)"], add=["capacity(bus1, 0)"])
    run = replan(execute(run))
    assert run.status == FAILED
    assert isinstance(run.diagnosis, PlanFailure)
    assert [str(p) for p in run.diagnosis.unsatisfied] == ["at(p1, poi3)", "at(p2, poi3)"]
    assert oracle_replan_length(run) is None


def test_history_replay_detects_tampering(bus):
    run = run_until_done(start_run(bus))
    step = run.history[2]
    forged = dataclasses.replace(step, destination=run.world)
    bad = dataclasses.replace(run, history=run.history[:2] + (forged,) + run.history[3:])
    with pytest.raises(ValidationError):
        replay_history(bad)


# scripted runs and event logs ---------------------------------------------


@pytest.mark.parametrize(
    "script, golden, status, executed",
    [("displaced.json", "replan_displaced.jsonl", DONE, 7), ("capacity_zero.json", "replan_capacity.jsonl", FAILED, 0)],
)
def test_scripted_run_matches_golden_log(bus, script, golden, status, executed):
    run = simulate(bus, load_script(DATA / script), run_id="run-1")
    assert (run.status, run.executed) == (status, executed)
    assert event_log_text(run) == (GOLDEN / golden).read_text()
    replay_history(run)


def test_displaced_run_final_plan_validates(bus):
    run = simulate(bus, load_script(DATA / "displaced.json"))
    replans = [r for r in run.log if r["event"] == "replan"]
    assert len(replans) == 2
    assert len(replans[1]["plan"]) == 5
    assert satisfies_goal(run.world, bus.goal_state)


def test_event_log_replays(bus):
    run = simulate(bus, load_script(DATA / "displaced.json"), run_id="run-1")
    records = [json.loads(line) for line in event_log_text(run).splitlines()]
    again = replay_events(bus, records)
    assert again.world == run.world and again.status == run.status


def test_event_log_replay_detects_divergence(bus):
    records = [json.loads(line) for line in (GOLDEN / "replan_displaced.jsonl").read_text().splitlines()]
    records[3]["after"] = "0" * 16
    with pytest.raises(RunError, match="diverges"):
        replay_events(bus, records)


def test_run_document(bus):
    run = simulate(bus, load_script(DATA / "capacity_zero.json"), run_id="run-7")
    doc = run_to_dict(run)
    assert doc["run"] == "run-7" and doc["status"] == FAILED
    assert doc["diagnosis"]["unsatisfied"] == ["at(p1, poi3)", "at(p2, poi3)"]


def test_liveness_without_perturbations(truck):
    run = simulate(truck)
    assert run.status == DONE
    assert run.executed == find_plan(truck).cost
    assert isinstance(find_plan(truck), Plan)
