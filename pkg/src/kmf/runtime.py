"""Query dispatch and the simulated execute / perturb / replan loop.

Runs are immutable values: every operation returns a new :class:`RunState`
carrying the updated world, remaining plan, history and event log.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .engine import TransitionStep, state_hash
from .planner import (
    DEFAULT_BOUND,
    PlanFailure,
    ValidationError,
    check_invariant,
    find_plan,
    plan_from_dict,
    plan_to_dict,
    replay_step,
    satisfies_goal,
    validate_plan,
)
from .syntax import parse_calls, parse_predicates
from .terms import Model, Predicate, State, is_ground

QUERY_KINDS = ("reach-goal", "validate-trace", "check-invariant")
REQUIRED = {"reach-goal": (), "validate-trace": ("plan",), "check-invariant": ("pattern",)}

RUNNING, REPLANNING, DONE, FAILED = "running", "replanning", "done", "failed"


class DispatchError(ValueError):
    pass


class RunError(Exception):
    pass


# meta-reasoning dispatch --------------------------------------------------


@dataclass(frozen=True)
class Query:
    kind: str
    model: str
    args: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in REQUIRED:
            raise DispatchError(f"unknown query kind {self.kind!r}")
        missing = [k for k in REQUIRED[self.kind] if k not in self.args]
        if missing:
            raise DispatchError(f"{self.kind} query needs {', '.join(missing)}")


@dataclass(frozen=True)
class Invocation:
    solver: str
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"solver": self.solver, **self.config}


@dataclass(frozen=True)
class ExpertiseTable:
    rules: tuple  # of (query kind, solver name, config dict)

    def __post_init__(self):
        covered = {r[0] for r in self.rules}
        missing = [k for k in QUERY_KINDS if k not in covered]
        if missing:
            raise DispatchError(f"expertise table does not cover {', '.join(missing)}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExpertiseTable":
        return cls(tuple((r["query"], r["solver"], dict(r.get("config", {}))) for r in doc["rules"]))

    @classmethod
    def load(cls, path) -> "ExpertiseTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_expertise() -> ExpertiseTable:
    return ExpertiseTable.load(Path(__file__).resolve().parent / "data" / "expertise.json")


def dispatch(q: Query, e: ExpertiseTable) -> Invocation:
    """First rule whose query kind matches wins."""
    for kind, solver, config in e.rules:
        if kind == q.kind:
            return Invocation(solver, dict(config))
    raise DispatchError(f"no expertise for query kind {q.kind!r}")


def answer(q: Query, e: ExpertiseTable, m: Model):
    """Dispatch ``q`` and run the chosen solver on ``m``."""
    inv = dispatch(q, e)
    bound = int(q.args.get("bound", inv.config.get("bound", DEFAULT_BOUND)))
    if inv.solver == "planner":
        return find_plan(m, bound)
    if inv.solver == "validate_plan":
        plan = q.args["plan"]
        if isinstance(plan, dict):
            plan = plan_from_dict(m, plan)
        validate_plan(m, plan)
        return plan
    if inv.solver == "reachability":
        pattern = q.args["pattern"]
        calls = q.args.get("computation", ())
        if isinstance(pattern, str):
            pattern = parse_predicates(pattern)
        if isinstance(calls, str):
            calls = parse_calls(calls)
        return check_invariant(m, pattern, calls, bound)
    raise DispatchError(f"unknown solver {inv.solver!r}")


# runs ---------------------------------------------------------------------


@dataclass(frozen=True)
class Perturbation:
    """Pseudo-step recording an external change to the world."""

    source: State
    added: tuple
    deleted: tuple
    destination: State


@dataclass(frozen=True)
class RunState:
    run_id: str
    model: Model
    world: State
    plan: tuple = ()
    history: tuple = ()
    status: str = RUNNING
    bound: int = DEFAULT_BOUND
    diagnosis: PlanFailure | None = None
    log: tuple = ()

    @property
    def executed(self) -> int:
        return sum(isinstance(h, TransitionStep) for h in self.history)

    def _event(self, event: str, before: State, **detail) -> dict:
        rec = {
            "seq": len(self.log),
            "run": self.run_id,
            "event": event,
            "before": state_hash(before),
            "after": state_hash(self.world),
            "status": self.status,
        }
        rec.update(detail)
        return rec

    def logged(self, event: str, before: State, **detail) -> "RunState":
        return dataclasses.replace(self, log=self.log + (self._event(event, before, **detail),))


def _bindings(step: TransitionStep) -> dict:
    return {v.name: str(t) for v, t in sorted(step.substitution.items(), key=lambda kv: kv[0].name)}


def start_run(m: Model, run_id: str = "run", bound: int = DEFAULT_BOUND) -> RunState:
    """New run in the model's initial state; plans immediately."""
    run = RunState(run_id, m, m.initial_state, status=REPLANNING, bound=bound)
    run = run.logged("start", run.world)
    return replan(run)


def execute(run: RunState) -> RunState:
    """Apply the next plan step to the world, or flag the run for replanning."""
    if run.status != RUNNING:
        raise RunError(f"run {run.run_id} is {run.status}, not running")
    before = run.world
    if not run.plan:
        status = DONE if satisfies_goal(run.world, run.model.goal_state) else REPLANNING
        return dataclasses.replace(run, status=status).logged("execute", before, transition=None)
    expected = run.plan[0]
    try:
        step = replay_step(run.model.transitions, run.world, expected.transition, expected.substitution)
    except ValidationError as exc:
        nxt = dataclasses.replace(run, status=REPLANNING)
        return nxt.logged("execute", before, transition=expected.transition, mismatch=exc.cause)
    rest = run.plan[1:]
    if step.destination != expected.destination:
        status, mismatch = REPLANNING, "destination-mismatch"
    elif not rest:
        goal = satisfies_goal(step.destination, run.model.goal_state)
        status, mismatch = (DONE, None) if goal else (REPLANNING, "goal")
    else:
        status, mismatch = RUNNING, None
    nxt = dataclasses.replace(
        run,
        world=step.destination,
        plan=rest if status in (RUNNING, DONE) else (),
        history=run.history + (step,),
        status=status,
    )
    detail = {"transition": step.transition, "bindings": _bindings(step)}
    if mismatch:
        detail["mismatch"] = mismatch
    return nxt.logged("execute", before, **detail)


def _as_predicates(items) -> list[Predicate]:
    if isinstance(items, str):
        return parse_predicates(items)
    out = []
    for p in items:
        out.extend(parse_predicates(p.rstrip().rstrip(".") + ".") if isinstance(p, str) else [p])
    return out


def perturb(run: RunState, add: Sequence = (), delete: Sequence = ()) -> RunState:
    """Change the world directly; the mismatch surfaces on the next execute."""
    if run.status != RUNNING:
        raise RunError(f"run {run.run_id} is {run.status}, not running")
    added, deleted = _as_predicates(add), _as_predicates(delete)
    bad = [str(p) for p in added + deleted if not is_ground(p)]
    if bad:
        raise RunError(f"perturbation predicates must be ground: {', '.join(bad)}")
    before = run.world
    preds = (before.predicates - set(deleted)) | set(added)
    after = State("s" + state_hash(State("", preds)), preds)
    pseudo = Perturbation(before, tuple(added), tuple(deleted), after)
    nxt = dataclasses.replace(run, world=after, history=run.history + (pseudo,))
    return nxt.logged(
        "perturb",
        before,
        add=sorted(str(p) for p in added),
        delete=sorted(str(p) for p in deleted),
    )


def replan(run: RunState) -> RunState:
    """Plan from scratch from the current world to the original goal."""
    if run.status != REPLANNING:
        raise RunError(f"run {run.run_id} is {run.status}, not replanning")
    before = run.world
    name = "@world"
    m = dataclasses.replace(run.model, states={**run.model.states, name: run.world}, initial=name)
    result = find_plan(m, run.bound)
    if isinstance(result, PlanFailure):
        nxt = dataclasses.replace(run, plan=(), status=FAILED, diagnosis=result)
        return nxt.logged("replan", before, result=plan_to_dict(result))
    status = RUNNING if result.steps else DONE
    nxt = dataclasses.replace(run, plan=result.steps, status=status, diagnosis=None)
    return nxt.logged("replan", before, plan=result.transitions())


def advance(run: RunState) -> RunState:
    """One execute or replan, whichever the status calls for."""
    if run.status == RUNNING:
        return execute(run)
    if run.status == REPLANNING:
        return replan(run)
    raise RunError(f"run {run.run_id} has finished ({run.status})")


@dataclass(frozen=True)
class ScriptedPerturbation:
    after: int  # number of executed transition steps before it fires
    add: tuple = ()
    delete: tuple = ()


def load_script(doc) -> list[ScriptedPerturbation]:
    """Read ``{"perturbations": [{"after": 2, "add": [...], "delete": [...]}]}``."""
    if isinstance(doc, (str, Path)):
        doc = json.loads(Path(doc).read_text())
    return [
        ScriptedPerturbation(int(p["after"]), tuple(p.get("add", ())), tuple(p.get("delete", ())))
        for p in doc.get("perturbations", [])
    ]


def simulate(
    m: Model,
    script: Sequence[ScriptedPerturbation] = (),
    run_id: str = "run",
    bound: int = DEFAULT_BOUND,
    max_events: int = 10_000,
) -> RunState:
    """Drive a run to ``done`` or ``failed``, injecting scripted perturbations."""
    pending = sorted(script, key=lambda p: p.after)
    run = start_run(m, run_id, bound)
    while run.status in (RUNNING, REPLANNING):
        if len(run.log) >= max_events:
            raise RunError(f"run {run_id} did not finish within {max_events} events")
        if run.status == RUNNING and pending and pending[0].after <= run.executed:
            p = pending.pop(0)
            run = perturb(run, p.add, p.delete)
            continue
        run = advance(run)
    return run


def replay_history(run: RunState) -> State:
    """Re-derive the world from the initial state through every recorded step."""
    current = run.model.initial_state
    for i, h in enumerate(run.history):
        if h.source != current:
            raise ValidationError(i, "source-mismatch")
        if isinstance(h, Perturbation):
            preds = (current.predicates - set(h.deleted)) | set(h.added)
            if preds != h.destination.predicates:
                raise ValidationError(i, "destination-mismatch", "perturbation")
            current = h.destination
            continue
        step = replay_step(run.model.transitions, current, h.transition, h.substitution, i)
        if step.destination != h.destination:
            raise ValidationError(i, "destination-mismatch")
        current = step.destination
    if current != run.world:
        raise ValidationError(len(run.history), "destination-mismatch", "history does not end in the world")
    return current


def event_log_text(run: RunState) -> str:
    """The event log as JSON lines."""
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in run.log)


def replay_events(m: Model, records: Sequence[dict], bound: int = DEFAULT_BOUND) -> RunState:
    """Re-run a recorded event log and check every state hash along the way."""
    run = None
    for rec in records:
        event = rec["event"]
        if event == "start":
            run = RunState(rec["run"], m, m.initial_state, status=REPLANNING, bound=bound).logged("start", m.initial_state)
        elif run is None:
            raise RunError("event log does not begin with a start event")
        elif event == "execute":
            run = execute(run)
        elif event == "replan":
            run = replan(run)
        elif event == "perturb":
            run = perturb(run, rec.get("add", ()), rec.get("delete", ()))
        else:
            raise RunError(f"unknown event {event!r}")
        got = run.log[-1]
        if got != rec:
            raise RunError(f"event {rec.get('seq')} diverges on replay")
    if run is None:
        raise RunError("empty event log")
    return run


def run_to_dict(run: RunState) -> dict:
    doc = {
        "run": run.run_id,
        "status": run.status,
        "world": state_hash(run.world),
        "executed": run.executed,
        "plan": [s.transition for s in run.plan],
        "events": len(run.log),
    }
    if run.diagnosis is not None:
        doc["diagnosis"] = plan_to_dict(run.diagnosis)
    return doc


__all__ = [
    "DONE",
    "FAILED",
    "QUERY_KINDS",
    "REPLANNING",
    "RUNNING",
    "DispatchError",
    "ExpertiseTable",
    "Invocation",
    "Perturbation",
    "Query",
    "RunError",
    "RunState",
    "ScriptedPerturbation",
    "advance",
    "answer",
    "default_expertise",
    "dispatch",
    "event_log_text",
    "execute",
    "load_script",
    "perturb",
    "replan",
    "replay_events",
    "replay_history",
    "run_to_dict",
    "simulate",
    "start_run",
]
