"""Breadth-first planning over the successor relation, plan validation and diagnosis."""

from __future__ import annotations

import json
from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Callable, Sequence

from .engine import TransitionStep, apply_transition, eval_computation, state_hash, successors
from .syntax import parse_term
from .terms import FunctionCall, Model, Predicate, State, Var, variables_of
from .unify import Substitution, apply, match_precondition

DEFAULT_BOUND = 1_000_000

FRONTIER_EXHAUSTED = "frontier-exhausted"
BOUND_HIT = "bound-hit"


@dataclass(frozen=True)
class Plan:
    initial: State
    steps: tuple = ()

    @property
    def cost(self) -> int:
        return len(self.steps)

    @property
    def final(self) -> State:
        return self.steps[-1].destination if self.steps else self.initial

    def transitions(self) -> list[str]:
        return [s.transition for s in self.steps]


@dataclass(frozen=True)
class PlanFailure:
    explored: int
    reason: str
    unsatisfied: tuple = ()


class ValidationError(Exception):
    def __init__(self, step: int, cause: str, detail: str = ""):
        self.step = step
        self.cause = cause
        self.detail = detail
        super().__init__(f"step {step}: {cause}" + (f" ({detail})" if detail else ""))


def satisfies_goal(state: State, goal: State | Sequence[Predicate]) -> bool:
    """Existential subset match of the goal pattern against ``state``."""
    return bool(goal_witnesses(state, goal))


def goal_witnesses(state: State, goal) -> list[Substitution]:
    preds = goal.predicates if isinstance(goal, State) else goal
    return match_precondition(preds, state)


def _transitions(m: Model) -> list:
    return m.sorted_transitions()


def _bfs(initial: State, transitions, stop: Callable[[State], bool], bound: int):
    """Shared search loop.

    Returns ``(hit_state, parents, order, expanded, exhausted)``; ``parents``
    maps each discovered state to the step that first reached it, ``order``
    lists states in discovery order.
    """
    if bound < 1:
        raise ValueError("bound must be at least 1")
    parents: dict[State, TransitionStep | None] = {initial: None}
    order = [initial]
    queue = deque([initial])
    expanded = 0
    while queue:
        state = queue.popleft()
        if stop(state):
            return state, parents, order, expanded, False
        if expanded >= bound:
            return None, parents, order, expanded, False
        expanded += 1
        for step in successors(state, transitions):
            if step.destination not in parents:
                parents[step.destination] = step
                order.append(step.destination)
                queue.append(step.destination)
    return None, parents, order, expanded, True


def _path(parents, state: State) -> tuple:
    steps = []
    while parents[state] is not None:
        step = parents[state]
        steps.append(step)
        state = step.source
    return tuple(reversed(steps))


def _co_satisfied(state: State, goal_preds: list[Predicate]) -> list[Predicate]:
    """Greedy maximal subset of goal predicates jointly matched in ``state``."""
    chosen: list[Predicate] = []
    for p in goal_preds:
        if match_precondition(chosen + [p], state):
            chosen.append(p)
    return chosen


def diagnose(states: Sequence[State], goal: State) -> tuple:
    """Goal predicates left out of the best co-satisfied subset over ``states``."""
    goal_preds = goal.sorted()
    best: list[Predicate] = []
    for s in states:
        got = _co_satisfied(s, goal_preds)
        if len(got) > len(best):
            best = got
            if len(best) == len(goal_preds):
                break
    return tuple(p for p in goal_preds if p not in best)


def find_plan(m: Model, bound: int = DEFAULT_BOUND) -> Plan | PlanFailure:
    """Shortest plan from the model's initial state to its goal, or a failure report.

    ``bound`` caps the number of expanded states. A failure with reason
    ``frontier-exhausted`` proves the goal unreachable; ``bound-hit`` is
    inconclusive.
    """
    initial, goal = m.initial_state, m.goal_state
    goal_preds = list(goal.predicates)
    hit, parents, order, expanded, exhausted = _bfs(
        initial, _transitions(m), lambda s: bool(match_precondition(goal_preds, s)), bound
    )
    if hit is not None:
        return Plan(initial, _path(parents, hit))
    return PlanFailure(
        explored=expanded,
        reason=FRONTIER_EXHAUSTED if exhausted else BOUND_HIT,
        unsatisfied=diagnose(order, goal),
    )


def reachable_states(m: Model, bound: int = DEFAULT_BOUND) -> list[State]:
    _, _, order, _, exhausted = _bfs(m.initial_state, _transitions(m), lambda s: False, bound)
    if not exhausted:
        raise RuntimeError(f"reachable space exceeds {bound} expanded states")
    return order


@dataclass(frozen=True)
class InvariantReport:
    holds: bool
    complete: bool
    explored: int
    witness: Plan | None = None
    bindings: Substitution | None = None


def check_invariant(
    m: Model,
    pattern: Sequence[Predicate],
    computation: Sequence[FunctionCall] = (),
    bound: int = DEFAULT_BOUND,
) -> InvariantReport:
    """Search the reachable space for a state matching a forbidden pattern.

    ``pattern`` plus optional ``computation`` describes the bad situation,
    e.g. ``capacity(B, C)`` with ``less_than(C, 0)``.
    """
    found: list = []

    def bad(state: State) -> bool:
        for sigma in match_precondition(pattern, state):
            full = eval_computation(computation, sigma) if computation else sigma
            if full is not None:
                found.append(full)
                return True
        return False

    hit, parents, order, expanded, exhausted = _bfs(m.initial_state, _transitions(m), bad, bound)
    if hit is not None:
        return InvariantReport(False, True, expanded, Plan(m.initial_state, _path(parents, hit)), found[0])
    return InvariantReport(True, exhausted, expanded)


# validation ---------------------------------------------------------------


def replay_step(transitions: Mapping, source: State, name: str, subst: Mapping, index: int = 0) -> TransitionStep:
    """Re-derive one step from its source, transition name and substitution.

    Only the precondition part of ``subst`` is trusted; computed bindings are
    recomputed and must agree with the rest of ``subst``.
    """
    t = transitions.get(name)
    if t is None:
        raise ValidationError(index, "unknown-transition", name)
    pre_vars = variables_of(t.precondition)
    missing = [v.name for v in pre_vars if v not in subst]
    if missing:
        raise ValidationError(index, "precondition", f"unbound {', '.join(missing)}")
    sigma = Substitution({v: subst[v] for v in pre_vars})
    for p in t.precondition:
        if apply(sigma, p) not in source:
            raise ValidationError(index, "precondition", str(apply(sigma, p)))
    full = eval_computation(t.computation, sigma) if t.computation else sigma
    if full is None:
        raise ValidationError(index, "computation", name)
    if any(full.get(k) != v for k, v in subst.items()):
        raise ValidationError(index, "substitution-mismatch", Substitution(subst).text())
    return TransitionStep(source, name, full, apply_transition(source, t, full))


def validate_plan(m: Model, plan: Plan) -> None:
    """Raise :class:`ValidationError` at the first step that does not replay."""
    current = m.initial_state
    if plan.initial != current:
        raise ValidationError(0, "source-mismatch", "plan does not start in the initial state")
    for i, step in enumerate(plan.steps):
        if step.source != current:
            raise ValidationError(i, "source-mismatch")
        replayed = replay_step(m.transitions, current, step.transition, step.substitution, i)
        if replayed.destination != step.destination:
            raise ValidationError(i, "destination-mismatch")
        current = replayed.destination
    if not satisfies_goal(current, m.goal_state):
        raise ValidationError(len(plan.steps), "goal")


# documents ----------------------------------------------------------------


def plan_to_dict(result: Plan | PlanFailure) -> dict:
    if isinstance(result, PlanFailure):
        return {
            "status": "failure",
            "reason": result.reason,
            "explored": result.explored,
            "unsatisfied": [str(p) for p in result.unsatisfied],
        }
    return {
        "status": "solved",
        "cost": result.cost,
        "initial": state_hash(result.initial),
        "steps": [
            {
                "transition": s.transition,
                "bindings": {v.name: str(t) for v, t in sorted(s.substitution.items(), key=lambda kv: kv[0].name)},
                "destination": state_hash(s.destination),
            }
            for s in result.steps
        ],
    }


def plan_json(result: Plan | PlanFailure) -> str:
    return json.dumps(plan_to_dict(result), indent=2, sort_keys=True) + "\n"


def plan_from_dict(m: Model, doc: dict) -> Plan:
    """Rebuild a :class:`Plan` from its JSON form by replaying every step."""
    current = m.initial_state
    if "initial" in doc and doc["initial"] != state_hash(current):
        raise ValidationError(0, "source-mismatch", "initial state hash differs")
    steps = []
    for i, entry in enumerate(doc.get("steps", [])):
        try:
            subst = Substitution({Var(k): parse_term(v) for k, v in entry.get("bindings", {}).items()})
        except ValueError as exc:
            raise ValidationError(i, "malformed", str(exc)) from None
        step = replay_step(m.transitions, current, entry["transition"], subst, i)
        if "destination" in entry and entry["destination"] != state_hash(step.destination):
            raise ValidationError(i, "destination-mismatch")
        steps.append(step)
        current = step.destination
    return Plan(m.initial_state, tuple(steps))


__all__ = [
    "BOUND_HIT",
    "DEFAULT_BOUND",
    "FRONTIER_EXHAUSTED",
    "InvariantReport",
    "Plan",
    "PlanFailure",
    "ValidationError",
    "check_invariant",
    "diagnose",
    "find_plan",
    "goal_witnesses",
    "plan_from_dict",
    "plan_json",
    "plan_to_dict",
    "reachable_states",
    "replay_step",
    "satisfies_goal",
    "validate_plan",
]
