"""Boundary to third-party PDDL solvers and replay of their plans in native semantics.

A solver is configured with a command template in ``KMF_PDDL_SOLVER``, for
example ``optic-clp {domain} {problem}``. Its standard output is scanned for
sequential plan lines such as ``0.000: (pickup-agent p1 poi1 bus1) [1.000]``
or plain ``(pickup-agent p1 poi1 bus1)``.
"""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import tempfile
from pathlib import Path

from ..engine import TransitionStep, apply_transition, eval_computation
from ..planner import Plan, satisfies_goal, validate_plan
from ..terms import Compound, Lit, Model, Predicate
from ..unify import match_precondition
from .compile import PddlArtifact, compile_domain

SOLVER_ENV = "KMF_PDDL_SOLVER"

_PLAN_LINE = re.compile(r"^\s*(?:[0-9.]+\s*:\s*)?\(([^()]+)\)")


class Divergence(Exception):
    def __init__(self, index: int, action: str, cause: str):
        self.index = index
        self.action = action
        self.cause = cause
        super().__init__(f"action {index} {action}: {cause}")


def parse_plan_output(text: str) -> list[tuple[str, tuple[str, ...]]]:
    """Extract ``(name, args)`` pairs from solver output, in order."""
    plan = []
    for line in text.splitlines():
        if line.lstrip().startswith(";"):
            continue
        m = _PLAN_LINE.match(line)
        if m:
            parts = m.group(1).split()
            plan.append((parts[0].lower(), tuple(p.lower() for p in parts[1:])))
    return plan


def solver_command() -> str | None:
    return os.environ.get(SOLVER_ENV) or None


def run_solver(domain: PddlArtifact, problem: PddlArtifact, command: str | None = None, timeout: float = 300.0):
    """Run the configured solver; ``None`` when no solver is configured."""
    command = command or solver_command()
    if not command:
        return None
    with tempfile.TemporaryDirectory() as tmp:
        dpath = Path(tmp) / "domain.pddl"
        ppath = Path(tmp) / "problem.pddl"
        dpath.write_text(domain.text)
        ppath.write_text(problem.text)
        argv = [a.format(domain=dpath, problem=ppath) for a in shlex.split(command)]
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout, check=False)
    return parse_plan_output(proc.stdout)


def _literal_names(m: Model) -> dict[str, str]:
    names: dict[str, str] = {}

    def walk(t):
        if isinstance(t, Lit):
            names[t.name.lower()] = t.name
        elif isinstance(t, (Compound, Predicate)):
            for a in t.args:
                walk(a)

    for s in m.states.values():
        for p in s.predicates:
            walk(p)
    for t in m.transitions.values():
        for p in t.precondition:
            walk(p)
    return names


def cross_validate(
    m: Model,
    domain: PddlArtifact,
    problem: PddlArtifact,
    external_plan,
) -> Plan:
    """Replay a solver's action list natively; raise :class:`Divergence` on the first gap.

    Returns the native :class:`Plan` the actions correspond to.
    """
    params = domain.parameters or compile_domain(m, m.rules, domain.name).parameters
    by_lower = {t.lower(): t for t in m.transitions}
    objects = _literal_names(m)
    state = m.initial_state
    steps = []
    for i, (action, args) in enumerate(external_plan):
        label = f"({action}{''.join(' ' + a for a in args)})"
        name = by_lower.get(action.lower())
        if name is None:
            raise Divergence(i, label, "unknown action")
        variables = params[name]
        if len(variables) != len(args):
            raise Divergence(i, label, "wrong number of arguments")
        partial = {}
        for v, a in zip(variables, args):
            if a.lower() not in objects:
                raise Divergence(i, label, f"unknown object {a}")
            partial[v] = Lit(objects[a.lower()])
        t = m.transitions[name]
        candidates = [s for s in match_precondition(t.precondition, state) if all(s.get(k) == x for k, x in partial.items())]
        if not candidates:
            raise Divergence(i, label, "precondition")
        step = None
        for sigma in candidates:
            full = eval_computation(t.computation, sigma) if t.computation else sigma
            if full is not None:
                step = TransitionStep(state, name, full, apply_transition(state, t, full))
                break
        if step is None:
            raise Divergence(i, label, "computation")
        steps.append(step)
        state = step.destination
    if not satisfies_goal(state, m.goal_state):
        raise Divergence(len(external_plan), "(end)", "goal")
    plan = Plan(m.initial_state, tuple(steps))
    validate_plan(m, plan)
    return plan


__all__ = [
    "Divergence",
    "SOLVER_ENV",
    "cross_validate",
    "parse_plan_output",
    "run_solver",
    "solver_command",
]
