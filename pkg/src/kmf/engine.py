"""Executable semantics of the transition system: computations, actions, successors."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterable, Sequence

from .builtins import BUILTINS, VALUE
from .syntax import state_text
from .terms import FunctionCall, State, TransitionSpec, Var, is_ground
from .unify import EMPTY, Substitution, apply, index_state, match_precondition, unify

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


class EngineError(Exception):
    """Hard error in transition evaluation (as opposed to an ordinary failed match)."""


class UnknownFunction(EngineError):
    pass


class NonGroundError(EngineError):
    pass


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK
    return h


def state_hash(state: State) -> str:
    """16 hex digits of FNV-1a over the canonical state text."""
    return f"{fnv1a_64(state_text(state).encode('utf-8')):016x}"


def eval_computation(calls: Sequence[FunctionCall], subst: Mapping | None = None) -> Substitution | None:
    """Run calls in order, threading value bindings; ``None`` if any call fails."""
    d = dict(subst or {})
    for call in calls:
        fn = BUILTINS.get(call.functor)
        if fn is None:
            raise UnknownFunction(f"unknown function {call.functor!r}")
        if len(call.args) != fn.arity:
            raise EngineError(f"{call.functor} expects {fn.arity} arguments, got {len(call.args)}")
        inputs = [apply(d, a) for a in call.args[: fn.inputs]]
        for a in inputs:
            if not is_ground(a):
                raise NonGroundError(f"non-ground argument {a} in call {call}")
        if fn.kind != VALUE:
            if not fn.fn(*inputs):
                return None
            continue
        value = fn.fn(*inputs)
        if value is None:
            return None
        target = apply(d, call.args[-1])
        if isinstance(target, Var):
            d[target] = value
        else:
            extended = unify(target, value, d)
            if extended is None:
                return None
            d = dict(extended)
    return Substitution(d)


def apply_transition(state: State, t: TransitionSpec, subst: Mapping) -> State:
    """Destination state: copy the source, then fold add/delete in listed order."""
    preds = set(state.predicates)
    for act in t.action:
        p = apply(subst, act.predicate)
        if not is_ground(p):
            raise NonGroundError(f"action {act} is not ground under {Substitution(subst)}")
        if act.op == "add":
            preds.add(p)
        else:
            preds.discard(p)
    out = State("", preds)
    return State("s" + state_hash(out), preds)


@dataclass(frozen=True)
class TransitionStep:
    source: State
    transition: str
    substitution: Substitution
    destination: State

    def trace_line(self) -> str:
        return (
            f"{state_hash(self.source)} --{self.transition}{self.substitution.text()}--> "
            f"{state_hash(self.destination)}"
        )


def _ordered(transitions) -> list[TransitionSpec]:
    if isinstance(transitions, Mapping):
        transitions = transitions.values()
    return sorted(transitions, key=lambda t: t.name)


def successors(state: State, transitions: Iterable[TransitionSpec] | Mapping) -> list[TransitionStep]:
    """Every labelled transition leaving ``state``, transitions taken in name order."""
    index = index_state(state)
    steps = []
    for t in _ordered(transitions):
        for sigma in match_precondition(t.precondition, state, index):
            full = eval_computation(t.computation, sigma) if t.computation else sigma
            if full is None:
                continue
            steps.append(TransitionStep(state, t.name, full, apply_transition(state, t, full)))
    return steps


def dump_trace(steps: Iterable[TransitionStep]) -> str:
    return "".join(step.trace_line() + "\n" for step in steps)


__all__ = [
    "EMPTY",
    "EngineError",
    "NonGroundError",
    "TransitionStep",
    "UnknownFunction",
    "apply_transition",
    "dump_trace",
    "eval_computation",
    "fnv1a_64",
    "state_hash",
    "successors",
]
