"""Core data model: terms, predicates, states and transition specifications.

All values are immutable. Numbers are exact rationals (``fractions.Fraction``)
so that state equality and hashing never depend on float rounding.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

LITERAL_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
VARIABLE_RE = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")
NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*\Z")

ACTION_OPS = ("add", "delete")


@dataclass(frozen=True)
class Num:
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    def __str__(self):
        return format_number(self.value)


@dataclass(frozen=True)
class Lit:
    name: str

    def __post_init__(self):
        if not LITERAL_RE.match(self.name):
            raise ValueError(f"invalid literal name {self.name!r}")

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        if not VARIABLE_RE.match(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple

    def __post_init__(self):
        if not LITERAL_RE.match(self.functor):
            raise ValueError(f"invalid functor {self.functor!r}")
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("compound term needs at least one argument; use a literal")

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self):
        return f"{self.functor}({', '.join(map(str, self.args))})"


Term = Union[Num, Lit, Var, Compound]


@dataclass(frozen=True)
class Predicate:
    functor: str
    args: tuple = ()

    def __post_init__(self):
        if not LITERAL_RE.match(self.functor):
            raise ValueError(f"invalid functor {self.functor!r}")
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self):
        if not self.args:
            return self.functor
        return f"{self.functor}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class FunctionCall:
    functor: str
    args: tuple = ()

    def __post_init__(self):
        if not LITERAL_RE.match(self.functor):
            raise ValueError(f"invalid function name {self.functor!r}")
        object.__setattr__(self, "args", tuple(self.args))

    def __str__(self):
        return f"{self.functor}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class ActionPredicate:
    op: str
    predicate: Predicate

    def __post_init__(self):
        if self.op not in ACTION_OPS:
            raise ValueError(f"action functor must be add or delete, got {self.op!r}")

    def __str__(self):
        return f"{self.op}({self.predicate})"


def format_number(value: Fraction) -> str:
    """Canonical text of an exact rational.

    Integers print bare, terminating decimals print in decimal notation and
    everything else prints as ``n/d``.
    """
    if value.denominator == 1:
        return str(value.numerator)
    d = value.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{value.numerator}/{value.denominator}"
    places = max(twos, fives)
    scaled = abs(value) * 10**places
    digits = str(scaled.numerator).rjust(places + 1, "0")
    sign = "-" if value < 0 else ""
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def term_key(t) -> tuple:
    """Total order over terms: numbers < literals < variables < compounds."""
    if isinstance(t, Num):
        return (0, t.value)
    if isinstance(t, Lit):
        return (1, t.name)
    if isinstance(t, Var):
        return (2, t.name)
    return (3, t.functor, len(t.args), tuple(term_key(a) for a in t.args))


def predicate_key(p: Predicate) -> tuple:
    return (p.functor, len(p.args), tuple(term_key(a) for a in p.args))


def iter_vars(t) -> Iterator[Var]:
    if isinstance(t, Var):
        yield t
    elif isinstance(t, (Compound, Predicate, FunctionCall)):
        for a in t.args:
            yield from iter_vars(a)
    elif isinstance(t, ActionPredicate):
        yield from iter_vars(t.predicate)


def is_ground(t) -> bool:
    return next(iter_vars(t), None) is None


def variables_of(items: Iterable) -> list[Var]:
    """Distinct variables in first-occurrence order."""
    seen: dict[Var, None] = {}
    for item in items:
        for v in iter_vars(item):
            seen.setdefault(v)
    return list(seen)


@dataclass(frozen=True)
class State:
    """Implicitly conjunctive set of predicates.

    Equality looks at the predicate set only; the name is a label.
    """

    name: str
    predicates: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "predicates", frozenset(self.predicates))

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return self.predicates == other.predicates

    def __hash__(self):
        return hash(self.predicates)

    def __contains__(self, p):
        return p in self.predicates

    def __len__(self):
        return len(self.predicates)

    def sorted(self) -> list[Predicate]:
        return sorted(self.predicates, key=predicate_key)

    def is_ground(self) -> bool:
        return all(is_ground(p) for p in self.predicates)


@dataclass(frozen=True)
class TransitionSpec:
    name: str
    precondition: tuple = ()
    computation: tuple = ()
    action: tuple = ()

    def __post_init__(self):
        pre = sorted(set(self.precondition), key=predicate_key)
        object.__setattr__(self, "precondition", tuple(pre))
        object.__setattr__(self, "computation", tuple(self.computation))
        object.__setattr__(self, "action", tuple(self.action))


@dataclass(frozen=True)
class TransformationRules:
    """Declarations steering the PDDL compiler.

    ``fluents`` maps a functor to its full arity (the last argument is the
    numeric value). ``wrappers`` maps a unary compound functor to the suffix
    used when naming the unwrapped fluent.
    """

    types: frozenset = frozenset()
    fluents: Mapping[str, int] = field(default_factory=dict)
    wrappers: Mapping[str, str] = field(default_factory=dict)
    typing: bool = True
    existential_goals: bool = False

    def __post_init__(self):
        object.__setattr__(self, "types", frozenset(self.types))
        overlap = (
            (self.types & set(self.fluents))
            | (self.types & set(self.wrappers))
            | (set(self.fluents) & set(self.wrappers))
        )
        if overlap:
            raise ValueError(f"functors declared more than once: {sorted(overlap)}")


@dataclass(frozen=True)
class Model:
    states: Mapping[str, State] = field(default_factory=dict)
    transitions: Mapping[str, TransitionSpec] = field(default_factory=dict)
    initial: str | None = None
    goal: str | None = None
    rules: TransformationRules | None = None

    @property
    def initial_state(self) -> State:
        if self.initial is None:
            raise ValueError("model declares no initial state")
        return self.states[self.initial]

    @property
    def goal_state(self) -> State:
        if self.goal is None:
            raise ValueError("model declares no goal state")
        return self.states[self.goal]

    def sorted_transitions(self) -> list[TransitionSpec]:
        return [self.transitions[k] for k in sorted(self.transitions)]
