"""One-sided unification of patterns against ground terms, and precondition matching."""

from __future__ import annotations

from collections.abc import Mapping
from typing import Iterable

from .terms import Compound, Predicate, State, Var, is_ground, predicate_key


class Substitution(Mapping):
    """Immutable map from variables to ground terms."""

    __slots__ = ("_d", "_hash")

    def __init__(self, bindings=None):
        self._d = dict(bindings or {})
        self._hash = None

    def __getitem__(self, key):
        return self._d[key]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Mapping):
            return self._d == dict(other)
        return NotImplemented

    def __repr__(self):
        return self.text()

    def text(self) -> str:
        """``{A=a, B=2}`` with variables in name order."""
        return "{" + ", ".join(f"{v.name}={self._d[v]}" for v in sorted(self._d, key=lambda v: v.name)) + "}"

    def bind(self, var: Var, value) -> "Substitution":
        d = dict(self._d)
        d[var] = value
        return Substitution(d)

    def restrict(self, variables: Iterable[Var]) -> "Substitution":
        keep = set(variables)
        return Substitution({k: v for k, v in self._d.items() if k in keep})

    def apply(self, t):
        return apply(self._d, t)


EMPTY = Substitution()


def apply(bindings: Mapping, t):
    """Replace bound variables in ``t``; unbound ones stay in place."""
    if isinstance(t, Var):
        return bindings.get(t, t)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(apply(bindings, a) for a in t.args))
    if isinstance(t, Predicate):
        if not t.args:
            return t
        return Predicate(t.functor, tuple(apply(bindings, a) for a in t.args))
    return t


def _unify_into(a, b, d: dict) -> bool:
    if isinstance(a, Var):
        bound = d.get(a)
        if bound is None:
            # one side is always ground, so there is nothing to occurs-check;
            # keep the guard in case non-ground targets ever reach this point
            assert is_ground(b), f"occurs check: {a} against non-ground {b}"
            d[a] = b
            return True
        return bound == b
    if isinstance(a, (Compound, Predicate)):
        if type(a) is not type(b) or a.functor != b.functor or len(a.args) != len(b.args):
            return False
        return all(_unify_into(x, y, d) for x, y in zip(a.args, b.args))
    return a == b


def unify(a, b, subst: Mapping | None = None) -> Substitution | None:
    """Extend ``subst`` so that it maps pattern ``a`` onto ground ``b``.

    Returns ``None`` when no such extension exists.
    """
    d = dict(subst or {})
    if not _unify_into(a, b, d):
        return None
    return Substitution(d)


def index_state(state: State) -> dict:
    """Group state predicates by (functor, arity), each group in canonical order."""
    groups: dict[tuple, list] = {}
    for p in state.sorted():
        groups.setdefault((p.functor, len(p.args)), []).append(p)
    return groups


def match_precondition(pre: Iterable[Predicate], state: State, index: dict | None = None) -> list[Substitution]:
    """All substitutions under which every precondition predicate is in ``state``.

    Precondition predicates are tried in canonical order and candidates are
    drawn in canonical order, so the result order is reproducible. Two
    precondition predicates may land on the same state predicate.
    """
    pattern = sorted(set(pre), key=predicate_key)
    groups = index if index is not None else index_state(state)
    out: list[Substitution] = []
    seen: set = set()

    def search(i: int, d: dict):
        if i == len(pattern):
            s = Substitution(d)
            if s not in seen:
                seen.add(s)
                out.append(s)
            return
        p = pattern[i]
        for cand in groups.get((p.functor, len(p.args)), ()):
            trial = dict(d)
            if _unify_into(p, cand, trial):
                search(i + 1, trial)

    search(0, {})
    return out
