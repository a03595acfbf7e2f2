"""Reusability index: share of a scenario's knowledge entities already present in a library.

Entities counted per scenario:

* one per named state, reused when its predicate set equals a library state;
* one per transition, reused when precondition, computation and action equal
  a library transition (the transition name is ignored);
* one per distinct predicate functor/arity, reused when library entries use it;
* one per distinct route vertex and route edge fact (functors named in the
  library manifest), reused when a library state contains the same fact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..terms import Lit, Model, Predicate
from .library import TransitionLibrary


class ReuseError(ValueError):
    pass


@dataclass(frozen=True)
class Entity:
    kind: str
    label: str
    reused: bool


@dataclass(frozen=True)
class ReuseReport:
    entities: tuple

    @property
    def total(self) -> int:
        return len(self.entities)

    @property
    def reused(self) -> int:
        return sum(e.reused for e in self.entities)

    @property
    def index(self) -> Fraction:
        if not self.entities:
            raise ReuseError("scenario has no entities; the index is undefined")
        return Fraction(self.reused, self.total)

    def by_kind(self) -> dict:
        out: dict = {}
        for e in self.entities:
            r, t = out.get(e.kind, (0, 0))
            out[e.kind] = (r + e.reused, t + 1)
        return out


def _model_predicates(m: Model):
    for s in m.states.values():
        yield from s.predicates
    for t in m.transitions.values():
        yield from t.precondition
        for a in t.action:
            yield a.predicate


def _functors(m: Model) -> set:
    return {(p.functor, len(p.args)) for p in _model_predicates(m)}


def _route_facts(m: Model, vertex: str | None, edge: str | None) -> tuple[set, set]:
    vertices, edges = set(), set()
    for s in m.states.values():
        for p in s.predicates:
            if p.functor == vertex and len(p.args) == 1 and isinstance(p.args[0], Lit):
                vertices.add(p)
            elif p.functor == edge and len(p.args) == 2 and all(isinstance(a, Lit) for a in p.args):
                edges.add(p)
    return vertices, edges


def _shape(t) -> tuple:
    return (t.precondition, t.computation, t.action)


def _fact_label(p: Predicate) -> str:
    return str(p)


def reusability_report(scenario: Model, library: TransitionLibrary) -> ReuseReport:
    lib_model = library.as_model()
    lib_states = {s.predicates for s in lib_model.states.values()}
    lib_shapes = {_shape(t) for t in lib_model.transitions.values()}
    lib_functors = _functors(lib_model)
    lib_vertices, lib_edges = _route_facts(lib_model, library.vertex_functor, library.edge_functor)

    entities = []
    for name in sorted(scenario.states):
        entities.append(Entity("state", name, scenario.states[name].predicates in lib_states))
    for t in scenario.sorted_transitions():
        entities.append(Entity("transition", t.name, _shape(t) in lib_shapes))
    for f, n in sorted(_functors(scenario)):
        entities.append(Entity("functor", f"{f}/{n}", (f, n) in lib_functors))
    vertices, edges = _route_facts(scenario, library.vertex_functor, library.edge_functor)
    for p in sorted(vertices, key=_fact_label):
        entities.append(Entity("route-vertex", _fact_label(p), p in lib_vertices))
    for p in sorted(edges, key=_fact_label):
        entities.append(Entity("route-edge", _fact_label(p), p in lib_edges))
    return ReuseReport(tuple(entities))


def reusability_index(scenario: Model, library: TransitionLibrary) -> Fraction:
    """Reused entities divided by total entities; raises ReuseError when there are none."""
    return reusability_report(scenario, library).index


__all__ = ["Entity", "ReuseError", "ReuseReport", "reusability_index", "reusability_report"]
