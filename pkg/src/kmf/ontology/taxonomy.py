"""Concept taxonomy: is-a DAG plus per-argument concept annotations for predicate functors.

Text format::

    taxonomy {
      concept Thing.
      concept Agent is_a System.
      concept CPSAgent is_a CyberPhysicalSystem, Agent.
      annotate at(Thing, POI).
    }

``Number`` and ``Any`` are reserved argument concepts: ``Number`` accepts
numeric terms only, ``Any`` accepts every term.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from pathlib import Path

from ..syntax import Parser
from ..terms import Compound, Lit, Model, Num, Predicate, Var

NUMBER = "Number"
ANY = "Any"
RESERVED = frozenset({NUMBER, ANY})

CONCEPT_RE = re.compile(r"[A-Z][A-Za-z0-9]*\Z")
TYPE_FACT_PREFIX = "is_"


class TaxonomyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Taxonomy:
    parents: dict  # concept -> tuple of parent concepts
    annotations: dict = field(default_factory=dict)  # functor -> tuple of concepts

    def __post_init__(self):
        roots = [c for c, ps in self.parents.items() if not ps]
        if len(roots) != 1:
            raise TaxonomyError(f"expected exactly one root concept, found {sorted(roots)}")
        for c, ps in self.parents.items():
            if c in RESERVED:
                raise TaxonomyError(f"{c} is a reserved concept name")
            for p in ps:
                if p not in self.parents:
                    raise TaxonomyError(f"concept {c} refers to undeclared parent {p}")
        self._check_acyclic()
        for functor, concepts in self.annotations.items():
            for c in concepts:
                if c not in self.parents and c not in RESERVED:
                    raise TaxonomyError(f"annotation of {functor} refers to undeclared concept {c}")

    def _check_acyclic(self):
        try:
            order = list(TopologicalSorter(self.parents).static_order())
        except CycleError as exc:
            raise TaxonomyError("is_a cycle: " + " -> ".join(reversed(exc.args[1]))) from None
        closure: dict = {}
        for c in order:  # parents come first
            closure[c] = frozenset({c}).union(*(closure[p] for p in self.parents[c]))
        object.__setattr__(self, "_closure", closure)

    @property
    def root(self) -> str:
        return next(c for c, ps in self.parents.items() if not ps)

    @property
    def concepts(self) -> frozenset:
        return frozenset(self.parents)

    def ancestors(self, concept: str) -> frozenset:
        """Reflexive-transitive closure of is_a from ``concept``."""
        return self._closure.get(concept, frozenset())

    def is_a(self, concept: str, other: str) -> bool:
        if other == ANY:
            return True
        if concept not in self.parents:
            return False
        return other in self.ancestors(concept)

    def type_functors(self) -> dict:
        """Unary ``is_*`` functors annotated with a concept: functor -> concept."""
        return {
            f: cs[0]
            for f, cs in self.annotations.items()
            if f.startswith(TYPE_FACT_PREFIX) and len(cs) == 1 and cs[0] not in RESERVED
        }


# parsing ------------------------------------------------------------------


class _TaxonomyParser(Parser):
    def concept(self) -> str:
        t = self.expect("name", "a concept name")
        if not CONCEPT_RE.match(t.text):
            raise self.error(f"invalid concept name {t.text!r}", t)
        return t.text

    def document(self):
        parents: dict = {}
        annotations: dict = {}
        self.expect_keyword("taxonomy")
        self.expect("{", "'{'")
        while not self.at("}"):
            start = self.tok
            if self.at_keyword("concept"):
                self.advance()
                name = self.concept()
                ps = []
                if self.at_keyword("is_a"):
                    self.advance()
                    ps.append(self.concept())
                    while self.at(","):
                        self.advance()
                        ps.append(self.concept())
                if name in parents:
                    raise self.error(f"concept {name} declared twice", start)
                parents[name] = tuple(ps)
            elif self.at_keyword("annotate"):
                self.advance()
                t = self.expect("name", "a predicate functor")
                args = []
                if self.at("("):
                    self.advance()
                    args.append(self.concept())
                    while self.at(","):
                        self.advance()
                        args.append(self.concept())
                    self.expect(")", "')'")
                if t.text in annotations:
                    raise self.error(f"functor {t.text} annotated twice", t)
                annotations[t.text] = tuple(args)
            elif self.at("eof"):
                raise self.error("unterminated taxonomy; expected '}'")
            else:
                raise self.error(f"expected 'concept' or 'annotate', found {self.tok.text!r}")
            self.expect(".", "'.'")
        self.advance()
        self.expect("eof", "end of input")
        return parents, annotations


def parse_taxonomy(text: str) -> Taxonomy:
    """Parse ``.tax`` text; syntax problems raise ParseError, semantic ones TaxonomyError."""
    parents, annotations = _TaxonomyParser(text).document()
    return Taxonomy(parents, annotations)


def load_taxonomy(path) -> Taxonomy:
    return parse_taxonomy(Path(path).read_text())


def default_taxonomy() -> Taxonomy:
    """The bundled transport taxonomy."""
    return load_taxonomy(Path(__file__).resolve().parent.parent / "data" / "its.tax")


# validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    where: str
    predicate: str
    detail: str

    def __str__(self):
        return f"{self.where}: {self.predicate}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def _concepts_from(preds, type_functors: dict, key) -> dict:
    out: dict = {}
    for p in preds:
        c = type_functors.get(p.functor)
        if c is not None and len(p.args) == 1 and isinstance(p.args[0], key):
            out.setdefault(p.args[0], set()).add(c)
    return out


class _Checker:
    def __init__(self, tax: Taxonomy, lit_concepts: dict):
        self.tax = tax
        self.lit_concepts = lit_concepts
        self.violations: list = []
        self.unannotated: set = set()

    def arg_problem(self, arg, want: str, var_concepts: dict) -> str | None:
        if want == ANY:
            return None
        if isinstance(arg, Num):
            return None if want == NUMBER else f"number where {want} is expected"
        if want == NUMBER:
            if isinstance(arg, Var):
                return None
            return f"{arg} is not a number"
        if isinstance(arg, Compound):
            return f"compound term {arg} where {want} is expected"
        if isinstance(arg, Var):
            have = var_concepts.get(arg)
            if not have:
                return None
        else:
            have = self.lit_concepts.get(arg)
            if not have:
                return f"{arg} has no declared concept"
        if any(self.tax.is_a(c, want) for c in have):
            return None
        return f"{arg} is {'/'.join(sorted(have))}, not {want}"

    def check(self, p: Predicate, where: str, var_concepts: dict):
        want = self.tax.annotations.get(p.functor)
        if want is None:
            self.unannotated.add(p.functor)
            return
        if len(want) != len(p.args):
            self.violations.append(Violation(where, str(p), f"arity {len(p.args)}, annotation expects {len(want)}"))
            return
        problems = [
            f"argument {i + 1}: {msg}"
            for i, (a, w) in enumerate(zip(p.args, want))
            if (msg := self.arg_problem(a, w, var_concepts)) is not None
        ]
        if problems:
            self.violations.append(Violation(where, str(p), "; ".join(problems)))


def validate_against_taxonomy(m: Model, tax: Taxonomy) -> ValidationReport:
    """Check every annotated predicate use against the concepts of its arguments.

    A literal's concepts come from annotated ``is_*`` facts anywhere in the
    model's states; a variable's from ``is_*`` predicates in the same
    precondition. Untyped variables are not checked. Functors without an
    annotation yield warnings only.
    """
    type_functors = tax.type_functors()
    all_preds = [p for s in m.states.values() for p in s.predicates]
    checker = _Checker(tax, _concepts_from(all_preds, type_functors, Lit))
    for name in sorted(m.states):
        s = m.states[name]
        var_concepts = _concepts_from(s.predicates, type_functors, Var)
        for p in s.sorted():
            checker.check(p, f"state {name}", var_concepts)
    for t in m.sorted_transitions():
        var_concepts = _concepts_from(t.precondition, type_functors, Var)
        for p in t.precondition:
            checker.check(p, f"transition {t.name} pre", var_concepts)
        for a in t.action:
            checker.check(a.predicate, f"transition {t.name} action", var_concepts)
    warnings = tuple(f"functor {f} has no concept annotation" for f in sorted(checker.unannotated))
    return ValidationReport(tuple(checker.violations), warnings)


__all__ = [
    "ANY",
    "NUMBER",
    "Taxonomy",
    "TaxonomyError",
    "ValidationReport",
    "Violation",
    "default_taxonomy",
    "load_taxonomy",
    "parse_taxonomy",
    "validate_against_taxonomy",
]
