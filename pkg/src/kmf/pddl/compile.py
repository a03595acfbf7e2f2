"""Compile models into PDDL 2.1 domain and problem files with numeric fluents.

The mapping is syntactic and refuses anything it cannot express faithfully:

* type predicates (``is_bus(X)``) become PDDL types;
* declared fluent predicates (``capacity(B, C)``) become numeric functions,
  and a ``delete``/``add`` pair linked by one arithmetic call becomes an
  ``increase``/``decrease``/``assign`` effect;
* a fluent that some transition deletes without replacing gets a companion
  ``has_<fluent>`` predicate so that its presence stays observable;
* comparison calls become numeric preconditions;
* every other add/delete becomes a plain effect literal.

Constructs outside this table raise :class:`MappingError`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction

from ..builtins import BUILTINS, VALUE
from ..terms import (
    Compound,
    Lit,
    Model,
    Num,
    Predicate,
    State,
    TransformationRules,
    TransitionSpec,
    Var,
    format_number,
)

COMPARATORS = {
    "less_than": "<",
    "less_or_equal": "<=",
    "greater_than": ">",
    "greater_or_equal": ">=",
    "equal": "=",
}
ARITHMETIC = {"add": "+", "subtract": "-", "multiply": "*", "divide": "/"}


class MappingError(ValueError):
    def __init__(self, message: str, transition: str | None = None, construct: str | None = None):
        self.transition = transition
        self.construct = construct
        where = f"transition {transition!r}: " if transition else ""
        what = f" [{construct}]" if construct else ""
        super().__init__(f"{where}{message}{what}")


@dataclass(frozen=True)
class PddlArtifact:
    kind: str
    name: str
    text: str
    # action name -> parameter variables, used to map solver output back
    parameters: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    @property
    def uri(self) -> str:
        return f"/artifacts/{self.hash}"

    @property
    def data(self) -> bytes:
        return self.text.encode("utf-8")


def pddl_number(value: Fraction, context: str = "") -> str:
    if value.denominator == 1:
        return str(value.numerator)
    d = value.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d != 1:
        raise MappingError(f"{value} has no finite decimal form", construct=context or None)
    return format_number(value)


class _Vocabulary:
    """Everything the domain and problem must agree on, derived from model + rules."""

    def __init__(self, m: Model, rules: TransformationRules):
        self.m = m
        self.rules = rules
        self.typing = rules.typing
        self.type_functors = set(rules.types) if rules.typing else set()
        self.type_names = {f: (f[3:] if f.startswith("is_") and len(f) > 3 else f) for f in self.type_functors}
        if len(set(self.type_names.values())) != len(self.type_names):
            raise MappingError("two type predicates map to the same PDDL type name")
        self.object_types = self._object_types()
        self.removable: set[str] = set()
        self.fluent_names: dict[tuple, str] = {}
        self.fluent_key_types: dict[str, list] = {}
        self.predicates: dict[str, list] = {}
        self.constants: dict[str, str] = {}
        self._collect()

    # typing ----------------------------------------------------------------
    def _object_types(self) -> dict[str, str]:
        types: dict[str, str] = {}
        if not self.typing:
            return types
        for s in self._ground_states():
            for p in s.sorted():
                if p.functor not in self.type_functors:
                    continue
                if len(p.args) != 1 or not isinstance(p.args[0], Lit):
                    raise MappingError(f"type predicate {p} must have one literal argument")
                name = p.args[0].name
                t = self.type_names[p.functor]
                if types.setdefault(name, t) != t:
                    raise MappingError(f"object {name} has two types: {types[name]} and {t}")
        return types

    def _ground_states(self) -> list[State]:
        return [self.m.states[k] for k in sorted(self.m.states) if self.m.states[k].is_ground()]

    def _all_states(self) -> list[State]:
        return [self.m.states[k] for k in sorted(self.m.states)]

    def object_type(self, name: str) -> str:
        if not self.typing:
            return "object"
        t = self.object_types.get(name)
        if t is None:
            raise MappingError(f"literal {name} has no type predicate", construct=name)
        return t

    # fluents ---------------------------------------------------------------
    def is_fluent(self, p: Predicate) -> bool:
        return p.functor in self.rules.fluents

    def fluent_parts(self, p: Predicate, where: str | None = None):
        """``(function name, key args, unwrapped value)`` for a fluent predicate."""
        arity = self.rules.fluents[p.functor]
        if len(p.args) != arity:
            raise MappingError(f"fluent {p.functor} declared with arity {arity}", where, str(p))
        *keys, value = p.args
        suffix = None
        if isinstance(value, Compound):
            if value.functor not in self.rules.wrappers or len(value.args) != 1:
                raise MappingError("fluent value must be a number or a declared unary wrapper", where, str(p))
            suffix = self.rules.wrappers[value.functor]
            value = value.args[0]
        if isinstance(value, Lit):
            raise MappingError("fluent value must be numeric", where, str(p))
        name = p.functor if suffix is None else f"{p.functor}_{suffix}"
        owner = self.fluent_names.setdefault((p.functor, suffix), name)
        return owner, keys, value

    # collection --------------------------------------------------------------
    def _note_predicate(self, name: str, arg_types: list, where=None, construct=None):
        known = self.predicates.get(name)
        if known is None:
            self.predicates[name] = [set([t]) for t in arg_types]
        elif len(known) != len(arg_types):
            raise MappingError(f"predicate {name} used with two arities", where, construct)
        else:
            for slot, t in zip(known, arg_types):
                slot.add(t)

    def _note_fluent(self, name: str, key_types: list, where=None, construct=None):
        known = self.fluent_key_types.get(name)
        if known is None:
            self.fluent_key_types[name] = [set([t]) for t in key_types]
        elif len(known) != len(key_types):
            raise MappingError(f"fluent {name} used with two key arities", where, construct)
        else:
            for slot, t in zip(known, key_types):
                slot.add(t)

    def _collect(self):
        for s in self._all_states():
            for p in s.sorted():
                if p.functor in self.type_functors:
                    continue
                if self.is_fluent(p):
                    name, keys, _ = self.fluent_parts(p)
                    self._note_fluent(name, [self._ground_arg_type(k, p) for k in keys])
                else:
                    self._note_predicate(p.functor, [self._ground_arg_type(a, p) for a in p.args])
        for t in self.m.sorted_transitions():
            var_types = self.param_types(t)
            for p in list(t.precondition) + [a.predicate for a in t.action]:
                if p.functor in self.type_functors:
                    continue
                if self.is_fluent(p):
                    name, keys, _ = self.fluent_parts(p, t.name)
                    self._note_fluent(name, [self._pattern_arg_type(k, var_types, t, p) for k in keys], t.name, str(p))
                else:
                    self._note_predicate(
                        p.functor, [self._pattern_arg_type(a, var_types, t, p) for a in p.args], t.name, str(p)
                    )
            for a in t.action:
                p = a.predicate
                if self.is_fluent(p) and a.op == "delete":
                    if not any(b.op == "add" and self.is_fluent(b.predicate) and b.predicate.functor == p.functor
                               and b.predicate.args[:-1] == p.args[:-1] for b in t.action):
                        self.removable.add(self.fluent_parts(p, t.name)[0])
        clash = set(self.fluent_names.values()) & set(self.predicates)
        clash |= {f"has_{f}" for f in self.removable} & (set(self.predicates) | set(self.fluent_names.values()))
        if clash:
            raise MappingError(f"name collision between predicates and fluents: {sorted(clash)}")

    def _ground_arg_type(self, a, p: Predicate) -> str:
        if isinstance(a, Lit):
            return self.object_type(a.name)
        if isinstance(a, Var):
            return "object"
        raise MappingError("only literal arguments have a PDDL counterpart", construct=str(p))

    def _pattern_arg_type(self, a, var_types: dict, t: TransitionSpec, p: Predicate) -> str:
        if isinstance(a, Var):
            return var_types.get(a, "object")
        if isinstance(a, Lit):
            self.constants[a.name] = self.object_type(a.name)
            return self.constants[a.name]
        raise MappingError("only variables and literals have a PDDL counterpart here", t.name, str(p))

    def param_types(self, t: TransitionSpec) -> dict:
        types: dict[Var, str] = {}
        for p in t.precondition:
            if p.functor in self.type_functors:
                arg = p.args[0] if len(p.args) == 1 else None
                if not isinstance(arg, Var):
                    raise MappingError("type predicates in a precondition must take one variable", t.name, str(p))
                name = self.type_names[p.functor]
                if types.setdefault(arg, name) != name:
                    raise MappingError(f"variable {arg.name} has two types", t.name, str(p))
        return types

    @staticmethod
    def slot_type(slot: set) -> str:
        return next(iter(slot)) if len(slot) == 1 else "object"


def _var(v: Var) -> str:
    return "?" + v.name.lower()


def _typed(names: list[tuple[str, str]], typing: bool) -> str:
    """``a b - t1 c - t2`` grouping consecutive names of the same type."""
    if not typing:
        return " ".join(n for n, _ in names)
    out, run, run_type = [], [], None
    for n, t in names:
        if t != run_type and run:
            out.append(" ".join(run) + f" - {run_type}")
            run = []
        run.append(n)
        run_type = t
    if run:
        out.append(" ".join(run) + f" - {run_type}")
    return " ".join(out)


def _conj(items: list[str], indent: str) -> str:
    if not items:
        return "(and)"
    return "(and\n" + "".join(f"{indent}  {i}\n" for i in items) + f"{indent})"


class _ActionCompiler:
    def __init__(self, vocab: _Vocabulary, t: TransitionSpec):
        self.v = vocab
        self.t = t
        self.numeric: dict[Var, str] = {}  # numeric variable -> PDDL expression
        self.fluent_value_of: dict[tuple, Var | Num] = {}  # (fluent, keys) -> matched value
        self.results: dict[Var, tuple] = {}  # result variable -> (call, op, a, b, a_term, b_term)
        self.consumed: dict[Var, int] = {}

    def fail(self, message: str, construct) -> MappingError:
        return MappingError(message, self.t.name, str(construct))

    def arg(self, a, construct) -> str:
        if isinstance(a, Var):
            if a in self.numeric:
                raise self.fail(f"numeric variable {a.name} used as an object", construct)
            return _var(a)
        if isinstance(a, Lit):
            return a.name
        raise self.fail("argument has no PDDL counterpart", construct)

    def expr(self, a, construct) -> str:
        if isinstance(a, Num):
            return pddl_number(a.value, str(construct))
        if isinstance(a, Var) and a in self.numeric:
            return self.numeric[a]
        raise self.fail("operand is not numeric", construct)

    def atom(self, name: str, args: list[str]) -> str:
        return f"({name}{''.join(' ' + a for a in args)})"

    def compile(self) -> tuple[str, list[Var]]:
        t, v = self.t, self.v
        var_types = v.param_types(t)
        pre_items: list[str] = []
        fluent_preds = [p for p in t.precondition if v.is_fluent(p)]
        numeric_vars = set()
        for p in fluent_preds:
            _, _, value = v.fluent_parts(p, t.name)
            if isinstance(value, Var):
                numeric_vars.add(value)
        params: list[Var] = []
        for p in t.precondition:
            for a in self._object_positions(p):
                if isinstance(a, Var) and a not in params:
                    if a in numeric_vars:
                        raise self.fail(f"variable {a.name} is used both as object and number", p)
                    params.append(a)
        for a in var_types:
            if a not in params:
                params.append(a)
        names = [_var(p) for p in params]
        if len(set(names)) != len(names):
            raise self.fail("variable names collide after lower-casing", ", ".join(x.name for x in params))

        for p in t.precondition:
            if p.functor in v.type_functors:
                continue
            if v.is_fluent(p):
                name, keys, value = v.fluent_parts(p, t.name)
                ref = self.atom(name, [self.arg(k, p) for k in keys])
                key = (name, tuple(keys))
                if key in self.fluent_value_of:
                    raise self.fail("fluent matched twice with the same key", p)
                self.fluent_value_of[key] = value
                if name in v.removable:
                    pre_items.append(self.atom(f"has_{name}", [self.arg(k, p) for k in keys]))
                if isinstance(value, Var) and value not in self.numeric:
                    self.numeric[value] = ref
                else:
                    pre_items.append(f"(= {ref} {self.expr(value, p)})")
            else:
                pre_items.append(self.atom(p.functor, [self.arg(a, p) for a in p.args]))

        for call in t.computation:
            fn = BUILTINS[call.functor]
            ins = call.args[: fn.inputs]
            for a in ins:
                if isinstance(a, Var) and a in self.results:
                    raise self.fail(f"result of {self.results[a][0].functor} feeds another function", call)
            if fn.kind != VALUE:
                op = COMPARATORS.get(call.functor)
                if op is None:
                    raise self.fail(f"{call.functor} has no PDDL counterpart", call)
                pre_items.append(f"({op} {self.expr(ins[0], call)} {self.expr(ins[1], call)})")
                continue
            op = ARITHMETIC.get(call.functor)
            if op is None:
                raise self.fail(f"{call.functor} has no PDDL counterpart", call)
            if call.functor == "divide" and not (isinstance(ins[1], Num) and ins[1].value != 0):
                raise self.fail("divide needs a non-zero constant divisor", call)
            result = call.args[-1]
            self.numeric[result] = f"({op} {self.expr(ins[0], call)} {self.expr(ins[1], call)})"
            self.results[result] = (call, op, ins[0], ins[1])

        effects = self.effects()
        for r, (call, *_rest) in self.results.items():
            if self.consumed.get(r, 0) != 1:
                raise self.fail(f"result {r.name} of {call.functor} is not consumed by exactly one fluent update", call)

        typed = [(_var(p), var_types.get(p, "object")) for p in params]
        text = (
            f"  (:action {t.name}\n"
            f"    :parameters ({_typed(typed, v.typing)})\n"
            f"    :precondition {_conj(pre_items, '    ')}\n"
            f"    :effect {_conj(effects, '    ')}\n"
            f"  )\n"
        )
        return text, params

    def _object_positions(self, p: Predicate):
        if self.v.is_fluent(p):
            return self.v.fluent_parts(p, self.t.name)[1]
        return p.args

    def effects(self) -> list[str]:
        t, v = self.t, self.v
        out: list[str] = []
        pending_delete: dict[tuple, int] = {}
        done: set[tuple] = set()
        seen_adds: list[Predicate] = []
        for idx, act in enumerate(t.action):
            p = act.predicate
            if p.functor in v.type_functors:
                raise self.fail("type predicates cannot change", act)
            if not v.is_fluent(p):
                if act.op == "delete" and any(_may_coincide(p, q) for q in seen_adds):
                    raise self.fail("add followed by delete of a possibly equal atom", act)
                if act.op == "add":
                    seen_adds.append(p)
                for a in p.args:
                    if isinstance(a, Var) and a in self.numeric:
                        raise self.fail("numeric value in a non-fluent predicate", act)
                atom = self.atom(p.functor, [self.arg(a, act) for a in p.args])
                out.append(atom if act.op == "add" else f"(not {atom})")
                continue
            name, keys, value = v.fluent_parts(p, t.name)
            key = (name, tuple(keys))
            ref = self.atom(name, [self.arg(k, act) for k in keys])
            if key in done:
                raise self.fail("fluent updated more than once", act)
            if act.op == "delete":
                if self.fluent_value_of.get(key) != value:
                    raise self.fail("delete of a fluent value the precondition did not match", act)
                if key in pending_delete:
                    raise self.fail("fluent deleted twice", act)
                pending_delete[key] = len(out)
                out.append(f"(not {self.atom('has_' + name, [self.arg(k, act) for k in keys])})")
                continue
            if key not in pending_delete:
                raise self.fail("fluent added without deleting its previous value", act)
            slot = pending_delete.pop(key)
            done.add(key)
            out[slot] = self.update(ref, key, value, act)
        for key, slot in pending_delete.items():
            if key[0] not in v.removable:
                raise self.fail("fluent deleted without replacement", key[0])
        return [e for e in out if e is not None]

    def update(self, ref: str, key: tuple, value, act) -> str:
        old = self.fluent_value_of[key]
        if isinstance(value, Var) and value in self.results:
            self.consumed[value] = self.consumed.get(value, 0) + 1
            call, op, a, b = self.results[value]
            if op == "-" and a == old and isinstance(old, Var):
                return f"(decrease {ref} {self.expr(b, call)})"
            if op == "+" and isinstance(old, Var) and old in (a, b):
                other = b if a == old else a
                return f"(increase {ref} {self.expr(other, call)})"
            return f"(assign {ref} {self.numeric[value]})"
        return f"(assign {ref} {self.expr(value, act)})"


def _may_coincide(p: Predicate, q: Predicate) -> bool:
    if p.functor != q.functor or len(p.args) != len(q.args):
        return False
    for a, b in zip(p.args, q.args):
        if isinstance(a, Lit) and isinstance(b, Lit) and a != b:
            return False
    return True


def compile_domain(m: Model, rules: TransformationRules | None = None, name: str = "kmf") -> PddlArtifact:
    """One ``:action`` per transition, in transition-name order."""
    rules = rules or m.rules or TransformationRules()
    v = _Vocabulary(m, rules)
    actions, parameters = [], {}
    for t in m.sorted_transitions():
        text, params = _ActionCompiler(v, t).compile()
        actions.append(text)
        parameters[t.name] = params

    lines = [f"(define (domain {name})\n"]
    reqs = []
    if v.typing:
        reqs.append(":typing")
    if v.fluent_names:
        reqs.append(":numeric-fluents")
    if reqs:
        lines.append(f"  (:requirements {' '.join(reqs)})\n")
    if v.typing and v.type_names:
        lines.append(f"  (:types {' '.join(sorted(v.type_names.values()))} - object)\n")
    if v.constants:
        consts = sorted(v.constants.items(), key=lambda kv: (kv[1], kv[0]))
        lines.append(f"  (:constants {_typed(consts, v.typing)})\n")
    preds = []
    for pname in sorted(v.predicates):
        slots = v.predicates[pname]
        args = [(f"?x{i}", v.slot_type(s)) for i, s in enumerate(slots)]
        preds.append(f"({pname}{' ' + _typed(args, v.typing) if args else ''})")
    for f in sorted(v.removable):
        slots = v.fluent_key_types.get(f, [])
        args = [(f"?x{i}", v.slot_type(s)) for i, s in enumerate(slots)]
        preds.append(f"(has_{f}{' ' + _typed(args, v.typing) if args else ''})")
    if preds:
        lines.append("  (:predicates\n" + "".join(f"    {p}\n" for p in sorted(preds)) + "  )\n")
    if v.fluent_key_types:
        funcs = []
        for f in sorted(v.fluent_key_types):
            args = [(f"?x{i}", v.slot_type(s)) for i, s in enumerate(v.fluent_key_types[f])]
            funcs.append(f"({f}{' ' + _typed(args, v.typing) if args else ''})")
        lines.append("  (:functions\n" + "".join(f"    {fn}\n" for fn in funcs) + "  )\n")
    lines.extend(actions)
    lines.append(")\n")
    _check_case_collisions(v)
    return PddlArtifact("domain", name, "".join(lines), parameters)


def _check_case_collisions(v: _Vocabulary):
    names = set(v.object_types) | set(v.constants)
    lowered: dict[str, str] = {}
    for n in sorted(names):
        other = lowered.setdefault(n.lower(), n)
        if other != n:
            raise MappingError(f"objects {other} and {n} collide in case-insensitive PDDL")


def compile_problem(m: Model, rules: TransformationRules | None = None, name: str = "kmf") -> PddlArtifact:
    """Objects, initial facts and goal of the model's planning task."""
    rules = rules or m.rules or TransformationRules()
    v = _Vocabulary(m, rules)
    initial = m.initial_state
    goal = m.goal_state

    objects: dict[str, str] = {}
    for s in (initial, goal):
        for p in s.sorted():
            for a in _literal_args(p, v):
                if a.name not in v.constants:
                    objects[a.name] = v.object_type(a.name)

    init: list[str] = []
    fluent_keys: set = set()
    for p in initial.sorted():
        if p.functor in v.type_functors:
            continue
        if v.is_fluent(p):
            fname, keys, value = v.fluent_parts(p)
            key = (fname, tuple(keys))
            if key in fluent_keys:
                raise MappingError(f"fluent {fname} has two values for the same key", construct=str(p))
            fluent_keys.add(key)
            if not isinstance(value, Num):
                raise MappingError("initial fluent value must be a number", construct=str(p))
            ref = _ground_atom(fname, keys, p)
            init.append(f"(= {ref} {pddl_number(value.value, str(p))})")
            if fname in v.removable:
                init.append(_ground_atom(f"has_{fname}", keys, p))
        else:
            init.append(_ground_atom(p.functor, p.args, p))

    goal_items, exists = _goal_items(goal, v, rules)
    if exists:
        body = _conj(goal_items, "    ")
        typed = _typed([(_var(x), t) for x, t in exists], v.typing)
        goal_text = f"(exists ({typed})\n    {body})"
    elif len(goal_items) == 1:
        goal_text = goal_items[0]
    else:
        goal_text = "(and " + " ".join(goal_items) + ")" if goal_items else "(and)"

    obj_list = sorted(objects.items(), key=lambda kv: (kv[1], kv[0]))
    lines = [f"(define (problem {name}-problem)\n", f"  (:domain {name})\n"]
    if exists:
        lines.append("  (:requirements :existential-preconditions)\n")
    lines.append(f"  (:objects {_typed(obj_list, v.typing)})\n" if obj_list else "  (:objects)\n")
    lines.append("  (:init\n" + "".join(f"    {i}\n" for i in init) + "  )\n")
    lines.append(f"  (:goal {goal_text})\n")
    lines.append(")\n")
    _check_case_collisions(v)
    return PddlArtifact("problem", name, "".join(lines))


def _literal_args(p: Predicate, v: _Vocabulary):
    args = p.args
    if v.is_fluent(p):
        args = v.fluent_parts(p)[1]
    for a in args:
        if isinstance(a, Lit):
            yield a


def _ground_atom(name: str, args, p) -> str:
    out = []
    for a in args:
        if not isinstance(a, Lit):
            raise MappingError("only literal arguments have a PDDL counterpart", construct=str(p))
        out.append(a.name)
    return f"({name}{''.join(' ' + a for a in out)})"


def _goal_items(goal: State, v: _Vocabulary, rules: TransformationRules):
    variables: dict[Var, str] = {}
    if not goal.is_ground() and not rules.existential_goals:
        raise MappingError("goal contains variables but existential goals are disabled", construct=goal.name)
    for p in goal.sorted():
        if p.functor in v.type_functors:
            arg = p.args[0]
            t = v.type_names[p.functor]
            if isinstance(arg, Var):
                if variables.setdefault(arg, t) != t:
                    raise MappingError(f"goal variable {arg.name} has two types", construct=str(p))
            elif v.object_types.get(arg.name) != t:
                raise MappingError("goal type fact contradicts the object's type", construct=str(p))
    items: list[str] = []

    def term(a, p):
        if isinstance(a, Var):
            variables.setdefault(a, "object")
            return _var(a)
        if isinstance(a, Lit):
            return a.name
        raise MappingError("goal argument has no PDDL counterpart", construct=str(p))

    for p in goal.sorted():
        if p.functor in v.type_functors:
            continue
        if v.is_fluent(p):
            fname, keys, value = v.fluent_parts(p)
            if not isinstance(value, Num):
                raise MappingError("goal fluent value must be a number", construct=str(p))
            ref = f"({fname}{''.join(' ' + term(k, p) for k in keys)})"
            if fname in v.removable:
                items.append(f"(has_{fname}{''.join(' ' + term(k, p) for k in keys)})")
            items.append(f"(= {ref} {pddl_number(value.value, str(p))})")
        else:
            items.append(f"({p.functor}{''.join(' ' + term(a, p) for a in p.args)})")
    exists = sorted(((x, t) for x, t in variables.items()), key=lambda kv: kv[0].name)
    return items, exists


def generate(m: Model, rules: TransformationRules | None = None, name: str = "kmf") -> tuple[PddlArtifact, PddlArtifact]:
    """Domain and problem artifacts for ``m``; the one entry point shared by CLI and service."""
    return compile_domain(m, rules, name), compile_problem(m, rules, name)


__all__ = ["MappingError", "PddlArtifact", "compile_domain", "compile_problem", "generate", "pddl_number"]
