"""Grammar and static-semantics checker for the PDDL subset the compiler targets.

Covers STRIPS with ``:typing``, ``:numeric-fluents`` (or ``:fluents``),
``:negative-preconditions``, ``:equality`` and ``:existential-preconditions``.
Names are case-insensitive. Checks go beyond bracket structure: every
predicate and function use must match a declaration in arity and argument
types, action bodies may only mention their parameters and domain constants,
and problem facts may only mention declared objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .sexpr import SExprError, read_one

KNOWN_REQUIREMENTS = {
    ":strips",
    ":typing",
    ":numeric-fluents",
    ":fluents",
    ":negative-preconditions",
    ":equality",
    ":existential-preconditions",
}
COMPARISONS = {"<", "<=", ">", ">=", "="}
ARITH = {"+", "-", "*", "/"}
ASSIGN_OPS = {"assign", "increase", "decrease", "scale-up", "scale-down"}


class PddlCheckError(ValueError):
    pass


@dataclass
class DomainInfo:
    name: str
    requirements: set = field(default_factory=set)
    types: dict = field(default_factory=lambda: {"object": None})
    constants: dict = field(default_factory=dict)
    predicates: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    actions: dict = field(default_factory=dict)

    @property
    def numeric(self) -> bool:
        return bool(self.requirements & {":numeric-fluents", ":fluents"})

    def is_subtype(self, t: str, parent: str) -> bool:
        seen = set()
        while t is not None and t not in seen:
            if t == parent:
                return True
            seen.add(t)
            t = self.types.get(t)
        return parent == "object"


def _is_name(x) -> bool:
    return isinstance(x, str) and not x.startswith(("?", ":")) and x[:1].isalpha()


def _is_var(x) -> bool:
    return isinstance(x, str) and x.startswith("?") and len(x) > 1


def _is_number(x) -> bool:
    if not isinstance(x, str):
        return False
    try:
        float(x)
    except ValueError:
        return False
    return True


def _typed_list(items, typing: bool, what: str, item_ok) -> list[tuple[str, str]]:
    """Parse ``a b - t c`` into ``[(a, t), (b, t), (c, object)]``."""
    if not isinstance(items, list):
        raise PddlCheckError(f"{what}: expected a list")
    out, pending, i = [], [], 0
    while i < len(items):
        x = items[i]
        if x == "-":
            if not typing:
                raise PddlCheckError(f"{what}: typed list without :typing")
            if i + 1 >= len(items) or not _is_name(items[i + 1]) or not pending:
                raise PddlCheckError(f"{what}: malformed type annotation")
            out += [(n, items[i + 1]) for n in pending]
            pending = []
            i += 2
            continue
        if not item_ok(x):
            raise PddlCheckError(f"{what}: bad entry {x!r}")
        pending.append(x)
        i += 1
    out += [(n, "object") for n in pending]
    names = [n for n, _ in out]
    if len(set(names)) != len(names):
        raise PddlCheckError(f"{what}: duplicate names")
    return out


def check_domain(text: str) -> DomainInfo:
    try:
        expr = read_one(text)
    except SExprError as exc:
        raise PddlCheckError(str(exc)) from None
    if not (isinstance(expr, list) and len(expr) >= 2 and expr[0] == "define"):
        raise PddlCheckError("domain must be (define (domain <name>) ...)")
    head = expr[1]
    if not (isinstance(head, list) and len(head) == 2 and head[0] == "domain" and _is_name(head[1])):
        raise PddlCheckError("malformed domain header")
    info = DomainInfo(head[1])
    order = [":requirements", ":types", ":constants", ":predicates", ":functions"]
    last = -1
    for section in expr[2:]:
        if not isinstance(section, list) or not section or not isinstance(section[0], str):
            raise PddlCheckError(f"unexpected domain element {section!r}")
        key = section[0]
        if key == ":action":
            _check_action(section, info)
            last = len(order)
            continue
        if key not in order:
            raise PddlCheckError(f"unknown domain section {key}")
        pos = order.index(key)
        if pos <= last:
            raise PddlCheckError(f"section {key} out of order or repeated")
        last = pos
        body = section[1:]
        if key == ":requirements":
            for r in body:
                if r not in KNOWN_REQUIREMENTS:
                    raise PddlCheckError(f"unsupported requirement {r}")
            info.requirements = set(body)
        elif key == ":types":
            typing = ":typing" in info.requirements
            if not typing:
                raise PddlCheckError(":types needs :typing")
            for name, parent in _typed_list(body, typing, ":types", _is_name):
                if name == "object":
                    raise PddlCheckError("object cannot be redeclared")
                info.types[name] = parent
            for name, parent in info.types.items():
                if parent is not None and parent not in info.types:
                    raise PddlCheckError(f"type {name} has undeclared parent {parent}")
        elif key == ":constants":
            for name, t in _typed_list(body, ":typing" in info.requirements, ":constants", _is_name):
                _need_type(info, t)
                info.constants[name] = t
        elif key == ":predicates":
            for decl in body:
                name, params = _signature(decl, info, "predicate")
                if name in info.predicates:
                    raise PddlCheckError(f"predicate {name} declared twice")
                info.predicates[name] = params
        elif key == ":functions":
            if not info.numeric:
                raise PddlCheckError(":functions needs :numeric-fluents")
            i = 0
            while i < len(body):
                name, params = _signature(body[i], info, "function")
                if name in info.functions:
                    raise PddlCheckError(f"function {name} declared twice")
                info.functions[name] = params
                i += 1
                if i < len(body) and body[i] == "-":
                    if i + 1 >= len(body) or body[i + 1] != "number":
                        raise PddlCheckError(f"function {name} must have type number")
                    i += 2
    return info


def _need_type(info: DomainInfo, t: str):
    if t not in info.types:
        raise PddlCheckError(f"undeclared type {t}")


def _signature(decl, info: DomainInfo, what: str):
    if not isinstance(decl, list) or not decl or not _is_name(decl[0]):
        raise PddlCheckError(f"malformed {what} declaration {decl!r}")
    params = _typed_list(decl[1:], ":typing" in info.requirements, f"{what} {decl[0]}", _is_var)
    for _, t in params:
        _need_type(info, t)
    return decl[0], [t for _, t in params]


def _check_action(section, info: DomainInfo):
    if len(section) < 2 or not _is_name(section[1]):
        raise PddlCheckError("action needs a name")
    name = section[1]
    if name in info.actions:
        raise PddlCheckError(f"action {name} declared twice")
    fields, i = {}, 2
    while i < len(section):
        key = section[i]
        if key not in (":parameters", ":precondition", ":effect") or i + 1 >= len(section):
            raise PddlCheckError(f"action {name}: unexpected {key!r}")
        if key in fields:
            raise PddlCheckError(f"action {name}: {key} repeated")
        fields[key] = section[i + 1]
        i += 2
    params = _typed_list(fields.get(":parameters", []), ":typing" in info.requirements, f"action {name}", _is_var)
    for _, t in params:
        _need_type(info, t)
    scope = dict(params)
    ctx = f"action {name}"
    if ":precondition" in fields:
        _check_goal(fields[":precondition"], info, scope, ctx)
    if ":effect" in fields:
        _check_effect(fields[":effect"], info, scope, ctx)
    info.actions[name] = [t for _, t in params]


def _term_type(x, info: DomainInfo, scope: dict, objects: dict, ctx: str) -> str:
    if _is_var(x):
        if x not in scope:
            raise PddlCheckError(f"{ctx}: unbound variable {x}")
        return scope[x]
    if _is_name(x):
        if x in info.constants:
            return info.constants[x]
        if x in objects:
            return objects[x]
        raise PddlCheckError(f"{ctx}: unknown object {x}")
    raise PddlCheckError(f"{ctx}: bad term {x!r}")


def _check_atom(expr, info, scope, ctx, objects=None, table=None):
    table = info.predicates if table is None else table
    kind = "predicate" if table is info.predicates else "function"
    if not isinstance(expr, list) or not expr or not _is_name(expr[0]):
        raise PddlCheckError(f"{ctx}: malformed atom {expr!r}")
    name, args = expr[0], expr[1:]
    if name not in table:
        raise PddlCheckError(f"{ctx}: undeclared {kind} {name}")
    sig = table[name]
    if len(sig) != len(args):
        raise PddlCheckError(f"{ctx}: {name} expects {len(sig)} arguments, got {len(args)}")
    for a, t in zip(args, sig):
        at = _term_type(a, info, scope, objects or {}, ctx)
        if not info.is_subtype(at, t):
            raise PddlCheckError(f"{ctx}: argument {a} of {name} has type {at}, expected {t}")


def _check_fexp(expr, info, scope, ctx, objects=None):
    if _is_number(expr):
        return
    if not info.numeric:
        raise PddlCheckError(f"{ctx}: numeric expression without :numeric-fluents")
    if isinstance(expr, list) and expr and expr[0] in ARITH:
        if expr[0] == "-" and len(expr) == 2:
            _check_fexp(expr[1], info, scope, ctx, objects)
            return
        if len(expr) != 3:
            raise PddlCheckError(f"{ctx}: {expr[0]} takes two operands")
        _check_fexp(expr[1], info, scope, ctx, objects)
        _check_fexp(expr[2], info, scope, ctx, objects)
        return
    _check_atom(expr, info, scope, ctx, objects, info.functions)


def _check_goal(expr, info, scope, ctx, objects=None):
    if not isinstance(expr, list):
        raise PddlCheckError(f"{ctx}: malformed condition {expr!r}")
    if not expr:
        raise PddlCheckError(f"{ctx}: empty condition; write (and)")
    head = expr[0]
    if head == "and":
        for sub in expr[1:]:
            _check_goal(sub, info, scope, ctx, objects)
    elif head == "not":
        if ":negative-preconditions" not in info.requirements:
            raise PddlCheckError(f"{ctx}: negative condition without :negative-preconditions")
        if len(expr) != 2:
            raise PddlCheckError(f"{ctx}: not takes one argument")
        _check_goal(expr[1], info, scope, ctx, objects)
    elif head == "exists":
        if ":existential-preconditions" not in info.requirements:
            raise PddlCheckError(f"{ctx}: exists without :existential-preconditions")
        if len(expr) != 3:
            raise PddlCheckError(f"{ctx}: malformed exists")
        bound = _typed_list(expr[1], ":typing" in info.requirements, ctx, _is_var)
        for _, t in bound:
            _need_type(info, t)
        _check_goal(expr[2], info, {**scope, **dict(bound)}, ctx, objects)
    elif head in COMPARISONS and len(expr) == 3 and (
        head != "=" or _looks_numeric(expr[1], info) or _looks_numeric(expr[2], info)
    ):
        _check_fexp(expr[1], info, scope, ctx, objects)
        _check_fexp(expr[2], info, scope, ctx, objects)
    elif head == "=":
        if ":equality" not in info.requirements:
            raise PddlCheckError(f"{ctx}: object equality without :equality")
        for a in expr[1:]:
            _term_type(a, info, scope, objects or {}, ctx)
    else:
        _check_atom(expr, info, scope, ctx, objects)


def _looks_numeric(x, info) -> bool:
    if _is_number(x):
        return True
    return isinstance(x, list) and bool(x) and (x[0] in ARITH or x[0] in info.functions)


def _check_effect(expr, info, scope, ctx):
    if not isinstance(expr, list) or not expr:
        raise PddlCheckError(f"{ctx}: malformed effect {expr!r}")
    head = expr[0]
    if head == "and":
        for sub in expr[1:]:
            _check_effect(sub, info, scope, ctx)
    elif head == "not":
        if len(expr) != 2:
            raise PddlCheckError(f"{ctx}: not takes one argument")
        _check_atom(expr[1], info, scope, ctx)
    elif head in ASSIGN_OPS:
        if not info.numeric:
            raise PddlCheckError(f"{ctx}: {head} without :numeric-fluents")
        if len(expr) != 3:
            raise PddlCheckError(f"{ctx}: {head} takes a fluent and a value")
        _check_atom(expr[1], info, scope, ctx, None, info.functions)
        _check_fexp(expr[2], info, scope, ctx)
    else:
        _check_atom(expr, info, scope, ctx)


def check_problem(text: str, domain: DomainInfo) -> dict:
    """Check a problem against a checked domain; returns the object table."""
    try:
        expr = read_one(text)
    except SExprError as exc:
        raise PddlCheckError(str(exc)) from None
    if not (isinstance(expr, list) and len(expr) >= 3 and expr[0] == "define"):
        raise PddlCheckError("problem must be (define (problem <name>) ...)")
    head = expr[1]
    if not (isinstance(head, list) and len(head) == 2 and head[0] == "problem" and _is_name(head[1])):
        raise PddlCheckError("malformed problem header")
    sections = {}
    for section in expr[2:]:
        if not isinstance(section, list) or not section:
            raise PddlCheckError(f"unexpected problem element {section!r}")
        key = section[0]
        if key not in (":domain", ":requirements", ":objects", ":init", ":goal"):
            raise PddlCheckError(f"unknown problem section {key}")
        if key in sections:
            raise PddlCheckError(f"section {key} repeated")
        sections[key] = section[1:]
    if sections.get(":domain") != [domain.name]:
        raise PddlCheckError(f"problem refers to domain {sections.get(':domain')}, expected {domain.name}")
    for key in (":init", ":goal"):
        if key not in sections:
            raise PddlCheckError(f"problem lacks {key}")
    info = domain
    extra = set(sections.get(":requirements", []))
    unknown = extra - KNOWN_REQUIREMENTS
    if unknown:
        raise PddlCheckError(f"unsupported requirement {sorted(unknown)}")
    if extra - domain.requirements:
        info = DomainInfo(
            domain.name,
            domain.requirements | extra,
            domain.types,
            domain.constants,
            domain.predicates,
            domain.functions,
            domain.actions,
        )
    objects = dict(_typed_list(sections.get(":objects", []), ":typing" in info.requirements, ":objects", _is_name))
    for name, t in objects.items():
        _need_type(info, t)
        if name in info.constants:
            raise PddlCheckError(f"object {name} redeclares a domain constant")
    assigned = set()
    for fact in sections[":init"]:
        if isinstance(fact, list) and fact and fact[0] == "=":
            if not info.numeric or len(fact) != 3 or not _is_number(fact[2]):
                raise PddlCheckError(f":init: malformed fluent assignment {fact!r}")
            _check_atom(fact[1], info, {}, ":init", objects, info.functions)
            key = tuple(fact[1])
            if key in assigned:
                raise PddlCheckError(f":init: {fact[1]} assigned twice")
            assigned.add(key)
        else:
            _check_atom(fact, info, {}, ":init", objects)
    goal = sections[":goal"]
    if len(goal) != 1:
        raise PddlCheckError(":goal takes exactly one condition")
    _check_goal(goal[0], info, {}, ":goal", objects)
    return objects


def check_pair(domain_text: str, problem_text: str) -> None:
    """Raise :class:`PddlCheckError` unless both documents are valid together."""
    check_problem(problem_text, check_domain(domain_text))
