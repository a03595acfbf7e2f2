"""Text syntax for ``.kmf`` documents: tokenizer, parser, validator, printer.

A document is a sequence of blocks::

    state s0 { at(p1, poi1). capacity(bus1, 2). }
    transition move { pre { at(B, S). next(S, S2). }
                      action { delete(at(B, S)). add(at(B, S2)). } }
    initial s0.
    goal s1.
    rules { types { is_poi. } fluents { capacity/2. } wrappers { min = minutes. } }

``#`` starts a comment running to end of line. See docs/grammar.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .builtins import BUILTINS, VALUE
from .terms import (
    LITERAL_RE,
    NAME_RE,
    VARIABLE_RE,
    ActionPredicate,
    Compound,
    FunctionCall,
    Lit,
    Model,
    Num,
    Predicate,
    State,
    TransformationRules,
    TransitionSpec,
    Var,
    format_number,
    is_ground,
    iter_vars,
)

INT64_MIN, INT64_MAX = -(2**63), 2**63 - 1


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>-?[0-9]+(?:\.[0-9]+|/[0-9]+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
  | (?P<punct>[(){}.,/=])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "punct":
            tokens.append(Token(chunk, chunk, line, col))
        elif kind in ("number", "name"):
            tokens.append(Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    col = pos - line_start + 1
    tokens.append(Token("eof", "", line, col))
    return tokens


def parse_number(text: str) -> Fraction:
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise ValueError("zero denominator")
        return Fraction(int(num), int(den))
    if "." in text:
        return Fraction(text)
    value = int(text)
    if not INT64_MIN <= value <= INT64_MAX:
        raise ValueError("integer outside the signed 64-bit range")
    return Fraction(value)


class Parser:
    """Recursive-descent reader over a token list.

    Kept as a class so the taxonomy reader can reuse the term-level methods.
    """

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    # token helpers -------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.column)

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_keyword(self, word: str) -> bool:
        return self.at("name", word)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, kind: str, what: str | None = None) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what or repr(kind)}, found {found!r}")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.error(f"expected {word!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def block_name(self) -> Token:
        t = self.expect("name", "a name")
        if not NAME_RE.match(t.text):
            raise self.error(f"invalid name {t.text!r}", t)
        return t

    # terms ---------------------------------------------------------------
    def term(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            try:
                return Num(parse_number(t.text))
            except ValueError as exc:
                raise self.error(str(exc), t) from None
        if t.kind != "name":
            raise self.error(f"expected a term, found {t.text or 'end of input'!r}")
        self.advance()
        if self.at("("):
            if not LITERAL_RE.match(t.text):
                raise self.error(f"invalid functor {t.text!r}", t)
            return Compound(t.text, self.arguments())
        if VARIABLE_RE.match(t.text):
            return Var(t.text)
        if LITERAL_RE.match(t.text):
            return Lit(t.text)
        raise self.error(f"invalid identifier {t.text!r}", t)

    def arguments(self) -> tuple:
        self.expect("(")
        if self.at(")"):
            raise self.error("empty argument list; write a zero-arity symbol without parentheses")
        args = [self.term()]
        while self.at(","):
            self.advance()
            args.append(self.term())
        self.expect(")", "')'")
        return tuple(args)

    def predicate(self) -> Predicate:
        t = self.expect("name", "a predicate")
        if not LITERAL_RE.match(t.text):
            raise self.error(f"invalid predicate functor {t.text!r}", t)
        args = self.arguments() if self.at("(") else ()
        return Predicate(t.text, args)

    def terminated(self, item):
        self.expect(".", "'.'")
        return item

    def items_block(self, read):
        """``{ item. item. ... }`` -> list of (token, item)."""
        self.expect("{", "'{'")
        out = []
        while not self.at("}"):
            if self.at("eof"):
                raise self.error("unterminated block; expected '}'")
            start = self.tok
            out.append((start, self.terminated(read())))
        self.advance()
        return out


class _DocumentParser(Parser):
    def document(self) -> "_Document":
        doc = _Document()
        while not self.at("eof"):
            t = self.tok
            if self.at_keyword("state"):
                self.state(doc)
            elif self.at_keyword("transition"):
                self.transition(doc)
            elif self.at_keyword("initial") or self.at_keyword("goal"):
                self.advance()
                name = self.block_name()
                self.expect(".", "'.'")
                if getattr(doc, t.text) is not None:
                    raise self.error(f"{t.text} state declared twice", t)
                setattr(doc, t.text, name.text)
                doc.positions[t.text] = name
            elif self.at_keyword("rules"):
                if doc.rules is not None:
                    raise self.error("rules block declared twice")
                self.advance()
                doc.rules = self.rules()
            else:
                raise self.error(f"expected a block keyword, found {t.text!r}")
        return doc

    def state(self, doc):
        self.advance()
        name = self.block_name()
        if name.text in doc.states:
            raise self.error(f"duplicate state {name.text!r}", name)
        preds = self.items_block(self.predicate)
        doc.states[name.text] = State(name.text, [p for _, p in preds])
        doc.positions[("state", name.text)] = name
        doc.state_items[name.text] = preds

    def action(self):
        t = self.tok
        term = self.term()
        if not isinstance(term, Compound):
            functor = term.name if isinstance(term, (Lit, Var)) else str(term)
            raise self.error(f"illegal action functor {functor!r}; only add and delete are allowed", t)
        if term.functor not in ("add", "delete"):
            raise self.error(
                f"illegal action functor {term.functor!r}; only add and delete are allowed", t
            )
        if len(term.args) != 1:
            raise self.error(f"{term.functor} takes exactly one predicate argument", t)
        arg = term.args[0]
        if isinstance(arg, Compound):
            pred = Predicate(arg.functor, arg.args)
        elif isinstance(arg, Lit):
            pred = Predicate(arg.name)
        else:
            raise self.error(f"argument of {term.functor} must be a predicate", t)
        return ActionPredicate(term.functor, pred)

    def call(self):
        t = self.expect("name", "a function call")
        if not LITERAL_RE.match(t.text):
            raise self.error(f"invalid function name {t.text!r}", t)
        return FunctionCall(t.text, self.arguments())

    def transition(self, doc):
        self.advance()
        name = self.block_name()
        if name.text in doc.transitions:
            raise self.error(f"duplicate transition {name.text!r}", name)
        self.expect("{", "'{'")
        sections = {}
        for section, reader in (("pre", self.predicate), ("compute", self.call), ("action", self.action)):
            if self.at_keyword(section):
                self.advance()
                sections[section] = self.items_block(reader)
            else:
                sections[section] = []
        if not self.at("}"):
            raise self.error(f"expected 'pre', 'compute', 'action' or '}}', found {self.tok.text!r}")
        self.advance()
        spec = TransitionSpec(
            name.text,
            [p for _, p in sections["pre"]],
            [c for _, c in sections["compute"]],
            [a for _, a in sections["action"]],
        )
        _check_transition(spec, sections)
        doc.transitions[name.text] = spec
        doc.positions[("transition", name.text)] = name

    def rules(self) -> TransformationRules:
        self.expect("{", "'{'")
        types, fluents, wrappers, options = [], {}, {}, set()
        while not self.at("}"):
            section = self.expect("name", "a rules section")
            if section.text == "types":
                types += [name for _, name in self.items_block(self.functor_name)]
            elif section.text == "fluents":
                for tok, (functor, arity) in self.items_block(self.fluent_decl):
                    if functor in fluents:
                        raise self.error(f"fluent {functor!r} declared twice", tok)
                    fluents[functor] = arity
            elif section.text == "wrappers":
                for tok, (functor, suffix) in self.items_block(self.wrapper_decl):
                    if functor in wrappers:
                        raise self.error(f"wrapper {functor!r} declared twice", tok)
                    wrappers[functor] = suffix
            elif section.text == "options":
                for tok, opt in self.items_block(self.functor_name):
                    if opt not in ("no_typing", "existential_goals"):
                        raise self.error(f"unknown option {opt!r}", tok)
                    options.add(opt)
            else:
                raise self.error(f"unknown rules section {section.text!r}", section)
        start = self.advance()
        try:
            return TransformationRules(
                types=types,
                fluents=fluents,
                wrappers=wrappers,
                typing="no_typing" not in options,
                existential_goals="existential_goals" in options,
            )
        except ValueError as exc:
            raise self.error(str(exc), start) from None

    def functor_name(self) -> str:
        t = self.expect("name", "a functor")
        if not LITERAL_RE.match(t.text):
            raise self.error(f"invalid functor {t.text!r}", t)
        return t.text

    def fluent_decl(self):
        functor = self.functor_name()
        self.expect("/", "'/'")
        t = self.expect("number", "an arity")
        if not t.text.isdigit() or int(t.text) < 1:
            raise self.error("fluent arity must be a positive integer", t)
        return functor, int(t.text)

    def wrapper_decl(self):
        functor = self.functor_name()
        suffix = functor
        if self.at("="):
            self.advance()
            suffix = self.functor_name()
        return functor, suffix


class _Document:
    def __init__(self):
        self.states: dict[str, State] = {}
        self.transitions: dict[str, TransitionSpec] = {}
        self.initial: str | None = None
        self.goal: str | None = None
        self.rules: TransformationRules | None = None
        self.positions: dict = {}
        self.state_items: dict = {}


def _check_transition(spec: TransitionSpec, sections) -> None:
    """Static checks: computation binding discipline and bound action variables."""
    bound = {v for p in spec.precondition for v in iter_vars(p)}
    for tok, call in sections["compute"]:
        fn = BUILTINS.get(call.functor)
        where = f"in transition {spec.name!r}"
        if fn is None:
            raise ParseError(f"unknown function {call.functor!r} {where}", tok.line, tok.column)
        if len(call.args) != fn.arity:
            raise ParseError(
                f"{call.functor} expects {fn.arity} arguments, got {len(call.args)} {where}",
                tok.line,
                tok.column,
            )
        for arg in call.args[: fn.inputs]:
            for v in iter_vars(arg):
                if v not in bound:
                    raise ParseError(
                        f"unbound variable {v.name} in call to {call.functor} {where}",
                        tok.line,
                        tok.column,
                    )
        if fn.kind == VALUE:
            result = call.args[-1]
            if not isinstance(result, Var):
                raise ParseError(
                    f"result of {call.functor} must be a variable {where}", tok.line, tok.column
                )
            if result in bound:
                raise ParseError(
                    f"result variable {result.name} of {call.functor} shadows a bound variable {where}",
                    tok.line,
                    tok.column,
                )
            bound.add(result)
    for tok, act in sections["action"]:
        for v in iter_vars(act):
            if v not in bound:
                raise ParseError(
                    f"unbound action variable {v.name} in transition {spec.name!r}",
                    tok.line,
                    tok.column,
                )


def _finish(doc: _Document) -> Model:
    for which in ("initial", "goal"):
        name = getattr(doc, which)
        if name is not None and name not in doc.states:
            tok = doc.positions[which]
            raise ParseError(f"{which} state {name!r} is not defined", tok.line, tok.column)
    for name, items in doc.state_items.items():
        if name == doc.goal:
            continue
        for tok, pred in items:
            if not is_ground(pred):
                raise ParseError(
                    f"state {name!r} contains variables; only the goal state may", tok.line, tok.column
                )
    return Model(doc.states, doc.transitions, doc.initial, doc.goal, doc.rules)


def parse_model(text: str) -> Model:
    """Parse a ``.kmf`` document into a validated :class:`Model`.

    Raises :class:`ParseError` carrying line and column on any syntax or
    validation problem.
    """
    return _finish(_DocumentParser(text).document())


def merge_models(*models: Model) -> Model:
    """Union of several documents (e.g. a state file and a transition file)."""
    states, transitions = {}, {}
    single = {"initial": None, "goal": None, "rules": None}
    for m in models:
        for name in m.states:
            if name in states:
                raise ParseError(f"duplicate state {name!r} across documents")
        for name in m.transitions:
            if name in transitions:
                raise ParseError(f"duplicate transition {name!r} across documents")
        states.update(m.states)
        transitions.update(m.transitions)
        for attr in single:
            value = getattr(m, attr)
            if value is None:
                continue
            if single[attr] is not None:
                raise ParseError(f"{attr} declared in more than one document")
            single[attr] = value
    initial, goal, rules = single["initial"], single["goal"], single["rules"]
    for which, name in (("initial", initial), ("goal", goal)):
        if name is not None and name not in states:
            raise ParseError(f"{which} state {name!r} is not defined")
    for name, state in states.items():
        if name != goal and not state.is_ground():
            raise ParseError(f"state {name!r} contains variables; only the goal state may")
    return Model(states, transitions, initial, goal, rules)


def parse_predicates(text: str) -> list[Predicate]:
    """Parse a bare ``p(a). q(b).`` list, as used by perturbations."""
    p = Parser(text)
    out = []
    while not p.at("eof"):
        out.append(p.terminated(p.predicate()))
    return out


def parse_calls(text: str) -> list[FunctionCall]:
    p = _DocumentParser(text)
    out = []
    while not p.at("eof"):
        out.append(p.terminated(p.call()))
    return out


def parse_term(text: str):
    p = Parser(text)
    t = p.term()
    p.expect("eof", "end of input")
    return t


# printing -----------------------------------------------------------------


def state_text(state: State) -> str:
    """Canonical body of a state: one sorted predicate per line, each ending in '.'"""
    return "".join(f"{p}.\n" for p in state.sorted())


def _block(lines: list[str], indent: str) -> str:
    return "".join(f"{indent}{line}\n" for line in lines)


def print_state(state: State) -> str:
    return f"state {state.name} {{\n" + _block([f"{p}." for p in state.sorted()], "  ") + "}\n"


def print_transition(t: TransitionSpec) -> str:
    out = [f"transition {t.name} {{\n", "  pre {\n", _block([f"{p}." for p in t.precondition], "    "), "  }\n"]
    if t.computation:
        out += ["  compute {\n", _block([f"{c}." for c in t.computation], "    "), "  }\n"]
    out += ["  action {\n", _block([f"{a}." for a in t.action], "    "), "  }\n", "}\n"]
    return "".join(out)


def print_rules(r: TransformationRules) -> str:
    out = ["rules {\n"]
    out.append("  types {\n" + _block([f"{t}." for t in sorted(r.types)], "    ") + "  }\n")
    out.append(
        "  fluents {\n" + _block([f"{f}/{r.fluents[f]}." for f in sorted(r.fluents)], "    ") + "  }\n"
    )
    wrappers = [f"{w}." if r.wrappers[w] == w else f"{w} = {r.wrappers[w]}." for w in sorted(r.wrappers)]
    out.append("  wrappers {\n" + _block(wrappers, "    ") + "  }\n")
    options = (["existential_goals."] if r.existential_goals else []) + ([] if r.typing else ["no_typing."])
    if options:
        out.append("  options {\n" + _block(options, "    ") + "  }\n")
    out.append("}\n")
    return "".join(out)


def print_canonical(m: Model) -> str:
    """Deterministic text for a model; ``parse_model`` inverts it exactly."""
    chunks = [print_state(m.states[k]) for k in sorted(m.states)]
    chunks += [print_transition(m.transitions[k]) for k in sorted(m.transitions)]
    decls = []
    if m.initial is not None:
        decls.append(f"initial {m.initial}.\n")
    if m.goal is not None:
        decls.append(f"goal {m.goal}.\n")
    if decls:
        chunks.append("".join(decls))
    if m.rules is not None:
        chunks.append(print_rules(m.rules))
    return "\n".join(chunks)


def lint(m: Model) -> list[str]:
    """Warnings that do not make a model invalid."""
    predicate_functors, compound_functors = set(), set()

    def walk(t):
        if isinstance(t, Compound):
            compound_functors.add(t.functor)
            for a in t.args:
                walk(a)

    def visit(p: Predicate):
        predicate_functors.add(p.functor)
        for a in p.args:
            walk(a)

    for s in m.states.values():
        for p in s.predicates:
            visit(p)
    for t in m.transitions.values():
        for p in t.precondition:
            visit(p)
        for a in t.action:
            visit(a.predicate)
        for c in t.computation:
            for a in c.args:
                walk(a)
    return [
        f"functor {f!r} is used both as a predicate and as a compound term"
        for f in sorted(predicate_functors & compound_functors)
    ]


__all__ = [
    "ParseError",
    "Parser",
    "format_number",
    "lint",
    "merge_models",
    "parse_calls",
    "parse_model",
    "parse_predicates",
    "parse_term",
    "print_canonical",
    "print_state",
    "state_text",
    "tokenize",
]
