"""Minimal s-expression reader for PDDL text (``;`` comments, case-folded atoms)."""

from __future__ import annotations

import re

_TOKEN = re.compile(r";[^\n]*|\(|\)|[^\s()]+")


class SExprError(ValueError):
    pass


def read_all(text: str) -> list:
    """Every top-level expression in ``text``; lists become Python lists."""
    stack: list[list] = [[]]
    for m in _TOKEN.finditer(text):
        tok = m.group()
        if tok.startswith(";"):
            continue
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SExprError(f"unbalanced ')' at offset {m.start()}")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok.lower())
    if len(stack) != 1:
        raise SExprError("unbalanced '(': missing ')'")
    return stack[0]


def read_one(text: str):
    exprs = read_all(text)
    if len(exprs) != 1:
        raise SExprError(f"expected exactly one expression, found {len(exprs)}")
    return exprs[0]
