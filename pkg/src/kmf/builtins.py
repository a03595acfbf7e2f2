"""Built-in function library for transition computations.

Each function is a finite or infinite relation over ground terms. A *test*
function succeeds or fails; a *value* function computes its result into the
last argument. A call outside a function's domain (a literal handed to
``less_than``, a zero divisor) simply fails.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .terms import Num

TEST = "test"
VALUE = "value"


@dataclass(frozen=True)
class BuiltinFunction:
    name: str
    arity: int
    kind: str
    fn: Callable

    @property
    def inputs(self) -> int:
        return self.arity - 1 if self.kind == VALUE else self.arity


def _numbers(args):
    if all(isinstance(a, Num) for a in args):
        return [a.value for a in args]
    return None


def _numeric_test(op):
    def call(a, b):
        nums = _numbers((a, b))
        return nums is not None and op(*nums)

    return call


def _numeric_value(op):
    def call(*args):
        nums = _numbers(args)
        if nums is None:
            return None
        out = op(*nums)
        return None if out is None else Num(Fraction(out))

    return call


def _divide(a, b):
    if b == 0:
        return None
    return a / b


_TABLE = [
    BuiltinFunction("less_than", 2, TEST, _numeric_test(lambda a, b: a < b)),
    BuiltinFunction("less_or_equal", 2, TEST, _numeric_test(lambda a, b: a <= b)),
    BuiltinFunction("greater_than", 2, TEST, _numeric_test(lambda a, b: a > b)),
    BuiltinFunction("greater_or_equal", 2, TEST, _numeric_test(lambda a, b: a >= b)),
    # equality is structural, so it also works on literals and compounds
    BuiltinFunction("equal", 2, TEST, lambda a, b: a == b),
    BuiltinFunction("not_equal", 2, TEST, lambda a, b: a != b),
    BuiltinFunction("add", 3, VALUE, _numeric_value(lambda a, b: a + b)),
    BuiltinFunction("subtract", 3, VALUE, _numeric_value(lambda a, b: a - b)),
    BuiltinFunction("multiply", 3, VALUE, _numeric_value(lambda a, b: a * b)),
    BuiltinFunction("divide", 3, VALUE, _numeric_value(_divide)),
    BuiltinFunction("min", 3, VALUE, _numeric_value(min)),
    BuiltinFunction("max", 3, VALUE, _numeric_value(max)),
    BuiltinFunction("abs", 2, VALUE, _numeric_value(abs)),
]

BUILTINS: dict[str, BuiltinFunction] = {f.name: f for f in _TABLE}
