"""Term and atom node types.

Terms are immutable and hashable so that structurally equal atoms can share
one abstraction variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Union


class EvaluationError(Exception):
    """Raised when a term refers to a quantity without a value."""


@dataclass(frozen=True, slots=True)
class Const:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite constant {self.value!r}")


@dataclass(frozen=True, slots=True)
class Real:
    """Reference to a real variable by id."""
    var: int


@dataclass(frozen=True, slots=True)
class Fun:
    """Reference to a functional variable inside a differential equation or invariant."""
    var: int


@dataclass(frozen=True, slots=True)
class Init:
    var: int


@dataclass(frozen=True, slots=True)
class Final:
    var: int


ARITH_OPS = ("+", "-", "*", "/", "min", "max", "neg")


@dataclass(frozen=True, slots=True)
class App:
    op: str
    args: tuple

    def __post_init__(self):
        if self.op not in ARITH_OPS:
            raise ValueError(f"unknown operator {self.op!r}")
        n = len(self.args)
        if self.op == "neg" and n != 1:
            raise ValueError("neg takes one argument")
        if self.op in ("-", "/") and n != 2:
            raise ValueError(f"{self.op} takes two arguments")
        if self.op in ("+", "*", "min", "max") and n < 2:
            raise ValueError(f"{self.op} takes at least two arguments")


Term = Union[Const, Real, Fun, Init, Final, App]

COMPARISON_OPS = ("<", "<=", ">", ">=", "=")


@dataclass(frozen=True, slots=True)
class Comparison:
    lhs: Term
    op: str
    rhs: Term

    def __post_init__(self):
        if self.op not in COMPARISON_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True, slots=True)
class DiffConstraint:
    """f' = rhs over the integration interval."""
    f: int
    rhs: Term


@dataclass(frozen=True, slots=True)
class Invariant:
    pred: Comparison
    group: int


Atom = Union[Comparison, DiffConstraint, Invariant]


# --- small constructors -----------------------------------------------------

def const(x) -> Const:
    return Const(float(x))


def add(*args) -> Term:
    return App("+", tuple(args))


def sub(a, b) -> Term:
    return App("-", (a, b))


def mul(*args) -> Term:
    return App("*", tuple(args))


def div(a, b) -> Term:
    return App("/", (a, b))


def neg(a) -> Term:
    return App("neg", (a,))


def tmin(*args) -> Term:
    return args[0] if len(args) == 1 else App("min", tuple(args))


def tmax(*args) -> Term:
    return args[0] if len(args) == 1 else App("max", tuple(args))


# --- traversal ----------------------------------------------------------------

def term_refs(t: Term, out: set | None = None) -> set:
    """All leaf references (Real/Fun/Init/Final nodes) of a term."""
    if out is None:
        out = set()
    if isinstance(t, App):
        for a in t.args:
            term_refs(a, out)
    elif not isinstance(t, Const):
        out.add(t)
    return out


def atom_terms(a: Atom) -> tuple:
    if isinstance(a, Comparison):
        return (a.lhs, a.rhs)
    if isinstance(a, DiffConstraint):
        return (Fun(a.f), a.rhs)
    return (a.pred.lhs, a.pred.rhs)


def atom_refs(a: Atom) -> set:
    out: set = set()
    for t in atom_terms(a):
        term_refs(t, out)
    return out


# --- evaluation ---------------------------------------------------------------

def _apply(op: str, vals: list) -> float:
    if op == "+":
        r = vals[0]
        for v in vals[1:]:
            r = r + v
        return r
    if op == "-":
        return vals[0] - vals[1]
    if op == "*":
        r = vals[0]
        for v in vals[1:]:
            r = r * v
        return r
    if op == "/":
        if vals[1] == 0.0:
            raise ZeroDivisionError("division by zero in term")
        return vals[0] / vals[1]
    if op == "min":
        return min(vals)
    if op == "max":
        return max(vals)
    return -vals[0]


def eval_term(t: Term, env: Mapping) -> float:
    """Evaluate a term in IEEE double arithmetic.

    ``env`` maps leaf nodes (``Real(i)``, ``Init(i)``, ``Final(i)``, ``Fun(i)``)
    to floats.
    """
    if isinstance(t, Const):
        return t.value
    if isinstance(t, App):
        return _apply(t.op, [eval_term(a, env) for a in t.args])
    try:
        return env[t]
    except KeyError:
        raise EvaluationError(f"unbound {t!r}") from None


def compare(op: str, x: float, y: float) -> bool:
    if op == "<":
        return x < y
    if op == "<=":
        return x <= y
    if op == ">":
        return x > y
    if op == ">=":
        return x >= y
    return x == y


def eval_comparison(c: Comparison, env: Mapping) -> bool:
    return compare(c.op, eval_term(c.lhs, env), eval_term(c.rhs, env))


def compile_term(t: Term, leaf: Callable[[object], str]) -> str:
    """Render a term as a Python expression string.

    ``leaf`` maps a leaf node to a Python expression. The evaluation order of
    the produced code matches ``eval_term`` so both give identical doubles.
    """
    if isinstance(t, Const):
        return repr(t.value)
    if isinstance(t, App):
        parts = [compile_term(a, leaf) for a in t.args]
        if t.op == "neg":
            return f"(-{parts[0]})"
        if t.op in ("min", "max"):
            return f"{t.op}({', '.join(parts)})"
        if t.op == "/":
            return f"_div({parts[0]}, {parts[1]})"
        # left-assoc chain, same order as _apply
        expr = parts[0]
        for p in parts[1:]:
            expr = f"({expr} {t.op} {p})"
        return expr
    return leaf(t)


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise ZeroDivisionError("division by zero in term")
    return a / b


COMPILE_GLOBALS = {"_div": _div, "min": min, "max": max}
