"""Formulas: declarations, theory atoms, integration groups and the clause database."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .terms import (Atom, App, Comparison, Const, DiffConstraint, Final, Fun, Init,
                    Invariant, Real, atom_refs, term_refs)

BOOL, REAL, FUN = "boolean", "real", "functional"


class DeclarationError(Exception):
    pass


class TypingError(Exception):
    pass


@dataclass(frozen=True)
class Variable:
    id: int
    kind: str
    name: str
    step: Optional[int] = None
    aux: bool = False
    group: Optional[int] = None   # functional variables only


@dataclass
class IntegrationGroup:
    id: int
    name: str
    tau: int                      # real variable holding the length
    rho: float
    synchronous: bool = True
    members: list = field(default_factory=list)


# --- Boolean structure ---------------------------------------------------------

@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Implies:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Iff:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Ite:
    cond: object
    then: object
    other: object


BoolExpr = Union[int, bool, Atom, Not, And, Or, Implies, Iff, Ite]


def conj(*xs) -> BoolExpr:
    xs = tuple(x for x in xs if x is not True)
    if any(x is False for x in xs):
        return False
    if not xs:
        return True
    return xs[0] if len(xs) == 1 else And(xs)


def disj(*xs) -> BoolExpr:
    xs = tuple(x for x in xs if x is not False)
    if any(x is True for x in xs):
        return True
    if not xs:
        return False
    return xs[0] if len(xs) == 1 else Or(xs)


def neg(x) -> BoolExpr:
    if x is True:
        return False
    if x is False:
        return True
    if isinstance(x, int):
        return -x
    if isinstance(x, Not):
        return x.arg
    return Not(x)


def implies(a, b) -> BoolExpr:
    if a is False or b is True:
        return True
    if a is True:
        return b
    if b is False:
        return neg(a)
    return Implies(a, b)


def iff(a, b) -> BoolExpr:
    if isinstance(a, bool):
        a, b = b, a
    if isinstance(b, bool):
        return a if b else neg(a)
    return Iff(a, b)


def ite(c, a, b) -> BoolExpr:
    if c is True:
        return a
    if c is False:
        return b
    return Ite(c, a, b)


_ATOM_TYPES = (Comparison, DiffConstraint, Invariant)


class Formula:
    """Symbol table, atom registry and clause database.

    Variable ids start at 1 so Boolean literals are signed ints as in DIMACS.
    """

    def __init__(self):
        self.variables: list[Variable] = []
        self.by_name: dict[str, int] = {}
        self.atoms: dict[int, Atom] = {}
        self.atom_var: dict[Atom, int] = {}
        self.ode_of: dict[int, int] = {}
        self.groups: list[IntegrationGroup] = []
        self.group_by_name: dict[str, int] = {}
        self.clauses: list[tuple] = []
        self.clause_tags: list[str] = []
        self.info: dict[str, str] = {}
        self._clause_set: set = set()
        self._aux_count = 0
        self._true: Optional[int] = None
        self._tag = ""
        self.frozen = False

    # -- declarations --
    def var(self, vid: int) -> Variable:
        return self.variables[vid - 1]

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    def lookup(self, name: str) -> int:
        try:
            return self.by_name[name]
        except KeyError:
            raise DeclarationError(f"unknown symbol {name!r}") from None

    def declare(self, kind: str, name: str, step: Optional[int] = None, *,
                aux: bool = False, group: Optional[int] = None) -> Variable:
        if self.frozen:
            raise DeclarationError("formula is frozen")
        if kind not in (BOOL, REAL, FUN):
            raise DeclarationError(f"unknown kind {kind!r}")
        if name in self.by_name:
            raise DeclarationError(f"duplicate declaration of {name!r}")
        if kind == FUN:
            if step is None:
                raise DeclarationError(f"functional variable {name!r} needs a step")
            if group is None:
                raise DeclarationError(f"functional variable {name!r} needs a group")
        v = Variable(len(self.variables) + 1, kind, name, step, aux, group if kind == FUN else None)
        self.variables.append(v)
        self.by_name[name] = v.id
        if kind == FUN:
            self.groups[group].members.append(v.id)
        return v

    def declare_group(self, name: str, tau: int, rho: float, synchronous: bool = True) -> IntegrationGroup:
        if name in self.group_by_name:
            raise DeclarationError(f"duplicate group {name!r}")
        if self.var(tau).kind != REAL:
            raise TypingError("group length must be a real variable")
        if not rho > 0:
            raise DeclarationError("timeout must be positive")
        g = IntegrationGroup(len(self.groups), name, tau, float(rho), synchronous)
        self.groups.append(g)
        self.group_by_name[name] = g.id
        return g

    # -- atoms --
    def _check_atom(self, a: Atom):
        for ref in atom_refs(a):
            v = self.var(ref.var)
            if isinstance(ref, Real) and v.kind != REAL:
                raise TypingError(f"{v.name} used as a real variable")
            if isinstance(ref, (Fun, Init, Final)) and v.kind != FUN:
                raise TypingError(f"{v.name} used as a functional variable")
        if isinstance(a, Comparison):
            if any(isinstance(r, Fun) for r in atom_refs(a)):
                raise TypingError("bare functional variable outside an ODE or invariant")
        elif isinstance(a, DiffConstraint):
            if self.var(a.f).kind != FUN:
                raise TypingError("derivative of a non-functional variable")
            g = self.var(a.f).group
            for r in term_refs(a.rhs):
                if isinstance(r, Fun) and self.var(r.var).group != g:
                    raise TypingError("ODE right-hand side mixes integration groups")
        else:
            for r in atom_refs(a):
                if isinstance(r, Fun) and self.var(r.var).group != a.group:
                    raise TypingError("invariant references another group")

    def atom(self, a: Atom, name: Optional[str] = None, step: Optional[int] = None) -> int:
        """Abstraction variable of an atom, declaring it on first use."""
        vid = self.atom_var.get(a)
        if vid is not None:
            return vid
        self._check_atom(a)
        if isinstance(a, DiffConstraint):
            if a.f in self.ode_of:
                raise TypingError(f"second ODE for {self.var(a.f).name}")
        if step is None:
            steps = [self.var(r.var).step for r in atom_refs(a)]
            steps = [s for s in steps if s is not None]
            step = max(steps) if steps else None
        v = self.declare(BOOL, name or f"_a{len(self.atoms)}", step)
        if isinstance(a, DiffConstraint):
            self.ode_of[a.f] = v.id
        self.atoms[v.id] = a
        self.atom_var[a] = v.id
        return v.id

    def is_atom(self, vid: int) -> bool:
        return vid in self.atoms

    # -- clauses --
    def set_tag(self, tag: str):
        self._tag = tag

    def add_clause(self, lits: Iterable[int], tag: Optional[str] = None) -> Optional[int]:
        seen = {}
        for l in lits:
            if not isinstance(l, int) or l == 0 or abs(l) > self.num_vars:
                raise TypingError(f"bad literal {l!r}")
            if -l in seen:
                return None         # tautology
            seen[l] = None
        clause = tuple(seen)
        key = frozenset(clause)
        if key in self._clause_set:
            return None
        self._clause_set.add(key)
        self.clauses.append(clause)
        self.clause_tags.append(tag if tag is not None else self._tag)
        return len(self.clauses) - 1

    def assert_formula(self, f: BoolExpr, tag: Optional[str] = None) -> list[int]:
        """Add ``f`` as clauses using a polarity-aware Tseitin transformation."""
        if tag is not None:
            old, self._tag = self._tag, tag
        try:
            before = len(self.clauses)
            self._assert(f)
            return list(range(before, len(self.clauses)))
        finally:
            if tag is not None:
                self._tag = old

    def _assert(self, f):
        f = _desugar(f)
        if f is True:
            return
        if isinstance(f, And):
            for a in f.args:
                self._assert(a)
            return
        if f is False:
            self.clauses.append(())
            self.clause_tags.append(self._tag)
            return
        if isinstance(f, Or):
            lits = []
            for a in f.args:
                a = _desugar(a)
                if a is True:
                    return
                if a is False:
                    continue
                if isinstance(a, Or):
                    stack = list(a.args)
                    # flatten nested disjunctions
                    while stack:
                        b = _desugar(stack.pop(0))
                        if isinstance(b, Or):
                            stack = list(b.args) + stack
                        elif b is True:
                            return
                        elif b is not False:
                            lits.append(self._lit(b, +1))
                    continue
                lits.append(self._lit(a, +1))
            if not lits:
                self._assert(False)
            else:
                self.add_clause(lits)
            return
        self.add_clause([self._lit(f, +1)])

    def _fresh_aux(self) -> int:
        self._aux_count += 1
        return self.declare(BOOL, f"_t{self._aux_count}", aux=True).id

    def _true_lit(self) -> int:
        if self._true is None:
            self._true = self._fresh_aux()
            self.add_clause([self._true])
        return self._true

    def _lit(self, f, pol: int) -> int:
        """Literal standing for ``f``. pol=+1: only f-true needed, -1: only f-false, 0: both."""
        if isinstance(f, bool):
            return self._true_lit() if f else -self._true_lit()
        if isinstance(f, int):
            if f == 0 or abs(f) > self.num_vars:
                raise TypingError(f"bad literal {f}")
            if self.var(abs(f)).kind != BOOL:
                raise TypingError(f"{self.var(abs(f)).name} is not Boolean")
            return f
        if isinstance(f, _ATOM_TYPES):
            return self.atom(f)
        f = _desugar(f)
        if isinstance(f, Not):
            return -self._lit(f.arg, -pol)
        if isinstance(f, (int,) + _ATOM_TYPES):
            return self._lit(f, pol)
        if isinstance(f, (And, Or)):
            kids = []
            for a in f.args:
                a = _desugar(a)
                if isinstance(a, bool):
                    if a == isinstance(f, Or):      # absorbing element
                        return self._lit(a, pol)
                    continue
                kids.append(a)
            if not kids:
                return self._lit(isinstance(f, And), pol)
            if len(kids) == 1:
                return self._lit(kids[0], pol)
            ls = [self._lit(a, pol) for a in kids]
            x = self._fresh_aux()
            if isinstance(f, And):
                if pol >= 0:
                    for l in ls:
                        self.add_clause([-x, l])
                if pol <= 0:
                    self.add_clause([x] + [-l for l in ls])
            else:
                if pol >= 0:
                    self.add_clause([-x] + ls)
                if pol <= 0:
                    for l in ls:
                        self.add_clause([x, -l])
            return x
        raise TypingError(f"not a Boolean expression: {f!r}")

    def freeze(self):
        self.frozen = True
        return self

    # -- queries --
    def model_vars(self) -> list[int]:
        return [v.id for v in self.variables if v.kind == BOOL and not v.aux]

    def structurally_equal(self, other: "Formula") -> bool:
        if [(v.id, v.kind, v.name, v.step, v.aux, v.group) for v in self.variables] != \
           [(v.id, v.kind, v.name, v.step, v.aux, v.group) for v in other.variables]:
            return False
        if self.atoms != other.atoms:
            return False
        if [(g.id, g.name, g.tau, g.rho, g.synchronous, g.members) for g in self.groups] != \
           [(g.id, g.name, g.tau, g.rho, g.synchronous, g.members) for g in other.groups]:
            return False
        return self.clauses == other.clauses and self.clause_tags == other.clause_tags


def _desugar(f):
    """Rewrite implication, equivalence and ite into and/or/not."""
    if isinstance(f, Implies):
        return Or((neg(f.lhs), f.rhs))
    if isinstance(f, Iff):
        return And((Or((neg(f.lhs), f.rhs)), Or((f.lhs, neg(f.rhs)))))
    if isinstance(f, Ite):
        return And((Or((neg(f.cond), f.then)), Or((f.cond, f.other))))
    if isinstance(f, Not):
        a = f.arg
        if isinstance(a, bool):
            return not a
        if isinstance(a, int):
            return -a
        if isinstance(a, Not):
            return _desugar(a.arg)
        if isinstance(a, (Implies, Iff, Ite)):
            return Not(_desugar(a))
        if isinstance(a, And):
            return Or(tuple(neg(x) for x in a.args))
        if isinstance(a, Or):
            return And(tuple(neg(x) for x in a.args))
    return f


def atom_kind(a: Atom) -> str:
    if isinstance(a, DiffConstraint):
        return "ode"
    if isinstance(a, Invariant):
        return "invariant"
    return "comparison"


def formula_stats(f: Formula) -> dict:
    """Counts of variables, atoms and clauses, also grouped by rule tag."""
    by_kind = Counter()
    by_step = defaultdict(Counter)
    for v in f.variables:
        kind = "atom" if v.id in f.atoms else ("aux" if v.aux else v.kind)
        by_kind[kind] += 1
        by_step[v.step][kind] += 1
    atoms = Counter(atom_kind(a) for a in f.atoms.values())
    rules = defaultdict(lambda: {"clauses": 0, "literals": 0, "atom_occurrences": 0, "atoms": set()})
    for clause, tag in zip(f.clauses, f.clause_tags):
        r = rules[tag]
        r["clauses"] += 1
        r["literals"] += len(clause)
        for l in clause:
            if abs(l) in f.atoms:
                r["atom_occurrences"] += 1
                r["atoms"].add(abs(l))
    rule_table = {tag: {"clauses": r["clauses"], "literals": r["literals"],
                        "atom_occurrences": r["atom_occurrences"], "atoms": len(r["atoms"])}
                  for tag, r in sorted(rules.items())}
    return {
        "variables": {k: by_kind.get(k, 0) for k in (BOOL, REAL, FUN, "atom", "aux")},
        "variables_by_step": {s: dict(c) for s, c in sorted(by_step.items(), key=lambda kv: (kv[0] is None, kv[0] or 0))},
        "atoms": {k: atoms.get(k, 0) for k in ("comparison", "ode", "invariant")},
        "groups": len(f.groups),
        "clauses": len(f.clauses),
        "literals": sum(len(c) for c in f.clauses),
        "rules": rule_table,
    }
