"""CDCL search loop with an optional theory attached (lazy online DPLL(T))."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol

from .. import _backend
from .propagator import DECISION, THEORY

UNIT = -3

SAT, UNSAT, TIMEOUT = "SAT", "UNSAT", "TIMEOUT"


class Theory(Protocol):
    def attach(self, solver: "Solver") -> None: ...
    def process(self) -> Optional[list]: ...
    def explain(self, lit: int) -> list: ...
    def backjump(self, level: int) -> None: ...


@dataclass
class Stats:
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0
    theory_conflicts: int = 0
    learned: int = 0
    restarts: int = 0


@dataclass
class SolverResult:
    status: str
    model: dict = field(default_factory=dict)
    stats: Stats = field(default_factory=Stats)

    @property
    def sat(self) -> bool:
        return self.status == SAT


def luby(i: int) -> int:
    """i-th element (0-based) of the Luby sequence 1 1 2 1 1 2 4 ..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i = i % size
    return 1 << seq


class Solver:
    """CDCL over signed-int clauses.

    ``order``/``polarity`` give a static decision order; variables outside it
    are decided by activity. ``aux`` variables are decided last.
    """

    def __init__(self, nvars: int, clauses: Iterable, theory: Optional[Theory] = None,
                 order: Optional[list] = None, polarity: Optional[list] = None,
                 aux: Iterable = (), restarts: bool = False, restart_base: int = 100,
                 backend: Optional[str] = None, debug: bool = False):
        self.nvars = nvars
        self.prop = _backend.make_propagator(nvars, backend)
        self.theory = theory
        self.stats = Stats()
        self.restarts = restarts
        self.restart_base = restart_base
        self.debug = debug
        self.ok = True
        self.units: list[int] = []
        self._hashes: set = set()
        self._pending_clauses: list = []
        self.explanations_checked = 0
        aux = set(aux)
        order = list(order or [])
        polarity = list(polarity) if polarity is not None else [True] * len(order)
        ordered = set(order)
        self.prop.set_order(order, [1 if p else 0 for p in polarity])
        for v in range(1, nvars + 1):
            if v not in ordered:
                self.prop.set_decidable(v, v in aux)
        multi, units = [], []
        for c in clauses:
            c = list(dict.fromkeys(c))
            if any(-l in c for l in c):
                continue
            if not c:
                self.ok = False
            elif len(c) == 1:
                units.append(c[0])
            else:
                multi.append(c)
        for c in multi:
            self.prop.add_clause(c)
        for l in units:
            self._add_unit(l)
        if theory is not None:
            theory.attach(self)

    def _add_unit(self, lit: int):
        val = self.prop.value(lit)
        if val == 0:
            self.ok = False
        elif val < 0:
            self.prop.assign(lit, UNIT)
            self.units.append(lit)

    # -- public helpers used by theories --
    def value(self, lit: int) -> int:
        return self.prop.value(lit)

    def level(self) -> int:
        return self.prop.decision_level()

    def enqueue_theory(self, lit: int):
        self.prop.assign(lit, THEORY)

    def add_learned(self, lits: list) -> bool:
        """Add a clause during search; returns False if it was already present."""
        key = frozenset(lits)
        if key in self._hashes:
            return False
        self._hashes.add(key)
        self._pending_clauses.append(list(lits))
        return True

    # -- internals --
    def _reason_lits(self, v: int, lit: int) -> list:
        r = self.prop.reason(v)
        if r >= 0:
            return self.prop.clause_lits(r)
        if r == THEORY:
            expl = self.theory.explain(lit)
            if self.debug:
                self._check_explanation(expl, lit)
            return expl
        raise AssertionError(f"variable {v} has no reason")

    def _check_explanation(self, clause, implied=None):
        self.explanations_checked += 1
        for l in clause:
            if l == implied:
                assert self.prop.value(l) == 1, "implied literal not true"
            else:
                assert self.prop.value(l) == 0, f"explanation literal {l} not false"

    def analyze_conflict(self, confl: list) -> tuple:
        """First-UIP learned clause (asserting literal first) and its backjump level."""
        P = self.prop
        level = P.level
        cur = P.decision_level()
        seen = set()
        learnt = [0]
        path = 0
        idx = P.trail_size() - 1
        lits = confl
        p = 0
        while True:
            for q in lits:
                v = abs(q)
                if q == p or v in seen:
                    continue
                lv = level(v)
                if lv == 0:
                    continue
                seen.add(v)
                P.bump(v)
                if lv >= cur:
                    path += 1
                else:
                    learnt.append(q)
            while abs(P.trail_lit(idx)) not in seen:
                idx -= 1
            p = P.trail_lit(idx)
            idx -= 1
            v = abs(p)
            seen.discard(v)
            path -= 1
            if path <= 0:
                break
            lits = self._reason_lits(v, p)
        learnt[0] = -p
        learnt = self._minimize(learnt)
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda i: level(abs(learnt[i])))
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level(abs(learnt[1]))

    def _minimize(self, learnt: list) -> list:
        """Drop literals implied by other literals of the clause through clause reasons."""
        P = self.prop
        inside = {abs(l) for l in learnt}
        out = [learnt[0]]
        for l in learnt[1:]:
            r = P.reason(abs(l))
            if r >= 0 and all(abs(q) in inside or P.level(abs(q)) == 0
                              for q in P.clause_lits(r) if abs(q) != abs(l)):
                continue
            out.append(l)
        return out

    def _backjump(self, level: int):
        self.prop.cancel_until(level)
        if self.theory is not None:
            self.theory.backjump(level)

    def _handle_conflict(self, confl: list) -> bool:
        """Learn from a conflict; returns False when the formula is UNSAT."""
        P = self.prop
        self.stats.conflicts += 1
        if self.debug:
            self._check_explanation(confl)
        maxlev = max((P.level(abs(l)) for l in confl), default=0)
        if maxlev == 0:
            return False
        if maxlev < P.decision_level():
            self._backjump(maxlev)
        learnt, bt = self.analyze_conflict(confl)
        self._backjump(bt)
        self.stats.learned += 1
        if len(learnt) == 1:
            P.assign(learnt[0], UNIT)
        else:
            cref = P.add_clause(learnt, True)
            P.assign(learnt[0], cref)
        P.decay()
        return True

    def _flush_pending(self) -> Optional[list]:
        """Attach clauses given through add_learned; returns a conflict if one is falsified."""
        P = self.prop
        while self._pending_clauses:
            c = self._pending_clauses.pop(0)
            vals = [P.value(l) for l in c]
            if any(v == 1 for v in vals) and len(c) > 1:
                c.sort(key=lambda l: (P.value(l) != 1, P.value(l) == 0, -P.level(abs(l))))
                P.add_clause(c, True)
                continue
            free = [l for l, v in zip(c, vals) if v < 0]
            if len(c) == 1:
                if vals[0] == 0:
                    return c
                if vals[0] < 0:
                    self._backjump(0)
                    P.assign(c[0], UNIT)
                continue
            if not free:
                c.sort(key=lambda l: -P.level(abs(l)))
                P.add_clause(c, True)
                return c
            c.sort(key=lambda l: (P.value(l) == 0, -P.level(abs(l))))
            P.add_clause(c, True)
            if len(free) == 1:
                P.assign(c[0], P.num_clauses() - 1)
        return None

    def solve(self, timeout: Optional[float] = None) -> SolverResult:
        if not self.ok:
            return SolverResult(UNSAT, stats=self.stats)
        P = self.prop
        start = time.monotonic()
        deadline = None if timeout is None else start + timeout
        next_restart = luby(0) * self.restart_base
        restart_count = 0
        conflicts_since = 0
        tick = 0
        while True:
            confl = None
            c = P.propagate()
            if c >= 0:
                confl = P.clause_lits(c)
            else:
                before = P.trail_size()
                confl = self._flush_pending()
                if confl is None and P.trail_size() != before:
                    continue
                if confl is None and self.theory is not None:
                    before = P.trail_size()
                    confl = self.theory.process()
                    if confl is None and P.trail_size() != before:
                        continue
                    if confl is not None:
                        self.stats.theory_conflicts += 1
            tick += 1
            if deadline is not None and (tick & 63) == 0 and time.monotonic() > deadline:
                self.stats.propagations = P.propagations
                return SolverResult(TIMEOUT, stats=self.stats)
            if confl is not None:
                if not self._handle_conflict(confl):
                    self.stats.propagations = P.propagations
                    return SolverResult(UNSAT, stats=self.stats)
                conflicts_since += 1
                if self.restarts and conflicts_since >= next_restart:
                    restart_count += 1
                    conflicts_since = 0
                    next_restart = luby(restart_count) * self.restart_base
                    self.stats.restarts += 1
                    self._backjump(0)
                continue
            lit = P.pick_ordered()
            if lit == 0:
                lit = P.pick_activity()
            if lit == 0:
                self.stats.propagations = P.propagations
                model = {v: P.value(v) == 1 for v in range(1, self.nvars + 1)}
                return SolverResult(SAT, model, self.stats)
            self.stats.decisions += 1
            P.new_level()
            P.assign(lit, DECISION)


def solve_cnf(nvars: int, clauses, **kw) -> SolverResult:
    return Solver(nvars, clauses, **kw).solve()
