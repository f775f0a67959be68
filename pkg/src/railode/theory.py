"""ODE theory: inference rules, exhaustive propagation and explanations.

Quantities are real variables and ``init(f)``/``final(f)`` of functional
variables. An equality whose one side is a lone real variable or ``init(f)``
is an inference rule: asserted true with all sources known, it assigns its
target. A step's differential constraints and invariants form an integration
group which, once all its atoms are assigned and its inputs known, is
simulated to produce ``final(f)`` for each member and the group length.

Invariant and differential-constraint atoms are never evaluated. Their truth
value only says whether they take part in the group's simulation.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .formula.formula import Formula, REAL, FUN
from .formula.terms import (App, Comparison, Const, DiffConstraint, Final, Fun, Init, Invariant,
                            Real, COMPILE_GLOBALS, compile_term, eval_comparison, term_refs)
from .ode.runtime import (DEFAULT_STEP, DEFAULT_TOL, CompiledSystem, run_compiled)

# atom kinds
PRED, RULE, DIFF, INV = 0, 1, 2, 3


def rule_target(c: Comparison):
    """(target leaf, source term) if ``c`` is an inference rule, else None."""
    if c.op != "=":
        return None
    for lhs, rhs in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
        if isinstance(lhs, (Real, Init)) and lhs not in term_refs(rhs):
            return lhs, rhs
    return None


class _ShapeCompiler:
    """Compiles atoms into evaluators shared between structurally similar atoms."""

    def __init__(self):
        self.cache: dict = {}

    def compile(self, kind: str, terms: tuple, op: str, qid_of):
        slots: dict = {}

        def leaf(t):
            if t not in slots:
                slots[t] = len(slots)
            return f"q[s[{slots[t]}]]"

        # shape key: rendered source with slot placeholders
        parts = [compile_term(t, leaf) for t in terms]
        if kind == "pred":
            body = f"{parts[0]} {'==' if op == '=' else op} {parts[1]}"
        else:
            body = parts[0]
        fn = self.cache.get(body)
        if fn is None:
            ns = dict(COMPILE_GLOBALS)
            exec(f"def _f(q, s):\n    return {body}\n", ns)
            fn = ns["_f"]
            self.cache[body] = fn
        idx = tuple(qid_of(t) for t in sorted(slots, key=slots.get))
        return fn, idx


@dataclass
class GroupInfo:
    gid: int
    tau_q: int
    rho: float
    diff_atoms: list = field(default_factory=list)     # atom indices
    inv_atoms: list = field(default_factory=list)
    systems: dict = field(default_factory=dict)        # active key -> (CompiledSystem, init qids, param qids)


@dataclass
class GroupRun:
    """A completed integration kept for plan extraction."""
    gid: int
    level: int
    tau: float
    reason: str
    invariant: Optional[int]
    members: list
    times: list
    values: list         # per member list of floats


class Theory:
    def __init__(self, formula: Formula, h: float = DEFAULT_STEP, tol: float = DEFAULT_TOL,
                 debug: bool = False, memo_size: int = 200000):
        self.f = formula
        self.h, self.tol = h, tol
        self.debug = debug
        self.trace: list = []
        self.solver = None
        self.memo: dict = {}
        self.memo_size = memo_size
        self.n_integrations = 0
        self.n_memo_hits = 0
        self.n_propagations = 0
        self.n_fires = 0

        # quantities
        self.q_of: dict = {}
        self.q_leaf: list = []
        for v in formula.variables:
            if v.kind == REAL:
                self._q(Real(v.id))
            elif v.kind == FUN:
                self._q(Init(v.id))
                self._q(Final(v.id))
        nq = len(self.q_leaf)
        self.value: list = [None] * nq
        self.q_level = [0] * nq
        self.q_just: list = [None] * nq
        self.q_trail: list = []
        self.q_deps: list = [[] for _ in range(nq)]        # atoms reading q
        self.q_groups: list = [set() for _ in range(nq)]   # groups reading q as input
        self._anc_cache: dict = {}

        # atoms
        self.atom_of = [-1] * (formula.num_vars + 1)
        self.avar: list = []
        self.kind: list = []
        self.eval_fn: list = []
        self.eval_idx: list = []
        self.qs: list = []
        self.target: list = []
        self.src_qs: list = []
        self.missing: list = []
        self.src_missing: list = []
        self.group_of: list = []
        self.atom_val: list = []
        self.atom_stack: list = []     # (atom index, level)

        self.groups = [GroupInfo(g.id, self.q_of[Real(g.tau)], g.rho) for g in formula.groups]
        sc = _ShapeCompiler()
        for av, atom in formula.atoms.items():
            a = len(self.avar)
            self.atom_of[av] = a
            self.avar.append(av)
            self.atom_val.append(None)
            tgt, src = -1, ()
            fn, idx = None, ()
            if isinstance(atom, Comparison):
                rt = rule_target(atom)
                qs = tuple(sorted({self.q_of[r] for r in term_refs(atom.lhs) | term_refs(atom.rhs)}))
                fn, idx = sc.compile("pred", (atom.lhs, atom.rhs), atom.op, self.q_of.__getitem__)
                if rt is not None:
                    kind = RULE
                    tgt = self.q_of[rt[0]]
                    src = tuple(sorted({self.q_of[r] for r in term_refs(rt[1])}))
                    rfn, ridx = sc.compile("term", (rt[1],), None, self.q_of.__getitem__)
                    fn = (fn, rfn)
                    idx = (idx, ridx)
                else:
                    kind = PRED
                g = -1
            elif isinstance(atom, DiffConstraint):
                kind, qs = DIFF, ()
                g = formula.var(atom.f).group
                self.groups[g].diff_atoms.append(a)
            else:
                kind, qs = INV, ()
                g = atom.group
                self.groups[g].inv_atoms.append(a)
            self.kind.append(kind)
            self.eval_fn.append(fn)
            self.eval_idx.append(idx)
            self.qs.append(qs)
            self.target.append(tgt)
            self.src_qs.append(src)
            self.missing.append(len(qs))
            self.src_missing.append(len(src))
            self.group_of.append(g)
            for q in qs:
                self.q_deps[q].append(a)
        # group inputs (any member configuration)
        for gi in self.groups:
            for a in gi.diff_atoms + gi.inv_atoms:
                for q in self._group_atom_inputs(a):
                    self.q_groups[q].add(gi.gid)
        self.q_groups = [sorted(s) for s in self.q_groups]
        self.group_fired = [-1] * len(self.groups)
        self.runs: dict = {}           # gid -> GroupRun
        self.queue: deque = deque()
        self.head = 0

    def _q(self, leaf) -> int:
        q = len(self.q_leaf)
        self.q_of[leaf] = q
        self.q_leaf.append(leaf)
        return q

    def _group_atom_inputs(self, a: int) -> list:
        atom = self.f.atoms[self.avar[a]]
        if isinstance(atom, DiffConstraint):
            refs = term_refs(atom.rhs)
            out = [self.q_of[Init(atom.f)]]
        else:
            refs = term_refs(atom.pred.lhs) | term_refs(atom.pred.rhs)
            out = []
        out += [self.q_of[r] for r in refs if not isinstance(r, Fun)]
        return out

    # -- solver interface --
    def attach(self, solver):
        self.solver = solver

    def level(self) -> int:
        return self.solver.prop.decision_level()

    def _log(self, kind: str, msg: str):
        if self.debug:
            self.trace.append(f"{kind} L{self.level()} {msg}")

    def process(self) -> Optional[list]:
        P = self.solver.prop
        while self.head < P.trail_size():
            lits = P.trail_lits(self.head)
            self.head += len(lits)
            for lit in lits:
                a = self.atom_of[abs(lit)]
                if a < 0:
                    continue
                confl = self._on_atom(a, lit > 0)
                if confl is None:
                    confl = self._drain()
                if confl is not None:
                    self.queue.clear()
                    return confl
        return None

    def backjump(self, level: int):
        self.queue.clear()
        while self.q_trail and self.q_level[self.q_trail[-1]] > level:
            q = self.q_trail.pop()
            self._unassign_q(q)
        while self.atom_stack and self.atom_stack[-1][1] > level:
            a, _ = self.atom_stack.pop()
            self.atom_val[a] = None
        for gid, lv in enumerate(self.group_fired):
            if lv > level:
                self.group_fired[gid] = -1
                self.runs.pop(gid, None)
        self.head = min(self.head, self.solver.prop.trail_size())

    # -- value store --
    def _assign_q(self, q: int, x: float, just):
        self.value[q] = x
        self.q_level[q] = self.level()
        self.q_just[q] = just
        self.q_trail.append(q)
        for a in self.q_deps[q]:
            self.missing[a] -= 1
            if self.target[a] != q and self.kind[a] == RULE:
                self.src_missing[a] -= 1
        self.queue.append(q)

    def _unassign_q(self, q: int):
        self.value[q] = None
        self.q_just[q] = None
        self._anc_cache.pop(q, None)
        for a in self.q_deps[q]:
            self.missing[a] += 1
            if self.target[a] != q and self.kind[a] == RULE:
                self.src_missing[a] += 1

    # -- evaluation --
    def _eval(self, a: int) -> bool:
        fn, idx = self.eval_fn[a], self.eval_idx[a]
        try:
            if self.kind[a] == RULE:
                return fn[0](self.value, idx[0])
            return fn(self.value, idx)
        except ZeroDivisionError:
            return False

    def _on_atom(self, a: int, val: bool) -> Optional[list]:
        self.atom_val[a] = val
        self.atom_stack.append((a, self.level()))
        k = self.kind[a]
        if k == DIFF or k == INV:
            return self._check_group(self.group_of[a])
        if self.missing[a] == 0:
            if self._eval(a) != val:
                return self._conflict_atom(a, val)
            return None
        if k == RULE and val and self.src_missing[a] == 0 and self.value[self.target[a]] is None:
            return self._fire(a)
        return None

    def _fire(self, a: int) -> Optional[list]:
        fn, idx = self.eval_fn[a][1], self.eval_idx[a][1]
        try:
            x = fn(self.value, idx)
        except ZeroDivisionError:
            x = math.nan
        if not math.isfinite(x):
            self._log("conflict", f"non-finite rule {self._name(a)}")
            return self._clause(-self.avar[a], self.src_qs[a])
        self.n_fires += 1
        self._log("fire", f"{self._name(a)} -> {x!r}")
        self._assign_q(self.target[a], x, ("r", a))
        return None

    def _drain(self) -> Optional[list]:
        value, atom_val = self.value, self.atom_val
        while self.queue:
            q = self.queue.popleft()
            for a in self.q_deps[q]:
                if self.missing[a] == 0:
                    v = atom_val[a]
                    ok = self._eval(a)
                    if v is None:
                        lit = self.avar[a] if ok else -self.avar[a]
                        s = self.solver.prop.value(lit)
                        if s == 0:
                            # assigned on the SAT trail but not yet seen here
                            return self._conflict_atom(a, not ok)
                        if s < 0:
                            self.n_propagations += 1
                            self._log("propagate", f"{'' if ok else 'not '}{self._name(a)}")
                            self.solver.prop.assign(lit, -2)
                    elif v != ok:
                        return self._conflict_atom(a, v)
                elif (self.kind[a] == RULE and atom_val[a] and self.src_missing[a] == 0
                      and value[self.target[a]] is None):
                    c = self._fire(a)
                    if c is not None:
                        return c
            for g in self.q_groups[q]:
                c = self._check_group(g)
                if c is not None:
                    return c
        return None

    # -- integration groups --
    def _active(self, gi: GroupInfo):
        """(active diff atoms, active invariants) or None if some atom is unassigned."""
        av = self.atom_val
        diffs, invs = [], []
        for a in gi.diff_atoms:
            v = av[a]
            if v is None:
                return None
            if v:
                diffs.append(a)
        for a in gi.inv_atoms:
            v = av[a]
            if v is None:
                return None
            if v:
                invs.append(a)
        return tuple(diffs), tuple(invs)

    def _system(self, gi: GroupInfo, key):
        sysinfo = gi.systems.get(key)
        if sysinfo is None:
            diffs, invs = key
            eqs = [(self.f.atoms[self.avar[a]].f, self.f.atoms[self.avar[a]].rhs) for a in diffs]
            preds = [self.f.atoms[self.avar[a]].pred for a in invs]
            members = [f for f, _ in eqs]
            for _, t in eqs:
                for r in term_refs(t):
                    if isinstance(r, Fun) and r.var not in members:
                        raise ValueError(f"{self.f.var(r.var).name} used without an active ODE")
            params = set()
            for _, t in eqs:
                params |= {r for r in term_refs(t) if not isinstance(r, Fun)}
            for p in preds:
                params |= {r for r in term_refs(p.lhs) | term_refs(p.rhs) if not isinstance(r, Fun)}
                for r in term_refs(p.lhs) | term_refs(p.rhs):
                    if isinstance(r, Fun) and r.var not in members:
                        raise ValueError(f"invariant over {self.f.var(r.var).name} without an ODE")
            porder = sorted(params, key=lambda r: (type(r).__name__, r.var))
            cs = CompiledSystem(eqs, preds, porder)
            init_q = [self.q_of[Init(f)] for f in members]
            param_q = [self.q_of[r] for r in porder]
            sysinfo = (cs, init_q, param_q, members)
            gi.systems[key] = sysinfo
        return sysinfo

    def _check_group(self, g: int) -> Optional[list]:
        if self.group_fired[g] >= 0:
            return None
        gi = self.groups[g]
        key = self._active(gi)
        if key is None or not key[0]:
            return None
        cs, init_q, param_q, members = self._system(gi, key)
        value = self.value
        x0, p = [], []
        for q in init_q:
            x = value[q]
            if x is None:
                return None
            x0.append(x)
        for q in param_q:
            x = value[q]
            if x is None:
                return None
            p.append(x)
        rho = gi.rho
        mkey = (g, key, tuple(x0), tuple(p))
        res = self.memo.get(mkey)
        if res is None:
            self.n_integrations += 1
            res = run_compiled(cs, x0, p, self.h, rho, self.tol)
            if len(self.memo) >= self.memo_size:
                self.memo.clear()
            self.memo[mkey] = res
        else:
            self.n_memo_hits += 1
        status, tau, inv, samples = res
        lits = self._group_lits(gi)
        if status == 2:
            self._log("conflict", f"zero-length integration in group {self.f.groups[g].name}")
            return self._zero_length_clause(gi, key, inv, init_q, param_q, lits)
        if status == 3:
            self._log("conflict", f"numeric error in group {self.f.groups[g].name}")
            return self._clause_lits(lits, init_q + param_q)
        self.group_fired[g] = self.level()
        inv_atom = key[1][inv] if status == 1 else None
        self.runs[g] = GroupRun(g, self.level(), tau, "timeout_reached" if status == 0 else "invariant_violated",
                                None if inv_atom is None else self.avar[inv_atom], members,
                                [s[0] for s in samples], [[s[1][i] for s in samples] for i in range(len(members))])
        self._log("fire", f"group {self.f.groups[g].name} tau={tau!r}")
        just = ("g", g, tuple(init_q + param_q))
        final_vals = samples[-1][1]
        outs = [(self.q_of[Final(f)], final_vals[i]) for i, f in enumerate(members)] + [(gi.tau_q, tau)]
        for q, x in outs:
            old = value[q]
            if old is None:
                self._assign_q(q, x, just)
            elif old != x:
                self._log("conflict", f"group output {self.q_leaf[q]} {old!r} != {x!r}")
                lits2 = set(lits) | self._ancestors([q])
                return self._clause_lits(lits2, init_q + param_q)
        return None

    def _group_lits(self, gi: GroupInfo) -> list:
        out = []
        for a in gi.diff_atoms + gi.inv_atoms:
            out.append(self.avar[a] if self.atom_val[a] else -self.avar[a])
        return out

    def _zero_length_clause(self, gi, key, inv, init_q, param_q, lits):
        a = key[1][inv]
        pred = self.f.atoms[self.avar[a]].pred
        reads = [self.q_of[Init(r.var)] if isinstance(r, Fun) else self.q_of[r]
                 for r in term_refs(pred.lhs) | term_refs(pred.rhs)]
        env = {r: self.value[self.q_of[Init(r.var)] if isinstance(r, Fun) else self.q_of[r]]
               for r in term_refs(pred.lhs) | term_refs(pred.rhs)}
        try:
            holds = eval_comparison(pred, env)
        except ZeroDivisionError:
            holds = False
        if not holds:
            # fails at t=0 already: only the invariant and the values it reads matter
            return self._clause_lits([self.avar[a]], reads)
        return self._clause_lits(lits, init_q + param_q)

    # -- explanations --
    def _ancestors(self, qs) -> set:
        """Trail literals justifying the values of quantities ``qs``."""
        out: set = set()
        stack = list(qs)
        seen = set()
        cache = self._anc_cache
        while stack:
            q = stack.pop()
            if q in seen:
                continue
            seen.add(q)
            c = cache.get(q)
            if c is not None:
                out |= c
                continue
            just = self.q_just[q]
            if just is None:
                raise AssertionError(f"quantity {self.q_leaf[q]} has no value")
            if just[0] == "r":
                a = just[1]
                out.add(self.avar[a])
                stack.extend(self.src_qs[a])
            else:
                gi = self.groups[just[1]]
                out.update(self._group_lits(gi))
                stack.extend(just[2])
        return out

    def ancestors_cached(self, q: int) -> frozenset:
        c = self._anc_cache.get(q)
        if c is None:
            c = frozenset(self._ancestors([q]))
            self._anc_cache[q] = c
        return c

    def _clause_lits(self, lits, qs) -> list:
        P = self.solver.prop
        anc = set(lits)
        for q in qs:
            anc |= self.ancestors_cached(q)
        out = []
        for l in sorted(anc, key=abs):
            if P.level(abs(l)) > 0:
                out.append(-l)
        return out

    def _clause(self, lit_false: int, qs) -> list:
        return self._clause_lits([-lit_false], qs)

    def _conflict_atom(self, a: int, asserted: bool) -> list:
        lit = self.avar[a] if asserted else -self.avar[a]
        self._log("conflict", f"{'' if asserted else 'not '}{self._name(a)}")
        return self._clause_lits([lit], self.qs[a])

    def explain(self, lit: int) -> list:
        a = self.atom_of[abs(lit)]
        clause = self._clause_lits([], self.qs[a])
        return [lit] + [l for l in clause if abs(l) != abs(lit)]

    # -- inspection --
    def _name(self, a: int) -> str:
        from .formula.text import atom_text
        return atom_text(self.f, self.f.atoms[self.avar[a]])

    def values(self) -> dict:
        """Current value store keyed by leaf (Real/Init/Final)."""
        return {self.q_leaf[q]: x for q, x in enumerate(self.value) if x is not None}

    def unevaluated(self) -> list:
        """Asserted comparison atoms whose quantities are not all known."""
        return [self.avar[a] for a in range(len(self.avar))
                if self.kind[a] in (PRED, RULE) and self.atom_val[a] is not None and self.missing[a] > 0]


def build_dependency_graph(f: Formula):
    """Atom dependency graph as (vertices, edges, initial rules).

    Edges go from an inference rule (or a differential constraint, standing
    for its group) to every atom reading a quantity the rule assigns.
    """
    readers: dict = {}
    writers: dict = {}
    for av, atom in f.atoms.items():
        if isinstance(atom, Comparison):
            rt = rule_target(atom)
            reads = term_refs(atom.lhs) | term_refs(atom.rhs)
            if rt is not None:
                writers.setdefault(rt[0], []).append(av)
                reads = term_refs(rt[1])
        elif isinstance(atom, DiffConstraint):
            g = f.groups[f.var(atom.f).group]
            writers.setdefault(Final(atom.f), []).append(av)
            writers.setdefault(Real(g.tau), []).append(av)
            reads = {Init(atom.f)} | {r for r in term_refs(atom.rhs) if not isinstance(r, Fun)}
        else:
            reads = {Init(r.var) if isinstance(r, Fun) else r
                     for r in term_refs(atom.pred.lhs) | term_refs(atom.pred.rhs)}
        for r in reads:
            readers.setdefault(r, []).append(av)
    edges: dict = {av: [] for av in f.atoms}
    for leaf, ws in writers.items():
        for w in ws:
            for r in readers.get(leaf, ()):
                if r != w:
                    edges[w].append(r)
    for w in edges:
        edges[w] = sorted(set(edges[w]))
    indeg = {av: 0 for av in f.atoms}
    for w, rs in edges.items():
        for r in rs:
            indeg[r] += 1
    rules = {av for av, atom in f.atoms.items()
             if isinstance(atom, DiffConstraint) or (isinstance(atom, Comparison) and rule_target(atom))}
    initial = sorted(av for av in rules if indeg[av] == 0)
    return sorted(f.atoms), edges, initial
