"""Static decision strategies: bmc, initial and railway.

Each strategy is a priority order over decidable Boolean variables plus a
preferred polarity per variable. Variables left out of the order (pure
Booleans in the initial strategy) and auxiliaries are decided by the
solver's activity heuristic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .formula.formula import BOOL, Formula
from .formula.terms import Comparison, DiffConstraint, Final, Real, term_refs
from .theory import build_dependency_graph, rule_target

STRATEGIES = ("bmc", "initial", "railway")

_RAIL_NAME = re.compile(r"^(?P<train>.+)\.(?P<kind>enter|idle|next_(?P<seg>.+))@(?P<step>\d+)$")


@dataclass
class Strategy:
    kind: str
    order: list = field(default_factory=list)       # variable ids, highest priority first
    polarity: dict = field(default_factory=dict)    # vid -> preferred value

    def polarities(self) -> list:
        return [self.polarity.get(v, False) for v in self.order]

    def next_decision(self, value) -> int | None:
        """First unassigned variable as a literal; ``value(v)`` is None when unassigned."""
        for v in self.order:
            if value(v) is None:
                return v if self.polarity.get(v, False) else -v
        return None


def _decidable(f: Formula) -> list:
    return [v for v in f.variables if v.kind == BOOL and not v.aux]


def _is_rule(atom) -> bool:
    return isinstance(atom, DiffConstraint) or (isinstance(atom, Comparison) and rule_target(atom) is not None)


def _step_key(step, J):
    return J + 1 if step is None else step


def _max_step(f: Formula) -> int:
    steps = [v.step for v in f.variables if v.step is not None]
    return max(steps) if steps else 0


def bmc_strategy(f: Formula) -> Strategy:
    _, _, initial = build_dependency_graph(f)
    initial = set(initial)
    J = _max_step(f)

    def cls(v):
        a = f.atoms.get(v.id)
        if a is None:
            return 3
        if v.id in initial:
            return 0
        return 1 if _is_rule(a) else 2

    vs = sorted(_decidable(f), key=lambda v: (_step_key(v.step, J), cls(v), v.id))
    pol = {v.id: cls(v) in (0, 1) for v in vs}
    return Strategy("bmc", [v.id for v in vs], pol)


def railway_strategy(f: Formula) -> Strategy:
    base = bmc_strategy(f)
    J = _max_step(f)
    rank = {"enter": 0, "idle": 1, "next": 2}
    front = []
    for v in _decidable(f):
        if v.id in f.atoms:
            continue
        m = _RAIL_NAME.match(v.name)
        if m is None:
            continue
        kind = "next" if m.group("seg") is not None else m.group("kind")
        front.append((int(m.group("step")), rank[kind], m.group("train"), m.group("seg") or "", v.id))
    front.sort()
    chosen = {x[-1] for x in front}
    by_step: dict = {}
    for step, r, _, _, vid in front:
        by_step.setdefault(step, []).append(vid)
    order, pol = [], dict(base.polarity)
    for step, r, _, _, vid in front:
        pol[vid] = r == 0
    rest_by_step: dict = {}
    for vid in base.order:
        if vid not in chosen:
            rest_by_step.setdefault(_step_key(f.var(vid).step, J), []).append(vid)
    for step in sorted(set(by_step) | set(rest_by_step)):
        order += by_step.get(step, [])
        order += rest_by_step.get(step, [])
    return Strategy("railway", order, pol)


def _sccs(vertices, edges) -> list:
    """Tarjan's algorithm, iterative; returns the components in reverse topological order."""
    index, low, on, stack, out = {}, {}, set(), [], []
    counter = 0
    for root in vertices:
        if root in index:
            continue
        work = [(root, iter(edges.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            nxt = next(it, None)
            if nxt is not None:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on.add(nxt)
                    work.append((nxt, iter(edges.get(nxt, ()))))
                elif nxt in on:
                    low[v] = min(low[v], index[nxt])
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def compute_distances(vertices, edges) -> dict:
    """Longest dependency distance from each vertex to any vertex reachable from it.

    Cycles are collapsed to a single vertex first, so the result is the
    longest path in the condensation.
    """
    comps = _sccs(vertices, edges)
    comp_of = {v: i for i, c in enumerate(comps) for v in c}
    dist = [0] * len(comps)
    for i, c in enumerate(comps):          # successors come earlier in this list
        best = 0
        for v in c:
            for w in edges.get(v, ()):
                k = comp_of[w]
                if k != i:
                    best = max(best, dist[k] + 1)
        dist[i] = best
    return {v: dist[comp_of[v]] for v in vertices}


def path_distance(edges, a, b) -> int | None:
    """Longest path length from ``a`` to ``b`` in an acyclic graph, None if unreachable."""
    memo: dict = {}

    def go(v):
        if v == b:
            return 0
        if v in memo:
            return memo[v]
        memo[v] = None
        best = None
        for w in edges.get(v, ()):
            d = go(w)
            if d is not None and (best is None or d + 1 > best):
                best = d + 1
        memo[v] = best
        return best

    return go(a)


def initial_strategy(f: Formula) -> Strategy:
    vertices, edges, initial = build_dependency_graph(f)
    dist = compute_distances(vertices, edges)
    J = _max_step(f)
    # quantity -> rules assigning it, and atoms reading it
    writers: dict = {}
    readers: dict = {}
    for av in vertices:
        a = f.atoms[av]
        if isinstance(a, DiffConstraint):
            g = f.groups[f.var(a.f).group]
            writers.setdefault(Final(a.f), []).append(av)
            writers.setdefault(Real(g.tau), []).append(av)
        elif isinstance(a, Comparison):
            rt = rule_target(a)
            if rt is not None:
                writers.setdefault(rt[0], []).append(av)
            for r in term_refs(a.lhs) | term_refs(a.rhs):
                readers.setdefault(r, []).append(av)
    demoted = {av for av in initial if f.var(av).step == J and J > 0}

    def qscore(q):
        ws = [w for w in writers[q] if w not in demoted]
        return max((dist[w] for w in ws), default=-1)

    quantities = sorted(writers, key=lambda q: (-qscore(q), q.var, type(q).__name__))
    order, seen = [], set()
    late = []
    for q in quantities:
        for av in sorted(writers[q]) + sorted(readers.get(q, ())):
            if av in seen:
                continue
            seen.add(av)
            (late if av in demoted else order).append(av)
    for av in vertices:
        if av not in seen and not f.var(av).aux:
            order.append(av)
    order += late
    return Strategy("initial", order, {av: True for av in order})


def make_strategy(f: Formula, kind: str) -> Strategy:
    if kind == "bmc":
        return bmc_strategy(f)
    if kind == "initial":
        return initial_strategy(f)
    if kind == "railway":
        return railway_strategy(f)
    raise ValueError(f"unknown strategy {kind!r}; choose from {', '.join(STRATEGIES)}")
