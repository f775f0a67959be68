"""BMC unrolling of a railway problem into a SAT-modulo-ODE formula.

Variables are named ``<train>.<name>@<step>``; global time is ``t@j`` and the
shared integration length ``tau@j``. All trains of one step integrate in one
synchronous group. The backward braking pre-computation of each train has its
own asynchronous group.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from ..formula.formula import BOOL, FUN, REAL, Formula, conj, disj, formula_stats, iff, implies, ite, neg
from ..formula.terms import Comparison, Const, DiffConstraint, Final, Fun, Init, Invariant, Real
from ..formula.terms import App, add, div, mul, sub, tmin
from .model import (AbsoluteTiming, Ordering, ProblemError, RailwayProblem, RelativeTiming, SAnd,
                    SNot, SOr, Visit, schedule_visits)
from .paths import Routes, successor_relation

EPS_D = 1e-6        # distance slack when deciding that a segment end was reached (m)
EPS_V = 1e-6        # velocity slack for comparisons against limits (m/s)
EPS_INV = 1e-9      # slack of the velocity-limit invariant (m/s)
EPS_BRAKE = EPS_D / 2   # braking aims this far before the segment end (m)
BIG = 1e18          # "no limit" sentinel for distances (m)

MODES = ("idle", "steady", "acc", "brake")
ROLES = ("back", "front", "next")


def C(x) -> Const:
    return Const(float(x))


def eq(a, b) -> Comparison:
    return Comparison(a, "=", b)


@dataclass
class Encoding:
    formula: Formula
    problem: RailwayProblem
    routes: dict                    # train id -> Routes
    visits: dict = field(default_factory=dict)   # (train, node, kind) -> [var per step]

    @property
    def J(self) -> int:
        return self.problem.config.J


class Encoder:
    def __init__(self, problem: RailwayProblem):
        problem.validate()
        self.p = problem
        self.J = problem.config.J
        self.rho = problem.config.rho
        self.f = Formula()
        self.routes = {t.id: successor_relation(problem.network, problem.connection(t.id))
                       for t in problem.trains}
        self.visits: dict = {}

    # -- naming helpers --
    def v(self, name: str) -> int:
        return self.f.lookup(name)

    def b(self, T: str, name: str, j: int) -> int:
        return self.f.lookup(f"{T}.{name}@{j}")

    def r(self, T: str, name: str, j: int) -> Real:
        return Real(self.f.lookup(f"{T}.{name}@{j}"))

    def fn(self, T: str, name: str, j: int) -> int:
        return self.f.lookup(f"{T}.{name}@{j}")

    def atom(self, a, name=None) -> int:
        return self.f.atom(a, name)

    def add(self, expr, tag: str):
        self.f.assert_formula(expr, tag)

    # -- declarations --
    def declare(self):
        f, J = self.f, self.J
        for j in range(J + 1):
            f.declare(REAL, f"t@{j}", j)
            tau = f.declare(REAL, f"tau@{j}", j)
            f.declare_group(f"G@{j}", tau.id, self.rho)
        for T in self.p.trains:
            R = self.routes[T.id]
            rho_async = self.rho + T.vmax / T.B
            for j in range(J + 1):
                for m in MODES:
                    f.declare(BOOL, f"{T.id}.{m}@{j}", j)
                for name in ("away", "enter", "finished", "back_inside"):
                    f.declare(BOOL, f"{T.id}.{name}@{j}", j)
                for role in ROLES:
                    for s in R.segments:
                        f.declare(BOOL, f"{T.id}.{role}_{s}@{j}", j)
                for name in ("a", "d_max", "v_max", "next_v_max", "back_d_max", "front_d_max",
                             "back_v_max", "front_v_max", "min_v_max"):
                    f.declare(REAL, f"{T.id}.{name}@{j}", j)
                g = f.group_by_name[f"G@{j}"]
                for name in ("d", "v", "brake_d"):
                    f.declare(FUN, f"{T.id}.{name}@{j}", j, group=g)
                btau = f.declare(REAL, f"{T.id}.back_tau@{j}", j)
                bg = f.declare_group(f"{T.id}.back@{j}", btau.id, rho_async, synchronous=False)
                for name in ("back_d", "back_v"):
                    f.declare(FUN, f"{T.id}.{name}@{j}", j, group=bg.id)

    # -- global time --
    def encode_time(self):
        self.add(self.atom(eq(Real(self.v("t@0")), C(0))), "time")
        for j in range(self.J):
            self.add(self.atom(eq(Real(self.v(f"t@{j + 1}")),
                                  add(Real(self.v(f"t@{j}")), Real(self.v(f"tau@{j}"))))), "time")

    # -- per train and step --
    def encode_train(self, T):
        R: Routes = self.routes[T.id]
        J = self.J
        tid = T.id
        B = lambda name, j: self.b(tid, name, j)
        Rv = lambda name, j: self.r(tid, name, j)
        pos = lambda role, s, j: self.b(tid, f"{role}_{s}", j)
        segs = R.segments
        seg = self.p.network.segment
        any_role = lambda role, j: disj(*[pos(role, s, j) for s in segs])
        for j in range(J + 1):
            last = j == J
            G = self.f.group_by_name[f"G@{j}"]
            BG = self.f.group_by_name[f"{tid}.back@{j}"]
            d, v, bd = (self.fn(tid, n, j) for n in ("d", "v", "brake_d"))
            back_d, back_v = self.fn(tid, "back_d", j), self.fn(tid, "back_v", j)
            idle, steady, acc, brake = (B(m, j) for m in MODES)
            away, enter, finished = B("away", j), B("enter", j), B("finished", j)
            a = Rv("a", j)

            # mode
            self.add(disj(idle, steady, acc, brake), "mode")
            for i, m1 in enumerate(MODES):
                for m2 in MODES[i + 1:]:
                    self.add(disj(-B(m1, j), -B(m2, j)), "mode")
            a0 = self.atom(eq(a, C(0)), f"{tid}.a_zero@{j}")
            aA = self.atom(eq(a, C(T.A)), f"{tid}.a_acc@{j}")
            aB = self.atom(eq(a, C(-T.B)), f"{tid}.a_brake@{j}")
            self.add(iff(disj(idle, steady), a0), "mode:a")
            self.add(iff(acc, aA), "mode:a")
            self.add(iff(brake, aB), "mode:a")
            if not last:
                self.add(implies(idle, disj(B("idle", j + 1), B("acc", j + 1))), "mode:jump")
                self.add(implies(disj(steady, acc), disj(-B("idle", j + 1), B("away", j + 1))), "mode:jump")

            # dynamics
            for lhs, rhs in ((d, Fun(v)), (v, a),
                             (bd, mul(div(App("neg", (a,)), C(T.B)), Fun(v)))):
                self.add(self.atom(DiffConstraint(lhs, rhs)), "dyn")
            Rdmax, Rvmax = Rv("d_max", j), Rv("v_max", j)
            self.add(self.atom(Invariant(Comparison(Fun(d), "<=", Rdmax), G), f"{tid}.inv_d@{j}"), "dyn")
            self.add(self.atom(Invariant(Comparison(Fun(v), ">=", C(0)), G), f"{tid}.inv_v0@{j}"), "dyn")
            self.add(self.atom(Invariant(Comparison(Fun(v), "<=", add(Rvmax, C(EPS_INV))), G),
                               f"{tid}.inv_vmax@{j}"), "dyn")
            self.add(self.atom(eq(Init(d), C(0))), "dyn")
            if j == 0:
                self.add(self.atom(eq(Init(v), C(0))), "init")
            else:
                self.add(self.atom(eq(Init(v), Final(self.fn(tid, "v", j - 1)))), "dyn")

            # limits of occupied segments
            next_vmax = Rv("next_v_max", j)
            self.add(self.atom(eq(Rdmax, tmin(Rv("back_d_max", j), Rv("front_d_max", j)))), "dyn:limits")
            self.add(self.atom(eq(Rv("min_v_max", j), tmin(Rv("back_v_max", j), Rv("front_v_max", j)))),
                     "dyn:limits")
            for role in ("back", "front"):
                for s in segs:
                    self.add(implies(pos(role, s, j), self.atom(eq(Rv(f"{role}_v_max", j), C(seg[s].limit)))),
                             "dyn:limits")
                self.add(implies(neg(any_role(role, j)), self.atom(eq(Rv(f"{role}_v_max", j), C(T.vmax)))),
                         "dyn:limits")
            for s in segs:
                lim = 0.0 if R.entry[s] in R.stops else seg[s].limit
                self.add(implies(pos("next", s, j), self.atom(eq(next_vmax, C(lim)))), "dyn:limits")
            self.add(implies(neg(any_role("next", j)), self.atom(eq(next_vmax, C(T.vmax)))), "dyn:limits")
            ge = self.atom(Comparison(Init(v), ">=", sub(next_vmax, C(EPS_V))), f"{tid}.v_ge_next@{j}")
            gt = self.atom(Comparison(Init(v), ">", add(next_vmax, C(EPS_V))), f"{tid}.v_gt_next@{j}")
            self.add(implies(gt, ge), "dyn:v_max")
            self.add(ite(ge, self.atom(eq(Rvmax, tmin(C(T.vmax), Rv("min_v_max", j)))),
                         self.atom(eq(Rvmax, tmin(C(T.vmax), Rv("min_v_max", j), next_vmax)))), "dyn:v_max")

            # remaining distances
            fdm, bdm = Rv("front_d_max", j), Rv("back_d_max", j)
            for s in segs:
                fresh_f = self.atom(eq(fdm, C(seg[s].length)))
                fresh_b = self.atom(eq(bdm, C(seg[s].length)))
                if j == 0:
                    self.add(implies(pos("front", s, j), fresh_f), "dyn:limits")
                    self.add(implies(pos("back", s, j), fresh_b), "dyn:limits")
                    continue
                dprev = Final(self.fn(tid, "d", j - 1))
                for role, fresh in (("front", fresh_f), ("back", fresh_b)):
                    here, before = pos(role, s, j), pos(role, s, j - 1)
                    keep = self.atom(eq(Rv(f"{role}_d_max", j), sub(Rv(f"{role}_d_max", j - 1), dprev)))
                    self.add(implies(conj(here, before), keep), "dyn:limits")
                    self.add(implies(conj(here, -before), fresh), "dyn:limits")
            self.add(implies(neg(any_role("front", j)), self.atom(eq(fdm, C(BIG)))), "dyn:limits")
            self.add(implies(away, self.atom(eq(bdm, C(BIG)))), "dyn:limits")
            self.add(implies(enter, self.atom(eq(bdm, C(T.L)))), "dyn:limits")
            if j > 0:
                keep = self.atom(eq(bdm, sub(Rv("back_d_max", j - 1), Final(self.fn(tid, "d", j - 1)))))
                self.add(implies(conj(neg(any_role("back", j)), -away, -enter), keep), "dyn:limits")

            # braking prediction
            inv_brake = self.atom(Invariant(Comparison(Fun(d), "<=", Fun(bd)), G), f"{tid}.inv_brake@{j}")
            self.add(iff(brake, -inv_brake), "brake")
            self.add(implies(gt, self.atom(eq(Init(bd), Final(back_d)))), "brake:async:final")
            self.add(implies(conj(ge, -gt), self.atom(eq(Init(bd), fdm))), "brake")
            self.add(implies(-ge, self.atom(eq(Init(bd), C(BIG)))), "brake")
            self.add(self.atom(eq(Init(back_d), sub(fdm, C(EPS_BRAKE)))), "brake:async:init")
            self.add(self.atom(eq(Init(back_v), next_vmax)), "brake:async:init")
            for a_async in (DiffConstraint(back_d, App("neg", (Fun(back_v),))),
                            DiffConstraint(back_v, C(T.B)),
                            Invariant(Comparison(Fun(back_d), ">=", C(0)), BG),
                            Invariant(Comparison(Fun(back_v), "<=", Init(v)), BG)):
                self.add(iff(gt, self.atom(a_async)), "brake:async")

            # mode restrictions tied to the velocity limits
            below = self.atom(Comparison(Init(v), "<", sub(Rvmax, C(EPS_V))), f"{tid}.below_limit@{j}")
            vz = self.atom(Comparison(Init(v), "<=", C(EPS_V)), f"{tid}.stopped@{j}")
            self.add(implies(acc, below), "mode:limit")
            self.add(implies(conj(steady, -finished), -below), "mode:limit")
            self.add(implies(brake, -vz), "mode:limit")
            self.add(implies(conj(idle, -away), vz), "mode:limit")
            self.add(implies(conj(finished, -away), steady), "mode:limit")

            # end-of-step predicates
            exc_f = self.atom(Comparison(Final(d), ">=", sub(fdm, C(EPS_D))), f"{tid}.front_exceed@{j}")
            exc_b = self.atom(Comparison(Final(d), ">=", sub(bdm, C(EPS_D))), f"{tid}.back_exceed@{j}")
            D = self.atom(Comparison(Final(d), ">=", sub(Final(bd), C(EPS_D))), f"{tid}.reach_brake@{j}")
            if not last:
                brake1 = B("brake", j + 1)
                self.add(implies(acc, iff(brake1, D)), "brake_mode")
                self.add(implies(steady, iff(brake1, conj(D, gt))), "brake_mode")
                short = self.atom(Comparison(Final(d), "<", sub(Rdmax, C(EPS_D))), f"{tid}.short@{j}")
                bd1 = self.fn(tid, "brake_d", j + 1)
                low = self.atom(Comparison(Init(bd1), "<=", C(EPS_D)), f"{tid}.brake_now@{j + 1}")
                self.add(implies(brake, ite(short, brake1, iff(brake1, low))), "keep_brake_mode")

            # positional constraints
            for s1 in segs:
                if R.succ[s1]:
                    self.add(implies(-idle, implies(pos("front", s1, j),
                                                    disj(*[pos("next", s2, j) for s2 in R.succ[s1]]))), "pos:next")
            for s in segs:
                self.add(implies(disj(idle, neg(any_role("front", j))), -pos("next", s, j)), "pos:not_next")
            for role in ROLES:
                for i, s1 in enumerate(segs):
                    for s2 in segs[i + 1:]:
                        self.add(disj(-pos(role, s1, j), -pos(role, s2, j)), "pos:mutual")
            for s in segs:
                for role in ("back", "front"):
                    self.add(disj(-pos(role, s, j), -pos("next", s, j)), "pos:mutual_next")
            for s1, s2 in R.pairs():
                for p1 in ("back", "front"):
                    for p2 in ("front", "next"):
                        self.add(disj(-pos(p2, s1, j), -pos(p1, s2, j)), "pos:order")
            if not last:
                for s in segs:
                    for p1, p2 in (("back", "front"), ("front", "next")):
                        self.add(implies(-idle, implies(pos(p1, s, j + 1), disj(pos(p1, s, j), pos(p2, s, j)))),
                                 "pos:progress")
                        self.add(implies(-idle, implies(pos(p2, s, j), disj(pos(p2, s, j + 1), pos(p1, s, j + 1)))),
                                 "pos:progress")

            # away conditions
            self.add(implies(enter, disj(*[conj(-pos("back", s, j), pos("front", s, j)) for s in R.start])),
                     "enter")
            self.add(iff(away, neg(disj(any_role("back", j), any_role("front", j)))), "away")
            for s in segs:
                self.add(disj(-finished, -pos("front", s, j)), "finished")
            self.add(implies(enter, -idle), "away:idle")
            self.add(implies(away, idle), "away:idle")
            self.add(disj(-enter, -finished), "away:mutual")
            if not last:
                self.add(implies(enter, -B("enter", j + 1)), "away:jump")
                self.add(implies(finished, B("finished", j + 1)), "away:jump")
                self.add(implies(-away, -B("enter", j + 1)), "away:mutual")
                self.add(implies(away, ite(finished, B("away", j + 1),
                                           conj(-B("finished", j + 1), disj(B("away", j + 1), B("enter", j + 1))))),
                         "away:mutual")

            # transfer constraints
            self.add(iff(B("back_inside", j), exc_b), "transfer:start")
            if not last:
                for s1, s2 in R.pairs():
                    for p1, p2, exc in (("back", "front", exc_b), ("front", "next", exc_f)):
                        self.add(implies(-idle, implies(conj(pos(p1, s1, j), pos(p2, s2, j)),
                                                        ite(exc, pos(p1, s2, j + 1), pos(p1, s1, j + 1)))),
                                 "transfer")
                self.add(implies(conj(-idle, neg(any_role("back", j))),
                                 iff(B("back_inside", j), disj(*[pos("back", s, j + 1) for s in R.start]))),
                         "transfer:start")
                for s in segs:
                    for role in ("back", "front"):
                        self.add(implies(conj(idle, -B("enter", j + 1)), iff(pos(role, s, j), pos(role, s, j + 1))),
                                 "transfer:idle")
                    self.add(implies(conj(pos("back", s, j), pos("front", s, j)), pos("back", s, j + 1)),
                             "transfer:stay")
                for s in segs:
                    if R.entry[s] in R.stops:
                        self.add(implies(conj(-pos("front", s, j), pos("front", s, j + 1)),
                                         self.atom(Comparison(Init(self.fn(tid, "v", j + 1)), "<=", C(EPS_V)),
                                                   f"{tid}.stopped@{j + 1}")),
                                 "transfer:stop")
                for s in R.end:
                    self.add(implies(pos("front", s, j), ite(exc_f, B("finished", j + 1), pos("front", s, j + 1))),
                             "transfer:finish")
                    self.add(implies(pos("back", s, j), ite(exc_b, B("away", j + 1), pos("back", s, j + 1))),
                             "transfer:away")

        # initial and final conditions
        self.add(disj(B("enter", 0), B("away", 0)), "init")
        self.add(-B("finished", 0), "init")
        self.add(conj(B("finished", J), B("away", J)), "finish")

    def encode_mutual(self):
        trains = self.p.trains
        for i, T1 in enumerate(trains):
            for T2 in trains[i + 1:]:
                shared = [s for s in self.routes[T1.id].segments if s in set(self.routes[T2.id].segments)]
                for j in range(self.J + 1):
                    for s in shared:
                        for p1 in ROLES:
                            for p2 in ROLES:
                                self.add(disj(-self.b(T1.id, f"{p1}_{s}", j), -self.b(T2.id, f"{p2}_{s}", j)),
                                         "mutual")

    def encode_init(self):
        self.add(disj(*[self.b(T.id, "enter", 0) for T in self.p.trains]), "init")

    # -- schedule --
    def visit_vars(self, vis: Visit) -> list:
        key = (vis.train, vis.node, vis.kind)
        if key in self.visits:
            return self.visits[key]
        R = self.routes.get(vis.train)
        if R is None:
            raise ProblemError(f"unknown train {vis.train!r}")
        reachable = vis.node == R.start_node or R.into(vis.node) or R.out_of(vis.node)
        if not reachable:
            import warnings
            from .paths import EncodingWarning
            warnings.warn(f"train {vis.train} never visits node {vis.node}", EncodingWarning)
        tid, N = vis.train, vis.node
        pos = lambda s, j: self.b(tid, f"front_{s}", j)
        out = []
        for j in range(self.J + 1):
            x = self.f.declare(BOOL, f"{tid}.{_VISIT_NAME[vis.kind]}_{N}@{j}",
                               j, aux=True).id
            out.append(x)
            if vis.kind == "arrival":
                if j == 0:
                    body = False
                elif N in R.end_nodes:
                    body = conj(disj(*[pos(s, j - 1) for s in R.into(N)]), self.b(tid, "finished", j))
                else:
                    body = conj(disj(*[conj(-pos(s, j - 1), pos(s, j)) for s in R.out_of(N)]),
                                -self.b(tid, "enter", j))
            else:
                if N == R.start_node:
                    body = self.b(tid, "enter", j)
                elif j == 0 or N in R.end_nodes:
                    body = False
                else:
                    vz = self.f.lookup(f"{tid}.stopped@{j}")
                    body = conj(disj(*[pos(s, j) for s in R.out_of(N)]), self.b(tid, "acc", j), vz)
            self.add(iff(x, body), "sched:visit")
        self.visits[key] = out
        return out

    def t(self, k: int) -> Real:
        return Real(self.v(f"t@{k}"))

    def schedule_expr(self, c):
        J = self.J
        if isinstance(c, SAnd):
            return conj(*[self.schedule_expr(a) for a in c.args])
        if isinstance(c, SOr):
            return disj(*[self.schedule_expr(a) for a in c.args])
        if isinstance(c, SNot):
            return neg(self.schedule_expr(c.arg))
        if isinstance(c, Ordering):
            v1, op, v2 = c.v1, c.op, c.v2
            if op in (">", ">="):
                v1, v2, op = v2, v1, {">": "<", ">=": "<="}[op]
            x1, x2 = self.visit_vars(v1), self.visit_vars(v2)
            if op == "=":
                return conj(*[iff(x1[k], x2[k]) for k in range(J + 1)])
            K = (lambda k: k) if op == "<" else (lambda k: k - 1)
            L = (lambda l: l - 1) if op == "<" else (lambda l: l)
            parts = [implies(x1[k], conj(*[-x2[l] for l in range(K(k) + 1)])) for k in range(J + 1)]
            parts += [implies(x2[l], disj(*[x1[k] for k in range(L(l) + 1)])) for l in range(J + 1)]
            return conj(*parts)
        if isinstance(c, AbsoluteTiming):
            x = self.visit_vars(c.v)
            cmp = [self.atom(Comparison(self.t(k), c.op, C(c.xi))) for k in range(J + 1)]
            parts = [implies(x[k], cmp[k]) for k in range(J + 1)]
            if c.op in ("<", "<="):
                parts += [implies(-cmp[k], disj(*x[:k])) for k in range(J + 1)]
            return conj(*parts)
        if isinstance(c, RelativeTiming):
            x1, x2 = self.visit_vars(c.v1), self.visit_vars(c.v2)
            from ..formula.terms import compare
            parts = []
            for j in range(J + 1):
                def bound(k):
                    if k == j:
                        return compare(c.op, 0.0, c.xi)
                    return self.atom(Comparison(sub(self.t(k), self.t(j)), c.op, C(c.xi)))
                inner = [implies(x2[k], bound(k)) for k in range(j, J + 1)]
                if c.op in ("<", "<="):
                    inner += [implies(neg(bound(k)), disj(*x2[j:k])) for k in range(j, J + 1)]
                parts.append(implies(x1[j], conj(*inner)))
            return conj(*parts)
        raise ProblemError(f"unknown schedule constraint {c!r}")

    def encode_schedule(self):
        tags = {Ordering: "sched:order", RelativeTiming: "sched:time:rel", AbsoluteTiming: "sched:time:abs"}
        stack = list(self.p.schedule)
        for T in self.p.trains:
            if self.p.max_wait is None:
                break
            for N in sorted(self.routes[T.id].stops):
                stack.append(RelativeTiming(Visit(T.id, N, "arrival"), Visit(T.id, N, "departure"),
                                            "<=", float(self.p.max_wait)))
        while stack:
            c = stack.pop(0)
            if isinstance(c, SAnd):
                stack[:0] = list(c.args)
                continue
            self.add(self.schedule_expr(c), tags.get(type(c), "sched"))

    def encode(self) -> Encoding:
        self.declare()
        self.encode_time()
        for T in self.p.trains:
            self.encode_train(T)
        self.encode_mutual()
        self.encode_init()
        self.encode_schedule()
        self.f.info["problem"] = json.dumps(self.p.to_dict(), sort_keys=True, separators=(",", ":"))
        self.f.freeze()
        return Encoding(self.f, self.p, self.routes, self.visits)


def encode(problem: RailwayProblem, J: Optional[int] = None, rho: Optional[float] = None) -> Encoding:
    if J is not None or rho is not None:
        from dataclasses import replace
        from .model import EncodingConfig
        problem = replace(problem, config=EncodingConfig(J if J is not None else problem.config.J,
                                                         rho if rho is not None else problem.config.rho))
    return Encoder(problem).encode()


def encoder_rule_count(problem: RailwayProblem) -> dict:
    """Clause and atom counts per encoder rule tag."""
    return formula_stats(Encoder(problem).encode().formula)["rules"]


_VISIT_NAME = {"arrival": "arrive", "departure": "depart"}


def encoding_from_formula(f: Formula) -> Encoding:
    """Rebuild the encoder metadata of a formula read back from text."""
    text = f.info.get("problem")
    if text is None:
        raise ProblemError("formula carries no railway problem")
    problem = RailwayProblem.from_dict(json.loads(text))
    routes = {t.id: successor_relation(problem.network, problem.connection(t.id)) for t in problem.trains}
    visits = {}
    for T in problem.trains:
        for N in problem.network.node:
            for kind, short in _VISIT_NAME.items():
                names = [f"{T.id}.{short}_{N}@{j}" for j in range(problem.config.J + 1)]
                if names[0] in f.by_name:
                    visits[(T.id, N, kind)] = [f.by_name[n] for n in names]
    return Encoding(f, problem, routes, visits)
