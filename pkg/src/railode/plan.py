"""Plan extraction from SAT models, independent validation and export."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from .formula.terms import Final, Init, Real, compare
from .ode.runtime import OdeSystem, integrate
from .formula.terms import Fun, Const
from .rail.model import (AbsoluteTiming, Ordering, RailwayProblem, RelativeTiming, SAnd, SNot, SOr,
                         Visit)

TOL = 1e-6
MODES = ("idle", "steady", "acc", "brake")


class PlanError(Exception):
    pass


@dataclass
class TrainStep:
    mode: str
    back: Optional[str]
    front: Optional[str]
    next: Optional[str]
    away: bool
    enter: bool
    finished: bool
    v0: float               # velocity at the start of the step
    v1: float               # velocity at the end of the step
    d1: float               # distance driven during the step


@dataclass
class VisitEvent:
    train: str
    node: str
    kind: str
    step: int
    time: float


@dataclass
class Plan:
    t: list
    tau: list
    trains: dict                                    # id -> [TrainStep per step]
    samples: dict = field(default_factory=dict)     # id -> [(time, position, v, segment)]
    visits: list = field(default_factory=list)

    @property
    def J(self) -> int:
        return len(self.t) - 1

    def to_dict(self) -> dict:
        return {"t": list(self.t), "tau": list(self.tau),
                "trains": {k: [asdict(s) for s in v] for k, v in self.trains.items()},
                "samples": {k: [list(s) for s in v] for k, v in self.samples.items()},
                "visits": [asdict(v) for v in self.visits]}

    @classmethod
    def from_dict(cls, d: dict) -> "Plan":
        try:
            return cls(list(d["t"]), list(d["tau"]),
                       {k: [TrainStep(**s) for s in v] for k, v in d["trains"].items()},
                       {k: [tuple(s) for s in v] for k, v in d.get("samples", {}).items()},
                       [VisitEvent(**v) for v in d.get("visits", [])])
        except (KeyError, TypeError) as e:
            raise PlanError(f"malformed plan: {e}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Plan":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise PlanError(f"malformed plan: {e}") from None


# --- route geometry -------------------------------------------------------------

def front_route(problem: RailwayProblem, steps: list, start: str):
    """(segments, entry nodes) in the order the front visits them."""
    segs = []
    for s in steps:
        if s.front is not None and (not segs or segs[-1] != s.front):
            segs.append(s.front)
    nodes, node = [], start
    for sid in segs:
        nodes.append(node)
        seg = problem.network.segment.get(sid)
        if seg is None:
            raise PlanError(f"unknown segment {sid!r}")
        try:
            node = seg.other(node)[0]
        except KeyError:
            node = None
            break
    return segs, nodes, node


def derive_visits(problem: RailwayProblem, plan: Plan) -> list:
    """Visit events from the plan's flags."""
    out = []
    for tid, steps in plan.trains.items():
        conn = problem.connection(tid)
        start = conn.nodes[0]
        segs, entries, _ = front_route(problem, steps, start)
        entry = dict(zip(segs, entries))
        for j, s in enumerate(steps):
            if s.enter:
                out.append(VisitEvent(tid, start, "departure", j, plan.t[j]))
            if j == 0:
                continue
            p = steps[j - 1]
            if s.front is not None and s.front != p.front and not s.enter and s.front in entry:
                out.append(VisitEvent(tid, entry[s.front], "arrival", j, plan.t[j]))
            if s.finished and p.front is not None and not p.finished:
                seg = problem.network.segment[p.front]
                node = seg.other(entry.get(p.front, start))[0] if p.front in entry else None
                if node is not None:
                    out.append(VisitEvent(tid, node, "arrival", j, plan.t[j]))
            if (s.front is not None and s.mode == "acc" and s.v0 <= TOL and s.front in entry
                    and entry[s.front] != start):
                out.append(VisitEvent(tid, entry[s.front], "departure", j, plan.t[j]))
    out.sort(key=lambda v: (v.step, v.train, v.kind, v.node))
    return out


# --- extraction -------------------------------------------------------------------

def extract_plan(encoding, model: dict, theory) -> Plan:
    """Read the plan off a SAT model and the theory's value store."""
    f = encoding.formula
    problem = encoding.problem
    J = problem.config.J
    vals = theory.values()

    def real(name):
        x = vals.get(Real(f.lookup(name)))
        if x is None:
            raise PlanError(f"model has no value for {name}")
        return x

    def fin(name, init=False):
        leaf = (Init if init else Final)(f.lookup(name))
        x = vals.get(leaf)
        if x is None:
            raise PlanError(f"model has no value for {'init' if init else 'final'}({name})")
        return x

    def flag(name):
        return bool(model.get(f.lookup(name)))

    t = [real(f"t@{j}") for j in range(J + 1)]
    tau = [real(f"tau@{j}") for j in range(J + 1)]
    trains, samples = {}, {}
    for T in problem.trains:
        R = encoding.routes[T.id]
        steps = []
        for j in range(J + 1):
            modes = [m for m in MODES if flag(f"{T.id}.{m}@{j}")]
            if len(modes) != 1:
                raise PlanError(f"train {T.id} step {j}: modes {modes}")
            occ = {}
            for role in ("back", "front", "next"):
                on = [s for s in R.segments if flag(f"{T.id}.{role}_{s}@{j}")]
                if len(on) > 1:
                    raise PlanError(f"train {T.id} step {j}: several {role} segments {on}")
                occ[role] = on[0] if on else None
            steps.append(TrainStep(modes[0], occ["back"], occ["front"], occ["next"],
                                   flag(f"{T.id}.away@{j}"), flag(f"{T.id}.enter@{j}"),
                                   flag(f"{T.id}.finished@{j}"),
                                   fin(f"{T.id}.v@{j}", init=True), fin(f"{T.id}.v@{j}"),
                                   fin(f"{T.id}.d@{j}")))
        trains[T.id] = steps
        samples[T.id] = _stitch(f, theory, T.id, steps, t, J)
    plan = Plan(t, tau, trains, samples)
    plan.visits = derive_visits(problem, plan)
    # the encoded visit variables must agree with the flags
    for (tid, node, kind), xs in encoding.visits.items():
        got = sorted(j for j, x in enumerate(xs) if model.get(x))
        want = sorted(v.step for v in plan.visits if (v.train, v.node, v.kind) == (tid, node, kind))
        if got != want:
            raise PlanError(f"visit {kind}({tid},{node}): encoded steps {got}, flags give {want}")
    return plan


def _stitch(f, theory, tid, steps, t, J) -> list:
    out = []
    pos = 0.0
    for j in range(J + 1):
        g = f.group_by_name[f"G@{j}"]
        run = theory.runs.get(g)
        if run is None:
            raise PlanError(f"no integration recorded for step {j}")
        di = run.members.index(f.lookup(f"{tid}.d@{j}"))
        vi = run.members.index(f.lookup(f"{tid}.v@{j}"))
        seg = steps[j].front or steps[j].back or ""
        for k, tt in enumerate(run.times):
            if out and k == 0:
                continue            # shared with the previous step's last sample
            out.append((t[j] + tt, pos + run.values[di][k], run.values[vi][k], seg))
        pos += steps[j].d1
    return out


# --- validation ------------------------------------------------------------------

@dataclass
class Violation:
    rule: str
    step: Optional[int]
    train: Optional[str]
    message: str

    def __str__(self):
        where = []
        if self.train is not None:
            where.append(f"train {self.train}")
        if self.step is not None:
            where.append(f"step {self.step}")
        return f"{self.rule}: {', '.join(where)}: {self.message}" if where else f"{self.rule}: {self.message}"


def validate_plan(plan: Plan, problem: RailwayProblem, tol: float = TOL) -> list:
    """All violations of the problem by the plan; an empty list means the plan is valid.

    Only the plan and the problem are read. Dynamics are re-simulated step by
    step with the ODE runtime.
    """
    out: list = []
    J = plan.J
    if J < 0 or len(plan.tau) != J + 1:
        return [Violation("structure", None, None, "t and tau lengths differ")]
    if abs(plan.t[0]) > 1e-12:
        out.append(Violation("time", 0, None, f"t0 = {plan.t[0]}"))
    for j in range(J):
        if not plan.tau[j] > 0:
            out.append(Violation("time", j, None, f"non-positive step length {plan.tau[j]}"))
        if abs(plan.t[j + 1] - (plan.t[j] + plan.tau[j])) > 1e-9 * max(1.0, abs(plan.t[j + 1])):
            out.append(Violation("time", j + 1, None, "t is not the prefix sum of tau"))
    ids = {T.id for T in problem.trains}
    if set(plan.trains) != ids:
        return out + [Violation("structure", None, None, f"trains {sorted(plan.trains)} != {sorted(ids)}")]
    for T in problem.trains:
        steps = plan.trains[T.id]
        if len(steps) != J + 1:
            out.append(Violation("structure", None, T.id, "wrong number of steps"))
            continue
        out += _check_train(plan, problem, T, steps, tol)
    out += _check_mutex(plan, problem)
    if not out:
        out += _check_schedule(plan, problem)
    return out


def _simulate(v0: float, a: float, tau: float):
    d, v = 1, 2
    sys = OdeSystem([(d, Fun(v)), (v, Const(a))], {d: 0.0, v: v0}, rho=tau)
    res = integrate(sys)
    return res.final(d), res.final(v)


def _check_train(plan, problem, T, steps, tol) -> list:
    out = []
    V = lambda rule, j, msg: out.append(Violation(rule, j, T.id, msg))
    net = problem.network
    conn = problem.connection(T.id)
    start = conn.nodes[0]
    J = plan.J
    acc = {"idle": 0.0, "steady": 0.0, "acc": T.A, "brake": -T.B}
    for j, s in enumerate(steps):
        if s.mode not in MODES:
            V("mode", j, f"unknown mode {s.mode!r}")
            return out
        if s.away != (s.back is None and s.front is None):
            V("away", j, "away flag does not match occupancy")
        if s.finished and s.front is not None:
            V("finished", j, "finished train still has a front segment")
        if s.away and s.mode != "idle":
            V("away:idle", j, "a train outside the network must be idle")
        if s.next is not None and s.front is None:
            V("pos:not_next", j, "next segment without a front segment")
    if steps[0].v0 != 0.0:
        V("init", 0, f"initial velocity {steps[0].v0}")
    if steps[0].finished:
        V("init", 0, "finished at the start")
    if not (steps[J].finished and steps[J].away):
        V("finish", J, "train did not leave the network")
    # dynamics
    for j, s in enumerate(steps):
        if j > 0 and abs(s.v0 - steps[j - 1].v1) > tol:
            V("dynamics", j, f"velocity jumps from {steps[j - 1].v1} to {s.v0}")
        try:
            d1, v1 = _simulate(s.v0, acc[s.mode], plan.tau[j])
        except Exception as e:          # non-finite input etc.
            V("dynamics", j, f"re-simulation failed: {e}")
            continue
        if abs(d1 - s.d1) > tol or abs(v1 - s.v1) > tol:
            V("dynamics", j, f"re-simulated (d, v) = ({d1:.9g}, {v1:.9g}), plan has ({s.d1:.9g}, {s.v1:.9g})")
        if min(s.v0, s.v1) < -tol:
            V("dynamics", j, "negative velocity")
        lim = T.vmax
        for sid in (s.back, s.front):
            if sid is not None and sid in net.segment:
                lim = min(lim, net.segment[sid].limit)
        if max(s.v0, s.v1) > lim + tol:
            V("dynamics", j, f"velocity {max(s.v0, s.v1):.9g} above limit {lim}")
    # route
    segs, entries, exit_node = front_route(problem, steps, start)
    if exit_node is None:
        V("connection", None, f"front segments {segs} do not form a path from {start}")
        return out
    for k in range(1, len(segs)):
        prev, cur, node = net.segment[segs[k - 1]], net.segment[segs[k]], entries[k]
        side_in = prev.b[1] if prev.b[0] == node else prev.a[1]
        side_out = cur.a[1] if cur.a[0] == node else cur.b[1]
        if side_in == side_out:
            V("connection", None, f"reversing at node {node} from {prev.id} to {cur.id}")
        if net.node[node].boundary:
            V("connection", None, f"route passes through boundary node {node}")
    if segs and not net.node[exit_node].boundary:
        V("connection", None, f"route ends at inner node {exit_node}")
    if len(conn.nodes) > 1 and net.node[conn.nodes[-1]].boundary and exit_node != conn.nodes[-1]:
        V("connection", None, f"route ends at {exit_node}, expected {conn.nodes[-1]}")
    route_nodes = entries + [exit_node]
    k = 0
    for n in route_nodes:
        if k < len(conn.nodes) and n == conn.nodes[k]:
            k += 1
    if k < len(conn.nodes) and not (len(conn.nodes) - k == 1 and not net.node[conn.nodes[-1]].boundary
                                     and conn.nodes[-1] in route_nodes):
        V("connection", None, f"route {route_nodes} misses connection nodes {list(conn.nodes[k:])}")
    # positions along the route
    offset, acc_len = {}, 0.0
    for sid in segs:
        offset[sid] = acc_len
        acc_len += net.segment[sid].length
    index = {sid: i for i, sid in enumerate(segs)}
    stops = {n for n in conn.nodes[1:] if net.node[n].stop and not net.node[n].boundary}
    pos, entered = 0.0, False
    for j, s in enumerate(steps):
        if s.enter:
            entered, pos = True, 0.0
        if entered:
            p = pos
            if s.front is not None:
                lo, hi = offset[s.front], offset[s.front] + net.segment[s.front].length
                if not lo - tol <= p <= hi + tol:
                    V("position", j, f"front at {p:.9g} outside {s.front} [{lo}, {hi}]")
                if j > 0 and steps[j - 1].front != s.front and not s.enter:
                    if abs(p - lo) > tol:
                        V("position", j, f"front enters {s.front} at {p:.9g}, segment starts at {lo}")
                    if net.segment[s.front].limit + tol < s.v0:
                        V("limit", j, f"enters {s.front} at {s.v0:.9g} above its limit")
                    if entries[index[s.front]] in stops and s.v0 > tol:
                        V("stop", j, f"passes station {entries[index[s.front]]} without stopping")
            if s.back is not None:
                if s.back not in index or (s.front is not None and index[s.back] > index[s.front]):
                    V("position", j, f"back segment {s.back} not behind the front")
                else:
                    lo = offset[s.back]
                    hi = lo + net.segment[s.back].length
                    if not lo - tol <= p - T.L <= hi + tol:
                        V("position", j, f"back at {p - T.L:.9g} outside {s.back}")
            elif not s.away and not lo_ok(p, T.L, tol):
                V("position", j, f"back should be outside the network at front position {p:.9g}")
            if s.next is not None:
                i = index.get(s.front, -1)
                if i + 1 >= len(segs) or segs[i + 1] != s.next:
                    # a claimed segment the train never drives on is still a valid claim,
                    # but only if it is a successor of the front segment
                    if not _is_successor(net, s.front, s.next, entries[i] if i >= 0 else None):
                        V("pos:next", j, f"{s.next} is not a successor of {s.front}")
            if s.finished and s.front is None and j > 0 and steps[j - 1].front is not None:
                if abs(p - acc_len) > tol:
                    V("position", j, f"front leaves at {p:.9g}, route length {acc_len}")
            pos += s.d1
    return out


def lo_ok(p, L, tol) -> bool:
    return p <= L + tol


def _is_successor(net, s1, s2, entry1) -> bool:
    if s1 is None or entry1 is None or s2 not in net.segment:
        return False
    a = net.segment[s1]
    node, side = a.other(entry1)
    b = net.segment[s2]
    for end in (b.a, b.b):
        if end[0] == node and end[1] != side:
            return True
    return False


def _check_mutex(plan, problem) -> list:
    out = []
    ids = [T.id for T in problem.trains]
    for j in range(plan.J + 1):
        occ = {}
        for tid in ids:
            s = plan.trains[tid][j]
            for sid in {s.back, s.front, s.next} - {None}:
                if sid in occ and occ[sid] != tid:
                    out.append(Violation("mutual", j, tid, f"segment {sid} also used by {occ[sid]}"))
                occ.setdefault(sid, tid)
    return out


def visit_steps(plan: Plan, problem: RailwayProblem) -> dict:
    out: dict = {}
    for v in derive_visits(problem, plan):
        out.setdefault((v.train, v.node, v.kind), set()).add(v.step)
    return out


def eval_schedule(c, plan: Plan, steps: dict) -> bool:
    """Step-based semantics of a schedule constraint."""
    J, t = plan.J, plan.t
    at = lambda vis: steps.get((vis.train, vis.node, vis.kind), set())
    if isinstance(c, SAnd):
        return all(eval_schedule(a, plan, steps) for a in c.args)
    if isinstance(c, SOr):
        return any(eval_schedule(a, plan, steps) for a in c.args)
    if isinstance(c, SNot):
        return not eval_schedule(c.arg, plan, steps)
    if isinstance(c, Ordering):
        v1, op, v2 = c.v1, c.op, c.v2
        if op in (">", ">="):
            v1, v2, op = v2, v1, {">": "<", ">=": "<="}[op]
        x1, x2 = at(v1), at(v2)
        if op == "=":
            return x1 == x2
        strict = op == "<"
        for k in x1:
            if any(l <= k if strict else l < k for l in x2):
                return False
        for l in x2:
            if not any(k < l if strict else k <= l for k in x1):
                return False
        return True
    if isinstance(c, AbsoluteTiming):
        x = at(c.v)
        for k in range(J + 1):
            ok = compare(c.op, t[k], c.xi)
            if k in x and not ok:
                return False
            if c.op in ("<", "<=") and not ok and not any(l < k for l in x):
                return False
        return True
    if isinstance(c, RelativeTiming):
        x1, x2 = at(c.v1), at(c.v2)
        for j in x1:
            for k in range(j, J + 1):
                ok = compare(c.op, t[k] - t[j] if k > j else 0.0, c.xi)
                if k in x2 and not ok:
                    return False
                if c.op in ("<", "<=") and not ok and not any(j <= l < k for l in x2):
                    return False
        return True
    raise PlanError(f"unknown schedule constraint {c!r}")


def _check_schedule(plan, problem) -> list:
    from .rail.model import schedule_text
    steps = visit_steps(plan, problem)
    out = []
    cons = list(problem.schedule)
    if problem.max_wait is not None:
        for T in problem.trains:
            conn = problem.connection(T.id)
            for n in conn.nodes[1:]:
                node = problem.network.node[n]
                if node.stop and not node.boundary:
                    cons.append(RelativeTiming(Visit(T.id, n, "arrival"), Visit(T.id, n, "departure"),
                                               "<=", float(problem.max_wait)))
    for c in cons:
        if not eval_schedule(c, plan, steps):
            out.append(Violation("schedule", None, None, f"violated: {schedule_text(c)}"))
    return out


# --- export ----------------------------------------------------------------------

CSV_HEADER = ["time", "d", "v", "segment"]


def trajectory_csv(plan: Plan, train: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    last = None
    for time, d, v, seg in plan.samples.get(train, []):
        if last is not None and time <= last:
            continue
        w.writerow([repr(float(time)), repr(float(d)), repr(float(v)), seg])
        last = time
    return buf.getvalue()


def export(plan: Plan, fmt: str, path) -> list:
    """Write the plan as JSON (one file) or CSV (one file per train); returns the paths written."""
    import os
    path = os.fspath(path)
    if fmt == "json":
        with open(path, "w") as fh:
            fh.write(plan.to_json())
        return [path]
    if fmt == "csv":
        root, ext = os.path.splitext(path)
        out = []
        for tid in sorted(plan.trains):
            p = f"{root}_{tid}{ext or '.csv'}" if len(plan.trains) > 1 else (path if ext else path + ".csv")
            with open(p, "w") as fh:
                fh.write(trajectory_csv(plan, tid))
            out.append(p)
        return out
    raise ValueError(f"unknown format {fmt!r}")
