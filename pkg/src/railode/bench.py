"""Serial-parallel case studies, scenarios and the benchmark suite runner."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from typing import Optional

from .rail.model import (AbsoluteTiming, Connection, EncodingConfig, Network, Ordering, RailNode,
                         RailwayProblem, RelativeTiming, SAnd, Segment, SOr, TrainSpec, Visit)

SCENARIOS = ("nop", "last", "all")
GAMMA = {1: 45, 2: 80, 3: 115, 4: 150}
RHO = 30.0
JOINT_LENGTH = 100.0        # boundary and inter-group segments (m)
HALF_LENGTH = 1000.0        # each half of a parallel branch (m)
LIMIT = 40.0                # m/s
CSV_HEADER = ["scenario", "nt", "ns", "bnd", "result", "wall_s", "conflicts", "decisions"]


def gen_serial_parallel(ns: int, np_: int, joint: float = JOINT_LENGTH, half: float = HALF_LENGTH,
                        limit: float = LIMIT) -> Network:
    """Chain of ``ns`` groups of ``np_`` parallel branches, each with a station in the middle.

    Every segment is oriented so that its ``a`` end is the side it is entered
    from when driving from ``start`` to ``end``; joints attach incoming
    segments on side ``a`` and outgoing ones on side ``b``.
    """
    if ns < 1 or np_ < 1:
        raise ValueError("ns and np must be positive")
    nodes = [RailNode("start", boundary=True)]
    segs = []
    prev = "start"
    for g in range(1, ns + 1):
        split, merge = f"S{g}", f"E{g}"
        nodes.append(RailNode(split))
        segs.append(Segment(f"j{g}", (prev, "b"), (split, "a"), joint, limit))
        for k in range(1, np_ + 1):
            st = f"P{g}_{k}"
            nodes.append(RailNode(st, stop=True))
            segs.append(Segment(f"s{g}_{k}", (split, "b"), (st, "a"), half, limit))
            segs.append(Segment(f"m{g}_{k}", (st, "b"), (merge, "a"), half, limit))
        nodes.append(RailNode(merge))
        prev = merge
    nodes.append(RailNode("end", boundary=True))
    segs.append(Segment(f"j{ns + 1}", (prev, "b"), ("end", "a"), joint, limit))
    # boundary nodes use a single side
    return Network(nodes, segs)


@dataclass(frozen=True)
class BenchCase:
    scenario: str
    nt: int
    ns: int
    bnd: float = 1000.0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.nt not in GAMMA or self.ns not in GAMMA:
            raise ValueError("nt and ns must be in 1..4")

    @property
    def key(self) -> tuple:
        return (self.scenario, self.nt, self.ns, self.bnd)


def _tid(i: int) -> str:
    return f"T{i}"


def dep(t: str, node: str = "start") -> Visit:
    return Visit(t, node, "departure")


def arr(t: str, node: str = "end") -> Visit:
    return Visit(t, node, "arrival")


def timing(t: str, bnd: float):
    return RelativeTiming(dep(t), arr(t), "<", float(bnd))


def enter_before(t1: str, t2: str):
    return Ordering(dep(t1), "<", dep(t2))


def early_after(t1: str, t2: str):
    return Ordering(dep(t1), "<=", arr(t2, "E1"))


def enter_first(t: str):
    # departure times are never negative, so "<= 0" is "= 0"
    return AbsoluteTiming(dep(t), "<=", 0.0)


def gen_scenario(scenario: str, nt: int, bnd: float) -> tuple:
    """(connections, schedule) for ``nt`` trains driving start -> end."""
    ts = [_tid(i) for i in range(1, nt + 1)]
    conns = [Connection(t, ("start", "end")) for t in ts]
    if scenario == "nop":
        return conns, []
    if scenario == "last":
        sched = [timing(ts[-1], bnd)]
        for i in range(nt - 1):
            sched += [enter_before(ts[i], ts[i + 1]), early_after(ts[i + 1], ts[i])]
        return conns, sched
    if scenario == "all":
        sched = []
        for i, ti in enumerate(ts):
            alts = [enter_first(ti)] + [SAnd((enter_before(tj, ti), early_after(ti, tj)))
                                        for j, tj in enumerate(ts) if j != i]
            sched.append(SAnd((timing(ti, bnd), alts[0] if len(alts) == 1 else SOr(tuple(alts)))))
        return conns, sched
    raise ValueError(f"unknown scenario {scenario!r}")


def gen_case(case: BenchCase, J: Optional[int] = None) -> RailwayProblem:
    net = gen_serial_parallel(case.ns, case.ns)
    conns, sched = gen_scenario(case.scenario, case.nt, case.bnd)
    trains = [TrainSpec(_tid(i), A=2.0, B=1.0, vmax=40.0, L=50.0) for i in range(1, case.nt + 1)]
    cfg = EncodingConfig(J if J is not None else GAMMA[case.nt], RHO)
    return RailwayProblem(net, trains, conns, sched, cfg)


@dataclass
class CaseResult:
    case: BenchCase
    result: str                 # SAT | UNSAT | TIMEOUT | INVALID | ERROR
    wall_s: float
    conflicts: int
    decisions: int
    violations: list
    plan: object = None

    def row(self) -> list:
        c = self.case
        return [c.scenario, c.nt, c.ns, _num(c.bnd), self.result, f"{self.wall_s:.3f}",
                self.conflicts, self.decisions]


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def run_case(case: BenchCase, heuristic: str = "railway", timeout: Optional[float] = None,
             backend: Optional[str] = None, validate: bool = True) -> CaseResult:
    from .plan import extract_plan, validate_plan
    from .rail.encoder import encode
    from .run import solve_formula
    start = time.monotonic()
    problem = gen_case(case)
    enc = encode(problem)
    res = solve_formula(enc.formula, heuristic, timeout, backend)
    wall = time.monotonic() - start
    violations, plan = [], None
    status = res.status
    if res.sat:
        plan = extract_plan(enc, res.model, res.theory)
        if validate:
            violations = validate_plan(plan, problem)
            if violations:
                status = "INVALID"
    return CaseResult(case, status, wall, res.stats.conflicts, res.stats.decisions, violations, plan)


def expand_cases(scenarios, nts, nss, bnds) -> list:
    out = []
    for sc in scenarios:
        for nt in nts:
            for ns in nss:
                for b in ([0.0] if sc == "nop" else bnds):
                    out.append(BenchCase(sc, nt, ns, float(b)))
    return out


def run_suite(cases, heuristic: str = "railway", timeout: Optional[float] = None, out=None,
              backend: Optional[str] = None, progress=None) -> list:
    """Run every case; a failing case is recorded and the suite continues."""
    results = []
    for case in cases:
        try:
            r = run_case(case, heuristic, timeout, backend)
        except Exception as e:          # keep the suite going
            r = CaseResult(case, "ERROR", 0.0, 0, 0, [str(e)])
        results.append(r)
        if progress is not None:
            progress(r)
    results.sort(key=lambda r: r.case.key)
    if out is not None:
        write_csv(results, out)
    return results


def write_csv(results, out):
    if isinstance(out, (str, bytes)) or hasattr(out, "__fspath__"):
        with open(out, "w", newline="") as fh:
            write_csv(results, fh)
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in results:
        w.writerow(r.row())


def results_csv(results) -> str:
    buf = io.StringIO()
    write_csv(results, buf)
    return buf.getvalue()
