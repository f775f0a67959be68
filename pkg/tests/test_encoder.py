import itertools
import warnings

import pytest

from conftest import linear_problem, two_segment_problem
from railode.bench import BenchCase, gen_case, gen_serial_parallel
from railode.formula import (Comparison, DiffConstraint, Fun, Init, Real, const, formula_stats)
from railode.rail import (AbsoluteTiming, Connection, EncodingConfig, Ordering, ProblemError,
                          RelativeTiming, Visit, count_paths, encode, encoder_rule_count,
                          successor_relation)
from railode.rail.paths import EncodingWarning
from railode.run import solve_formula
from railode.sat import Solver


def _network_paths(net, start="start", end="end"):
    """Walk the double-vertex graph directly: enter a node on one side, leave on the other."""
    out = []

    def walk(node, side_in, path):
        if node == end:
            out.append(tuple(path))
            return
        for seg, side in net.incident(node):
            if seg.id in path or (side_in is not None and side == side_in):
                continue
            nxt, nside = seg.other(node)
            walk(nxt, nside, path + [seg.id])

    walk(start, None, [])
    return out


@pytest.mark.parametrize("n,paths,nodes", [(2, 4, 10), (3, 27, 17), (4, 256, 26)])
def test_serial_parallel_paths_and_nodes(n, paths, nodes):
    net = gen_serial_parallel(n, n)
    assert len(net.nodes) == nodes == n * (n + 2) + 2
    assert len(_network_paths(net)) == paths == n ** n
    routes = successor_relation(net, Connection("T1", ("start", "end")))
    assert count_paths(routes) == paths


def test_linear_successor_relation():
    p = two_segment_problem()
    r = successor_relation(p.network, p.connections[0])
    assert r.pairs() == [("A1", "1B")]


def test_infeasible_connection_warns():
    p = linear_problem()
    with pytest.warns(EncodingWarning):
        successor_relation(p.network, Connection("T1", ("s", "e", "n1")))


def test_invalid_J_rejected():
    with pytest.raises(ProblemError):
        EncodingConfig(0, 30.0)


def test_ode_system_per_step():
    enc = encode(linear_problem(J=10))
    f = enc.formula
    per_step = {}
    for av, atom in f.atoms.items():
        if isinstance(atom, DiffConstraint):
            per_step.setdefault(f.var(av).step, []).append(f.var(atom.f).name.split("@")[0])
    assert sorted(per_step) == list(range(11))
    for j, names in per_step.items():
        assert sorted(names) == ["T1.back_d", "T1.back_v", "T1.brake_d", "T1.d", "T1.v"]
    d, v, a = (f.lookup(f"T1.{n}@4") for n in ("d", "v", "a"))
    assert f.atoms[f.atom_var[DiffConstraint(d, Fun(v))]] == DiffConstraint(d, Fun(v))
    assert DiffConstraint(v, Real(a)) in f.atom_var


def test_initial_conditions():
    enc = encode(linear_problem(J=3, trains=("T1", "T2")))
    f = enc.formula
    init = {tuple(sorted(c)) for c, t in zip(f.clauses, f.clause_tags) if t == "init"}
    b = f.lookup
    for T in ("T1", "T2"):
        v0 = f.atom_var[Comparison(Init(b(f"{T}.v@0")), "=", const(0))]
        assert (v0,) in init
        assert tuple(sorted((b(f"{T}.enter@0"), b(f"{T}.away@0")))) in init
    assert tuple(sorted((b("T1.enter@0"), b("T2.enter@0")))) in init


def test_mutual_exclusion_nine_role_pairs():
    J = 3
    enc = encode(linear_problem(J=J, trains=("T1", "T2")))
    f = enc.formula
    mutual = [c for c, t in zip(f.clauses, f.clause_tags) if t == "mutual"]
    assert len(mutual) == (J + 1) * 3 * 9
    assert len(set(map(frozenset, mutual))) == len(mutual)
    names = {tuple(sorted(f.var(abs(l)).name for l in c)) for c in mutual}
    for r1, r2 in itertools.product(("back", "front", "next"), repeat=2):
        assert tuple(sorted((f"T1.{r1}_b@2", f"T2.{r2}_b@2"))) in names


def test_position_variable_count():
    J = 45
    f = encode(gen_case(BenchCase("nop", 1, 2)), J=J).formula
    segs = gen_serial_parallel(2, 2).segments
    expected = {f"T1.{r}_{s.id}@{j}" for r in ("back", "front", "next") for s in segs
                for j in range(J + 1)}
    pos = [v for v in f.variables if v.name in expected and v.kind == "boolean"]
    assert len(pos) == (J + 1) * len(segs) * 3


def test_relative_timing_literals_grow_cubically():
    p = gen_case(BenchCase("last", 1, 2, 100.0))
    lits = [encoder_rule_count(encode(p, J=J).problem)["sched:time:rel"]["literals"] for J in (40, 80)]
    assert lits[1] / lits[0] >= 6


def test_rule_families_growth():
    p = gen_case(BenchCase("last", 1, 2, 100.0))
    r1, r2 = (encoder_rule_count(encode(p, J=J).problem) for J in (20, 40))
    assert r2["dyn"]["clauses"] / r1["dyn"]["clauses"] == pytest.approx(41 / 21, rel=0.01)
    assert r2["sched:time:rel"]["atoms"] / r1["sched:time:rel"]["atoms"] == pytest.approx(4, rel=0.15)


def test_empty_schedule_has_no_schedule_clauses():
    rules = encoder_rule_count(gen_case(BenchCase("nop", 2, 2)))
    assert not [t for t in rules if t.startswith("sched")]


def test_encode_does_not_mutate_problem():
    p = linear_problem(J=10)
    encode(p, J=4)
    assert p.config.J == 10


def _propagate(f, units):
    s = Solver(f.num_vars, list(f.clauses) + [[u] for u in units])
    assert s.ok
    assert s.prop.propagate() < 0
    return s.prop


def _with_schedule(sched, J=6):
    p = linear_problem(J=J, trains=("T1", "T2"))
    p.schedule = sched
    return encode(p)


def test_ordering_strict_forbids_earlier_or_same_step():
    v1, v2 = Visit("T1", "s", "departure"), Visit("T2", "s", "departure")
    enc = _with_schedule([Ordering(v1, "<", v2)])
    x1, x2 = enc.visits[("T1", "s", "departure")], enc.visits[("T2", "s", "departure")]
    P = _propagate(enc.formula, [x1[3]])
    assert all(P.value(x2[l]) == 0 for l in range(4))


def test_ordering_equal_is_stepwise_biconditional():
    v1, v2 = Visit("T1", "s", "departure"), Visit("T2", "s", "departure")
    enc = _with_schedule([Ordering(v1, "=", v2)])
    x1, x2 = enc.visits[("T1", "s", "departure")], enc.visits[("T2", "s", "departure")]
    f = enc.formula
    order = {frozenset(c) for c, t in zip(f.clauses, f.clause_tags) if t == "sched:order"}
    assert order == {frozenset(c) for k in range(7) for c in ((-x1[k], x2[k]), (x1[k], -x2[k]))}


def test_timing_equal_rejected():
    v1, v2 = Visit("T1", "s", "departure"), Visit("T1", "e", "arrival")
    with pytest.raises(ProblemError):
        _with_schedule([RelativeTiming(v1, v2, "=", 5.0)])
    with pytest.raises(ProblemError):
        _with_schedule([AbsoluteTiming(v1, "=", 5.0)])


def test_unreachable_visit_warns():
    p = gen_case(BenchCase("nop", 1, 2))
    p.connections = [Connection("T1", ("start", "P1_1", "end"))]
    p.schedule = [AbsoluteTiming(Visit("T1", "P1_2", "arrival"), "<=", 5.0)]
    with pytest.warns(EncodingWarning):
        encode(p, J=3)


def test_unknown_visit_node_rejected():
    with pytest.raises(ProblemError):
        _with_schedule([AbsoluteTiming(Visit("T1", "nowhere", "arrival"), "<=", 5.0)])


def test_visit_definitions_on_model():
    p = linear_problem(J=12)
    p.schedule = [AbsoluteTiming(Visit("T1", "s", "departure"), ">=", 0.0),
                  AbsoluteTiming(Visit("T1", "n2", "arrival"), ">=", 0.0)]
    enc = encode(p)
    r = solve_formula(enc.formula)
    assert r.sat
    f = enc.formula
    dep = enc.visits[("T1", "s", "departure")]
    arr = enc.visits[("T1", "n2", "arrival")]
    assert r.model[arr[0]] is False
    for j, x in enumerate(dep):
        assert r.model[x] == r.model[f.lookup(f"T1.enter@{j}")]
    assert sum(r.model[x] for x in arr) == 1


def test_station_departure_needs_standstill_and_acc():
    p = linear_problem(J=12, stop=True)
    p.schedule = [AbsoluteTiming(Visit("T1", "n2", "departure"), ">=", 0.0)]
    enc = encode(p)
    r = solve_formula(enc.formula)
    assert r.sat
    f, th = enc.formula, r.theory
    steps = [j for j, x in enumerate(enc.visits[("T1", "n2", "departure")]) if r.model[x]]
    assert len(steps) == 1
    j = steps[0]
    assert r.model[f.lookup(f"T1.acc@{j}")]
    assert th.values()[Init(f.lookup(f"T1.v@{j}"))] <= 1e-6
    assert r.model[f.lookup(f"T1.front_c@{j}")]


def test_removing_finish_makes_short_horizon_sat():
    enc = encode(linear_problem(J=2))
    assert solve_formula(enc.formula).status == "UNSAT"
    f = enc.formula
    keep = [i for i, t in enumerate(f.clause_tags) if t != "finish"]
    f.clauses = [f.clauses[i] for i in keep]
    f.clause_tags = [f.clause_tags[i] for i in keep]
    assert solve_formula(f).status == "SAT"
