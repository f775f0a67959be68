import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from railode.formula import BOOL, REAL, Comparison, Formula, Real, add, const
from railode.heuristics import (STRATEGIES, bmc_strategy, compute_distances, initial_strategy,
                                make_strategy, path_distance, railway_strategy)
from railode.theory import build_dependency_graph


def _p123():
    f = Formula()
    x0, x1, y = (f.declare(REAL, n).id for n in ("x0", "x1", "y"))
    p1 = f.atom(Comparison(Real(x0), "=", const(0)))
    p2 = f.atom(Comparison(Real(x1), "=", add(Real(x0), Real(y))))
    p3 = f.atom(Comparison(Real(x1), "<", const(0)))
    return f, p1, p2, p3


def test_distance_example():
    f, p1, p2, p3 = _p123()
    vertices, edges, _ = build_dependency_graph(f)
    assert path_distance(edges, p1, p3) == 2
    dist = compute_distances(vertices, edges)
    assert dist[p1] == 2 and dist[p2] == 1 and dist[p3] == 0
    order = initial_strategy(f).order
    assert order.index(p1) < order.index(p2)


def test_isolated_atom_distance_zero():
    assert compute_distances([1], {}) == {1: 0}


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40))
def test_chain_distance(k):
    vertices = list(range(k + 1))
    edges = {i: [i + 1] for i in range(k)}
    assert compute_distances(vertices, edges)[0] == k
    assert path_distance(edges, 0, k) == k


def test_cycles_are_collapsed():
    edges = {1: [2], 2: [1, 3], 3: [4]}
    d = compute_distances([1, 2, 3, 4], edges)
    assert d[1] == d[2] == 2 and d[3] == 1 and d[4] == 0


def _stepped():
    f = Formula()
    ids = {}
    for j in (5, 2):
        for n in ("x", "y"):
            ids[n, j] = f.declare(BOOL, f"{n}@{j}", j).id
    return f, ids


def test_bmc_prefers_lower_steps():
    f, ids = _stepped()
    s = bmc_strategy(f)
    val = {}
    lit = s.next_decision(val.get)
    assert f.var(abs(lit)).step == 2
    val[ids["x", 2]] = val[ids["y", 2]] = True
    assert f.var(abs(s.next_decision(val.get))).step == 5


def test_all_assigned_gives_none():
    f, ids = _stepped()
    s = bmc_strategy(f)
    assert s.next_decision(lambda v: True) is None


def test_railway_order_within_step():
    f = Formula()
    for j in (1, 0):
        for n in ("T2.enter", "T1.next_b", "T1.idle", "T1.next_a", "T1.enter", "T1.acc"):
            f.declare(BOOL, f"{n}@{j}", j)
    s = railway_strategy(f)
    names = [f.var(v).name for v in s.order]
    assert names[:6] == ["T1.enter@0", "T2.enter@0", "T1.idle@0", "T1.next_a@0", "T1.next_b@0",
                         "T1.acc@0"]
    pol = dict(zip(s.order, s.polarities()))
    assert pol[f.lookup("T1.enter@0")] is True
    assert pol[f.lookup("T1.idle@0")] is False
    assert pol[f.lookup("T1.next_a@0")] is False
    assert s.next_decision({}.get) == f.lookup("T1.enter@0")


def test_bmc_rule_classes_within_step():
    f = Formula()
    x, y = (f.declare(REAL, n, 0).id for n in ("x", "y"))
    b = f.declare(BOOL, "b@0", 0).id
    pred = f.atom(Comparison(Real(y), "<", const(1)), step=0)
    rule = f.atom(Comparison(Real(y), "=", Real(x)), step=0)
    init = f.atom(Comparison(Real(x), "=", const(0)), step=0)
    assert bmc_strategy(f).order == [init, rule, pred, b]


def test_unknown_strategy():
    with pytest.raises(ValueError):
        make_strategy(Formula(), "dynamic")


@pytest.fixture(scope="module")
def bench_formula():
    from railode.bench import BenchCase, gen_case
    from railode.rail import encode
    return encode(gen_case(BenchCase("last", 1, 2, 1000.0)), J=12).formula


@pytest.mark.parametrize("kind", STRATEGIES)
def test_strategies_deterministic_and_exclude_aux(bench_formula, kind):
    s1 = make_strategy(bench_formula, kind)
    s2 = make_strategy(bench_formula, kind)
    assert s1.order == s2.order and s1.polarities() == s2.polarities()
    assert len(set(s1.order)) == len(s1.order)
    assert not any(bench_formula.var(v).aux for v in s1.order)


def _ranks(xs):
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    r = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        for k in range(i, j + 1):
            r[order[k]] = (i + j) / 2
        i = j + 1
    return r


def test_initial_order_follows_steps(bench_formula):
    f = bench_formula
    order = [v for v in initial_strategy(f).order if f.var(v).step is not None]
    steps = [f.var(v).step for v in order]
    rho = statistics.correlation(_ranks(list(range(len(order)))), _ranks(steps))
    assert rho > 0
