import random

import pytest

from railode.formula import (BOOL, FUN, REAL, Comparison, DiffConstraint, Formula, Fun, Init,
                             Invariant, Real, add, const, eval_comparison)
from railode.sat import DECISION, Solver
from railode.sat.propagator import THEORY
from railode.theory import Theory, build_dependency_graph, rule_target


class Harness:
    """A solver with the theory attached, driven by explicit decisions."""

    def __init__(self, f):
        self.f = f
        self.th = Theory(f, debug=True)
        self.s = Solver(f.num_vars, f.clauses, self.th, debug=True)
        self.P = self.s.prop
        self.conflict = self.settle()

    def settle(self):
        while True:
            c = self.P.propagate()
            if c >= 0:
                return self.P.clause_lits(c)
            n = self.P.trail_size()
            confl = self.th.process()
            if confl is not None or self.P.trail_size() == n:
                return confl

    def decide(self, lit):
        self.P.new_level()
        self.P.assign(lit, DECISION)
        self.conflict = self.settle()
        return self.conflict

    def value(self, lit):
        return self.P.value(lit)

    def real(self, name):
        return self.th.values().get(Real(self.f.lookup(name)))


def reals(f, *names):
    return [f.declare(REAL, n).id for n in names]


def eq(f, x, t):
    return f.atom(Comparison(Real(x), "=", t))


def test_chain_rule_fires():
    f = Formula()
    t0, tau0, t1 = reals(f, "t0", "tau0", "t1")
    r0, r1, r2 = eq(f, t0, const(0)), eq(f, tau0, const(5)), eq(f, t1, add(Real(t0), Real(tau0)))
    h = Harness(f)
    for a in (r2, r0, r1):
        assert h.decide(a) is None
    assert h.real("t1") == 5.0


def test_equality_forces_other_equality_false():
    f = Formula()
    (x,) = reals(f, "x")
    x0, x1 = eq(f, x, const(0)), eq(f, x, const(1))
    h = Harness(f)
    assert h.decide(x0) is None
    assert h.value(x1) == 0 and h.P.reason(x1) == THEORY
    assert sorted(h.th.explain(-x1)) == sorted([-x1, -x0])


def test_contradicting_predicate_conflict():
    f = Formula()
    (x,) = reals(f, "x")
    x0 = eq(f, x, const(0))
    gt = f.atom(Comparison(Real(x), ">", const(1)))
    h = Harness(f)
    assert h.decide(gt) is None
    confl = h.decide(x0)
    assert sorted(confl) == sorted([-x0, -gt])
    assert all(h.value(l) == 0 for l in confl)


def test_explanation_is_ancestor_closure():
    f = Formula()
    t0, tau0, t1 = reals(f, "t0", "tau0", "t1")
    rules = [eq(f, t0, const(0)), eq(f, tau0, const(5)), eq(f, t1, add(Real(t0), Real(tau0)))]
    lt = f.atom(Comparison(Real(t1), "<", const(3)))
    h = Harness(f)
    assert h.decide(lt) is None
    assert h.decide(rules[0]) is None and h.decide(rules[1]) is None
    confl = h.decide(rules[2])
    assert sorted(confl) == sorted([-lt] + [-r for r in rules])


def _one_step(d0):
    f = Formula()
    tau = f.declare(REAL, "tau@0", 0).id
    g = f.declare_group("G@0", tau, 30.0)
    d = f.declare(FUN, "d@0", 0, group=g.id).id
    v = f.declare(FUN, "v@0", 0, group=g.id).id
    a, dmax = reals(f, "a@0", "dmax@0")
    lits = [f.atom(DiffConstraint(d, Fun(v))), f.atom(DiffConstraint(v, Real(a))),
            f.atom(Invariant(Comparison(Fun(d), "<=", Real(dmax)), g.id)),
            f.atom(Comparison(Init(d), "=", const(d0))), f.atom(Comparison(Init(v), "=", const(0))),
            eq(f, a, const(2)), eq(f, dmax, const(100))]
    return f, lits


def test_group_integrates_when_complete():
    f, lits = _one_step(0.0)
    h = Harness(f)
    for l in lits:
        assert h.decide(l) is None
    assert h.real("tau@0") == pytest.approx(10.0, abs=1e-9)
    assert any(line.startswith("fire") and "group G@0" in line for line in h.th.trace)


def test_zero_length_integration_explained():
    f, lits = _one_step(150.0)
    h = Harness(f)
    confl = None
    for l in lits:
        confl = h.decide(l)
        if confl is not None:
            break
    assert confl is not None
    # the invariant, the rule fixing init(d) and the rule fixing dmax take part
    for l in (lits[2], lits[3], lits[6]):
        assert -l in confl
    assert all(h.value(l) == 0 for l in confl)


def test_backjump_drops_values_and_replay_is_identical():
    f = Formula()
    t0, tau0, t1 = reals(f, "t0", "tau0", "t1")
    rules = [eq(f, t0, const(0)), eq(f, tau0, const(5)), eq(f, t1, add(Real(t0), Real(tau0)))]
    h = Harness(f)
    for r in rules:
        h.decide(r)
    first = h.th.values()
    h.s._backjump(0)
    assert h.th.values() == {}
    for r in rules:
        h.decide(r)
    assert h.th.values() == first


def test_negative_rule_does_not_fire():
    f = Formula()
    (x,) = reals(f, "x")
    r = eq(f, x, const(0))
    h = Harness(f)
    assert h.decide(-r) is None
    assert h.th.values() == {}


def test_dependency_graph_single_atom():
    f = Formula()
    (x,) = reals(f, "x")
    a = eq(f, x, const(0))
    vertices, edges, initial = build_dependency_graph(f)
    assert vertices == [a] and edges[a] == [] and initial == [a]


def test_dependency_graph_shared_variable():
    f = Formula()
    t0, tau0, t1 = reals(f, "t0", "tau0", "t1")
    r0 = eq(f, t0, const(0))
    r2 = eq(f, t1, add(Real(t0), Real(tau0)))
    _, edges, initial = build_dependency_graph(f)
    assert edges[r0] == [r2] and initial == [r0]


def test_encoder_groups_depend_on_init_rules():
    from conftest import linear_problem
    from railode.rail import encode
    f = encode(linear_problem(J=3)).formula
    _, edges, initial = build_dependency_graph(f)
    assert initial
    preds = {}
    for w, rs in edges.items():
        for r in rs:
            preds.setdefault(r, set()).add(w)
    for av, atom in f.atoms.items():
        if isinstance(atom, DiffConstraint):
            step = f.var(av).step
            assert any(f.var(w).step == step and isinstance(f.atoms[w], Comparison)
                       and isinstance(rule_target(f.atoms[w])[0], Init) for w in preds.get(av, ()))


# --- randomized fixpoint checks ------------------------------------------------------------

def random_formula(rng):
    f = Formula()
    xs = reals(f, *[f"x{i}" for i in range(4)])
    atoms = []
    for i, x in enumerate(xs):
        for _ in range(rng.randint(1, 2)):
            if i and rng.random() < 0.6:
                t = add(Real(xs[rng.randrange(i)]), const(rng.randint(-2, 2)))
            else:
                t = const(rng.randint(-2, 2))
            atoms.append(eq(f, x, t))
    for _ in range(rng.randint(2, 6)):
        i, j = rng.sample(range(4), 2)
        rhs = add(Real(xs[j]), const(rng.randint(-2, 2))) if rng.random() < 0.7 else const(rng.randint(-3, 3))
        atoms.append(f.atom(Comparison(Real(xs[i]), rng.choice(["<", "<=", ">", ">=", "="]), rhs)))
    for b in range(2):
        bv = f.declare(BOOL, f"b{b}").id
        f.add_clause([bv, rng.choice(atoms)])
    return f, sorted(set(atoms))


def recompute_store(f, asserted):
    """Fire asserted rules to a fixpoint without the theory solver."""
    env = {}
    changed = True
    while changed:
        changed = False
        for av in asserted:
            rt = rule_target(f.atoms[av])
            if rt is None or rt[0] in env:
                continue
            try:
                from railode.formula import eval_term
                env[rt[0]] = eval_term(rt[1], env)
                changed = True
            except Exception:
                pass
    return env


def test_random_fixpoints_match_brute_force():
    rng = random.Random(99)
    conflicts = 0
    for _ in range(200):
        f, atoms = random_formula(rng)
        h = Harness(f)
        order = atoms[:]
        rng.shuffle(order)
        for av in order:
            if h.conflict is not None:
                break
            if h.value(av) >= 0:
                continue
            h.decide(av if rng.random() < 0.7 else -av)
        if h.conflict is not None:
            conflicts += 1
            assert all(h.value(l) == 0 for l in h.conflict)
            assert all(h.P.level(abs(l)) <= h.P.decision_level() for l in h.conflict)
            continue
        store = h.th.values()
        asserted = [av for av in atoms if h.value(av) == 1]
        assert store == recompute_store(f, asserted)
        for av in atoms:
            atom = f.atoms[av]
            refs = {Real(v) for v in range(1, f.num_vars + 1)
                    if f.var(v).kind == REAL and Real(v) in _refs(atom)}
            if refs <= store.keys():
                assert h.value(av) >= 0
                assert (h.value(av) == 1) == eval_comparison(atom, store)
            elif h.P.reason(av) == THEORY:
                pytest.fail("propagated an atom that cannot be evaluated")
    assert conflicts > 0


def _refs(atom):
    from railode.formula import atom_refs
    return atom_refs(atom)


def test_firing_order_independent():
    f = Formula()
    xs = reals(f, "x0", "x1", "x2", "x3")
    rules = [eq(f, xs[0], const(1))] + [eq(f, xs[i], add(Real(xs[i - 1]), const(i))) for i in range(1, 4)]
    rng = random.Random(5)
    stores = set()
    for _ in range(10):
        order = rules[:]
        rng.shuffle(order)
        h = Harness(f)
        for r in order:
            h.decide(r)
        stores.add(tuple(sorted((k.var, v) for k, v in h.th.values().items())))
    assert len(stores) == 1
