import csv
import io
import json

import pytest

from railode.bench import (BenchCase, GAMMA, SCENARIOS, expand_cases, gen_case, gen_scenario,
                           gen_serial_parallel, results_csv, run_case, run_suite)
from railode.cli import EXIT_ERROR, EXIT_OK, EXIT_TIMEOUT, EXIT_UNSAT, main
from railode.plan import Plan, eval_schedule, visit_steps
from railode.rail import Ordering, RelativeTiming, SAnd, SOr, AbsoluteTiming


def test_network_structure():
    net = gen_serial_parallel(3, 2)
    assert len(net.nodes) == 3 * (2 + 2) + 2
    assert sum(n.stop for n in net.nodes) == 6
    assert {s.limit for s in net.segments} == {40.0}
    assert sorted({s.length for s in net.segments}) == [100.0, 1000.0]
    assert [n.id for n in net.nodes if n.boundary] == ["start", "end"]


def test_case_parameters():
    p = gen_case(BenchCase("all", 3, 2, 10.0))
    assert p.config.J == GAMMA[3] == 115 and p.config.rho == 30.0
    assert {(t.A, t.B, t.vmax, t.L) for t in p.trains} == {(2.0, 1.0, 40.0, 50.0)}
    assert all(c.nodes == ("start", "end") for c in p.connections)


def test_bad_case_rejected():
    with pytest.raises(ValueError):
        BenchCase("some", 1, 2)
    with pytest.raises(ValueError):
        BenchCase("nop", 5, 2)


def test_nop_has_no_schedule():
    assert gen_scenario("nop", 2, 100.0)[1] == []


def test_last_constraint_count():
    sched = gen_scenario("last", 3, 100.0)[1]
    assert sum(isinstance(c, RelativeTiming) for c in sched) == 1
    assert sum(isinstance(c, Ordering) for c in sched) == 4
    assert sched[0].v1.train == "T3"


def test_all_structure():
    sched = gen_scenario("all", 2, 100.0)[1]
    assert len(sched) == 2
    for i, c in enumerate(sched):
        timing, alts = c.args
        assert isinstance(timing, RelativeTiming) and timing.v1.train == f"T{i + 1}"
        assert isinstance(alts, SOr) and isinstance(alts.args[0], AbsoluteTiming)
        (pair,) = alts.args[1:]
        assert isinstance(pair, SAnd) and all(isinstance(x, Ordering) for x in pair.args)
        assert pair.args[1].v2.node == "E1"


def test_generator_deterministic():
    a = gen_case(BenchCase("all", 2, 3, 100.0)).to_json()
    b = gen_case(BenchCase("all", 2, 3, 100.0)).to_json()
    assert a == b


@pytest.fixture(scope="module")
def last_sat():
    return run_case(BenchCase("last", 1, 2, 1000.0))


def test_last_and_all_agree_for_one_train(last_sat):
    plan = last_sat.plan
    for bnd in (10.0, 100.0, 1000.0, 200.0):
        p_last = gen_case(BenchCase("last", 1, 2, bnd))
        p_all = gen_case(BenchCase("all", 1, 2, bnd))
        steps = visit_steps(plan, p_last)
        got_last = all(eval_schedule(c, plan, steps) for c in p_last.schedule)
        got_all = all(eval_schedule(c, plan, steps) for c in p_all.schedule)
        assert got_last == got_all


def test_suite_csv_and_order():
    cases = [BenchCase("all", 1, 2, 10.0), BenchCase("last", 1, 2, 10.0)]
    res = run_suite(cases)
    rows = list(csv.reader(io.StringIO(results_csv(res))))
    assert rows[0] == ["scenario", "nt", "ns", "bnd", "result", "wall_s", "conflicts", "decisions"]
    assert [(r[0], r[4]) for r in rows[1:]] == [("all", "UNSAT"), ("last", "UNSAT")]


def test_expand_cases():
    cases = expand_cases(["nop", "last"], [1], [2, 3], [10.0, 100.0])
    assert len(cases) == 2 + 4
    assert all(c.bnd == 0.0 for c in cases if c.scenario == "nop")


def test_sat_case_is_validated(last_sat):
    assert last_sat.result == "SAT" and last_sat.violations == []


# --- command line -------------------------------------------------------------------

@pytest.fixture
def files(tmp_path):
    return tmp_path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_pipeline(files, capsys):
    prob, sode, plan = files / "p.json", files / "f.sode", files / "plan.json"
    assert run(["gen", "--scenario", "last", "--nt", 1, "--ns", 2, "--bnd", 1000, "-o", prob], capsys)[0] == 0
    code, out, _ = run(["encode", "--problem", prob, "-o", sode], capsys)
    assert code == EXIT_OK and "clauses" in out
    code, out, _ = run(["solve", sode, "--dump-plan", plan, "--csv", files / "traj"], capsys)
    assert code == EXIT_OK and "s SATISFIABLE" in out
    assert (files / "traj.csv").read_text().startswith("time,d,v,segment\n")
    code, out, _ = run(["check", "--plan", plan, "--problem", prob], capsys)
    assert code == EXIT_OK and out.strip() == "ok"
    code, out, _ = run(["stats", sode], capsys)
    assert code == EXIT_OK and json.loads(out)["groups"] > 0


def test_cli_check_tampered(files, capsys):
    prob, sode, plan = files / "p.json", files / "f.sode", files / "plan.json"
    run(["gen", "--scenario", "nop", "--nt", 1, "--ns", 2, "-o", prob], capsys)
    run(["encode", "--problem", prob, "-o", sode], capsys)
    run(["solve", sode, "--dump-plan", plan], capsys)
    d = json.loads(plan.read_text())
    d["t"][2] += 5.0
    plan.write_text(json.dumps(d))
    code, out, _ = run(["check", "--plan", plan, "--problem", prob], capsys)
    assert code != 0 and "time" in out


def test_cli_unsat_exit_code(files, capsys):
    sode = files / "u.sode"
    sode.write_text("(declare-bool x)\n(assert x)\n(assert (not x))\n")
    code, out, _ = run(["solve", sode], capsys)
    assert code == EXIT_UNSAT and "UNSATISFIABLE" in out


def test_cli_timeout_exit_code(files, capsys):
    prob, sode = files / "p.json", files / "f.sode"
    run(["gen", "--scenario", "all", "--nt", 2, "--ns", 3, "--bnd", 100, "-o", prob], capsys)
    run(["encode", "--problem", prob, "-o", sode], capsys)
    code, out, _ = run(["solve", sode, "--timeout", 0.5], capsys)
    assert code == EXIT_TIMEOUT and "UNKNOWN" in out


def test_cli_bench_csv(files, capsys):
    out = files / "r.csv"
    code, _, _ = run(["bench", "--scenario", "last", "--nt", 1, "--ns", 2, "--bnd", 10, "--out", out], capsys)
    rows = list(csv.reader(out.open()))
    assert code == EXIT_OK and len(rows) == 2 and rows[1][4] == "UNSAT"


def test_cli_usage_errors(files, capsys):
    with pytest.raises(SystemExit) as e:
        main(["solve"])
    assert e.value.code == EXIT_ERROR
    code, _, err = run(["solve", files / "missing.sode"], capsys)
    assert code == EXIT_ERROR and "error" in err
    bad = files / "bad.sode"
    bad.write_text("(assert (< x")
    code, _, err = run(["stats", bad], capsys)
    assert code == EXIT_ERROR and "1:" in err
