"""Command-line interface: encode, solve, check, bench, gen and stats."""

from __future__ import annotations

import argparse
import json
import sys

EXIT_OK, EXIT_ERROR, EXIT_UNSAT, EXIT_TIMEOUT = 0, 1, 20, 30


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _parser() -> argparse.ArgumentParser:
    from .heuristics import STRATEGIES
    p = _Parser(prog="railode", description="SAT modulo ODE solver with a railway scheduling encoder")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    e = sub.add_parser("encode", help="encode a railway problem into a .sode formula")
    e.add_argument("--problem", required=True)
    e.add_argument("-o", "--output", required=True)
    e.add_argument("--J", type=int, help="number of discrete steps (overrides the problem)")
    e.add_argument("--rho", type=float, help="integration timeout (overrides the problem)")

    s = sub.add_parser("solve", help="solve a .sode formula")
    s.add_argument("formula")
    s.add_argument("--heuristic", choices=STRATEGIES, default="railway")
    s.add_argument("--timeout", type=float, default=None, help="seconds")
    s.add_argument("--dump-plan", metavar="PLAN_JSON")
    s.add_argument("--csv", metavar="PREFIX", help="write per-train trajectories PREFIX_<train>.csv")
    s.add_argument("--backend", choices=("python", "compiled"))
    s.add_argument("--restarts", action="store_true", help="enable Luby restarts")
    s.add_argument("--model", action="store_true", help="print the true Boolean variables")

    c = sub.add_parser("check", help="validate a plan against a problem")
    c.add_argument("--plan", required=True)
    c.add_argument("--problem", required=True)

    b = sub.add_parser("bench", help="run serial-parallel benchmark cases")
    b.add_argument("--scenario", nargs="+", default=["nop", "last", "all"], choices=("nop", "last", "all"))
    b.add_argument("--nt", nargs="+", type=int, default=[1, 2])
    b.add_argument("--ns", nargs="+", type=int, default=[2, 3])
    b.add_argument("--bnd", nargs="+", type=float, default=[10.0, 100.0, 1000.0])
    b.add_argument("--heuristic", choices=STRATEGIES, default="railway")
    b.add_argument("--timeout", type=float, default=None, help="per case, seconds")
    b.add_argument("--backend", choices=("python", "compiled"))
    b.add_argument("--out", default="-")

    g = sub.add_parser("gen", help="write a serial-parallel problem as JSON")
    g.add_argument("--scenario", choices=("nop", "last", "all"), default="nop")
    g.add_argument("--nt", type=int, default=1)
    g.add_argument("--ns", type=int, default=2)
    g.add_argument("--bnd", type=float, default=1000.0)
    g.add_argument("-o", "--output", default="-")

    st = sub.add_parser("stats", help="print variable, atom and clause counts of a .sode formula")
    st.add_argument("formula")
    return p


def _write(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_encode(a) -> int:
    from .formula import save
    from .rail import encode, load_problem
    enc = encode(load_problem(a.problem), J=a.J, rho=a.rho)
    save(enc.formula, a.output)
    f = enc.formula
    print(f"c {f.num_vars} variables, {len(f.atoms)} atoms, {len(f.clauses)} clauses")
    return EXIT_OK


def cmd_solve(a) -> int:
    from .formula import load
    from .run import solve_formula
    f = load(a.formula)
    r = solve_formula(f, a.heuristic, a.timeout, a.backend, a.restarts)
    st = r.stats
    print(f"c conflicts {st.conflicts} decisions {st.decisions} propagations {st.propagations} "
          f"theory_conflicts {st.theory_conflicts} wall_s {r.wall_s:.3f}")
    if r.status == "UNSAT":
        print("s UNSATISFIABLE")
        return EXIT_UNSAT
    if r.status != "SAT":
        print("s UNKNOWN")
        return EXIT_TIMEOUT
    print("s SATISFIABLE")
    if a.model:
        names = [f.var(v).name for v in f.model_vars() if r.model.get(v) and v not in f.atoms]
        print("v " + " ".join(names))
    if a.dump_plan or a.csv:
        from .plan import export, extract_plan
        from .rail.encoder import encoding_from_formula
        plan = extract_plan(encoding_from_formula(f), r.model, r.theory)
        if a.dump_plan:
            export(plan, "json", a.dump_plan)
        if a.csv:
            export(plan, "csv", a.csv + ".csv")
    return EXIT_OK


def cmd_check(a) -> int:
    from .plan import Plan, validate_plan
    from .rail import load_problem
    with open(a.plan) as fh:
        plan = Plan.from_json(fh.read())
    viol = validate_plan(plan, load_problem(a.problem))
    if not viol:
        print("ok")
        return EXIT_OK
    for v in viol:
        print(v)
    return EXIT_ERROR


def cmd_bench(a) -> int:
    from .bench import expand_cases, results_csv, run_suite
    cases = expand_cases(a.scenario, a.nt, a.ns, a.bnd)

    def progress(r):
        print(f"c {' '.join(map(str, r.row()))}", file=sys.stderr)
        for v in r.violations:
            print(f"c   {v}", file=sys.stderr)

    results = run_suite(cases, a.heuristic, a.timeout, backend=a.backend, progress=progress)
    _write(a.out, results_csv(results))
    bad = [r for r in results if r.result in ("INVALID", "ERROR")]
    return EXIT_ERROR if bad else EXIT_OK


def cmd_gen(a) -> int:
    from .bench import BenchCase, gen_case
    p = gen_case(BenchCase(a.scenario, a.nt, a.ns, a.bnd))
    _write(a.output, p.to_json() + "\n")
    return EXIT_OK


def cmd_stats(a) -> int:
    from .formula import formula_stats, load
    s = formula_stats(load(a.formula))
    s["variables_by_step"] = {str(k): v for k, v in s["variables_by_step"].items()}
    print(json.dumps(s, indent=1))
    return EXIT_OK


COMMANDS = {"encode": cmd_encode, "solve": cmd_solve, "check": cmd_check, "bench": cmd_bench,
            "gen": cmd_gen, "stats": cmd_stats}


def main(argv=None) -> int:
    from .formula import ParseError
    from .plan import PlanError
    from .rail.model import ProblemError
    a = _parser().parse_args(argv)
    try:
        return COMMANDS[a.cmd](a)
    except (OSError, ParseError, PlanError, ProblemError, ValueError) as e:
        print(f"railode: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
