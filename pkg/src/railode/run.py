"""One-call solving of a formula with a chosen decision strategy."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .formula.formula import Formula
from .heuristics import make_strategy
from .sat.cdcl import Solver, Stats
from .theory import Theory


@dataclass
class RunResult:
    status: str                 # SAT | UNSAT | TIMEOUT
    model: dict
    theory: Theory
    stats: Stats
    wall_s: float

    @property
    def sat(self) -> bool:
        return self.status == "SAT"


def solve_formula(f: Formula, heuristic: str = "railway", timeout: Optional[float] = None,
                  backend: Optional[str] = None, restarts: bool = False, debug: bool = False) -> RunResult:
    start = time.monotonic()
    strat = make_strategy(f, heuristic)
    th = Theory(f, debug=debug)
    aux = [v.id for v in f.variables if v.aux]
    solver = Solver(f.num_vars, f.clauses, th, order=strat.order, polarity=strat.polarities(),
                    aux=aux, restarts=restarts, backend=backend, debug=debug)
    res = solver.solve(timeout)
    return RunResult(res.status, res.model, th, res.stats, time.monotonic() - start)
