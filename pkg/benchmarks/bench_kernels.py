"""Compare the compiled and pure-Python kernels.

Three workloads: random 3-CNF near the phase transition (BCP), RK4
integration of a braking system with an invariant crossing, and one full
bench case.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import random
import time

from railode import _backend
from railode.bench import BenchCase, run_case
from railode.formula import Comparison, Fun, Real, const
from railode.ode import OdeSystem, integrate
from railode.sat import solve_cnf

D, V, A = 1, 2, 3


def random_3cnf(rng, n=60, ratio=4.26):
    return n, [[rng.choice((-1, 1)) * v for v in rng.sample(range(1, n + 1), 3)]
               for _ in range(int(n * ratio))]


def bench_bcp(backend, repeat):
    rng = random.Random(7)
    instances = [random_3cnf(rng) for _ in range(20)]
    start = time.perf_counter()
    for _ in range(repeat):
        for n, cls in instances:
            solve_cnf(n, cls, backend=backend)
    return time.perf_counter() - start


def bench_rk4(backend, repeat):
    systems = [OdeSystem(equations=[(D, Fun(V)), (V, Real(A))], initial={D: 0.0, V: 40.0},
                         params={Real(A): -a}, invariants=[Comparison(Fun(V), ">=", const(0.5))],
                         rho=60.0, h=0.05)
               for a in (0.5, 0.75, 1.0, 1.25)]
    start = time.perf_counter()
    for _ in range(repeat):
        for s in systems:
            integrate(s, backend=backend)
    return time.perf_counter() - start


def bench_case(backend, repeat):
    prev = _backend.current()
    _backend.set_backend(backend)           # the theory integrates with the global choice
    try:
        start = time.perf_counter()
        for _ in range(repeat):
            run_case(BenchCase("last", 1, 2, 100.0), backend=backend)
        return time.perf_counter() - start
    finally:
        _backend.set_backend(prev)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args(argv)
    backends = _backend.available()
    if "compiled" not in backends:
        print("compiled extension not built; run: python3 setup.py build_ext --inplace")
    print(f"{'workload':<12}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in [("bcp", bench_bcp), ("rk4", bench_rk4), ("bench-case", bench_case)]:
        times = [fn(b, a.repeat) for b in backends]
        row = f"{name:<12}" + "".join(f"{t:>11.3f}s" for t in times)
        if len(times) > 1:
            row += f"{times[0] / times[1]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
