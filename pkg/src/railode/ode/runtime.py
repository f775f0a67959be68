"""Fixed-step RK4 integration with invariant monitoring and bisection.

Integration runs until the first invariant fails or the timeout ``rho`` is
reached. The step straddling a crossing is bisected; the reported length is
the lower end of the final bracket, i.e. the last time at which every
invariant was observed to hold.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..formula.terms import (App, Comparison, Const, Final, Fun, Init, Real, COMPILE_GLOBALS,
                             compile_term, term_refs)
from .. import _backend

DEFAULT_STEP = 0.05
DEFAULT_TOL = 1e-10          # bracket width for crossing localization (seconds)


class ZeroLengthIntegration(Exception):
    """Some invariant fails at t=0, so no positive-length interval exists."""

    def __init__(self, invariants):
        super().__init__(f"invariants {list(invariants)} violated at t=0")
        self.invariants = list(invariants)


class NumericError(Exception):
    pass


@dataclass(frozen=True)
class StopReason:
    kind: str                     # "invariant_violated" | "timeout_reached"
    invariant: Optional[int] = None
    time: Optional[float] = None

    @property
    def timeout(self) -> bool:
        return self.kind == "timeout_reached"


@dataclass
class Trajectory:
    times: list
    values: list

    @property
    def tau(self) -> float:
        return self.times[-1]

    @property
    def initial(self) -> float:
        return self.values[0]

    @property
    def final(self) -> float:
        return self.values[-1]


@dataclass
class OdeSystem:
    """ODEs ``f' = rhs`` over functional variable ids.

    ``params`` maps the non-state leaves (``Real``, ``Init``, ``Final``) used on
    right-hand sides and in invariants to floats.
    """
    equations: list
    initial: dict
    params: dict = field(default_factory=dict)
    invariants: list = field(default_factory=list)
    rho: float = 30.0
    h: float = DEFAULT_STEP
    tol: float = DEFAULT_TOL


@dataclass
class IntegrationResult:
    trajectories: dict
    tau: float
    reason: StopReason

    def final(self, f: int) -> float:
        return self.trajectories[f].final


_OPS = {"<": 0, "<=": 1, ">": 2, ">=": 3, "=": 4}
OP_CONST, OP_STATE, OP_PARAM, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_NEG, OP_MIN, OP_MAX, OP_END = range(11)


class CompiledSystem:
    """A system shape compiled once; parameters and initial values vary per call.

    The same shape is reused across BMC steps, so compiling is keyed on the
    term structure and the layout of state and parameter slots.
    """

    def __init__(self, equations, invariants, param_keys):
        self.state = [f for f, _ in equations]
        self.slot = {f: i for i, f in enumerate(self.state)}
        self.param_keys = list(param_keys)
        self.pslot = {k: i for i, k in enumerate(self.param_keys)}
        self.invariants = list(invariants)

        def leaf(t):
            if isinstance(t, Fun):
                if t.var not in self.slot:
                    raise ValueError(f"functional variable {t.var} has no equation")
                return f"x[{self.slot[t.var]}]"
            return f"p[{self.pslot[t]}]"

        rhs = [compile_term(t, leaf) for _, t in equations]
        n = len(rhs)
        src = ["def _rhs(x, p):", f"    return [{', '.join(rhs)}]"]
        src.append("def _check(x, p):")
        for i, c in enumerate(self.invariants):
            src.append(f"    if not ({compile_term(c.lhs, leaf)} {'==' if c.op == '=' else c.op} "
                       f"{compile_term(c.rhs, leaf)}): return {i}")
        src.append("    return -1")
        ns = dict(COMPILE_GLOBALS)
        exec("\n".join(src), ns)
        self.rhs, self.check = ns["_rhs"], ns["_check"]
        self.n = n

        # bytecode for the compiled kernel
        code, consts = [], []

        def emit(t):
            if isinstance(t, Const):
                code.extend((OP_CONST, len(consts)))
                consts.append(t.value)
            elif isinstance(t, Fun):
                code.extend((OP_STATE, self.slot[t.var]))
            elif isinstance(t, App):
                if t.op in ("min", "max"):
                    for a in t.args:
                        emit(a)
                    code.extend((OP_MIN if t.op == "min" else OP_MAX, len(t.args)))
                elif t.op == "neg":
                    emit(t.args[0])
                    code.extend((OP_NEG, 0))
                else:
                    opc = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}[t.op]
                    emit(t.args[0])
                    for a in t.args[1:]:
                        emit(a)
                        code.extend((opc, 0))
            else:
                code.extend((OP_PARAM, self.pslot[t]))

        starts = []
        for _, t in equations:
            starts.append(len(code))
            emit(t)
            code.extend((OP_END, 0))
        inv_l, inv_r, inv_op = [], [], []
        for c in self.invariants:
            inv_l.append(len(code))
            emit(c.lhs)
            code.extend((OP_END, 0))
            inv_r.append(len(code))
            emit(c.rhs)
            code.extend((OP_END, 0))
            inv_op.append(_OPS[c.op])
        self.bytecode = (code, consts, starts, inv_l, inv_r, inv_op)
        self._kernel_data = None

    def kernel_data(self):
        if self._kernel_data is None:
            self._kernel_data = _backend.ode_prepare(*self.bytecode)
        return self._kernel_data


def _rk4(rhs, x, p, s):
    k1 = rhs(x, p)
    half = s * 0.5
    y = [xi + half * ki for xi, ki in zip(x, k1)]
    k2 = rhs(y, p)
    y = [xi + half * ki for xi, ki in zip(x, k2)]
    k3 = rhs(y, p)
    y = [xi + s * ki for xi, ki in zip(x, k3)]
    k4 = rhs(y, p)
    sixth = s / 6.0
    return [xi + sixth * (((a + 2.0 * b) + 2.0 * c) + d) for xi, a, b, c, d in zip(x, k1, k2, k3, k4)]


def _finite(x):
    for v in x:
        if not math.isfinite(v):
            return False
    return True


def integrate_python(cs: CompiledSystem, x0: list, p: list, h: float, rho: float, tol: float):
    """Reference loop. Returns (status, tau, invariant index, samples).

    ``samples`` is a list of (t, state list). status: 0 timeout, 1 invariant,
    2 zero length, 3 numeric error.
    """
    rhs, check = cs.rhs, cs.check
    x = list(x0)
    try:
        bad = check(x, p)
    except ZeroDivisionError:
        return 3, 0.0, -1, []
    if bad >= 0:
        return 2, 0.0, bad, []
    samples = [(0.0, x)]
    k = 0
    t = 0.0
    try:
        while True:
            if t >= rho:
                return 0, t, -1, samples
            nt = (k + 1) * h
            if nt < rho:
                s = h
            else:
                s, nt = rho - t, rho
            xn = _rk4(rhs, x, p, s)
            if not _finite(xn):
                return 3, t, -1, samples
            bad = check(xn, p)
            if bad < 0:
                x, t, k = xn, nt, k + 1
                samples.append((t, x))
                continue
            lo, hi = 0.0, s
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                xm = _rk4(rhs, x, p, mid)
                b = check(xm, p)
                if b < 0:
                    lo = mid
                else:
                    hi, bad = mid, b
            if lo == 0.0:
                if t == 0.0:
                    return 2, 0.0, bad, []
                return 1, t, bad, samples
            xf = _rk4(rhs, x, p, lo)
            tau = t + lo
            samples.append((tau, xf))
            return 1, tau, bad, samples
    except ZeroDivisionError:
        return 3, t, -1, samples


_compiled_cache: dict = {}


def compile_system(system: OdeSystem) -> tuple:
    keys = set()
    for _, t in system.equations:
        keys |= {r for r in term_refs(t) if not isinstance(r, Fun)}
    for c in system.invariants:
        keys |= {r for r in term_refs(c.lhs) | term_refs(c.rhs) if not isinstance(r, Fun)}
    order = sorted(keys, key=lambda r: (type(r).__name__, r.var))
    shape = (tuple(system.equations), tuple(system.invariants), tuple(order))
    cs = _compiled_cache.get(shape)
    if cs is None:
        cs = CompiledSystem(system.equations, system.invariants, order)
        if len(_compiled_cache) > 4096:
            _compiled_cache.clear()
        _compiled_cache[shape] = cs
    return cs, order


def run_compiled(cs: CompiledSystem, x0, p, h, rho, tol, backend=None):
    impl = backend or _backend.current()
    if impl == "compiled":
        return _backend.ode_integrate(cs.kernel_data(), x0, p, h, rho, tol)
    return integrate_python(cs, x0, p, h, rho, tol)


def integrate(system: OdeSystem, backend: Optional[str] = None) -> IntegrationResult:
    """Integrate ``system``; raises ZeroLengthIntegration or NumericError."""
    cs, order = compile_system(system)
    try:
        p = [float(system.params[k]) for k in order]
    except KeyError as e:
        raise ValueError(f"missing parameter {e.args[0]!r}") from None
    x0 = [float(system.initial[f]) for f in cs.state]
    if not (_finite(x0) and _finite(p)):
        raise NumericError("non-finite input")
    status, tau, inv, samples = run_compiled(cs, x0, p, system.h, system.rho, system.tol, backend)
    if status == 2:
        raise ZeroLengthIntegration([inv])
    if status == 3:
        raise NumericError("non-finite value during integration")
    times = [s[0] for s in samples]
    trajs = {f: Trajectory(times, [s[1][i] for s in samples]) for i, f in enumerate(cs.state)}
    reason = StopReason("timeout_reached") if status == 0 else StopReason("invariant_violated", inv, tau)
    return IntegrationResult(trajs, tau, reason)


def trajectories_csv(result: IntegrationResult, names: Mapping[int, str]) -> str:
    """CSV with header ``time,<var>...`` and one row per accepted sample."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    fs = list(result.trajectories)
    w.writerow(["time"] + [names.get(f, str(f)) for f in fs])
    if fs:
        times = result.trajectories[fs[0]].times
        for i, t in enumerate(times):
            w.writerow([repr(t)] + [repr(result.trajectories[f].values[i]) for f in fs])
    return out.getvalue()
