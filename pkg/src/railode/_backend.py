"""Kernel selection.

The compiled extension is used when it imports; set ``RAILODE_BACKEND=python``
to force the pure-Python kernels.
"""

from __future__ import annotations

import os

try:
    from . import _kernels as _compiled        # type: ignore[attr-defined]
except ImportError:                              # pragma: no cover - depends on build
    _compiled = None

_choice = os.environ.get("RAILODE_BACKEND", "").lower()
if _choice not in ("python", "compiled"):
    _choice = "compiled" if _compiled is not None else "python"
if _choice == "compiled" and _compiled is None:
    _choice = "python"


def available() -> list:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def current() -> str:
    return _choice


def set_backend(name: str):
    global _choice
    if name not in available():
        raise ValueError(f"backend {name!r} not available")
    _choice = name


def make_propagator(nvars: int, backend: str | None = None):
    if (backend or _choice) == "compiled":
        return _compiled.Propagator(nvars)
    from .sat.propagator import Propagator
    return Propagator(nvars)


def ode_prepare(code, consts, starts, inv_l, inv_r, inv_op):
    return _compiled.OdeProgram(code, consts, starts, inv_l, inv_r, inv_op)


def ode_integrate(prog, x0, p, h, rho, tol):
    return prog.integrate(x0, p, h, rho, tol)
