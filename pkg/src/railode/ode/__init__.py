"""Deterministic RK4 simulation with invariants and timeouts."""

from .runtime import (DEFAULT_STEP, DEFAULT_TOL, CompiledSystem, IntegrationResult, NumericError,
                      OdeSystem, StopReason, Trajectory, ZeroLengthIntegration, compile_system,
                      integrate, run_compiled, trajectories_csv)
from ..formula.terms import eval_term
