"""CDCL SAT core."""

from .cdcl import SAT, TIMEOUT, UNSAT, Solver, SolverResult, Stats, luby, solve_cnf
from .propagator import DECISION, THEORY
