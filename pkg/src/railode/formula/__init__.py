"""Formula representation and the ``.sode`` text format."""

from .terms import (App, Atom, Comparison, Const, DiffConstraint, EvaluationError, Final, Fun, Init,
                    Invariant, Real, Term, add, atom_refs, const, div, eval_comparison, eval_term,
                    mul, neg, sub, term_refs, tmax, tmin)
from .formula import (BOOL, FUN, REAL, And, DeclarationError, Formula, Iff, Implies,
                      IntegrationGroup, Ite, Not, Or, TypingError, Variable, conj, disj, formula_stats,
                      iff, implies, ite)
from .text import ParseError, dump_text, load, parse_text, save
from .dimacs import parse_dimacs, to_dimacs
