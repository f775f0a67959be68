"""DIMACS export of the Boolean abstraction."""

from __future__ import annotations

from .formula import Formula
from .text import atom_text


def to_dimacs(f: Formula, annotate: bool = True) -> str:
    lines = []
    if annotate:
        for v in f.variables:
            if v.kind != "boolean" or v.aux:
                continue
            desc = atom_text(f, f.atoms[v.id]) if v.id in f.atoms else v.name
            lines.append(f"c {v.id} {desc}")
    lines.append(f"p cnf {f.num_vars} {len(f.clauses)}")
    for c in f.clauses:
        lines.append(" ".join(map(str, c)) + " 0")
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> tuple[int, list[list[int]]]:
    nvars, clauses, cur = 0, [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            nvars = int(line.split()[2])
            continue
        for tok in line.split():
            x = int(tok)
            if x == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(x)
    if cur:
        clauses.append(cur)
    return nvars, clauses
