"""Reference satisfiability checks that share no code with the solver."""


def enumerate_sat(n, clauses):
    """True iff some of the 2^n assignments satisfies every clause."""
    masks = []
    for c in clauses:
        pos = neg = 0
        for l in c:
            if l > 0:
                pos |= 1 << (l - 1)
            else:
                neg |= 1 << (-l - 1)
        masks.append((pos, neg))
    full = (1 << n) - 1
    for x in range(1 << n):
        nx = full ^ x
        if all((x & p) or (nx & q) for p, q in masks):
            return True
    return False


def backtrack_sat(clauses, assign=None):
    """Exhaustive backtracking search with clause simplification."""
    assign = dict(assign or {})
    rest = []
    for c in clauses:
        if any(assign.get(abs(l)) == (l > 0) for l in c):
            continue
        free = [l for l in c if abs(l) not in assign]
        if not free:
            return False
        rest.append(free)
    if not rest:
        return True
    lit = min(rest, key=len)[0]
    return any(backtrack_sat(rest, {**assign, abs(lit): pol}) for pol in ((lit > 0), (lit < 0)))


def satisfiable(n, clauses):
    return enumerate_sat(n, clauses) if n <= 12 else backtrack_sat(clauses)
