"""Reading and writing the s-expression text format (``.sode``).

Example::

    (set-info :source "hand written")
    (group g0 (tau tau0) (rho 30.0))
    (declare-real t0 :step 0)
    (declare-real tau0 :step 0)
    (declare-fun v :group g0 :step 0)
    (declare-atom p0 (ode (= (der v) 2.0)) :step 0)
    (assert (= t0 0.0))
    (assert (! (or p0 (< tau0 5.0)) :rule "demo"))
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .formula import (BOOL, FUN, REAL, And, Formula, Iff, Implies, Ite, Not, Or)
from .terms import (App, Comparison, Const, DiffConstraint, Final, Fun, Init, Invariant, Real,
                    COMPARISON_OPS)


class ParseError(Exception):
    """Syntax error with a source position."""

    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line, self.col = line, col


_PLAIN = re.compile(r"^[A-Za-z_.@~!$%^&*+\-/<>=?][A-Za-z0-9_.@~!$%^&*+\-/<>=?#:\[\]{},']*$")
_NUMBER = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")


def quote(name: str) -> str:
    if _PLAIN.match(name) and not _NUMBER.match(name) and name not in ("not", "or", "and"):
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"cannot quote symbol {name!r}")
    return f"|{name}|"


def _num(x: float) -> str:
    return repr(float(x))


# --- writer -------------------------------------------------------------------

def term_text(f: Formula, t) -> str:
    if isinstance(t, Const):
        return _num(t.value)
    if isinstance(t, (Real, Fun)):
        return quote(f.var(t.var).name)
    if isinstance(t, Init):
        return f"(init {quote(f.var(t.var).name)})"
    if isinstance(t, Final):
        return f"(final {quote(f.var(t.var).name)})"
    op = "-" if t.op == "neg" else t.op
    return "(" + op + " " + " ".join(term_text(f, a) for a in t.args) + ")"


def atom_text(f: Formula, a) -> str:
    if isinstance(a, Comparison):
        return f"({a.op} {term_text(f, a.lhs)} {term_text(f, a.rhs)})"
    if isinstance(a, DiffConstraint):
        return f"(ode (= (der {quote(f.var(a.f).name)}) {term_text(f, a.rhs)}))"
    return f"(invariant {quote(f.groups[a.group].name)} {atom_text(f, a.pred)})"


def _lit_text(f: Formula, lit: int) -> str:
    v = abs(lit)
    s = atom_text(f, f.atoms[v]) if v in f.atoms else quote(f.var(v).name)
    return s if lit > 0 else f"(not {s})"


def dump_text(f: Formula) -> str:
    out = []
    for k, v in f.info.items():
        out.append(f"(set-info :{k} {_string(v)})")
    for g in f.groups:
        sync = "" if g.synchronous else " :async"
        out.append(f"(group {quote(g.name)} (tau {quote(f.var(g.tau).name)}) (rho {_num(g.rho)}){sync})")
    for v in f.variables:
        step = f" :step {v.step}" if v.step is not None else ""
        if v.id in f.atoms:
            out.append(f"(declare-atom {quote(v.name)} {atom_text(f, f.atoms[v.id])}{step})")
        elif v.kind == BOOL:
            out.append(f"(declare-bool {quote(v.name)}{step}{' :aux' if v.aux else ''})")
        elif v.kind == REAL:
            out.append(f"(declare-real {quote(v.name)}{step})")
        else:
            out.append(f"(declare-fun {quote(v.name)} :group {quote(f.groups[v.group].name)}{step})")
    for clause, tag in zip(f.clauses, f.clause_tags):
        if not clause:
            body = "false"
        elif len(clause) == 1:
            body = _lit_text(f, clause[0])
        else:
            body = "(or " + " ".join(_lit_text(f, l) for l in clause) + ")"
        if tag:
            body = f"(! {body} :rule {_string(tag)})"
        out.append(f"(assert {body})")
    return "\n".join(out) + "\n"


def _string(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


# --- reader -------------------------------------------------------------------

@dataclass
class Tok:
    kind: str          # '(' ')' 'sym' 'num' 'str' 'kw'
    val: object
    line: int
    col: int


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|;[^\n]*)
  | (?P<paren>[()])
  | (?P<str>"(?:[^"]|"")*")
  | (?P<qsym>\|[^|]*\|)
  | (?P<word>[^ \t\r\n();"|]+)
""", re.VERBOSE)


def tokenize(text: str) -> list:
    toks = []
    line, line_start = 1, 0
    pos, n = 0, len(text)
    match = _TOKEN.match
    while pos < n:
        m = match(text, pos)
        if m is None:
            col = pos - line_start + 1
            what = "string" if text[pos] == '"' else "quoted symbol"
            raise ParseError(f"unterminated {what}", line, col)
        kind = m.lastgroup
        col = pos - line_start + 1
        s = m.group()
        if kind == "paren":
            toks.append(Tok(s, s, line, col))
        elif kind == "str":
            toks.append(Tok("str", s[1:-1].replace('""', '"'), line, col))
        elif kind == "qsym":
            toks.append(Tok("sym", s[1:-1], line, col))
        elif kind == "word":
            if _NUMBER.match(s):
                toks.append(Tok("num", float(s), line, col))
            elif s.startswith(":"):
                toks.append(Tok("kw", s[1:], line, col))
            else:
                toks.append(Tok("sym", s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rindex("\n") + 1
        pos = m.end()
    toks.append(Tok("eof", None, line, pos - line_start + 1))
    return toks


@dataclass
class Node:
    """A parsed s-expression: either a list of nodes or a token."""
    items: list | None
    tok: Tok

    @property
    def is_list(self):
        return self.items is not None


def read_sexprs(text: str) -> list:
    toks = tokenize(text)
    pos = 0

    def read():
        nonlocal pos
        t = toks[pos]
        if t.kind == "eof":
            raise ParseError("unexpected end of input", t.line, t.col)
        pos += 1
        if t.kind == ")":
            raise ParseError("unexpected ')'", t.line, t.col)
        if t.kind != "(":
            return Node(None, t)
        items = []
        while toks[pos].kind != ")":
            if toks[pos].kind == "eof":
                e = toks[pos]
                raise ParseError("unexpected end of input, missing ')'", e.line, e.col)
            items.append(read())
        pos += 1
        return Node(items, t)

    out = []
    while toks[pos].kind != "eof":
        out.append(read())
    return out


def _err(node: Node, msg: str):
    raise ParseError(msg, node.tok.line, node.tok.col)


def _sym(node: Node) -> str:
    if node.is_list or node.tok.kind != "sym":
        _err(node, "expected a symbol")
    return node.tok.val


def _head(node: Node):
    if node.is_list and node.items and not node.items[0].is_list and node.items[0].tok.kind == "sym":
        return node.items[0].tok.val
    return None


def _options(node: Node, items: list) -> dict:
    opts = {}
    i = 0
    while i < len(items):
        it = items[i]
        if it.is_list or it.tok.kind != "kw":
            _err(it, "expected a keyword option")
        key = it.tok.val
        if i + 1 < len(items) and not (not items[i + 1].is_list and items[i + 1].tok.kind == "kw"):
            opts[key] = items[i + 1]
            i += 2
        else:
            opts[key] = None
            i += 1
    return opts


def _int_opt(opts: dict, key: str):
    n = opts.get(key)
    if n is None:
        return None
    if n.is_list or n.tok.kind != "num" or n.tok.val != int(n.tok.val):
        _err(n, f":{key} expects an integer")
    return int(n.tok.val)


class _Reader:
    def __init__(self):
        self.f = Formula()
        self.pending_groups = []

    def symbol_var(self, node: Node, kinds=None):
        name = _sym(node)
        vid = self.f.by_name.get(name)
        if vid is None:
            _err(node, f"unknown symbol {name!r}")
        if kinds and self.f.var(vid).kind not in kinds:
            _err(node, f"{name!r} has kind {self.f.var(vid).kind}")
        return vid

    def term(self, node: Node, in_flow: bool):
        if not node.is_list:
            if node.tok.kind == "num":
                return Const(node.tok.val)
            vid = self.symbol_var(node, (REAL, FUN))
            if self.f.var(vid).kind == FUN:
                if not in_flow:
                    _err(node, "functional variable outside init/final")
                return Fun(vid)
            return Real(vid)
        h = _head(node)
        args = node.items[1:]
        if h in ("init", "final"):
            if len(args) != 1:
                _err(node, f"{h} takes one argument")
            vid = self.symbol_var(args[0], (FUN,))
            return Init(vid) if h == "init" else Final(vid)
        if h == "-" and len(args) == 1:
            return App("neg", (self.term(args[0], in_flow),))
        if h in ("+", "-", "*", "/", "min", "max"):
            try:
                return App(h, tuple(self.term(a, in_flow) for a in args))
            except ValueError as e:
                _err(node, str(e))
        _err(node, f"unknown term operator {h!r}")

    def atom(self, node: Node):
        h = _head(node)
        args = node.items[1:]
        if h in COMPARISON_OPS:
            if len(args) != 2:
                _err(node, f"{h} takes two arguments")
            return Comparison(self.term(args[0], False), h, self.term(args[1], False))
        if h == "ode":
            if len(args) != 1 or _head(args[0]) != "=" or len(args[0].items) != 3:
                _err(node, "expected (ode (= (der f) rhs))")
            der = args[0].items[1]
            if _head(der) != "der" or len(der.items) != 2:
                _err(der, "expected (der f)")
            fv = self.symbol_var(der.items[1], (FUN,))
            return DiffConstraint(fv, self.term(args[0].items[2], True))
        if h == "invariant":
            if len(args) != 2:
                _err(node, "expected (invariant group predicate)")
            gname = _sym(args[0])
            if gname not in self.f.group_by_name:
                _err(args[0], f"unknown group {gname!r}")
            p = args[1]
            if _head(p) not in COMPARISON_OPS or len(p.items) != 3:
                _err(p, "invariant predicate must be a comparison")
            pred = Comparison(self.term(p.items[1], True), _head(p), self.term(p.items[2], True))
            return Invariant(pred, self.f.group_by_name[gname])
        _err(node, f"not an atom: {h!r}")

    def is_bool_sym(self, node: Node) -> bool:
        if node.is_list or node.tok.kind != "sym":
            return False
        vid = self.f.by_name.get(node.tok.val)
        return vid is not None and self.f.var(vid).kind == BOOL

    def boolexpr(self, node: Node):
        if not node.is_list:
            if node.tok.kind == "sym" and node.tok.val in ("true", "false"):
                return node.tok.val == "true"
            return self.symbol_var(node, (BOOL,))
        h = _head(node)
        args = node.items[1:]
        if h == "not":
            if len(args) != 1:
                _err(node, "not takes one argument")
            return Not(self.boolexpr(args[0]))
        if h in ("and", "or"):
            xs = tuple(self.boolexpr(a) for a in args)
            return (And if h == "and" else Or)(xs) if xs else (h == "and")
        if h == "=>":
            return Implies(self.boolexpr(args[0]), self.boolexpr(args[1]))
        if h == "ite":
            return Ite(*(self.boolexpr(a) for a in args))
        if h == "=" and len(args) == 2 and self.is_bool_sym(args[0]) and self.is_bool_sym(args[1]):
            return Iff(self.boolexpr(args[0]), self.boolexpr(args[1]))
        a = self.atom(node)
        try:
            return self.f.atom(a)
        except Exception as e:
            _err(node, str(e))

    def clause_lits(self, node: Node):
        """Literal list if ``node`` is clause shaped, else None."""
        def lit(n):
            if not n.is_list:
                if n.tok.kind == "sym" and self.is_bool_sym(n):
                    return self.f.by_name[n.tok.val]
                return None
            h = _head(n)
            if h == "not" and len(n.items) == 2:
                inner = lit(n.items[1])
                return -inner if inner else None
            if h in COMPARISON_OPS + ("ode", "invariant") and not (
                    h == "=" and len(n.items) == 3 and self.is_bool_sym(n.items[1])):
                return self.f.atom(self.atom(n))
            return None

        if not node.is_list and node.tok.kind == "sym" and node.tok.val == "false":
            return []
        if _head(node) == "or":
            lits = [lit(x) for x in node.items[1:]]
            return None if any(l is None for l in lits) else lits
        l = lit(node)
        return None if l is None else [l]

    def command(self, node: Node):
        f = self.f
        h = _head(node)
        if h is None:
            _err(node, "expected a command")
        args = node.items[1:]
        try:
            if h == "set-info":
                if len(args) != 2 or args[0].is_list or args[0].tok.kind != "kw" or args[1].tok.kind != "str":
                    _err(node, "expected (set-info :key \"value\")")
                f.info[args[0].tok.val] = args[1].tok.val
            elif h == "group":
                name = _sym(args[0])
                parts = {(_head(a) or ""): a for a in args[1:] if a.is_list}
                if "tau" not in parts or "rho" not in parts:
                    _err(node, "group needs (tau ...) and (rho ...)")
                rho = parts["rho"].items[1]
                if rho.is_list or rho.tok.kind != "num":
                    _err(rho, "rho must be a number")
                sync = not any((not a.is_list) and a.tok.kind == "kw" and a.tok.val == "async" for a in args[1:])
                if name in f.group_by_name:
                    _err(node, f"duplicate group {name!r}")
                if not rho.tok.val > 0:
                    _err(rho, "timeout must be positive")
                from .formula import IntegrationGroup
                g = IntegrationGroup(len(f.groups), name, -1, float(rho.tok.val), sync)
                f.groups.append(g)
                f.group_by_name[name] = g.id
                self.pending_groups.append((g, parts["tau"].items[1]))
            elif h in ("declare-bool", "declare-real", "declare-fun"):
                name = _sym(args[0])
                opts = _options(node, args[1:])
                step = _int_opt(opts, "step")
                if h == "declare-bool":
                    f.declare(BOOL, name, step, aux="aux" in opts)
                elif h == "declare-real":
                    f.declare(REAL, name, step)
                else:
                    if "group" not in opts or opts["group"] is None:
                        _err(node, "declare-fun needs :group")
                    gname = _sym(opts["group"])
                    if gname not in f.group_by_name:
                        _err(opts["group"], f"unknown group {gname!r}")
                    f.declare(FUN, name, step, group=f.group_by_name[gname])
            elif h == "declare-atom":
                name = _sym(args[0])
                a = self.atom(args[1])
                opts = _options(node, args[2:])
                if a in f.atom_var:
                    _err(node, "atom declared twice")
                f.atom(a, name=name, step=_int_opt(opts, "step"))
            elif h == "assert":
                if len(args) != 1:
                    _err(node, "assert takes one argument")
                body, tag = args[0], ""
                if _head(body) == "!":
                    opts = _options(body, body.items[2:])
                    if "rule" in opts and opts["rule"] is not None:
                        tag = opts["rule"].tok.val
                    body = body.items[1]
                lits = self.clause_lits(body)
                if lits is None:
                    f.assert_formula(self.boolexpr(body), tag)
                elif not lits:
                    f.clauses.append(())
                    f.clause_tags.append(tag)
                else:
                    f.add_clause(lits, tag)
            else:
                _err(node, f"unknown command {h!r}")
        except ParseError:
            raise
        except Exception as e:
            _err(node, str(e))

    def finish(self) -> Formula:
        for g, tau_node in self.pending_groups:
            g.tau = self.symbol_var(tau_node, (REAL,))
        return self.f


def parse_text(text: str) -> Formula:
    r = _Reader()
    for node in read_sexprs(text):
        r.command(node)
    return r.finish()


def load(path) -> Formula:
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read())


def save(f: Formula, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_text(f))
