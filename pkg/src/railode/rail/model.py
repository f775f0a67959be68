"""Railway problems: double-vertex networks, trains, connections and schedules.

A node has up to two sides. A segment joins two (node, side) endpoints; a
train passing through a node enters on one side and leaves on the other.
Boundary nodes have a single side.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from ..formula.text import Node as SNode, ParseError, read_sexprs

SIDES = ("a", "b")
OPS = ("<", "<=", ">", ">=", "=")


class ProblemError(Exception):
    pass


@dataclass(frozen=True)
class RailNode:
    id: str
    boundary: bool = False
    stop: bool = False            # station where trains may stop


@dataclass(frozen=True)
class Segment:
    id: str
    a: tuple                      # (node id, side)
    b: tuple
    length: float                 # meters
    limit: float                  # m/s

    def other(self, node: str) -> tuple:
        if self.a[0] == node:
            return self.b
        if self.b[0] == node:
            return self.a
        raise KeyError(node)


@dataclass
class Network:
    nodes: list
    segments: list

    def __post_init__(self):
        self.node = {n.id: n for n in self.nodes}
        self.segment = {s.id: s for s in self.segments}

    def incident(self, node: str, side: Optional[str] = None) -> list:
        """Segments attached to ``node`` (optionally on ``side``), as (segment, side)."""
        out = []
        for s in self.segments:
            for end in (s.a, s.b):
                if end[0] == node and (side is None or end[1] == side):
                    out.append((s, end[1]))
        return out


@dataclass(frozen=True)
class TrainSpec:
    id: str
    A: float = 2.0
    B: float = 1.0
    vmax: float = 40.0
    L: float = 50.0


@dataclass(frozen=True)
class Connection:
    train: str
    nodes: tuple


# --- schedule constraints ----------------------------------------------------------

@dataclass(frozen=True)
class Visit:
    train: str
    node: str
    kind: str                     # "arrival" | "departure"


@dataclass(frozen=True)
class Ordering:
    v1: Visit
    op: str
    v2: Visit


@dataclass(frozen=True)
class RelativeTiming:
    v1: Visit
    v2: Visit
    op: str
    xi: float


@dataclass(frozen=True)
class AbsoluteTiming:
    v: Visit
    op: str
    xi: float


@dataclass(frozen=True)
class SAnd:
    args: tuple


@dataclass(frozen=True)
class SOr:
    args: tuple


@dataclass(frozen=True)
class SNot:
    arg: object


Schedule = Union[Ordering, RelativeTiming, AbsoluteTiming, SAnd, SOr, SNot]


def _check_ops(c):
    if isinstance(c, (SAnd, SOr)):
        for a in c.args:
            _check_ops(a)
    elif isinstance(c, SNot):
        _check_ops(c.arg)
    elif isinstance(c, Ordering):
        if c.op not in OPS:
            raise ProblemError(f"bad ordering operator {c.op!r}")
    elif isinstance(c, (RelativeTiming, AbsoluteTiming)):
        if c.op not in ("<", "<=", ">", ">="):
            raise ProblemError(f"timing constraints take <, <=, > or >=, not {c.op!r}")
        if not (math.isfinite(c.xi) and c.xi >= 0):
            raise ProblemError(f"timing bound must be finite and non-negative, got {c.xi!r}")
    else:
        raise ProblemError(f"unknown schedule constraint {c!r}")
    for v in schedule_visits(c):
        if v.kind not in ("arrival", "departure"):
            raise ProblemError(f"bad visit kind {v.kind!r}")


def schedule_visits(c) -> list:
    if isinstance(c, Ordering):
        return [c.v1, c.v2]
    if isinstance(c, RelativeTiming):
        return [c.v1, c.v2]
    if isinstance(c, AbsoluteTiming):
        return [c.v]
    if isinstance(c, SNot):
        return schedule_visits(c.arg)
    return [v for a in c.args for v in schedule_visits(a)]


def _visit_text(v: Visit) -> str:
    return f"({v.kind} {v.train} {v.node})"


def _num_text(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() else repr(float(x))


def schedule_text(c) -> str:
    if isinstance(c, Ordering):
        return f"(order {c.op} {_visit_text(c.v1)} {_visit_text(c.v2)})"
    if isinstance(c, RelativeTiming):
        return f"(transfer {c.op} {_visit_text(c.v1)} {_visit_text(c.v2)} {_num_text(c.xi)})"
    if isinstance(c, AbsoluteTiming):
        return f"(time {c.op} {_visit_text(c.v)} {_num_text(c.xi)})"
    if isinstance(c, SNot):
        return f"(not {schedule_text(c.arg)})"
    head = "and" if isinstance(c, SAnd) else "or"
    return f"({head} {' '.join(schedule_text(a) for a in c.args)})"


def _perr(node: SNode, msg: str):
    raise ParseError(msg, node.tok.line, node.tok.col)


def _atom(node: SNode, kinds=("sym",)):
    if node.is_list or node.tok.kind not in kinds:
        _perr(node, f"expected {' or '.join(kinds)}")
    return node.tok.val


def _parse_visit(node: SNode) -> Visit:
    if not node.is_list or len(node.items) != 3:
        _perr(node, "visit must be (arrival|departure TRAIN NODE)")
    kind = _atom(node.items[0])
    if kind not in ("arrival", "departure"):
        _perr(node.items[0], "visit kind must be arrival or departure")
    name = lambda n: str(int(n.tok.val)) if (not n.is_list and n.tok.kind == "num") else _atom(n)
    return Visit(name(node.items[1]), name(node.items[2]), kind)


def _parse_schedule(node: SNode):
    if not node.is_list or not node.items:
        _perr(node, "expected a schedule expression")
    head = _atom(node.items[0])
    args = node.items[1:]
    if head in ("and", "or"):
        parts = tuple(_parse_schedule(a) for a in args)
        return SAnd(parts) if head == "and" else SOr(parts)
    if head == "not":
        if len(args) != 1:
            _perr(node, "not takes one argument")
        return SNot(_parse_schedule(args[0]))
    if head in ("order", "transfer", "time"):
        if not args:
            _perr(node, f"{head} needs an operator")
        op = _atom(args[0])
        if op not in OPS:
            _perr(args[0], f"unknown operator {op!r}")
        if head == "order":
            if len(args) != 3:
                _perr(node, "order takes an operator and two visits")
            return Ordering(_parse_visit(args[1]), op, _parse_visit(args[2]))
        if op == "=":
            _perr(args[0], "timing constraints do not support '='")
        if head == "transfer":
            if len(args) != 4:
                _perr(node, "transfer takes an operator, two visits and a bound")
            xi = _atom(args[3], ("num",))
            return RelativeTiming(_parse_visit(args[1]), _parse_visit(args[2]), op, float(xi))
        if len(args) != 3:
            _perr(node, "time takes an operator, a visit and a bound")
        return AbsoluteTiming(_parse_visit(args[1]), op, float(_atom(args[2], ("num",))))
    _perr(node.items[0], f"unknown schedule form {head!r}")


def parse_schedule(text: str):
    nodes = read_sexprs(text)
    if len(nodes) != 1:
        raise ParseError("expected exactly one schedule expression", 1, 1)
    return _parse_schedule(nodes[0])


# --- problem ------------------------------------------------------------------------

@dataclass
class EncodingConfig:
    J: int = 45
    rho: float = 30.0

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 1:
            raise ProblemError("J must be an integer >= 1")
        if not self.rho > 0:
            raise ProblemError("rho must be positive")


@dataclass
class RailwayProblem:
    network: Network
    trains: list
    connections: list
    schedule: list = field(default_factory=list)
    config: EncodingConfig = field(default_factory=EncodingConfig)
    max_wait: Optional[float] = None      # optional bound on station waiting

    def train(self, tid: str) -> TrainSpec:
        for t in self.trains:
            if t.id == tid:
                return t
        raise ProblemError(f"unknown train {tid!r}")

    def connection(self, tid: str) -> Connection:
        for c in self.connections:
            if c.train == tid:
                return c
        raise ProblemError(f"train {tid!r} has no connection")

    def validate(self):
        net = self.network
        if len(net.node) != len(net.nodes) or len(net.segment) != len(net.segments):
            raise ProblemError("duplicate node or segment id")
        if not self.trains:
            raise ProblemError("no trains")
        Lmax = max(t.L for t in self.trains)
        for t in self.trains:
            if min(t.A, t.B, t.vmax, t.L) <= 0:
                raise ProblemError(f"train {t.id}: constants must be positive")
        if len({t.id for t in self.trains}) != len(self.trains):
            raise ProblemError("duplicate train id")
        for s in net.segments:
            for node, side in (s.a, s.b):
                if node not in net.node:
                    raise ProblemError(f"segment {s.id}: unknown node {node!r}")
                if side not in SIDES:
                    raise ProblemError(f"segment {s.id}: bad side {side!r}")
            if not (s.length > 0 and s.limit > 0):
                raise ProblemError(f"segment {s.id}: length and limit must be positive")
            if s.length < Lmax:
                raise ProblemError(f"segment {s.id} is shorter than the longest train")
        for n in net.nodes:
            sides = {side for _, side in net.incident(n.id)}
            if n.boundary and len(sides) > 1:
                raise ProblemError(f"boundary node {n.id} uses both sides")
        # connectivity
        if net.nodes:
            adj = {n.id: set() for n in net.nodes}
            for s in net.segments:
                adj[s.a[0]].add(s.b[0])
                adj[s.b[0]].add(s.a[0])
            seen, stack = set(), [net.nodes[0].id]
            while stack:
                x = stack.pop()
                if x not in seen:
                    seen.add(x)
                    stack.extend(adj[x])
            if len(seen) != len(net.nodes):
                raise ProblemError("network is not connected")
        tids = {t.id for t in self.trains}
        for c in self.connections:
            if c.train not in tids:
                raise ProblemError(f"connection for unknown train {c.train!r}")
            if not c.nodes:
                raise ProblemError(f"train {c.train}: empty connection")
            for i, n in enumerate(c.nodes):
                if n not in net.node:
                    raise ProblemError(f"train {c.train}: unknown node {n!r}")
                if net.node[n].boundary and 0 < i < len(c.nodes) - 1:
                    raise ProblemError(f"train {c.train}: boundary node {n} inside the connection")
            if not net.node[c.nodes[0]].boundary:
                raise ProblemError(f"train {c.train}: connection must start at a boundary node")
        if {c.train for c in self.connections} != tids or len(self.connections) != len(tids):
            raise ProblemError("every train needs exactly one connection")
        for c in self.schedule:
            _check_ops(c)
            for v in schedule_visits(c):
                if v.train not in tids:
                    raise ProblemError(f"schedule refers to unknown train {v.train!r}")
                if v.node not in net.node:
                    raise ProblemError(f"schedule refers to unknown node {v.node!r}")
        return self

    # -- JSON --
    def to_dict(self) -> dict:
        net = self.network
        d = {
            "network": {
                "nodes": [{"id": n.id, "boundary": n.boundary, "stop": n.stop} for n in net.nodes],
                "segments": [{"id": s.id, "a": list(s.a), "b": list(s.b),
                              "length": s.length, "limit": s.limit} for s in net.segments],
            },
            "trains": [{"id": t.id, "A": t.A, "B": t.B, "vmax": t.vmax, "L": t.L} for t in self.trains],
            "connections": [{"train": c.train, "nodes": list(c.nodes)} for c in self.connections],
            "schedule": [schedule_text(c) for c in self.schedule],
            "config": {"J": self.config.J, "rho": self.config.rho},
        }
        if self.max_wait is not None:
            d["max_wait"] = self.max_wait
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RailwayProblem":
        try:
            net = d["network"]
            nodes = [RailNode(str(n["id"]), bool(n.get("boundary", False)), bool(n.get("stop", False)))
                     for n in net["nodes"]]
            segs = [Segment(str(s["id"]), (str(s["a"][0]), s["a"][1]), (str(s["b"][0]), s["b"][1]),
                            float(s["length"]), float(s["limit"])) for s in net["segments"]]
            trains = [TrainSpec(str(t["id"]), float(t.get("A", 2.0)), float(t.get("B", 1.0)),
                                float(t.get("vmax", 40.0)), float(t.get("L", 50.0))) for t in d["trains"]]
            conns = [Connection(str(c["train"]), tuple(str(n) for n in c["nodes"])) for c in d["connections"]]
            sched = [parse_schedule(s) for s in d.get("schedule", [])]
            cfg = d.get("config", {})
            config = EncodingConfig(int(cfg.get("J", 45)), float(cfg.get("rho", 30.0)))
        except (KeyError, TypeError, IndexError) as e:
            raise ProblemError(f"malformed problem document: {e!r}") from None
        return cls(Network(nodes, segs), trains, conns, sched, config, d.get("max_wait")).validate()

    @classmethod
    def from_json(cls, text: str) -> "RailwayProblem":
        return cls.from_dict(json.loads(text))


def load_problem(path) -> RailwayProblem:
    with open(path, encoding="utf-8") as fh:
        return RailwayProblem.from_json(fh.read())


def save_problem(p: RailwayProblem, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(p.to_json())
        fh.write("\n")
