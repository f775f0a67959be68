"""Per-train successor relation over segments, derived from the connection.

States are (segment, entry node, phase) where the phase counts how many
connection nodes have been visited. Only states lying on some complete path
(start boundary to an ending boundary, visiting the connection in order) are
kept. Projecting them onto segments gives ``S1 ->_T S2``.
"""

from __future__ import annotations

import warnings
from collections import defaultdict, deque
from dataclasses import dataclass, field

from .model import Connection, Network, ProblemError


class EncodingWarning(UserWarning):
    pass


@dataclass
class Routes:
    train: str
    segments: list                  # usable segment ids, in discovery order
    succ: dict                      # seg -> list of next segs
    entry: dict                     # seg -> node where the train enters it
    exit: dict                      # seg -> node where the train leaves it
    start: list                     # starting segments
    end: list                       # ending segments (leave through an ending node)
    start_node: str = ""
    end_nodes: list = field(default_factory=list)
    stops: set = field(default_factory=set)    # connection nodes where the train stops

    def into(self, node: str) -> list:
        """Segments S with S ->_T node."""
        return [s for s in self.segments if self.exit[s] == node]

    def out_of(self, node: str) -> list:
        """Segments S with node ->_T S."""
        return [s for s in self.segments if self.entry[s] == node]

    def pairs(self) -> list:
        return [(s1, s2) for s1 in self.segments for s2 in self.succ[s1]]


def _side_at(seg, node: str) -> str:
    if seg.a[0] == node and seg.b[0] == node:
        raise ProblemError(f"segment {seg.id} is a loop on node {node}")
    return seg.a[1] if seg.a[0] == node else seg.b[1]


def successor_relation(net: Network, conn: Connection) -> Routes:
    nodes = list(conn.nodes)
    start = nodes[0]
    last = len(nodes) - 1
    fixed_end = nodes[-1] if len(nodes) > 1 and net.node[nodes[-1]].boundary else None
    stops = {n for n in nodes[1:] if net.node[n].stop and not net.node[n].boundary}

    def advance(phase: int, node: str) -> int:
        return phase + 1 if phase < last and nodes[phase + 1] == node else phase

    def is_end(node: str, phase: int) -> bool:
        if not net.node[node].boundary or node == start:
            return False
        if phase != last:
            return False
        return fixed_end is None or node == fixed_end

    # forward search over (segment id, entry node, phase at entry)
    init = []
    for seg, _ in net.incident(start):
        init.append((seg.id, start, 0))
    trans = defaultdict(list)
    seen = set(init)
    queue = deque(init)
    finals = set()
    while queue:
        st = queue.popleft()
        sid, ent, ph = st
        seg = net.segment[sid]
        ex, ex_side = seg.other(ent)
        ph2 = advance(ph, ex)
        if is_end(ex, ph2):
            finals.add(st)
            continue
        if net.node[ex].boundary:
            continue
        for seg2, side2 in net.incident(ex):
            if side2 == ex_side or seg2.id == sid:
                continue
            nxt = (seg2.id, ex, ph2)
            trans[st].append(nxt)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    # keep states that reach an ending
    rev = defaultdict(list)
    for a, bs in trans.items():
        for b in bs:
            rev[b].append(a)
    alive = set(finals)
    queue = deque(finals)
    while queue:
        b = queue.popleft()
        for a in rev[b]:
            if a not in alive:
                alive.add(a)
                queue.append(a)
    if not alive:
        warnings.warn(f"train {conn.train}: connection {nodes} is infeasible", EncodingWarning)
    order = sorted(alive, key=lambda s: (s[2], s[0]))
    segs, entry, exit_ = [], {}, {}
    for sid, ent, ph in order:
        seg = net.segment[sid]
        if sid in entry and entry[sid] != ent:
            raise ProblemError(f"train {conn.train} may traverse segment {sid} in both directions")
        if sid not in entry:
            segs.append(sid)
            entry[sid] = ent
            exit_[sid] = seg.other(ent)[0]
    succ = {s: [] for s in segs}
    for a in alive:
        for b in trans.get(a, ()):
            if b in alive and b[0] not in succ[a[0]]:
                succ[a[0]].append(b[0])
    index = {s: i for i, s in enumerate(segs)}
    for s in segs:
        succ[s].sort(key=index.get)
    start_segs = [s for s in segs if (s, start, 0) in alive]
    end_segs = sorted({st[0] for st in finals if st in alive}, key=index.get)
    end_nodes = sorted({exit_[s] for s in end_segs})
    return Routes(conn.train, segs, succ, entry, exit_, start_segs, end_segs, start, end_nodes, stops)


def count_paths(r: Routes) -> int:
    """Number of start-to-end segment paths in the projected relation (must be acyclic)."""
    memo: dict = {}
    active: set = set()

    def count(s):
        if s in memo:
            return memo[s]
        if s in active:
            raise ValueError("successor relation has a cycle")
        active.add(s)
        n = (1 if s in r.end else 0) + sum(count(t) for t in r.succ[s])
        active.discard(s)
        memo[s] = n
        return n

    return sum(count(s) for s in r.start)


def enumerate_paths(r: Routes, limit: int = 100000) -> list:
    out = []

    def walk(path):
        if len(out) >= limit:
            return
        s = path[-1]
        if s in r.end:
            out.append(list(path))
        for t in r.succ[s]:
            if t not in path:
                path.append(t)
                walk(path)
                path.pop()

    for s in r.start:
        walk([s])
    return out
