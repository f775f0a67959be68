"""Pure-Python propagation kernel.

Assignment trail, two-watched-literal unit propagation, static decision order
and an activity heap. The compiled kernel exposes the same methods.

Literals are signed ints externally. Internally ``2*v + (lit < 0)``.
"""

from __future__ import annotations

DECISION = -1
THEORY = -2


class Propagator:
    def __init__(self, nvars: int):
        self.nvars = nvars
        self.assigns = [-1] * (nvars + 1)
        self.level_of = [0] * (nvars + 1)
        self.reason_of = [DECISION] * (nvars + 1)
        self.trail: list[int] = []          # internal literals
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.clauses: list[list[int]] = []   # internal literals
        self.watches: list[list] = [[] for _ in range(2 * nvars + 2)]
        self.propagations = 0
        # decisions
        self.order: list[int] = []
        self.order_pol: list[int] = []
        self.order_pos = [-1] * (nvars + 1)
        self.ptr = 0
        self.phase = [0] * (nvars + 1)
        self.activity = [0.0] * (nvars + 1)
        self.var_inc = 1.0
        self.low = [0] * (nvars + 1)         # 1 = decide only after normal vars
        self.heap: list[int] = []
        self.heap_idx = [-1] * (nvars + 1)
        self.decidable = [0] * (nvars + 1)

    # -- literal helpers --
    @staticmethod
    def _int(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    @staticmethod
    def _ext(il: int) -> int:
        return -(il >> 1) if il & 1 else il >> 1

    def value(self, lit: int) -> int:
        """1 true, 0 false, -1 unassigned."""
        a = self.assigns[abs(lit)]
        if a < 0:
            return -1
        return a if lit > 0 else 1 - a

    def _ival(self, il: int) -> int:
        a = self.assigns[il >> 1]
        if a < 0:
            return -1
        return a ^ (il & 1)

    # -- trail --
    def decision_level(self) -> int:
        return len(self.trail_lim)

    def new_level(self):
        self.trail_lim.append(len(self.trail))

    def trail_size(self) -> int:
        return len(self.trail)

    def trail_lit(self, i: int) -> int:
        return self._ext(self.trail[i])

    def trail_lits(self, start: int = 0) -> list:
        ext = self._ext
        return [ext(x) for x in self.trail[start:]]

    def level(self, v: int) -> int:
        return self.level_of[v]

    def reason(self, v: int) -> int:
        return self.reason_of[v]

    def assign(self, lit: int, reason: int):
        il = self._int(lit)
        v = il >> 1
        self.assigns[v] = 1 - (il & 1)
        self.level_of[v] = len(self.trail_lim)
        self.reason_of[v] = reason
        self.trail.append(il)

    def cancel_until(self, level: int):
        if len(self.trail_lim) <= level:
            return
        lim = self.trail_lim[level]
        assigns, phase, pos = self.assigns, self.phase, self.order_pos
        ptr = self.ptr
        for i in range(len(self.trail) - 1, lim - 1, -1):
            v = self.trail[i] >> 1
            phase[v] = assigns[v]
            assigns[v] = -1
            p = pos[v]
            if 0 <= p < ptr:
                ptr = p
            if self.decidable[v] and self.heap_idx[v] < 0:
                self._heap_insert(v)
        self.ptr = ptr
        del self.trail[lim:]
        del self.trail_lim[level:]
        if self.qhead > lim:
            self.qhead = lim

    # -- clauses --
    def add_clause(self, lits: list, learnt: bool = False) -> int:
        """Store a clause of size >= 2 and watch its first two literals."""
        c = [self._int(l) for l in lits]
        cref = len(self.clauses)
        self.clauses.append(c)
        self.watches[c[0] ^ 1].append((cref, c[1]))
        self.watches[c[1] ^ 1].append((cref, c[0]))
        return cref

    def clause_lits(self, cref: int) -> list:
        ext = self._ext
        return [ext(x) for x in self.clauses[cref]]

    def num_clauses(self) -> int:
        return len(self.clauses)

    def propagate(self) -> int:
        """Unit propagation to fixpoint. Returns conflicting clause ref or -1."""
        trail, assigns, clauses, watches = self.trail, self.assigns, self.clauses, self.watches
        level = len(self.trail_lim)
        level_of, reason_of = self.level_of, self.reason_of
        confl = -1
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            self.propagations += 1
            false_lit = p ^ 1
            ws = watches[p]
            i = j = 0
            n = len(ws)
            while i < n:
                cref, blocker = ws[i]
                a = assigns[blocker >> 1]
                if a >= 0 and (a ^ (blocker & 1)) == 1:
                    ws[j] = ws[i]
                    i += 1
                    j += 1
                    continue
                c = clauses[cref]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], false_lit
                i += 1
                first = c[0]
                a = assigns[first >> 1]
                fval = -1 if a < 0 else (a ^ (first & 1))
                if first != blocker and fval == 1:
                    ws[j] = (cref, first)
                    j += 1
                    continue
                found = False
                for k in range(2, len(c)):
                    lk = c[k]
                    a = assigns[lk >> 1]
                    if a < 0 or (a ^ (lk & 1)) == 1:
                        c[1], c[k] = lk, false_lit
                        watches[lk ^ 1].append((cref, first))
                        found = True
                        break
                if found:
                    continue
                ws[j] = (cref, first)
                j += 1
                if fval == 0:
                    confl = cref
                    self.qhead = len(trail)
                    while i < n:
                        ws[j] = ws[i]
                        i += 1
                        j += 1
                else:
                    v = first >> 1
                    assigns[v] = 1 - (first & 1)
                    level_of[v] = level
                    reason_of[v] = cref
                    trail.append(first)
            del ws[j:]
            if confl >= 0:
                return confl
        return -1

    # -- decisions --
    def set_order(self, order: list, polarity: list):
        self.order = list(order)
        self.order_pol = list(polarity)
        for i, v in enumerate(self.order):
            self.order_pos[v] = i
        self.ptr = 0

    def set_decidable(self, v: int, low: bool):
        self.decidable[v] = 1
        self.low[v] = 1 if low else 0
        if self.assigns[v] < 0 and self.heap_idx[v] < 0:
            self._heap_insert(v)

    def pick_ordered(self) -> int:
        order, assigns = self.order, self.assigns
        i = self.ptr
        n = len(order)
        while i < n and assigns[order[i]] >= 0:
            i += 1
        self.ptr = i
        if i == n:
            return 0
        v = order[i]
        return v if self.order_pol[i] else -v

    def pick_activity(self) -> int:
        while self.heap:
            v = self._heap_pop()
            if self.assigns[v] < 0:
                return v if self.phase[v] == 1 else -v
        return 0

    def bump(self, v: int):
        act = self.activity
        act[v] += self.var_inc
        if act[v] > 1e100:
            for i in range(len(act)):
                act[i] *= 1e-100
            self.var_inc *= 1e-100
        if self.heap_idx[v] >= 0:
            self._heap_up(self.heap_idx[v])

    def decay(self, factor: float = 0.95):
        self.var_inc /= factor

    # binary heap: low vars last, then higher activity, then smaller id
    def _less(self, a: int, b: int) -> bool:
        if self.low[a] != self.low[b]:
            return self.low[a] < self.low[b]
        if self.activity[a] != self.activity[b]:
            return self.activity[a] > self.activity[b]
        return a < b

    def _heap_insert(self, v: int):
        self.heap_idx[v] = len(self.heap)
        self.heap.append(v)
        self._heap_up(len(self.heap) - 1)

    def _heap_up(self, i: int):
        heap, idx = self.heap, self.heap_idx
        v = heap[i]
        while i > 0:
            parent = (i - 1) >> 1
            if not self._less(v, heap[parent]):
                break
            heap[i] = heap[parent]
            idx[heap[i]] = i
            i = parent
        heap[i] = v
        idx[v] = i

    def _heap_pop(self) -> int:
        heap, idx = self.heap, self.heap_idx
        top = heap[0]
        last = heap.pop()
        idx[top] = -1
        if heap:
            heap[0] = last
            idx[last] = 0
            i, n = 0, len(heap)
            while True:
                l = 2 * i + 1
                if l >= n:
                    break
                r = l + 1
                c = r if r < n and self._less(heap[r], heap[l]) else l
                if not self._less(heap[c], last):
                    break
                heap[i] = heap[c]
                idx[heap[i]] = i
                i = c
            heap[i] = last
            idx[last] = i
        return top
