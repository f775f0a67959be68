# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled kernels: unit propagation and the RK4 bytecode interpreter.

Both mirror the pure-Python implementations operation by operation, so the
two backends produce identical trails and bit-identical floats.
"""

from libc.math cimport isfinite
from libcpp.vector cimport vector

cdef int DECISION = -1
cdef int THEORY = -2


cdef struct Watch:
    int cref
    int blocker


cdef class Propagator:
    cdef public int nvars
    cdef public long propagations
    cdef vector[int] assigns
    cdef vector[int] level_of
    cdef vector[int] reason_of
    cdef vector[int] trail
    cdef vector[int] trail_lim
    cdef int qhead
    cdef vector[vector[int]] clauses
    cdef vector[vector[Watch]] watches
    cdef vector[int] order
    cdef vector[int] order_pol
    cdef vector[int] order_pos
    cdef int ptr
    cdef vector[int] phase
    cdef vector[double] activity
    cdef double var_inc
    cdef vector[int] low
    cdef vector[int] heap
    cdef vector[int] heap_idx
    cdef vector[int] decidable

    def __init__(self, int nvars):
        self.nvars = nvars
        self.propagations = 0
        self.assigns.assign(nvars + 1, -1)
        self.level_of.assign(nvars + 1, 0)
        self.reason_of.assign(nvars + 1, DECISION)
        self.qhead = 0
        self.watches.resize(2 * nvars + 2)
        self.order_pos.assign(nvars + 1, -1)
        self.ptr = 0
        self.phase.assign(nvars + 1, 0)
        self.activity.assign(nvars + 1, 0.0)
        self.var_inc = 1.0
        self.low.assign(nvars + 1, 0)
        self.heap_idx.assign(nvars + 1, -1)
        self.decidable.assign(nvars + 1, 0)

    @staticmethod
    cdef inline int _int(int lit):
        return 2 * lit if lit > 0 else -2 * lit + 1

    @staticmethod
    cdef inline int _ext(int il):
        return -(il >> 1) if il & 1 else il >> 1

    cpdef int value(self, int lit):
        cdef int a = self.assigns[lit if lit > 0 else -lit]
        if a < 0:
            return -1
        return a if lit > 0 else 1 - a

    cpdef int decision_level(self):
        return <int>self.trail_lim.size()

    cpdef void new_level(self):
        self.trail_lim.push_back(<int>self.trail.size())

    cpdef int trail_size(self):
        return <int>self.trail.size()

    cpdef int trail_lit(self, int i):
        return Propagator._ext(self.trail[i])

    def trail_lits(self, int start=0):
        cdef int i
        return [Propagator._ext(self.trail[i]) for i in range(start, <int>self.trail.size())]

    cpdef int level(self, int v):
        return self.level_of[v]

    cpdef int reason(self, int v):
        return self.reason_of[v]

    cpdef void assign(self, int lit, int reason):
        cdef int il = Propagator._int(lit)
        cdef int v = il >> 1
        self.assigns[v] = 1 - (il & 1)
        self.level_of[v] = <int>self.trail_lim.size()
        self.reason_of[v] = reason
        self.trail.push_back(il)

    cpdef void cancel_until(self, int level):
        if <int>self.trail_lim.size() <= level:
            return
        cdef int lim = self.trail_lim[level]
        cdef int ptr = self.ptr
        cdef int i, v, p
        i = <int>self.trail.size() - 1
        while i >= lim:
            v = self.trail[i] >> 1
            self.phase[v] = self.assigns[v]
            self.assigns[v] = -1
            p = self.order_pos[v]
            if 0 <= p < ptr:
                ptr = p
            if self.decidable[v] and self.heap_idx[v] < 0:
                self._heap_insert(v)
            i -= 1
        self.ptr = ptr
        self.trail.resize(lim)
        self.trail_lim.resize(level)
        if self.qhead > lim:
            self.qhead = lim

    def add_clause(self, lits, bint learnt=False):
        cdef vector[int] c
        cdef Watch w
        for l in lits:
            c.push_back(Propagator._int(l))
        cdef int cref = <int>self.clauses.size()
        self.clauses.push_back(c)
        w.cref = cref
        w.blocker = c[1]
        self.watches[c[0] ^ 1].push_back(w)
        w.blocker = c[0]
        self.watches[c[1] ^ 1].push_back(w)
        return cref

    def clause_lits(self, int cref):
        cdef int x
        return [Propagator._ext(x) for x in self.clauses[cref]]

    cpdef int num_clauses(self):
        return <int>self.clauses.size()

    cpdef int propagate(self):
        cdef int level = <int>self.trail_lim.size()
        cdef int confl = -1
        cdef int p, false_lit, i, j, n, cref, blocker, a, first, fval, k, lk, v, csize
        cdef bint found
        cdef Watch w
        cdef vector[Watch]* ws
        cdef vector[int]* c
        while self.qhead < <int>self.trail.size():
            p = self.trail[self.qhead]
            self.qhead += 1
            self.propagations += 1
            false_lit = p ^ 1
            ws = &self.watches[p]
            i = 0
            j = 0
            n = <int>ws.size()
            while i < n:
                cref = ws[0][i].cref
                blocker = ws[0][i].blocker
                a = self.assigns[blocker >> 1]
                if a >= 0 and (a ^ (blocker & 1)) == 1:
                    ws[0][j] = ws[0][i]
                    i += 1
                    j += 1
                    continue
                c = &self.clauses[cref]
                if c[0][0] == false_lit:
                    c[0][0] = c[0][1]
                    c[0][1] = false_lit
                i += 1
                first = c[0][0]
                a = self.assigns[first >> 1]
                fval = -1 if a < 0 else (a ^ (first & 1))
                if first != blocker and fval == 1:
                    ws[0][j].cref = cref
                    ws[0][j].blocker = first
                    j += 1
                    continue
                found = False
                csize = <int>c.size()
                for k in range(2, csize):
                    lk = c[0][k]
                    a = self.assigns[lk >> 1]
                    if a < 0 or (a ^ (lk & 1)) == 1:
                        c[0][1] = lk
                        c[0][k] = false_lit
                        w.cref = cref
                        w.blocker = first
                        # lk ^ 1 != p here, so ws stays valid
                        self.watches[lk ^ 1].push_back(w)
                        found = True
                        break
                if found:
                    continue
                ws[0][j].cref = cref
                ws[0][j].blocker = first
                j += 1
                if fval == 0:
                    confl = cref
                    self.qhead = <int>self.trail.size()
                    while i < n:
                        ws[0][j] = ws[0][i]
                        i += 1
                        j += 1
                else:
                    v = first >> 1
                    self.assigns[v] = 1 - (first & 1)
                    self.level_of[v] = level
                    self.reason_of[v] = cref
                    self.trail.push_back(first)
            ws.resize(j)
            if confl >= 0:
                return confl
        return -1

    def set_order(self, order, polarity):
        cdef int i
        self.order = [int(v) for v in order]
        self.order_pol = [1 if x else 0 for x in polarity]
        for i in range(<int>self.order.size()):
            self.order_pos[self.order[i]] = i
        self.ptr = 0

    cpdef void set_decidable(self, int v, bint low):
        self.decidable[v] = 1
        self.low[v] = 1 if low else 0
        if self.assigns[v] < 0 and self.heap_idx[v] < 0:
            self._heap_insert(v)

    cpdef int pick_ordered(self):
        cdef int i = self.ptr
        cdef int n = <int>self.order.size()
        while i < n and self.assigns[self.order[i]] >= 0:
            i += 1
        self.ptr = i
        if i == n:
            return 0
        cdef int v = self.order[i]
        return v if self.order_pol[i] else -v

    cpdef int pick_activity(self):
        cdef int v
        while self.heap.size() > 0:
            v = self._heap_pop()
            if self.assigns[v] < 0:
                return v if self.phase[v] == 1 else -v
        return 0

    cpdef void bump(self, int v):
        cdef Py_ssize_t i
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for i in range(<Py_ssize_t>self.activity.size()):
                self.activity[i] *= 1e-100
            self.var_inc *= 1e-100
        if self.heap_idx[v] >= 0:
            self._heap_up(self.heap_idx[v])

    cpdef void decay(self, double factor=0.95):
        self.var_inc /= factor

    cdef inline bint _less(self, int a, int b):
        if self.low[a] != self.low[b]:
            return self.low[a] < self.low[b]
        if self.activity[a] != self.activity[b]:
            return self.activity[a] > self.activity[b]
        return a < b

    cdef void _heap_insert(self, int v):
        self.heap_idx[v] = <int>self.heap.size()
        self.heap.push_back(v)
        self._heap_up(<int>self.heap.size() - 1)

    cdef void _heap_up(self, int i):
        cdef int v = self.heap[i]
        cdef int parent
        while i > 0:
            parent = (i - 1) >> 1
            if not self._less(v, self.heap[parent]):
                break
            self.heap[i] = self.heap[parent]
            self.heap_idx[self.heap[i]] = i
            i = parent
        self.heap[i] = v
        self.heap_idx[v] = i

    cdef int _heap_pop(self):
        cdef int top = self.heap[0]
        cdef int last = self.heap.back()
        self.heap.pop_back()
        self.heap_idx[top] = -1
        cdef int i, n, l, r, c
        if self.heap.size() > 0:
            self.heap[0] = last
            self.heap_idx[last] = 0
            i = 0
            n = <int>self.heap.size()
            while True:
                l = 2 * i + 1
                if l >= n:
                    break
                r = l + 1
                c = r if r < n and self._less(self.heap[r], self.heap[l]) else l
                if not self._less(self.heap[c], last):
                    break
                self.heap[i] = self.heap[c]
                self.heap_idx[self.heap[i]] = i
                i = c
            self.heap[i] = last
            self.heap_idx[last] = i
        return top


# --- RK4 bytecode interpreter ---------------------------------------------------

cdef enum:
    OP_CONST = 0
    OP_STATE = 1
    OP_PARAM = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_DIV = 6
    OP_NEG = 7
    OP_MIN = 8
    OP_MAX = 9
    OP_END = 10


cdef class OdeProgram:
    cdef vector[int] code
    cdef vector[double] consts
    cdef vector[int] starts
    cdef vector[int] inv_l
    cdef vector[int] inv_r
    cdef vector[int] inv_op
    cdef vector[double] stack
    cdef int n
    cdef bint divzero

    def __init__(self, code, consts, starts, inv_l, inv_r, inv_op):
        for x in code:
            self.code.push_back(x)
        for x in consts:
            self.consts.push_back(x)
        for x in starts:
            self.starts.push_back(x)
        for x in inv_l:
            self.inv_l.push_back(x)
        for x in inv_r:
            self.inv_r.push_back(x)
        for x in inv_op:
            self.inv_op.push_back(x)
        self.n = <int>self.starts.size()
        self.stack.resize(len(code) + 1)

    cdef double _eval(self, int pc, double* x, double* p):
        cdef int sp = 0
        cdef int op, arg, k
        cdef double a, b, r
        cdef double* st = &self.stack[0]
        while True:
            op = self.code[pc]
            arg = self.code[pc + 1]
            pc += 2
            if op == OP_CONST:
                st[sp] = self.consts[arg]
                sp += 1
            elif op == OP_STATE:
                st[sp] = x[arg]
                sp += 1
            elif op == OP_PARAM:
                st[sp] = p[arg]
                sp += 1
            elif op == OP_NEG:
                st[sp - 1] = -st[sp - 1]
            elif op == OP_MIN or op == OP_MAX:
                r = st[sp - arg]
                for k in range(sp - arg + 1, sp):
                    b = st[k]
                    if op == OP_MIN:
                        if b < r:
                            r = b
                    elif b > r:
                        r = b
                sp -= arg
                st[sp] = r
                sp += 1
            elif op == OP_END:
                return st[sp - 1]
            else:
                b = st[sp - 1]
                a = st[sp - 2]
                sp -= 1
                if op == OP_ADD:
                    st[sp - 1] = a + b
                elif op == OP_SUB:
                    st[sp - 1] = a - b
                elif op == OP_MUL:
                    st[sp - 1] = a * b
                else:
                    if b == 0.0:
                        self.divzero = True
                        st[sp - 1] = 0.0
                    else:
                        st[sp - 1] = a / b

    cdef void _rhs(self, double* x, double* p, double* out):
        cdef int i
        for i in range(self.n):
            out[i] = self._eval(self.starts[i], x, p)

    cdef int _check(self, double* x, double* p):
        cdef int i, op
        cdef double l, r
        cdef bint ok
        for i in range(<int>self.inv_op.size()):
            l = self._eval(self.inv_l[i], x, p)
            r = self._eval(self.inv_r[i], x, p)
            op = self.inv_op[i]
            if op == 0:
                ok = l < r
            elif op == 1:
                ok = l <= r
            elif op == 2:
                ok = l > r
            elif op == 3:
                ok = l >= r
            else:
                ok = l == r
            if not ok:
                return i
        return -1

    cdef void _rk4(self, double* x, double* p, double s, double* out,
                   double* k1, double* k2, double* k3, double* k4, double* y):
        cdef int i
        cdef int n = self.n
        cdef double half = s * 0.5
        cdef double sixth
        self._rhs(x, p, k1)
        for i in range(n):
            y[i] = x[i] + half * k1[i]
        self._rhs(y, p, k2)
        for i in range(n):
            y[i] = x[i] + half * k2[i]
        self._rhs(y, p, k3)
        for i in range(n):
            y[i] = x[i] + s * k3[i]
        self._rhs(y, p, k4)
        sixth = s / 6.0
        for i in range(n):
            out[i] = x[i] + sixth * (((k1[i] + 2.0 * k2[i]) + 2.0 * k3[i]) + k4[i])

    def integrate(self, x0, params, double h, double rho, double tol):
        """Same contract as the Python reference loop: (status, tau, invariant, samples)."""
        cdef int n = self.n
        cdef vector[double] x, xn, xm, xf, pv, k1, k2, k3, k4, y
        cdef int i, bad, b, k
        cdef double t, nt, s, lo, hi, mid, tau
        cdef bint fin
        for v in x0:
            x.push_back(v)
        for v in params:
            pv.push_back(v)
        if pv.size() == 0:
            pv.push_back(0.0)
        xn.resize(n + 1)
        xm.resize(n + 1)
        xf.resize(n + 1)
        k1.resize(n + 1)
        k2.resize(n + 1)
        k3.resize(n + 1)
        k4.resize(n + 1)
        y.resize(n + 1)
        x.push_back(0.0)
        cdef double* P = &pv[0]
        self.divzero = False
        bad = self._check(&x[0], P)
        if self.divzero:
            return 3, 0.0, -1, []
        if bad >= 0:
            return 2, 0.0, bad, []
        samples = [(0.0, [x[i] for i in range(n)])]
        k = 0
        t = 0.0
        while True:
            if t >= rho:
                return 0, t, -1, samples
            nt = (k + 1) * h
            if nt < rho:
                s = h
            else:
                s = rho - t
                nt = rho
            self._rk4(&x[0], P, s, &xn[0], &k1[0], &k2[0], &k3[0], &k4[0], &y[0])
            if self.divzero:
                return 3, t, -1, samples
            fin = True
            for i in range(n):
                if not isfinite(xn[i]):
                    fin = False
            if not fin:
                return 3, t, -1, samples
            bad = self._check(&xn[0], P)
            if self.divzero:
                return 3, t, -1, samples
            if bad < 0:
                for i in range(n):
                    x[i] = xn[i]
                t = nt
                k += 1
                samples.append((t, [x[i] for i in range(n)]))
                continue
            lo = 0.0
            hi = s
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                self._rk4(&x[0], P, mid, &xm[0], &k1[0], &k2[0], &k3[0], &k4[0], &y[0])
                b = self._check(&xm[0], P)
                if self.divzero:
                    return 3, t, -1, samples
                if b < 0:
                    lo = mid
                else:
                    hi = mid
                    bad = b
            if lo == 0.0:
                if t == 0.0:
                    return 2, 0.0, bad, []
                return 1, t, bad, samples
            self._rk4(&x[0], P, lo, &xf[0], &k1[0], &k2[0], &k3[0], &k4[0], &y[0])
            if self.divzero:
                return 3, t, -1, samples
            tau = t + lo
            samples.append((tau, [xf[i] for i in range(n)]))
            return 1, tau, bad, samples
