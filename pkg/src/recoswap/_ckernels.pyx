# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled checker kernels; same contract as ``_pykernels``."""

from libc.stdlib cimport malloc, free

from recoswap import _pykernels

FAST_OK = _pykernels.FAST_OK
FAST_CYCLE = _pykernels.FAST_CYCLE
FAST_SEGMENT_ORDER = _pykernels.FAST_SEGMENT_ORDER
FAST_SEGMENT_CYCLE = _pykernels.FAST_SEGMENT_CYCLE
FAST_BEFORE_START = _pykernels.FAST_BEFORE_START

ctypedef unsigned long long u64


cdef struct Search:
    int n
    int *argc
    int *retc
    u64 *must
    u64 done_mask
    int *order
    int depth


cdef bint _dfs(Search *s, u64 mask, int cur, set failed) except -1:
    cdef int i
    cdef u64 bit
    if (mask & s.done_mask) == s.done_mask:
        return True
    key = (mask, cur)
    if key in failed:
        return False
    for i in range(s.n):
        bit = (<u64>1) << i
        if (mask & bit) or (s.must[i] & ~mask):
            continue
        if s.retc[i] != -2 and s.retc[i] != cur:
            continue
        s.order[s.depth] = i
        s.depth += 1
        if _dfs(s, mask | bit, s.argc[i], failed):
            return True
        s.depth -= 1
    failed.add(key)
    return False


def bf_swap(list argc, list retc, list inv, list res):
    cdef int n = len(argc)
    cdef int i, j
    cdef Search s
    if n > 62:
        return _pykernels.bf_swap(argc, retc, inv, res)
    s.n = n
    s.argc = <int *>malloc(max(n, 1) * sizeof(int))
    s.retc = <int *>malloc(max(n, 1) * sizeof(int))
    s.must = <u64 *>malloc(max(n, 1) * sizeof(u64))
    s.order = <int *>malloc(max(n, 1) * sizeof(int))
    s.depth = 0
    s.done_mask = 0
    try:
        for i in range(n):
            s.argc[i] = argc[i]
            s.retc[i] = retc[i]
            s.must[i] = 0
            if res[i] >= 0:
                s.done_mask |= (<u64>1) << i
        for i in range(n):
            for j in range(n):
                if res[j] >= 0 and res[j] < inv[i]:
                    s.must[i] |= (<u64>1) << j
        if _dfs(&s, 0, 0, set()):
            return [s.order[i] for i in range(s.depth)]
        return None
    finally:
        free(s.argc)
        free(s.retc)
        free(s.must)
        free(s.order)


def fast_swap(list pred, list inv, list res):
    cdef Py_ssize_t n = len(pred)
    cdef Py_ssize_t i, h, a, b, k, s
    cdef long long p, cur, r, best, big = (<long long>1) << 62
    succ = [-1] * n
    cdef long long start_succ = -1
    for i in range(n):
        p = pred[i]
        if p >= 0:
            succ[p] = i
        elif p == -1:
            start_succ = i
    seg_of = [-1] * n
    segs = [[]]
    cur = start_succ
    while cur != -1:
        seg_of[cur] = 0
        segs[0].append(cur)
        cur = succ[cur]
    for h in range(n):
        if pred[h] != -2 or succ[h] == -1:
            continue
        s = len(segs)
        segs.append([])
        cur = h
        while cur != -1:
            seg_of[cur] = s
            segs[s].append(cur)
            cur = succ[cur]
    for i in range(n):
        if pred[i] != -2 and seg_of[i] == -1:
            return FAST_CYCLE, []
    k = len(segs)
    lo = [big] * k
    hi = [-1] * k
    for s in range(k):
        best = -1
        for i in segs[s]:
            r = res[i] if res[i] >= 0 else big
            if r < best:
                return FAST_SEGMENT_ORDER, []
            if inv[i] > best:
                best = inv[i]
            if r < lo[s]:
                lo[s] = r
        hi[s] = best
    indeg = [0] * k
    after = [[] for _ in range(k)]
    for a in range(k):
        for b in range(k):
            if a != b and lo[a] < hi[b]:
                if b == 0:
                    return FAST_BEFORE_START, []
                after[a].append(b)
                indeg[b] += 1
    ready = [s for s in range(k - 1, -1, -1) if indeg[s] == 0]
    out = []
    cdef Py_ssize_t seen = 0
    while ready:
        s = ready.pop()
        seen += 1
        out.extend(segs[s])
        for b in after[s]:
            indeg[b] -= 1
            if indeg[b] == 0:
                ready.append(b)
    if seen != k:
        return FAST_SEGMENT_CYCLE, []
    return FAST_OK, out


# -- PRNG ----------------------------------------------------------------------


cdef class XorShift64Star:
    """xorshift64*; the same stream as the pure-Python twin."""

    cdef u64 _s

    def __init__(self, seed):
        cdef u64 s = (<u64>(seed & 0xFFFFFFFFFFFFFFFF)) ^ 0x9E3779B97F4A7C15ULL
        self._s = s if s else 0x9E3779B97F4A7C15ULL

    @property
    def state(self):
        return self._s

    @state.setter
    def state(self, value):
        self._s = <u64>value

    cdef inline u64 _next(self):
        cdef u64 x = self._s
        x ^= x >> 12
        x ^= x << 25
        x ^= x >> 27
        self._s = x
        return x * 0x2545F4914F6CDD1DULL

    def next(self):
        return self._next()

    cpdef int below(self, int k):
        return <int>((self._next() >> 32) % <u64>k)

    def random(self):
        return <double>(self._next() >> 11) / 9007199254740992.0
