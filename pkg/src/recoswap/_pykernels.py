"""Pure-Python checker kernels. ``_ckernels.pyx`` mirrors this file line for line.

Operations are encoded as parallel int lists:

* ``argc[i]``: operand code of op ``i`` (0 is BOTTOM),
* ``retc[i]``: returned code, ``-1`` for a value nobody swapped in,
  ``-2`` while the op is pending,
* ``inv[i]``/``res[i]``: positions of the invocation and response events,
  ``res[i] == -1`` while pending.
"""

from __future__ import annotations

from typing import Optional

FAST_OK = 0
FAST_CYCLE = 1
FAST_SEGMENT_ORDER = 2
FAST_SEGMENT_CYCLE = 3
FAST_BEFORE_START = 4


def bf_swap(argc: list, retc: list, inv: list, res: list) -> Optional[list]:
    """Search linearizations of a completion; return the order or None."""
    n = len(argc)
    must = [0] * n
    done_mask = 0
    for i in range(n):
        if res[i] >= 0:
            done_mask |= 1 << i
        for j in range(n):
            if res[j] >= 0 and res[j] < inv[i]:
                must[i] |= 1 << j
    failed = set()
    order: list = []

    def dfs(mask: int, cur: int) -> bool:
        if mask & done_mask == done_mask:
            return True
        key = (mask, cur)
        if key in failed:
            return False
        for i in range(n):
            bit = 1 << i
            if mask & bit or must[i] & ~mask:
                continue
            if retc[i] != -2 and retc[i] != cur:
                continue
            order.append(i)
            if dfs(mask | bit, argc[i]):
                return True
            order.pop()
        failed.add(key)
        return False

    return order if dfs(0, 0) else None


def fast_swap(pred: list, inv: list, res: list) -> tuple:
    """Order segments of forced predecessor chains.

    ``pred[i]`` is the op whose operand op ``i`` returned, ``-1`` for BOTTOM
    and ``-2`` for a pending op (which heads its own segment). Every op has
    at most one successor. Returns ``(code, order)``.
    """
    n = len(pred)
    succ = [-1] * n
    start_succ = -1
    for i in range(n):
        p = pred[i]
        if p >= 0:
            succ[p] = i
        elif p == -1:
            start_succ = i
    # segment heads: START (-1) and pending ops that have a successor
    seg_of = [-1] * n
    segs: list = [[]]
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
    # real time inside a segment
    big = 1 << 62
    k = len(segs)
    lo = [big] * k  # earliest response
    hi = [-1] * k   # latest invocation
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
    # real time between segments
    indeg = [0] * k
    after: list = [[] for _ in range(k)]
    for a in range(k):
        for b in range(k):
            if a != b and lo[a] < hi[b]:
                if b == 0:
                    return FAST_BEFORE_START, []
                after[a].append(b)
                indeg[b] += 1
    # popped from the end, so the START segment goes first
    ready = [s for s in range(k - 1, -1, -1) if indeg[s] == 0]
    out = []
    seen = 0
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

_MASK64 = (1 << 64) - 1


class XorShift64Star:
    """xorshift64* (Vigna 2016): 64-bit state, platform independent output."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        s = (seed ^ 0x9E3779B97F4A7C15) & _MASK64
        self.state = s or 0x9E3779B97F4A7C15

    def next(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def below(self, k: int) -> int:
        return (self.next() >> 32) % k

    def random(self) -> float:
        return (self.next() >> 11) / 9007199254740992.0
