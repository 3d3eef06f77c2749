"""Recoverable detectable SWAP for the independent failures model.

SWAP itself is :class:`~recoswap.swap_global.SwapFrame` with the inWork
writes enabled (``Memory(independent=True)``). Recovery is blocking: a
recoverer announces itself with ``inWork = 2``, takes the RME lock, gathers
the fragment graph twice while waiting out in-flight swaps, and links its
own node into the list.
"""

from __future__ import annotations

from typing import Any

from .core import InvariantViolation
from .fragments import (
    TAILNODE,
    GatherGraphFrame,
    arrange,
    classify,
    graph_from,
    maximal_paths,
)
from .machine import Call, Frame, Return, SPIN
from .rme_lock import LockFrame, UnlockFrame
from .swap_global import SwapFrame


def _lemma6(p, my: int, v1) -> None:
    """Every node swapped into tail before ``my`` must be in the first gather."""
    order = p.mem.swap_order
    try:
        pos = order.index(my)
    except ValueError:
        return  # vacuous: this operation never swapped its node in
    missing = [u for u in order[:pos] if u not in v1]
    if missing:
        raise InvariantViolation(
            f"p{p.pid}: nodes {missing} swapped before node {my} missing from first gather")


class RecoverIndFrame(Frame):
    """RECOVER(val) for process ``p``; re-invoked from the top after each crash."""

    __slots__ = ("pc", "k", "val")

    def __init__(self, val: Any) -> None:
        self.pc = "R_READ"
        self.k = 1
        self.val = val

    def label(self) -> str:
        if self.pc == "COLLECT_END_REC":
            return f"COLLECT_END_REC_{self.k}"
        return self.pc

    def step(self, p):
        mem = p.mem
        env = p.env
        pid = p.pid
        pc = self.pc
        if pc == "R_READ":
            my = mem.read_announce(pid, pid)
            env["myNode"] = my
            if my is None or mem.read_field(pid, my, "seq") < mem.seq[pid]:
                self.pc = "R_SWAPPED"
                return Call(SwapFrame(self.val))
            self.pc = "R_INWORK2"
            return None
        if pc == "R_INWORK2":
            mem.write_in_work(pid, env["myNode"], 2)
            self.pc = "R_CHECK_PREV"
            return Call(LockFrame())
        if pc == "R_CHECK_PREV":
            if mem.read_field(pid, env["myNode"], "prev") is not None:
                return self._to_collect(env)
            self.pc = "R_LEMMA6"
            return Call(GatherGraphFrame("r.g1", phase="GATHER1"))
        if pc == "READ_TAIL":
            env["r.tail"] = mem.read_tail(pid)
            self.pc = "AWAIT_TAIL"
            return None
        if pc == "AWAIT_TAIL":
            if mem.read_field(pid, env["r.tail"], "in_work") == 1:
                return SPIN
            self.pc = "R_COMPUTE"
            return Call(GatherGraphFrame("r.g2", phase="GATHER2"))
        if pc == "SPLICE":
            mem.write_prev(pid, env["myNode"], env["r.target"])
            return self._to_collect(env)
        if pc == "COLLECT_END_REC":
            c = env["collect"] + (mem.read_vts(pid, self.k),)
            if self.k == p.n:
                mem.write_end_vts(pid, env["myNode"], c)
                self.pc = "R_RETURN"
                return Call(UnlockFrame())
            env["collect"] = c
            self.k += 1
            return None
        if pc == "R_RETURN":
            prev = mem.read_field(pid, env["myNode"], "prev")
            if prev is None:
                raise InvariantViolation(f"p{pid}: recovered node has no predecessor")
            return Return(mem.read_field(pid, prev, "val"))
        raise InvariantViolation(f"p{pid}: recovery stepped at {pc}")

    def _to_collect(self, env) -> None:
        env["collect"] = ()
        self.k = 1
        self.pc = "COLLECT_END_REC"
        return None

    def resume(self, p, value):
        pc = self.pc
        if pc == "R_SWAPPED":
            return Return(value)
        if pc == "R_LEMMA6":
            _lemma6(p, p.env["myNode"], p.env["r.g1"][0])
            self.pc = "READ_TAIL"
            return None
        if pc == "R_COMPUTE":
            return self._compute(p)
        if pc == "R_REEXEC":
            self.pc = "R_RETURN"
            return Call(UnlockFrame())
        # R_CHECK_PREV after the lock, R_RETURN after the unlock
        return None

    def _compute(self, p):
        """Local work on the gathered graphs; consumes no extra step."""
        env = p.env
        mem = p.mem
        my = env["myNode"]
        v1, e1 = env["r.g1"]
        v2, e2 = env["r.g2"]
        tail_node = env["r.tail"]
        g = graph_from([(v1, e1), (v2, e2)])
        g.V.add(TAILNODE)
        g.V.add(tail_node)
        # a stale tail read: tailNode already has a successor in the graph
        if tail_node not in g.E.values():
            g.E[TAILNODE] = tail_node
        paths = maximal_paths(g)
        my_path = next((q for q in paths if my in q), None)
        if my_path is None:
            raise InvariantViolation(f"p{p.pid}: node {my} is on no gathered path")
        if len(my_path) == 1:
            self.pc = "R_REEXEC"
            return Call(SwapFrame(self.val, start="PRIM_SWAP"))
        cls = classify(paths, separate_singles=False)
        if cls.full_path is not None:
            raise InvariantViolation(f"p{p.pid}: full path while node {my} is unlinked")
        if cls.head_path is None:
            raise InvariantViolation(f"p{p.pid}: no head fragment")
        # myPath joins the sort even when it is the tail fragment, so a fragment
        # that must stay above it is never chosen as its successor
        pieces = list(cls.middle_paths)
        if my_path not in pieces:
            pieces.append(my_path)
        ord_paths = arrange(pieces, mem.heap, first=my_path)
        after = ord_paths[ord_paths.index(my_path) + 1:]
        target = next((q[0] for q in after if q[0] in v1), cls.head_path[0])
        env["r.target"] = target
        self.pc = "SPLICE"
        return None
