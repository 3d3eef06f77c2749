"""Recoverable detectable SWAP for the system-wide failures model.

``SwapFrame`` is the SWAP procedure itself (shared with the independent
model, which adds the two inWork writes). ``GRecoverFrame`` is the global
recovery run by the system actor after a system-wide crash, and
``RecoverIndividualFrame`` is the per-process recovery that follows it.
"""

from __future__ import annotations

from typing import Any

from .core import InvariantViolation, PathOrder, path_compare
from .fragments import (
    TAILNODE,
    classify,
    gather_graph_plain,
    maximal_paths,
    nodes_of,
    splice_plan,
)
from .machine import Call, Frame, Return

# step labels of one SWAP, in execution order
SWAP_LABELS = (
    "ALLOC", "VTS_INC", "COLLECT_START", "READ_PREVEXEC", "LINK_PREVEXEC",
    "SET_INWORK1", "ANNOUNCE", "PRIM_SWAP", "PERSIST_PREV", "COLLECT_END",
    "SET_INWORK0", "RETURN",
)


def swap_step_count(n: int, independent: bool) -> int:
    """Scheduler steps of a crash-free SWAP."""
    return (10 if independent else 8) + 2 * n


def _alloc(f, p):
    mem = p.mem
    p.env["myNode"] = mem.alloc(p.pid, f.val, mem.seq[p.pid])
    f.pc = "VTS_INC"


def _vts_inc(f, p):
    p.mem.vts_increment(p.pid)
    p.env["collect"] = ()
    f.k = 1
    f.pc = "COLLECT_START"


def _collect_start(f, p):
    env = p.env
    c = env["collect"] + (p.mem.read_vts(p.pid, f.k),)
    if f.k == p.n:
        p.mem.write_start_vts(p.pid, env["myNode"], c)
        f.pc = "READ_PREVEXEC"
    else:
        env["collect"] = c
        f.k += 1


def _read_prevexec(f, p):
    p.env["prevExecution"] = p.mem.read_announce(p.pid, p.pid)
    f.pc = "LINK_PREVEXEC"


def _link_prevexec(f, p):
    env = p.env
    p.mem.write_prev_execution(p.pid, env["myNode"], env["prevExecution"])
    f.pc = "SET_INWORK1" if p.independent else "ANNOUNCE"


def _set_inwork1(f, p):
    p.mem.write_in_work(p.pid, p.env["myNode"], 1)
    f.pc = "ANNOUNCE"


def _announce(f, p):
    p.mem.write_announce(p.pid, p.pid, p.env["myNode"])
    f.pc = "PRIM_SWAP"


def _prim_swap(f, p):
    env = p.env
    env["prev"] = p.mem.primitive_swap_tail(p.pid, env["myNode"])
    f.pc = "PERSIST_PREV"


def _persist_prev(f, p):
    env = p.env
    p.mem.write_prev(p.pid, env["myNode"], env["prev"])
    env["collect"] = ()
    f.k = 1
    f.pc = "COLLECT_END"


def _collect_end(f, p):
    env = p.env
    c = env["collect"] + (p.mem.read_vts(p.pid, f.k),)
    if f.k == p.n:
        p.mem.write_end_vts(p.pid, env["myNode"], c)
        f.pc = "SET_INWORK0" if p.independent else "RETURN"
    else:
        env["collect"] = c
        f.k += 1


def _set_inwork0(f, p):
    p.mem.write_in_work(p.pid, p.env["myNode"], 0)
    f.pc = "RETURN"


def _return(f, p):
    mem = p.mem
    prev = mem.read_field(p.pid, p.env["myNode"], "prev")
    return Return(mem.read_field(p.pid, prev, "val"))


_SWAP_STEPS = {
    "ALLOC": _alloc,
    "VTS_INC": _vts_inc,
    "COLLECT_START": _collect_start,
    "READ_PREVEXEC": _read_prevexec,
    "LINK_PREVEXEC": _link_prevexec,
    "SET_INWORK1": _set_inwork1,
    "ANNOUNCE": _announce,
    "PRIM_SWAP": _prim_swap,
    "PERSIST_PREV": _persist_prev,
    "COLLECT_END": _collect_end,
    "SET_INWORK0": _set_inwork0,
    "RETURN": _return,
}


class SwapFrame(Frame):
    """SWAP(val) as a straight-line step machine.

    ``start="PRIM_SWAP"`` re-executes the tail of the procedure for the node
    already held in the volatile slot ``myNode``.
    """

    __slots__ = ("pc", "k", "val")

    def __init__(self, val: Any, start: str = "ALLOC") -> None:
        self.pc = start
        self.k = 1
        self.val = val

    def label(self) -> str:
        if self.pc == "COLLECT_START" or self.pc == "COLLECT_END":
            return f"{self.pc}_{self.k}"
        return self.pc

    def step(self, p):
        return _SWAP_STEPS[self.pc](self, p)


class GRecoverFrame(Frame):
    """Global recovery, run by the system actor while every process is down.

    Graph construction, path computation and the fragment sort are volatile
    local work done in the single ``G_BUILD`` step; every shared write after
    that is its own step. A crash anywhere restarts the procedure from
    ``G_BUILD`` and the rebuilt graph includes the prev pointers the aborted
    attempt managed to persist.
    """

    __slots__ = ("pc",)

    def __init__(self) -> None:
        self.pc = "G_BUILD"

    def label(self) -> str:
        return self.pc

    def step(self, p):
        env = p.env
        mem = p.mem
        if self.pc == "G_BUILD":
            g = gather_graph_plain(mem)
            g.V.add(TAILNODE)
            g.E[TAILNODE] = mem.read_tail(p.pid)
            cls = classify(maximal_paths(g), separate_singles=True)
            env["g.i"] = 0
            if cls.full_path is not None:
                if cls.middle_paths or cls.head_path or cls.tail_path:
                    raise InvariantViolation("full path coexists with other fragments")
                singles = sorted(cls.single_nodes,
                                 key=lambda r: (mem.heap[r].pid, mem.heap[r].seq))
                env["g.plan"] = tuple(singles)
                self.pc = "G_REEXEC"
            else:
                # a single that started after a tail-fragment node ended cannot
                # go below that fragment; it is re-executed on top afterwards
                tail_recs = nodes_of(mem.heap, cls.tail_path)
                above = [s for s in cls.single_nodes
                         if path_compare([mem.heap[s]], tail_recs) is PathOrder.A_SUCC_B]
                cls.single_nodes = [s for s in cls.single_nodes if s not in above]
                env["g.plan"] = tuple(splice_plan(cls, mem.heap))
                env["g.above"] = tuple(sorted(above, key=lambda r: (mem.heap[r].pid, mem.heap[r].seq)))
                self.pc = "SPLICE"
            return None
        plan = env["g.plan"]
        i = env["g.i"]
        if self.pc == "G_REEXEC":
            if i == len(plan):
                return Return(None)
            env["myNode"] = plan[i]
            env["g.i"] = i + 1
            return Call(SwapFrame(None, start="PRIM_SWAP"))
        # SPLICE
        end, start = plan[i]
        mem.write_prev(p.pid, end, start)
        env["g.i"] = i + 1
        if i + 1 == len(plan):
            if not env["g.above"]:
                return Return(None)
            env["g.plan"] = env["g.above"]
            env["g.i"] = 0
            self.pc = "G_REEXEC"
        return None


class RecoverIndividualFrame(Frame):
    """Per-process recovery after the global recovery has completed."""

    __slots__ = ("pc", "val")

    def __init__(self, val: Any) -> None:
        self.pc = "R_READ"
        self.val = val

    def label(self) -> str:
        return self.pc

    def step(self, p):
        mem = p.mem
        env = p.env
        if self.pc == "R_READ":
            my = mem.read_announce(p.pid, p.pid)
            env["myNode"] = my
            if my is None or mem.read_field(p.pid, my, "seq") < mem.seq[p.pid]:
                self.pc = "R_SWAP"
                return Call(SwapFrame(self.val))
            self.pc = "R_RETURN"
            return None
        # R_RETURN
        prev = mem.read_field(p.pid, env["myNode"], "prev")
        if prev is None:
            raise InvariantViolation(
                f"p{p.pid}: announced node has no predecessor after global recovery")
        return Return(mem.read_field(p.pid, prev, "val"))

    def resume(self, p, value):
        return Return(value)
