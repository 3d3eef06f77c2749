"""Recoverable mutual-exclusion lock from reads and writes.

A tournament tree of two-process Peterson locks. Every cell lives in
non-volatile memory (``Memory.lock``):

* ``("flag", node, side)`` and ``("victim", node)`` per tree node,
* ``("level", p)``: how many tree levels ``p`` currently holds,
* ``("status", p)``: one of :data:`FREE`, :data:`TRYING`, :data:`IN_CS`,
  :data:`EXITING`.

``lock`` doubles as its own recovery procedure: a process that crashed inside
the critical section finds ``IN_CS`` and re-enters at once, one that crashed
in the exit section finishes the release first, and one that crashed while
contending resumes at the level it had reached.
"""

from __future__ import annotations

from typing import Optional

from .core import InvariantViolation
from .machine import Call, Frame, Process, Return, SPIN
from .memory import Memory

FREE, TRYING, IN_CS, EXITING = 0, 1, 2, 3
STATUS_NAMES = {FREE: "FREE", TRYING: "TRYING", IN_CS: "IN_CS", EXITING: "EXITING"}


def tree_size(n: int) -> int:
    size = 1
    while size < n:
        size *= 2
    return size


def tree_levels(n: int) -> int:
    return tree_size(n).bit_length() - 1


def position(n: int, pid: int, level: int) -> tuple[int, int]:
    """(tree node, side) that ``pid`` contends for at ``level`` (0 = leaves)."""
    leaf = (tree_size(n) + pid - 1) >> level
    return leaf >> 1, leaf & 1


def holders(mem: Memory) -> list[int]:
    """Processes satisfying the holder predicate."""
    return [p for p in range(1, mem.n + 1) if mem.lock.get(("status", p), FREE) == IN_CS]


class LockFrame(Frame):
    """Acquire the lock; also the recovery entry point after a crash."""

    __slots__ = ("pc", "lvl")

    def __init__(self) -> None:
        self.pc = "L_STATUS"
        self.lvl = 0

    def label(self) -> str:
        return self.pc

    def step(self, p: Process):
        mem = p.mem
        pid = p.pid
        pc = self.pc
        if pc == "L_STATUS":
            status = mem.read_lock(pid, ("status", pid))
            if status == IN_CS:
                return Return(None)
            if status == EXITING:
                self.pc = "L_TRYING"
                return Call(UnlockFrame(resume=True))
            self.pc = "L_LEVEL" if status == TRYING else "L_TRYING"
            return None
        if pc == "L_TRYING":
            mem.write_lock(pid, ("status", pid), TRYING)
            self.lvl = 0
            self.pc = "L_FLAG" if tree_levels(p.n) else "L_ENTER"
            return None
        if pc == "L_LEVEL":
            self.lvl = mem.read_lock(pid, ("level", pid))
            self.pc = "L_FLAG" if self.lvl < tree_levels(p.n) else "L_ENTER"
            return None
        if pc == "L_ENTER":
            if holders(mem):
                raise InvariantViolation(f"p{pid} entered while {holders(mem)} hold the lock")
            mem.write_lock(pid, ("status", pid), IN_CS)
            return Return(None)
        node, side = position(p.n, pid, self.lvl)
        if pc == "L_FLAG":
            mem.write_lock(pid, ("flag", node, side), 1)
            self.pc = "L_VICTIM"
        elif pc == "L_VICTIM":
            mem.write_lock(pid, ("victim", node), side)
            self.pc = "L_CHK_FLAG"
        elif pc == "L_CHK_FLAG":
            if mem.read_lock(pid, ("flag", node, 1 - side)):
                self.pc = "L_CHK_VICTIM"
            else:
                self.pc = "L_WON"
        elif pc == "L_CHK_VICTIM":
            if mem.read_lock(pid, ("victim", node)) == side:
                self.pc = "L_CHK_FLAG"
                return SPIN
            self.pc = "L_WON"
        else:  # L_WON
            self.lvl += 1
            mem.write_lock(pid, ("level", pid), self.lvl)
            self.pc = "L_FLAG" if self.lvl < tree_levels(p.n) else "L_ENTER"
        return None

    def resume(self, p: Process, value):
        return None


class UnlockFrame(Frame):
    """Release the lock, clearing flags from the top of the tree down.

    With ``resume=True`` it finishes a release interrupted by a crash.
    """

    __slots__ = ("pc", "lvl")

    def __init__(self, resume: bool = False) -> None:
        self.pc = "U_LEVEL" if resume else "U_EXITING"
        self.lvl = 0

    def label(self) -> str:
        return self.pc

    def step(self, p: Process):
        mem = p.mem
        pid = p.pid
        pc = self.pc
        if pc == "U_EXITING":
            if mem.lock.get(("status", pid), FREE) != IN_CS:
                raise InvariantViolation(f"p{pid} released a lock it does not hold")
            mem.write_lock(pid, ("status", pid), EXITING)
            self.pc = "U_LEVEL"
        elif pc == "U_LEVEL":
            self.lvl = mem.read_lock(pid, ("level", pid))
            self.pc = "U_CLEAR" if self.lvl else "U_FREE"
        elif pc == "U_CLEAR":
            node, side = position(p.n, pid, self.lvl - 1)
            mem.write_lock(pid, ("flag", node, side), 0)
            self.pc = "U_DEC"
        elif pc == "U_DEC":
            self.lvl -= 1
            mem.write_lock(pid, ("level", pid), self.lvl)
            self.pc = "U_CLEAR" if self.lvl else "U_FREE"
        else:  # U_FREE
            mem.write_lock(pid, ("status", pid), FREE)
            return Return(None)
        return None


class LockClientFrame(Frame):
    """Test workload: ``rounds`` lock / critical-section / unlock cycles.

    The completed-round counter is non-volatile, so the same frame serves as
    the client's recovery procedure. ``on_cs`` is called with the pid at each
    critical-section step.
    """

    __slots__ = ("pc", "rounds", "on_cs")

    def __init__(self, rounds: int, on_cs=None) -> None:
        self.pc = "C_LOCK"
        self.rounds = rounds
        self.on_cs = on_cs

    def label(self) -> str:
        return self.pc

    def key(self) -> tuple:
        return ("client", self.pc, self.rounds)

    def step(self, p: Process):
        mem = p.mem
        if self.pc == "C_LOCK":
            self.pc = "C_CS"
            return Call(LockFrame())
        if self.pc == "C_CS":
            if holders(mem) != [p.pid]:
                raise InvariantViolation(f"p{p.pid} in CS with holders {holders(mem)}")
            if self.on_cs is not None:
                self.on_cs(p.pid)
            done = mem.read_lock(p.pid, ("done", p.pid))
            if done < self.rounds:
                mem.write_lock(p.pid, ("done", p.pid), done + 1)
            self.pc = "C_NEXT"
            return Call(UnlockFrame())
        if mem.read_lock(p.pid, ("done", p.pid)) >= self.rounds:
            return Return(None)
        self.pc = "C_LOCK"
        return None

    def resume(self, p: Process, value):
        return None


def lock_state(mem: Memory, pid: int) -> tuple[str, int]:
    """(status name, level) of one process, for diagnostics."""
    return (STATUS_NAMES[mem.lock.get(("status", pid), FREE)],
            mem.lock.get(("level", pid), 0))


def run_lock_clients(n: int, rounds: int, schedule, crashes: Optional[dict] = None,
                     budget: int = 100_000) -> tuple[list[int], int]:
    """Drive ``n`` lock clients with a pid-per-step schedule iterator.

    ``crashes`` maps a global step index to the pid crashed before that
    step; the crashed client restarts immediately. Returns the sequence of
    critical-section entries and the number of steps used.
    """
    mem = Memory(n)
    entries: list[int] = []
    procs = {p: Process(p, mem) for p in range(1, n + 1)}
    for p in procs.values():
        p.start(LockClientFrame(rounds, entries.append))
    crashes = crashes or {}
    steps = 0
    for pid in schedule:
        if all(p.finished for p in procs.values()) or steps >= budget:
            break
        victim = crashes.get(steps)
        if victim is not None:
            procs[victim].crash_reset()
            procs[victim].start(LockClientFrame(rounds, entries.append))
        proc = procs[pid]
        if proc.busy:
            proc.step()
        steps += 1
    return entries, steps
