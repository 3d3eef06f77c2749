"""Simulated persistent shared memory.

Everything reachable from :class:`Memory` is non-volatile and survives every
crash. Per-process volatile state lives in :class:`VolatileEnv` and is wiped
by :meth:`VolatileEnv.crash_reset`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from .core import (
    BOTTOM,
    InvariantViolation,
    LostStateError,
    NodeRecord,
    PrevRewriteFault,
)

HEAD = 0  # heap index of the sentinel head node


class _Poison:
    __slots__ = ()

    def __repr__(self) -> str:
        return "POISON"


POISON = _Poison()

# inWork transitions the algorithms may perform; identity writes are also fine
_IN_WORK_MOVES = {(0, 1), (1, 0), (1, 2), (0, 2), (2, 0)}


class VolatileEnv(dict):
    """Local variables of one process.

    Reading a slot that was lost in a crash (or never written) raises
    :class:`LostStateError` instead of returning a stale value.
    """

    __slots__ = ("pid", "pc")

    def __init__(self, pid: int) -> None:
        super().__init__()
        self.pid = pid
        self.pc: Any = None

    def __missing__(self, key: str) -> Any:
        raise LostStateError(f"p{self.pid}: read of lost volatile slot {key!r}")

    def crash_reset(self) -> None:
        self.clear()
        self.pc = POISON

    def copy(self) -> "VolatileEnv":  # type: ignore[override]
        env = VolatileEnv(self.pid)
        env.update(self)
        env.pc = self.pc
        return env


@dataclass(frozen=True)
class MemorySnapshot:
    tail: int
    announce: tuple
    vts: tuple
    heap: tuple
    seq: tuple
    lock: tuple

    def node(self, ref: int) -> NodeRecord:
        return self.heap[ref]


class Memory:
    """Non-volatile state of one swap object plus harness-owned cells.

    Node references are heap indices. ``seq``/``args`` belong to the harness:
    they model ``SEQ_p`` and the persisted invocation arguments.
    """

    def __init__(self, n: int, independent: bool = False, trace: bool = False) -> None:
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.independent = independent
        zero = (0,) * n
        head = NodeRecord(BOTTOM, 0, 0, start_vts=zero, end_vts=zero, announced=True)
        self.heap: list[NodeRecord] = [head]
        self.tail = HEAD
        self.announce: list[Optional[int]] = [HEAD] + [None] * n
        self.vts = [0] * n
        self.seq = [0] * (n + 1)
        self.args: list[Any] = [None] * (n + 1)
        self.lock: dict = {}
        self.trace: Optional[list] = [] if trace else None
        self.monitor = None
        # audit-only ground truth
        self.swap_order: list[int] = []
        self.indeg = [0]

    # -- structure -------------------------------------------------------
    def clone(self) -> "Memory":
        m = Memory.__new__(Memory)
        m.n = self.n
        m.independent = self.independent
        m.heap = [r.copy() for r in self.heap]
        m.tail = self.tail
        m.announce = list(self.announce)
        m.vts = list(self.vts)
        m.seq = list(self.seq)
        m.args = list(self.args)
        m.lock = dict(self.lock)
        m.trace = None if self.trace is None else list(self.trace)
        m.monitor = None
        m.swap_order = list(self.swap_order)
        m.indeg = list(self.indeg)
        return m

    def snapshot(self) -> MemorySnapshot:
        return MemorySnapshot(
            tail=self.tail,
            announce=tuple(self.announce),
            vts=tuple(self.vts),
            heap=tuple(r.copy() for r in self.heap),
            seq=tuple(self.seq),
            lock=tuple(sorted(self.lock.items())),
        )

    def fingerprint(self) -> tuple:
        return (
            self.tail,
            tuple(self.announce),
            tuple(self.vts),
            tuple(r.key() for r in self.heap),
            tuple(self.seq),
            tuple(sorted(self.lock.items())),
        )

    def _log(self, pid: int, op: str, addr: Any, value: Any) -> None:
        self.trace.append((pid, op, addr, value))

    # -- allocation ------------------------------------------------------
    def alloc(self, pid: int, val: Any, seq: int) -> int:
        ref = len(self.heap)
        self.heap.append(NodeRecord(val, seq, pid))
        self.indeg.append(0)
        if self.trace is not None:
            self._log(pid, "alloc", ref, (val, seq))
        return ref

    def node(self, ref: int) -> NodeRecord:
        if ref is POISON or ref is None:
            raise LostStateError(f"dereference of {ref!r}")
        return self.heap[ref]

    # -- shared cells ----------------------------------------------------
    def read_tail(self, pid: int) -> int:
        if self.trace is not None:
            self._log(pid, "read", "tail", self.tail)
        return self.tail

    def primitive_swap_tail(self, pid: int, ref: int) -> int:
        if ref is POISON:
            raise LostStateError("primitive swap of a lost node reference")
        old = self.tail
        if self.indeg[ref] or ref == old:
            raise InvariantViolation(f"node {ref} swapped into tail while already linked")
        self.tail = ref
        self.swap_order.append(ref)
        if self.trace is not None:
            self._log(pid, "swap", "tail", (old, ref))
        if self.monitor is not None:
            self.monitor.on_swap(self, ref)
        return old

    def read_announce(self, pid: int, i: int) -> Optional[int]:
        if self.trace is not None:
            self._log(pid, "read", ("Nodes", i), self.announce[i])
        return self.announce[i]

    def write_announce(self, pid: int, i: int, ref: int) -> None:
        if pid != i:
            raise InvariantViolation(f"p{pid} wrote Nodes[{i}]")
        self.heap[ref].announced = True
        self.announce[i] = ref
        if self.trace is not None:
            self._log(pid, "write", ("Nodes", i), ref)

    def vts_increment(self, pid: int) -> None:
        self.vts[pid - 1] += 1
        if self.trace is not None:
            self._log(pid, "write", ("VTS", pid), self.vts[pid - 1])

    def read_vts(self, pid: int, k: int) -> int:
        v = self.vts[k - 1]
        if self.trace is not None:
            self._log(pid, "read", ("VTS", k), v)
        return v

    # -- node fields -----------------------------------------------------
    def read_field(self, pid: int, ref: int, name: str) -> Any:
        v = getattr(self.node(ref), name)
        if self.trace is not None:
            self._log(pid, "read", (ref, name), v)
        return v

    def write_prev(self, pid: int, ref: int, target: int) -> None:
        rec = self.node(ref)
        old = rec.prev
        if old is not None:
            if old != target:
                raise PrevRewriteFault(f"node {ref}: prev {old} -> {target}")
            return
        if target is None or target is POISON:
            raise LostStateError(f"node {ref}: prev set to {target!r}")
        if self.indeg[target] or self.tail == target:
            raise InvariantViolation(
                f"node {target} would gain a second predecessor (writer node {ref})")
        rec.prev = target
        self.indeg[target] += 1
        if self.trace is not None:
            self._log(pid, "write", (ref, "prev"), target)
        if self.monitor is not None:
            self.monitor.on_prev(self, ref)

    def write_prev_execution(self, pid: int, ref: int, target: Optional[int]) -> None:
        rec = self.node(ref)
        if rec.announced:
            raise InvariantViolation(f"node {ref}: prevExecution written after announce")
        rec.prev_execution = target
        if self.trace is not None:
            self._log(pid, "write", (ref, "prev_execution"), target)

    def write_start_vts(self, pid: int, ref: int, vts: tuple) -> None:
        self.node(ref).start_vts = vts
        if self.trace is not None:
            self._log(pid, "write", (ref, "start_vts"), vts)

    def write_end_vts(self, pid: int, ref: int, vts: tuple) -> None:
        self.node(ref).end_vts = vts
        if self.trace is not None:
            self._log(pid, "write", (ref, "end_vts"), vts)
        if self.monitor is not None:
            self.monitor.on_end(self, ref)

    def write_in_work(self, pid: int, ref: int, value: int) -> None:
        rec = self.node(ref)
        if rec.in_work != value and (rec.in_work, value) not in _IN_WORK_MOVES:
            raise InvariantViolation(f"node {ref}: inWork {rec.in_work} -> {value}")
        rec.in_work = value
        if self.trace is not None:
            self._log(pid, "write", (ref, "in_work"), value)

    # -- lock cells ------------------------------------------------------
    def read_lock(self, pid: int, key: tuple) -> Any:
        v = self.lock.get(key, 0)
        if self.trace is not None:
            self._log(pid, "read", ("lock",) + key, v)
        return v

    def write_lock(self, pid: int, key: tuple, value: Any) -> None:
        self.lock[key] = value
        if self.trace is not None:
            self._log(pid, "write", ("lock",) + key, value)

    # -- audit helpers (not scheduler steps) ------------------------------
    def list_from_tail(self) -> list[int]:
        """Follow prev pointers from tail; stops on null or on a repeat."""
        out = []
        seen = set()
        cur: Optional[int] = self.tail
        while cur is not None and cur not in seen:
            seen.add(cur)
            out.append(cur)
            cur = self.heap[cur].prev
        return out

    def announced_nodes(self) -> list[int]:
        """Every node reachable from Nodes[] through prevExecution."""
        out = []
        for i in range(self.n + 1):
            cur = self.announce[i]
            while cur is not None:
                out.append(cur)
                cur = self.heap[cur].prev_execution
        return out
