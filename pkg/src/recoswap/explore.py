"""Exhaustive small-scope exploration of the independent failures model.

Every reachable state is expanded with every enabled action: one step of a
runnable process, a crash of a process with a pending operation (while the
crash budget lasts) and the re-admission of a crashed process. Re-admission
is an action rather than a timer, so every delay is covered. States are
deduplicated on their fingerprint, which includes the order of invocation
and response events: the checked property depends on nothing else in the
history, so every distinct terminal history is still checked.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .checker import check_nrl
from .core import EventKind, HistoryEvent, OpIdentity, RecoSwapError, Value
from .machine import Process
from .memory import Memory
from .sim import InvariantMonitor
from .swap_global import SwapFrame
from .swap_indep import RecoverIndFrame


@dataclass
class ExploreResult:
    states: int = 0
    transitions: int = 0
    terminals: int = 0
    histories: int = 0
    stuck: int = 0  # states from which no terminal state is reachable
    failures: list = field(default_factory=list)
    truncated: bool = False
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures and not self.stuck and not self.truncated


class _State:
    __slots__ = ("mem", "procs", "remaining", "pending", "down", "crashes", "history", "visible")

    @classmethod
    def initial(cls, n: int, ops: int, crashes: int) -> "_State":
        s = cls()
        s.mem = Memory(n, independent=True)
        s.mem.monitor = InvariantMonitor()
        s.procs = [Process(p, s.mem) for p in range(n + 1)]
        s.remaining = [0] + [ops] * n
        s.pending = [None] * (n + 1)
        s.down = frozenset()
        s.crashes = crashes
        s.history = ()
        s.visible = ()
        return s

    def clone(self) -> "_State":
        s = _State()
        mem = self.mem.clone()
        mon = InvariantMonitor()
        for ref, rec in enumerate(mem.heap):
            if rec.prev is not None:
                mon.succ[rec.prev] = ref
        mem.monitor = mon
        s.mem = mem
        s.procs = [p.clone(mem) for p in self.procs]
        s.remaining = list(self.remaining)
        s.pending = list(self.pending)
        s.down = self.down
        s.crashes = self.crashes
        s.history = self.history
        s.visible = self.visible
        return s

    def key(self) -> tuple:
        return (
            self.mem.fingerprint(),
            tuple(p.fingerprint() for p in self.procs[1:]),
            tuple(self.remaining),
            tuple(self.pending),
            self.down,
            self.crashes,
            self.visible,
        )

    def actions(self) -> list:
        acts = []
        for pid in range(1, len(self.procs)):
            if pid in self.down:
                acts.append(("readmit", pid))
                continue
            if self.procs[pid].stack or self.remaining[pid] > 0:
                acts.append(("step", pid))
            if self.crashes and self.pending[pid] is not None:
                acts.append(("crash", pid))
        return acts

    def apply(self, act: tuple) -> None:
        kind, pid = act
        proc = self.procs[pid]
        if kind == "crash":
            self._emit(EventKind.CRASH, pid, self.pending[pid])
            proc.crash_reset()
            self.down = self.down | {pid}
            self.crashes -= 1
            return
        if kind == "readmit":
            self.down = self.down - {pid}
            self._emit(EventKind.REC, pid, self.pending[pid])
            proc.start(RecoverIndFrame(self.mem.args[pid]))
            return
        if not proc.stack:
            mem = self.mem
            mem.seq[pid] += 1
            val = Value(pid, mem.seq[pid])
            mem.args[pid] = val
            self.remaining[pid] -= 1
            self.pending[pid] = OpIdentity(pid, mem.seq[pid])
            self._emit(EventKind.INV, pid, self.pending[pid], arg=val)
            proc.start(SwapFrame(val))
        proc.step()
        if proc.finished:
            proc.finished = False
            self._emit(EventKind.RES, pid, self.pending[pid], ret=proc.result)
            self.pending[pid] = None

    def _emit(self, kind, pid, op, arg=None, ret=None) -> None:
        self.history = self.history + (HistoryEvent(kind, pid, len(self.history), op, arg, ret),)
        if kind is EventKind.INV or kind is EventKind.RES:
            self.visible = self.visible + ((kind, op, arg, ret),)


def explore(n: int = 2, ops: int = 1, crashes: int = 2, max_states: int = 2_000_000,
            check: bool = True) -> ExploreResult:
    """Explore every schedule and crash placement of a small workload.

    ``crashes`` bounds the total number of crashes along any path. Terminal
    histories are checked with the brute-force NRL checker.
    """
    t0 = time.perf_counter()
    res = ExploreResult()
    root = _State.initial(n, ops, crashes)
    ids: dict = {root.key(): 0}
    succs: list[list[int]] = [[]]
    terminal_ids: list[int] = []
    verdicts: dict = {}
    stack: list[tuple[int, _State]] = [(0, root)]
    while stack:
        sid, state = stack.pop()
        acts = state.actions()
        if not acts:
            terminal_ids.append(sid)
            res.terminals += 1
            sig = state.visible
            if sig not in verdicts:
                verdicts[sig] = check_nrl(list(state.history), method="brute") if check else None
                v = verdicts[sig]
                if v is not None and not v:
                    res.failures.append((v.reason, state.history))
            continue
        out = succs[sid]
        for act in acts:
            nxt = state.clone()
            try:
                nxt.apply(act)
            except RecoSwapError as e:
                res.failures.append((f"{act}: {e}", nxt.history))
                continue
            res.transitions += 1
            k = nxt.key()
            tid = ids.get(k)
            if tid is None:
                if len(ids) >= max_states:
                    res.truncated = True
                    continue
                tid = len(ids)
                ids[k] = tid
                succs.append([])
                stack.append((tid, nxt))
            out.append(tid)
    res.states = len(ids)
    res.histories = len(verdicts)
    res.stuck = _count_stuck(succs, terminal_ids)
    res.seconds = time.perf_counter() - t0
    return res


def _count_stuck(succs: list, terminals: list) -> int:
    preds: list[list[int]] = [[] for _ in succs]
    for a, outs in enumerate(succs):
        for b in outs:
            preds[b].append(a)
    seen = bytearray(len(succs))
    work = list(terminals)
    for t in terminals:
        seen[t] = 1
    while work:
        b = work.pop()
        for a in preds[b]:
            if not seen[a]:
                seen[a] = 1
                work.append(a)
    return len(succs) - sum(seen)
