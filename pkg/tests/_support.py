"""Shared helpers for the test suite."""

from __future__ import annotations

import random
from typing import Optional

from recoswap.core import BOTTOM, EventKind, HistoryEvent, OpIdentity, Value
from recoswap.machine import Process
from recoswap.memory import HEAD, Memory, MemorySnapshot
from recoswap.rme_lock import IN_CS, LockClientFrame, holders
from recoswap.sim import (
    FIGURE1_OPS,
    AtLabel,
    AtStep,
    CrashPlan,
    Model,
    RandomCrash,
    RunConfig,
)
from recoswap.swap_global import SwapFrame

GRECOVER_LABELS = ("G_BUILD", "SPLICE", "PRIM_SWAP", "PERSIST_PREV", "COLLECT_END")


def drive(proc: Process, limit: int = 10_000) -> int:
    """Step ``proc`` until its procedure returns; returns the step count."""
    steps = 0
    while not proc.finished:
        proc.step()
        steps += 1
        if steps > limit:
            raise AssertionError("procedure did not finish")
    proc.finished = False
    return steps


def swap_solo(mem: Memory, pid: int, val=None):
    """Run one complete SWAP by ``pid``; returns (result, node ref)."""
    mem.seq[pid] += 1
    val = val if val is not None else Value(pid, mem.seq[pid])
    mem.args[pid] = val
    p = Process(pid, mem)
    p.start(SwapFrame(val))
    drive(p)
    return p.result, p.env["myNode"]


def swap_until(mem: Memory, pid: int, label: str) -> Process:
    """Start a SWAP by ``pid`` and stop just before the step labelled ``label``."""
    mem.seq[pid] += 1
    val = Value(pid, mem.seq[pid])
    mem.args[pid] = val
    p = Process(pid, mem)
    p.start(SwapFrame(val))
    while p.label() != label:
        p.step()
        if p.finished:
            raise AssertionError(f"label {label} never reached")
    return p


def global_stress_config(seed: int) -> RunConfig:
    """1-3 system-wide crashes at random steps, sometimes one inside GRECOVER."""
    r = random.Random(seed)
    n = 2 + seed % 3
    ops = 1 + (seed // 3) % 3
    span = n * ops * (8 + 2 * n)
    steps = sorted(r.sample(range(1, span), r.randint(1, 3)))
    triggers: list = [AtStep(s) for s in steps]
    if r.random() < 0.2:
        triggers.append(AtLabel(0, r.choice(GRECOVER_LABELS), 1))
    return RunConfig(model=Model.GLOBAL, n=n, ops_per_process=ops, seed=seed,
                     crash_plan=CrashPlan(tuple(triggers)), check_level="full")


def independent_stress_config(seed: int) -> RunConfig:
    """Per-step crash rate between 0.002 and 0.02, finite re-admission delay."""
    n = 2 + seed % 3
    ops = 1 + (seed // 3) % 4
    rate = 0.02 * ((seed % 10) + 1) / 10
    return RunConfig(model=Model.INDEPENDENT, n=n, ops_per_process=ops, seed=seed,
                     crash_plan=CrashPlan((RandomCrash(rate, "any", None, seed % 7),)),
                     check_level="full")


def single_list_problem(snap: MemorySnapshot) -> Optional[str]:
    """None iff the prev list from tail holds every announced node once and
    ends at the sentinel."""
    chain = []
    seen = set()
    cur: Optional[int] = snap.tail
    while cur is not None:
        if cur in seen:
            return f"cycle at node {cur}"
        seen.add(cur)
        chain.append(cur)
        cur = snap.heap[cur].prev
    if chain[-1] != HEAD:
        return f"list ends at node {chain[-1]}"
    announced = []
    for i in range(len(snap.announce)):
        cur = snap.announce[i]
        while cur is not None:
            announced.append(cur)
            cur = snap.heap[cur].prev_execution
    if len(announced) != len(set(announced)):
        return "a node is announced twice"
    if set(announced) != set(chain):
        return f"list {sorted(chain)} != announced {sorted(announced)}"
    return None


def figure_value(op: str):
    """The operand swapped in by a fixture operation."""
    return Value(*FIGURE1_OPS[op])


def node_of(heap, op: str) -> int:
    """Heap index of the node that carries a fixture operation's operand."""
    val = figure_value(op)
    return next(i for i, r in enumerate(heap) if r.val == val)


# pending-op returns that the recovery may produce for the fixture
FIGURE1_ASSIGNMENTS = (
    {"op1": "op0", "op4": "op2", "op5": "op3", "op7": "op6"},
    {"op1": "op0", "op7": "op2", "op4": "op7", "op5": "op3"},
    {"op1": "op0", "op4": "op2", "op7": "op3", "op5": "op7"},
)


def figure_returns(history) -> dict:
    """op name -> op name whose operand it returned (or 'BOTTOM')."""
    by_op = {v: k for k, v in FIGURE1_OPS.items()}
    by_val = {figure_value(k): k for k in FIGURE1_OPS}
    out = {}
    for e in history:
        if e.kind is EventKind.RES:
            out[by_op[(e.op.pid, e.op.seq)]] = "BOTTOM" if e.ret is BOTTOM else by_val[e.ret]
    return out


def random_history(r: random.Random, max_ops: int = 8) -> list:
    """Random unique-operand history, usually linearizable, sometimes not."""
    k = r.randint(1, max_ops)
    procs = r.randint(1, 4)
    ops = []
    for i in range(k):
        ops.append((r.randint(1, procs), i))
    # per process, ops run one at a time; each gets a linearization point
    points = []  # (time, kind, op index)
    clock = {p: 0.0 for p in range(1, procs + 1)}
    last = {pid: idx for idx, (pid, _) in enumerate(ops)}
    for idx, (pid, _) in enumerate(ops):
        start = clock[pid] + r.random()
        lin = start + r.random()
        end = lin + r.random()
        clock[pid] = end
        points.append((start, 0, idx))
        points.append((lin, 1, idx))
        if last[pid] != idx or r.random() > 0.15:
            points.append((end, 2, idx))
    points.sort()
    state = BOTTOM
    ret = {}
    for _, kind, idx in points:
        if kind == 1:
            ret[idx] = state
            state = Value(ops[idx][0], idx + 1)
    if r.random() < 0.4:
        victim = r.randrange(k)
        ret[victim] = r.choice([BOTTOM] + [Value(p, i + 1) for p, i in ops])
    events = []
    seq = {}
    for _, kind, idx in points:
        pid = ops[idx][0]
        if kind == 0:
            seq[pid] = seq.get(pid, 0) + 1
            op = OpIdentity(pid, seq[pid])
            events.append(HistoryEvent(EventKind.INV, pid, len(events), op, Value(pid, idx + 1)))
        elif kind == 2:
            events.append(HistoryEvent(EventKind.RES, pid, len(events), OpIdentity(pid, seq[pid]),
                                       ret=ret[idx]))
    return events


def _in_cs(p: Process) -> bool:
    return len(p.stack) == 1 and p.label() == "C_CS"


def lock_client(mem: Memory, pid: int, rounds: int, log=None) -> Process:
    p = Process(pid, mem)
    p.start(LockClientFrame(rounds, log))
    return p


def explore_lock_pair(rounds: int, crashes: int) -> tuple[int, int]:
    """Every interleaving (and crash placement) of two lock clients.

    Returns (states, terminal states); asserts mutual exclusion everywhere and
    that termination stays reachable.
    """
    mem = Memory(2)
    root = (mem, [None] + [lock_client(mem, p, rounds) for p in (1, 2)], crashes)

    def key(state):
        mem, procs, c = state
        return (mem.fingerprint(), procs[1].fingerprint(), procs[2].fingerprint(), c)

    def clone(state):
        mem, procs, c = state
        m = mem.clone()
        return (m, [None] + [p.clone(m) for p in procs[1:]], c)

    seen = {key(root): 0}
    succs = [[]]
    terminals = []
    stack = [(0, root)]
    while stack:
        sid, state = stack.pop()
        mem, procs, c = state
        assert sum(_in_cs(p) for p in procs[1:]) <= 1
        assert len(holders(mem)) <= 1
        acts = [("step", p) for p in (1, 2) if procs[p].busy]
        if c:
            acts += [("crash", p) for p in (1, 2) if procs[p].busy]
        if not acts:
            terminals.append(sid)
            continue
        for kind, pid in acts:
            nxt = clone(state)
            m, ps, cc = nxt
            if kind == "crash":
                ps[pid].crash_reset()
                ps[pid].start(LockClientFrame(rounds))
                nxt = (m, ps, cc - 1)
            else:
                ps[pid].step()
            k = key(nxt)
            if k not in seen:
                seen[k] = len(succs)
                succs.append([])
                stack.append((seen[k], nxt))
            succs[sid].append(seen[k])
    # every state can still reach a terminal state
    preds = [[] for _ in succs]
    for a, outs in enumerate(succs):
        for b in outs:
            preds[b].append(a)
    live = set(terminals)
    work = list(terminals)
    while work:
        for a in preds[work.pop()]:
            if a not in live:
                live.add(a)
                work.append(a)
    assert len(live) == len(succs)
    return len(succs), len(terminals)


def lock_csr_trial(seed: int) -> tuple[int, int]:
    """Random lock clients with crashes of the holder inside its critical
    section. Returns (crashes followed by an entry, those whose next entry
    was the crashed holder's). A repeated crash before re-entry supersedes
    the earlier one."""
    r = random.Random(seed)
    n = r.choice([2, 3, 4, 5])
    mem = Memory(n)
    entries: list = []
    procs = [None] + [lock_client(mem, p, 2, entries.append) for p in range(1, n + 1)]
    expect = None
    crashes = checked = first = 0
    for _ in range(20_000):
        live = [p for p in range(1, n + 1) if procs[p].busy]
        if not live:
            break
        pid = r.choice(live)
        if crashes < 3 and mem.lock.get(("status", pid)) == IN_CS and r.random() < 0.3:
            procs[pid].crash_reset()
            procs[pid].start(LockClientFrame(2, entries.append))
            expect = (pid, len(entries))
            crashes += 1
            continue
        procs[pid].step()
        if expect is not None and len(entries) > expect[1]:
            checked += 1
            first += entries[expect[1]] == expect[0]
            expect = None
    if any(procs[p].busy for p in range(1, n + 1)):
        raise AssertionError(f"seed {seed}: lock clients did not finish")
    return checked, first
