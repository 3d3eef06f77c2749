"""Correctness checks over recorded histories.

* :func:`check_recoverable_well_formed` and :func:`strip` handle crash and
  recovery events.
* :func:`check_linearizable_bruteforce` searches completions and linear
  orders for any sequential specification.
* :func:`check_swap_fast` is an exact polynomial check for swap histories
  with unique operands.
* :func:`check_nrl` combines them.
* :func:`check_distinguishable` is a small oracle for distinguishable
  operations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional, Sequence

from . import kernels
from .core import BOTTOM, EventKind, HistoryEvent, RecoSwapError, Verdict

DEFAULT_BOUND = 10


class CheckRefused(RecoSwapError):
    """The input is outside what the requested checker handles."""


@dataclass(frozen=True)
class Op:
    """One operation of a crash-free history."""

    pid: int
    op: Any
    arg: Any
    ret: Any  # None while pending
    inv: int  # event position
    res: Optional[int]

    @property
    def pending(self) -> bool:
        return self.res is None


@dataclass(frozen=True)
class SequentialSpec:
    """``apply(state, arg) -> (new_state, response)``."""

    name: str
    init: Any
    apply: Callable[[Any, Any], tuple]


SWAP_SPEC = SequentialSpec("swap", BOTTOM, lambda state, arg: (arg, state))


# -- well-formedness -----------------------------------------------------------

_IDLE, _PENDING, _CRASHED, _CRASHED_IDLE = range(4)


def check_recoverable_well_formed(history: Sequence[HistoryEvent]) -> Verdict:
    """Every crash of a process is its last event or is followed by its
    recovery, and the crash-free projection is well formed."""
    state: dict = {}
    current: dict = {}
    last_step = None
    for i, e in enumerate(history):
        if last_step is not None and e.step < last_step:
            return Verdict(False, f"event {i}: step index goes backwards")
        last_step = e.step
        s = state.get(e.pid, _IDLE)
        kind = e.kind
        if kind is EventKind.INV:
            if s != _IDLE:
                return Verdict(False, f"event {i}: p{e.pid} invokes while not idle")
            state[e.pid] = _PENDING
            current[e.pid] = e.op
        elif kind is EventKind.RES:
            if s != _PENDING or current.get(e.pid) != e.op:
                return Verdict(False, f"event {i}: p{e.pid} responds without a matching invocation")
            state[e.pid] = _IDLE
        elif kind is EventKind.CRASH:
            if s in (_CRASHED, _CRASHED_IDLE):
                return Verdict(False, f"event {i}: p{e.pid} crashes twice without recovering")
            if s == _PENDING and e.op is not None and e.op != current.get(e.pid):
                return Verdict(False, f"event {i}: p{e.pid} crash names the wrong operation")
            state[e.pid] = _CRASHED if s == _PENDING else _CRASHED_IDLE
        elif kind is EventKind.REC:
            if s not in (_CRASHED, _CRASHED_IDLE):
                return Verdict(False, f"event {i}: p{e.pid} recovers without a crash")
            state[e.pid] = _PENDING if s == _CRASHED else _IDLE
        else:  # pragma: no cover
            return Verdict(False, f"event {i}: unknown kind {kind!r}")
    return Verdict(True)


def strip(history: Iterable[HistoryEvent]) -> list[HistoryEvent]:
    """Drop crash and recovery events."""
    return [e for e in history if e.kind is EventKind.INV or e.kind is EventKind.RES]


def operations(history: Sequence[HistoryEvent]) -> list[Op]:
    """Pair invocations with responses in a crash-free history."""
    open_: dict = {}
    ops: list = []
    for i, e in enumerate(history):
        if e.kind is EventKind.INV:
            if e.pid in open_:
                raise CheckRefused(f"p{e.pid} has two open invocations")
            open_[e.pid] = len(ops)
            ops.append(Op(e.pid, e.op, e.arg, None, i, None))
        elif e.kind is EventKind.RES:
            k = open_.pop(e.pid, None)
            if k is None:
                raise CheckRefused(f"p{e.pid} responds with nothing open")
            o = ops[k]
            ops[k] = Op(o.pid, o.op, o.arg, e.ret, o.inv, i)
        else:
            raise CheckRefused("history still contains crash or recovery events")
    return ops


# -- brute force ---------------------------------------------------------------


def _witness(ops: Sequence[Op], order: Sequence[int]) -> list:
    return [ops[i].op if ops[i].op is not None else i for i in order]


def check_linearizable_bruteforce(history: Sequence[HistoryEvent],
                                  spec: SequentialSpec = SWAP_SPEC,
                                  bound: int = DEFAULT_BOUND) -> Verdict:
    """Search for a completion and a legal linear extension of real time.

    Pending operations are either dropped or linearized with the response
    the specification forces at that point.
    """
    ops = operations(strip(history))
    if len(ops) > bound:
        raise CheckRefused(f"{len(ops)} operations exceed the brute-force bound of {bound}")
    inv = [o.inv for o in ops]
    res = [-1 if o.res is None else o.res for o in ops]
    if spec is SWAP_SPEC:
        codes: dict = {BOTTOM: 0}
        for o in ops:
            codes.setdefault(o.arg, len(codes))
        argc = [codes[o.arg] for o in ops]
        retc = [-2 if o.pending else codes.get(o.ret, -1) for o in ops]
        order = kernels.bf_swap(argc, retc, inv, res)
    else:
        order = _bf_generic(ops, spec, inv, res)
    if order is None:
        return Verdict(False, "no completion has a legal linearization")
    return Verdict(True, witness=_witness(ops, order))


def _bf_generic(ops: Sequence[Op], spec: SequentialSpec, inv: list, res: list) -> Optional[list]:
    n = len(ops)
    must = [sum(1 << j for j in range(n) if 0 <= res[j] < inv[i]) for i in range(n)]
    done = sum(1 << i for i in range(n) if res[i] >= 0)
    failed: set = set()
    order: list = []

    def dfs(mask: int, state: Any) -> bool:
        if mask & done == done:
            return True
        try:
            key = (mask, state)
            hash(key)
        except TypeError:
            key = (mask, repr(state))
        if key in failed:
            return False
        for i in range(n):
            if mask >> i & 1 or must[i] & ~mask:
                continue
            new, resp = spec.apply(state, ops[i].arg)
            if not ops[i].pending and resp != ops[i].ret:
                continue
            order.append(i)
            if dfs(mask | 1 << i, new):
                return True
            order.pop()
        failed.add(key)
        return False

    return order if dfs(0, spec.init) else None


# -- fast swap check -----------------------------------------------------------

_FAST_REASONS = {
    kernels.FAST_CYCLE: "returns form a cycle that never reaches the initial value",
    kernels.FAST_SEGMENT_ORDER: "a forced predecessor chain contradicts real-time order",
    kernels.FAST_SEGMENT_CYCLE: "chains cannot be ordered consistently with real time",
    kernels.FAST_BEFORE_START: "an operation completes before the chain from the initial value begins",
}


def check_swap_fast(history: Sequence[HistoryEvent]) -> Verdict:
    """Exact linearizability check for swap histories with unique operands.

    Each completed operation's return fixes its immediate predecessor. The
    forced chains are cut into segments that begin at the initial value or
    at a pending operation; the history is linearizable iff every return
    names a known operand at most once and the segments can be ordered
    consistently with real time.
    """
    ops = operations(strip(history))
    owner: dict = {}
    for i, o in enumerate(ops):
        if o.arg is BOTTOM:
            raise CheckRefused("BOTTOM used as an operand")
        if o.arg in owner:
            raise CheckRefused(f"operand {o.arg!r} used twice")
        owner[o.arg] = i
    pred = []
    taken: dict = {}
    for i, o in enumerate(ops):
        if o.pending:
            pred.append(-2)
            continue
        if o.ret is BOTTOM:
            p = -1
        else:
            p = owner.get(o.ret)
            if p is None:
                return Verdict(False, f"{o.op} returned {o.ret!r}, which no operation swapped in")
            if p == i:
                return Verdict(False, f"{o.op} returned its own operand")
        if p in taken:
            what = "BOTTOM" if p == -1 else repr(ops[p].arg)
            return Verdict(False, f"{what} returned by both {ops[taken[p]].op} and {o.op}")
        taken[p] = i
        pred.append(p)
    code, order = kernels.fast_swap(pred, [o.inv for o in ops],
                                    [-1 if o.res is None else o.res for o in ops])
    if code != kernels.FAST_OK:
        return Verdict(False, _FAST_REASONS[code])
    return Verdict(True, witness=_witness(ops, order))


# -- NRL -----------------------------------------------------------------------


def _unique_operands(history: Sequence[HistoryEvent]) -> bool:
    args = [e.arg for e in history if e.kind is EventKind.INV]
    return BOTTOM not in args and len(args) == len(set(args))


def check_nrl(history: Sequence[HistoryEvent], method: str = "auto",
              bound: int = DEFAULT_BOUND) -> Verdict:
    """Recoverable well-formedness plus linearizability of the stripped history.

    ``method`` is ``fast``, ``brute`` or ``auto`` (fast when operands are
    unique, else brute force).
    """
    wf = check_recoverable_well_formed(history)
    if not wf:
        return Verdict(False, f"not recoverable well-formed: {wf.reason}")
    stripped = strip(history)
    if method == "auto":
        method = "fast" if _unique_operands(stripped) else "brute"
    if method == "fast":
        return check_swap_fast(stripped)
    if method == "brute":
        return check_linearizable_bruteforce(stripped, bound=bound)
    raise ValueError(f"unknown method {method!r}")


# -- distinguishability --------------------------------------------------------


def check_distinguishable(op: Callable[[Any, Any], tuple], init: Any,
                          values: Iterable[Any], max_base: int = 2) -> Optional[tuple]:
    """Find ``(base, x, y, z)`` such that after the base history, whichever of
    ``op(x)`` and ``op(y)`` is applied first returns ``z`` and the second
    does not. Returns the witness or None.
    """
    vals = list(values)
    for length in range(max_base + 1):
        for base in itertools.product(vals, repeat=length):
            state = init
            for a in base:
                state, _ = op(state, a)
            for x, y in itertools.permutations(vals, 2):
                s1, rx = op(state, x)
                _, ry_after = op(s1, y)
                s2, ry = op(state, y)
                _, rx_after = op(s2, x)
                if rx == ry and rx != ry_after and ry != rx_after:
                    return (base, x, y, rx)
    return None


def check_distinguishable_swap(values: Iterable[Any]) -> bool:
    """Swap is distinguishable over ``values`` (empty base, ``z`` = BOTTOM)."""
    vals = list(values)
    if len(set(vals)) < 2:
        raise ValueError("need at least two distinct values")
    if BOTTOM in vals:
        raise ValueError("BOTTOM cannot be an operand")
    return check_distinguishable(SWAP_SPEC.apply, BOTTOM, vals) is not None
