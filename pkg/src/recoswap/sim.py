"""Deterministic scheduler, crash injector and run orchestration.

One :class:`Simulation` drives application processes ``1..n`` (and, in the
system-wide model, the recovery actor ``0``) one atomic step at a time.
Everything is reproducible from the :class:`RunConfig`.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Union

from .core import (
    BOTTOM,
    EventKind,
    HistoryEvent,
    InvariantViolation,
    OpIdentity,
    RecoSwapError,
    Value,
    vts_dominates,
)
from .kernels import XorShift64Star
from .memory import HEAD, Memory, MemorySnapshot
from .machine import Process
from .swap_global import GRecoverFrame, RecoverIndividualFrame, SwapFrame
from .swap_indep import RecoverIndFrame

DEFAULT_STEP_BUDGET = 1_000_000
FIXTURE_FIGURE1 = "fixture:figure1"


class ConfigError(RecoSwapError, ValueError):
    """Invalid run configuration or crash plan."""


class Model(str, enum.Enum):
    GLOBAL = "global"
    INDEPENDENT = "independent"


class Policy(str, enum.Enum):
    ROUND_ROBIN = "round_robin"
    SEEDED_RANDOM = "seeded_random"
    SCRIPTED = "scripted"


class Outcome(str, enum.Enum):
    COMPLETED = "COMPLETED"
    BLOCKED = "BLOCKED"
    INCOMPLETE = "INCOMPLETE"


def default_step_budget() -> int:
    raw = os.environ.get("RECOSWAP_STEP_BUDGET")
    return int(raw) if raw else DEFAULT_STEP_BUDGET


# -- crash plans ---------------------------------------------------------------

Scope = Union[str, int]  # "all", "any" or a pid


@dataclass(frozen=True)
class AtStep:
    step: int
    scope: Scope = "all"
    delay: int = 0


@dataclass(frozen=True)
class AtLabel:
    pid: int
    label: str
    occurrence: int = 1
    scope: Optional[Scope] = None  # defaults to "all" (global) or pid
    delay: int = 0


@dataclass(frozen=True)
class RandomCrash:
    rate: float
    scope: Scope = "all"
    max_count: Optional[int] = None
    delay: int = 0


Trigger = Union[AtStep, AtLabel, RandomCrash]


@dataclass(frozen=True)
class CrashPlan:
    triggers: tuple = ()

    def to_json(self) -> list:
        out = []
        for t in self.triggers:
            if isinstance(t, AtStep):
                d = {"kind": "step", "step": t.step}
            elif isinstance(t, AtLabel):
                d = {"kind": "label", "pid": t.pid, "label": t.label,
                     "occurrence": t.occurrence}
            else:
                d = {"kind": "rate", "rate": t.rate}
                if t.max_count is not None:
                    d["max"] = t.max_count
            if t.scope is not None:
                d["scope"] = t.scope
            if t.delay:
                d["delay"] = t.delay
            out.append(d)
        return out

    @classmethod
    def from_json(cls, data: Any) -> "CrashPlan":
        if isinstance(data, dict):
            data = data.get("triggers", [])
        if not isinstance(data, list):
            raise ConfigError("crash plan JSON must be a list of triggers")
        triggers = []
        for d in data:
            try:
                kind = d["kind"]
                scope = d.get("scope")
                delay = int(d.get("delay", 0))
                if kind == "step":
                    triggers.append(AtStep(int(d["step"]), scope or "all", delay))
                elif kind == "label":
                    triggers.append(AtLabel(int(d["pid"]), str(d["label"]),
                                            int(d.get("occurrence", 1)), scope, delay))
                elif kind == "rate":
                    mx = d.get("max")
                    triggers.append(RandomCrash(float(d["rate"]), scope or "all",
                                                None if mx is None else int(mx), delay))
                else:
                    raise ConfigError(f"unknown trigger kind {kind!r}")
            except (KeyError, TypeError, ValueError) as e:
                if isinstance(e, ConfigError):
                    raise
                raise ConfigError(f"bad trigger {d!r}: {e}") from None
        return cls(tuple(triggers))


def _parse_scope(text: str) -> Scope:
    if text in ("all", "any"):
        return text
    if text.startswith("p") and text[1:].isdigit():
        return int(text[1:])
    raise ConfigError(f"bad crash scope {text!r} (use all, any or p<N>)")


def parse_crash_plan(text: str) -> CrashPlan:
    """Parse the compact crash-plan syntax.

    Triggers are separated by ``;``. Each is ``scope:key=value,...`` where the
    first key selects the kind: ``step=K``, ``label=NAME@OCC`` or ``rate=R``.
    Optional keys are ``delay=D`` and (for rates) ``max=M``. Examples::

        all:step=40;all:rate=0.01,max=3
        any:rate=0.02,delay=10
        p2:label=PRIM_SWAP@1
    """
    triggers: list = []
    text = text.strip()
    if not text or text == "none":
        return CrashPlan()
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise ConfigError(f"crash trigger {part!r} lacks a scope")
        scope_txt, body = part.split(":", 1)
        scope = _parse_scope(scope_txt.strip())
        kv = {}
        for item in body.split(","):
            if "=" not in item:
                raise ConfigError(f"bad crash trigger field {item!r}")
            k, v = item.split("=", 1)
            kv[k.strip()] = v.strip()
        try:
            delay = int(kv.pop("delay", 0))
            if "step" in kv:
                trig: Trigger = AtStep(int(kv.pop("step")), scope, delay)
            elif "label" in kv:
                label, _, occ = kv.pop("label").partition("@")
                pid = scope if isinstance(scope, int) else int(kv.pop("pid", -1))
                if pid < 0:
                    raise ConfigError("label triggers need a p<N> scope or pid=N")
                trig = AtLabel(pid, label, int(occ or 1),
                               scope if isinstance(scope, str) else None, delay)
            elif "rate" in kv:
                mx = kv.pop("max", None)
                trig = RandomCrash(float(kv.pop("rate")), scope,
                                   None if mx is None else int(mx), delay)
            else:
                raise ConfigError(f"crash trigger {part!r} has no step/label/rate")
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"bad crash trigger {part!r}: {e}") from None
        if kv:
            raise ConfigError(f"unknown crash trigger fields {sorted(kv)}")
        triggers.append(trig)
    return CrashPlan(tuple(triggers))


# -- configuration -------------------------------------------------------------


@dataclass
class RunConfig:
    model: Model = Model.GLOBAL
    n: int = 2
    ops_per_process: Union[int, Sequence[int]] = 1
    seed: int = 0
    crash_plan: CrashPlan = field(default_factory=CrashPlan)
    step_budget: int = field(default_factory=default_step_budget)
    scheduler: Policy = Policy.SEEDED_RANDOM
    script: tuple = ()  # (pid, count) runs for Policy.SCRIPTED
    check_level: str = "basic"  # none | basic | full
    record_trace: bool = False
    name: Optional[str] = None  # built-in plan name, e.g. the figure fixture

    def ops_list(self) -> list[int]:
        if isinstance(self.ops_per_process, int):
            return [self.ops_per_process] * self.n
        return list(self.ops_per_process)

    def validate(self) -> None:
        model = Model(self.model)
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.step_budget <= 0:
            raise ConfigError("step budget must be positive")
        ops = self.ops_list()
        if len(ops) != self.n or any(o < 0 for o in ops):
            raise ConfigError("ops per process must be non-negative, one per process")
        if self.check_level not in ("none", "basic", "full"):
            raise ConfigError(f"unknown check level {self.check_level!r}")
        for t in self.crash_plan.triggers:
            if t.delay < 0:
                raise ConfigError("re-admission delay must be non-negative")
            scope = t.scope
            if isinstance(t, AtLabel):
                if not 0 <= t.pid <= self.n:
                    raise ConfigError(f"label trigger names unknown pid {t.pid}")
                if t.pid == 0 and model is not Model.GLOBAL:
                    raise ConfigError("pid 0 only exists in the global model")
                if t.occurrence < 1:
                    raise ConfigError("label occurrence counts from 1")
                if scope is None:
                    scope = "all" if model is Model.GLOBAL else t.pid
            if isinstance(t, RandomCrash) and not 0.0 <= t.rate <= 1.0:
                raise ConfigError("crash rate must lie in [0, 1]")
            if isinstance(t, AtStep) and t.step < 0:
                raise ConfigError("crash step must be non-negative")
            if model is Model.GLOBAL and scope != "all":
                raise ConfigError("the global model only accepts the 'all' crash scope")
            if model is Model.INDEPENDENT:
                if scope == "all":
                    raise ConfigError("the 'all' crash scope is invalid in the independent model")
                if isinstance(scope, int) and not 1 <= scope <= self.n:
                    raise ConfigError(f"crash scope names unknown pid {scope}")
        if Policy(self.scheduler) is Policy.SCRIPTED:
            for pid, count in self.script:
                if not 1 <= pid <= self.n or count < 0:
                    raise ConfigError(f"bad script entry ({pid}, {count})")


# the system-wide example: op names to (pid, seq)
FIGURE1_OPS = {
    "op0": (1, 1), "op1": (2, 1), "op2": (3, 1), "op7": (3, 2),
    "op4": (4, 1), "op3": (5, 1), "op5": (1, 2), "op6": (6, 1),
}


def figure1_config(seed: int = 0, step_budget: Optional[int] = None) -> RunConfig:
    """The eight-operation, six-process system-wide crash example.

    Operations 1, 4 and 5 swap their node into tail and crash before
    persisting ``prev``; operation 7 crashes right after announcing.
    """
    n = 6
    full = 8 + 2 * n
    through_swap = full - n - 2  # ALLOC .. PRIM_SWAP
    script = (
        (1, full), (2, through_swap), (3, full), (3, through_swap - 1),
        (4, through_swap), (5, full), (1, through_swap), (6, full),
    )
    crash_at = sum(c for _, c in script)
    return RunConfig(
        model=Model.GLOBAL, n=n, ops_per_process=[2, 1, 2, 1, 1, 1], seed=seed,
        crash_plan=CrashPlan((AtStep(crash_at),)),
        step_budget=step_budget or default_step_budget(),
        scheduler=Policy.SCRIPTED,
        script=script, check_level="full", name=FIXTURE_FIGURE1,
    )


def plan_from_text(text: str, base: RunConfig) -> RunConfig:
    """Apply a crash-plan string (or built-in plan name) to a config."""
    if text.strip() == FIXTURE_FIGURE1:
        cfg = figure1_config(base.seed, base.step_budget)
        cfg.check_level = base.check_level
        cfg.record_trace = base.record_trace
        return cfg
    base.crash_plan = parse_crash_plan(text)
    return base


# -- invariant monitor -------------------------------------------------------


class InvariantMonitor:
    """Per-write checks of the timestamp order along prev chains.

    For every node ``x`` whose end timestamp is set and every other node
    ``y`` on ``x``'s prev chain, ``y.start_vts`` must not dominate
    ``x.end_vts``.
    """

    def __init__(self) -> None:
        self.succ: dict[int, int] = {}

    def _check(self, mem: Memory, x: int, below: int) -> None:
        end = mem.heap[x].end_vts
        if end is None:
            return
        cur: Optional[int] = below
        hops = 0
        while cur is not None:
            y = mem.heap[cur]
            if cur != x and y.start_vts is not None and vts_dominates(y.start_vts, end):
                raise InvariantViolation(
                    f"node {cur} on the chain of node {x} started after it ended")
            cur = y.prev
            hops += 1
            if hops > len(mem.heap):
                raise InvariantViolation(f"prev chain from node {x} is cyclic")

    def on_swap(self, mem: Memory, ref: int) -> None:
        pass

    def on_prev(self, mem: Memory, ref: int) -> None:
        target = mem.heap[ref].prev
        self.succ[target] = ref
        x: Optional[int] = ref
        while x is not None:
            self._check(mem, x, target)
            x = self.succ.get(x)

    def on_end(self, mem: Memory, ref: int) -> None:
        rec = mem.heap[ref]
        if rec.prev is not None:
            self._check(mem, ref, rec.prev)


def check_single_list(mem: Memory) -> None:
    """After global recovery: one prev list from tail through every announced
    node exactly once, ending at the sentinel."""
    chain = mem.list_from_tail()
    if mem.heap[chain[-1]].prev is not None:
        raise InvariantViolation("prev list from tail is cyclic")
    if chain[-1] != HEAD:
        raise InvariantViolation(f"prev list from tail ends at node {chain[-1]}, not the sentinel")
    announced = mem.announced_nodes()
    if len(announced) != len(set(announced)):
        raise InvariantViolation("a node is announced twice")
    missing = set(announced) - set(chain)
    if missing:
        raise InvariantViolation(f"announced nodes {sorted(missing)} are off the list")
    extra = set(chain) - set(announced)
    if extra:
        raise InvariantViolation(f"unannounced nodes {sorted(extra)} are on the list")


# -- results -------------------------------------------------------------------


@dataclass
class RunResult:
    config: RunConfig
    history: list
    outcome: Outcome
    steps: int
    snapshot: MemorySnapshot
    op_steps: dict
    crash_snapshots: list
    trace: Optional[list] = None

    @property
    def completed(self) -> bool:
        return self.outcome is Outcome.COMPLETED


_NORMAL, _GREC, _RECOVERING = 0, 1, 2


class Simulation:
    def __init__(self, config: RunConfig) -> None:
        config.validate()
        self.config = config
        self.model = Model(config.model)
        self.independent = self.model is Model.INDEPENDENT
        self.policy = Policy(config.scheduler)
        n = config.n
        self.n = n
        mem = Memory(n, independent=self.independent, trace=config.record_trace)
        self.monitor = InvariantMonitor() if config.check_level == "full" else None
        mem.monitor = self.monitor
        self.mem = mem
        self.procs = [Process(p, mem) for p in range(n + 1)]
        self.remaining = [0] + config.ops_list()
        self.pending: list[Optional[OpIdentity]] = [None] * (n + 1)
        self.history: list[HistoryEvent] = []
        self.step = 0
        self.rng = XorShift64Star(config.seed)
        self.op_steps: dict[OpIdentity, int] = {}
        self.down: dict[int, int] = {}
        self.phase = _NORMAL
        self.crashed: list[int] = []
        self.recovering: set[int] = set()
        self.spinning: set[int] = set()
        self.crash_snapshots: list[MemorySnapshot] = []
        self.label_counts = [0] * len(config.crash_plan.triggers)
        self.rate_counts = [0] * len(config.crash_plan.triggers)
        self.script = [list(e) for e in config.script] if self.policy is Policy.SCRIPTED else []
        self.rr = 0
        self._cands: Optional[list] = None  # cached until the runnable set changes

    # -- scheduling ------------------------------------------------------
    def _candidates(self) -> list[int]:
        if self._cands is None:
            self._cands = self._compute_candidates()
        return self._cands

    def _compute_candidates(self) -> list[int]:
        if self.phase == _GREC:
            return [0]
        if self.phase == _RECOVERING:
            return sorted(self.recovering)
        procs = self.procs
        rem = self.remaining
        down = self.down
        return [p for p in range(1, self.n + 1)
                if p not in down and (procs[p].stack or rem[p] > 0)]

    def _choose(self, cands: list) -> int:
        while self.script:
            entry = self.script[0]
            if entry[1] == 0:
                self.script.pop(0)
                continue
            entry[1] -= 1
            if entry[0] not in cands:
                raise ConfigError(f"script schedules p{entry[0]}, which cannot run at step {self.step}")
            return entry[0]
        if self.policy is Policy.SEEDED_RANDOM:
            return cands[self.rng.below(len(cands))]
        for p in cands:
            if p > self.rr:
                self.rr = p
                return p
        self.rr = cands[0]
        return cands[0]

    # -- crashes ---------------------------------------------------------
    def _label_matches(self, label: Optional[str], want: str) -> bool:
        if label is None:
            return False
        if label == want:
            return True
        return label.startswith(want) and label[len(want):len(want) + 1] == "_" \
            and label[len(want) + 1:].isdigit()

    def _maybe_crash(self, pid: int) -> bool:
        fired: Optional[Trigger] = None
        for i, t in enumerate(self.config.crash_plan.triggers):
            if isinstance(t, AtStep):
                hit = t.step == self.step
            elif isinstance(t, AtLabel):
                hit = False
                if t.pid == pid and self._label_matches(self.procs[pid].label(), t.label):
                    self.label_counts[i] += 1
                    hit = self.label_counts[i] == t.occurrence
            else:
                hit = False
                if t.max_count is None or self.rate_counts[i] < t.max_count:
                    hit = self.rng.random() < t.rate
                    if hit:
                        self.rate_counts[i] += 1
            if hit and fired is None:
                fired = t
        if fired is None:
            return False
        if not self.independent:
            self._global_crash()
            return True
        scope = fired.scope
        if isinstance(fired, AtLabel) and scope is None:
            scope = fired.pid
        target = pid if scope == "any" else scope
        self._independent_crash(target, fired.delay)
        return True

    def _emit(self, kind: EventKind, pid: int, op=None, arg=None, ret=None) -> None:
        self.history.append(HistoryEvent(kind, pid, self.step, op, arg, ret))

    def _global_crash(self) -> None:
        self.crash_snapshots.append(self.mem.snapshot())
        if self.phase != _GREC:
            self.crashed = [p for p in range(1, self.n + 1) if self.pending[p] is not None]
            for p in self.crashed:
                self._emit(EventKind.CRASH, p, self.pending[p])
        for proc in self.procs:
            proc.crash_reset()
        self.spinning.clear()
        self.recovering.clear()
        self.procs[0].start(GRecoverFrame())
        self.phase = _GREC
        self._cands = None

    def _grecover_done(self) -> None:
        if self.config.check_level != "none":
            check_single_list(self.mem)
        for p in self.crashed:
            self._emit(EventKind.REC, p, self.pending[p])
            self.procs[p].start(RecoverIndividualFrame(self.mem.args[p]))
        self.recovering = set(self.crashed)
        self.crashed = []
        self.phase = _RECOVERING if self.recovering else _NORMAL
        self._cands = None

    def _independent_crash(self, pid: int, delay: int) -> None:
        if self.pending[pid] is None or pid in self.down:
            return
        self._emit(EventKind.CRASH, pid, self.pending[pid])
        self.procs[pid].crash_reset()
        self.spinning.discard(pid)
        self.down[pid] = self.step + 1 + delay
        self._cands = None

    def _readmit(self) -> None:
        for pid in sorted(self.down):
            if self.down[pid] <= self.step:
                del self.down[pid]
                self._cands = None
                self._emit(EventKind.REC, pid, self.pending[pid])
                self.procs[pid].start(RecoverIndFrame(self.mem.args[pid]))

    # -- execution -------------------------------------------------------
    def _exec(self, pid: int) -> None:
        proc = self.procs[pid]
        if not proc.stack:
            mem = self.mem
            mem.seq[pid] += 1
            seq = mem.seq[pid]
            val = Value(pid, seq)
            mem.args[pid] = val
            self.remaining[pid] -= 1
            op = OpIdentity(pid, seq)
            self.pending[pid] = op
            self.op_steps[op] = 0
            self._emit(EventKind.INV, pid, op, val)
            proc.start(SwapFrame(val))
        if proc.step():
            if self.spinning:
                self.spinning.discard(pid)
        else:
            self.spinning.add(pid)
        if pid:
            self.op_steps[self.pending[pid]] += 1
        if proc.finished:
            proc.finished = False
            if pid == 0:
                self._grecover_done()
                return
            self._emit(EventKind.RES, pid, self.pending[pid], ret=proc.result)
            self.pending[pid] = None
            self._cands = None
            if self.phase == _RECOVERING:
                self.recovering.discard(pid)
                if not self.recovering:
                    self.phase = _NORMAL

    def run(self) -> RunResult:
        budget = self.config.step_budget
        triggers = bool(self.config.crash_plan.triggers)
        below = self.rng.below
        plain = self.policy is Policy.SEEDED_RANDOM and not self.script
        while self.step < budget:
            if self.down:
                self._readmit()
            cands = self._cands
            if cands is None:
                cands = self._cands = self._compute_candidates()
            if not cands:
                if self.down:
                    self.step = max(self.step, min(self.down.values()))
                    continue
                break
            pid = cands[below(len(cands))] if plain else self._choose(cands)
            if triggers and self._maybe_crash(pid):
                self.step += 1
                continue
            self._exec(pid)
            self.step += 1
        return self._result()

    def _done(self) -> bool:
        return (self.phase == _NORMAL and not self.down
                and not any(self.remaining) and all(p is None for p in self.pending))

    def _result(self) -> RunResult:
        if self._done():
            outcome = Outcome.COMPLETED
        elif self.spinning or self.down:
            outcome = Outcome.BLOCKED
        else:
            outcome = Outcome.INCOMPLETE
        if self.config.check_level != "none":
            from .checker import check_recoverable_well_formed
            v = check_recoverable_well_formed(self.history)
            if not v:
                raise InvariantViolation(f"history is not recoverable well-formed: {v.reason}")
        return RunResult(
            config=self.config,
            history=self.history,
            outcome=outcome,
            steps=self.step,
            snapshot=self.mem.snapshot(),
            op_steps=self.op_steps,
            crash_snapshots=self.crash_snapshots,
            trace=self.mem.trace,
        )


def run(config: RunConfig) -> RunResult:
    """Execute one configured workload."""
    return Simulation(config).run()


def check_timestamp_order(result: RunResult) -> None:
    """Real-time order of completed operations is visible in their timestamps."""
    snap = result.snapshot
    node_of = {}
    for ref, rec in enumerate(snap.heap):
        if ref != HEAD and rec.announced:
            node_of[(rec.pid, rec.seq)] = rec
    spans = {}
    for e in result.history:
        if e.kind is EventKind.INV:
            spans[e.op] = [e.step, None]
        elif e.kind is EventKind.RES:
            spans[e.op][1] = e.step
    done = [(op, s) for op, s in spans.items() if s[1] is not None and tuple(op) in node_of]
    for op1, (_, r1) in done:
        end = node_of[tuple(op1)].end_vts
        if end is None:
            continue
        for op2, (i2, _) in done:
            if op2 != op1 and r1 < i2:
                if not vts_dominates(node_of[tuple(op2)].start_vts, end):
                    raise InvariantViolation(f"{op2} follows {op1} but its start does not dominate")


# -- header conversion and replay ---------------------------------------------

FORMAT_VERSION = 1


def config_to_header(config: RunConfig) -> dict:
    return {
        "formatVersion": FORMAT_VERSION,
        "model": Model(config.model).value,
        "n": config.n,
        "seed": config.seed,
        "schedulerPolicy": Policy(config.scheduler).value,
        "script": [list(e) for e in config.script],
        "crashPlan": config.name or config.crash_plan.to_json(),
        "opsPerProcess": config.ops_list(),
        "stepBudget": config.step_budget,
        "checkLevel": config.check_level,
    }


def config_from_header(header: dict) -> RunConfig:
    try:
        plan = header["crashPlan"]
        if plan == FIXTURE_FIGURE1:
            cfg = figure1_config(int(header.get("seed", 0)), int(header["stepBudget"]))
            cfg.check_level = header.get("checkLevel", cfg.check_level)
            return cfg
        return RunConfig(
            model=Model(header["model"]),
            n=int(header["n"]),
            ops_per_process=[int(x) for x in header["opsPerProcess"]],
            seed=int(header["seed"]),
            crash_plan=CrashPlan.from_json(plan),
            step_budget=int(header["stepBudget"]),
            scheduler=Policy(header["schedulerPolicy"]),
            script=tuple(tuple(e) for e in header.get("script", [])),
            check_level=header.get("checkLevel", "basic"),
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"bad trace header: {e}") from None


@dataclass
class ReplayReport:
    ok: bool
    index: Optional[int] = None
    step: Optional[int] = None
    expected: Any = None
    actual: Any = None
    message: str = ""


def replay(header: dict, events: Sequence[HistoryEvent],
           model: Optional[str] = None) -> ReplayReport:
    """Re-run the configuration in ``header`` and diff the event sequence."""
    if model is not None and Model(model).value != header.get("model"):
        raise ConfigError(f"trace was recorded under the {header.get('model')} model, not {model}")
    result = run(config_from_header(header))
    got = result.history
    for i, (want, have) in enumerate(zip(events, got)):
        if want != have:
            return ReplayReport(False, i, want.step, want, have,
                                f"divergence at event {i} (step {want.step})")
    if len(events) != len(got):
        i = min(len(events), len(got))
        want = events[i] if i < len(events) else None
        have = got[i] if i < len(got) else None
        step = (want or have).step
        return ReplayReport(False, i, step, want, have,
                            f"event count differs: trace {len(events)}, replay {len(got)}")
    return ReplayReport(True, message=f"{len(got)} events identical")


def encode_value(v: Any) -> Any:
    if v is BOTTOM or v is None:
        return None
    return [v.pid, v.seq]


def decode_value(v: Any) -> Any:
    if v is None:
        return BOTTOM
    return Value(int(v[0]), int(v[1]))


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
