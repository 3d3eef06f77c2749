"""Line-delimited JSON trace files.

The first line is the run header. Every following line is one record with a
``record`` field: ``event`` (a history event), ``step`` (a low-level memory
access) or ``snapshot`` (a memory image taken at a system-wide crash).
Records are written with sorted keys and no spaces, so a read/write round
trip is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, TextIO

from .core import EventKind, HistoryEvent, NodeRecord, OpIdentity
from .memory import MemorySnapshot
from .sim import FORMAT_VERSION, RunResult, config_to_header, decode_value, dumps, encode_value


class TraceFormatError(ValueError):
    """A trace file that cannot be parsed."""


@dataclass
class TraceFile:
    header: dict
    events: list = field(default_factory=list)
    steps: Optional[list] = None
    snapshots: Optional[list] = None


# -- records -------------------------------------------------------------------


def event_to_json(e: HistoryEvent) -> dict:
    d: dict = {"record": "event", "kind": e.kind.value, "pid": e.pid, "step": e.step}
    if e.op is not None:
        d["op"] = [e.op.pid, e.op.seq]
    if e.kind is EventKind.INV:
        d["arg"] = encode_value(e.arg)
    elif e.kind is EventKind.RES:
        d["ret"] = encode_value(e.ret)
    return d


def event_from_json(d: dict) -> HistoryEvent:
    kind = EventKind(d["kind"])
    op = d.get("op")
    return HistoryEvent(
        kind=kind,
        pid=int(d["pid"]),
        step=int(d["step"]),
        op=None if op is None else OpIdentity(int(op[0]), int(op[1])),
        arg=decode_value(d["arg"]) if kind is EventKind.INV else None,
        ret=decode_value(d["ret"]) if kind is EventKind.RES else None,
    )


def _node_to_json(rec: NodeRecord) -> dict:
    return {
        "val": encode_value(rec.val), "seq": rec.seq, "pid": rec.pid,
        "prev": rec.prev, "prevExecution": rec.prev_execution,
        "startVts": None if rec.start_vts is None else list(rec.start_vts),
        "endVts": None if rec.end_vts is None else list(rec.end_vts),
        "inWork": rec.in_work, "announced": rec.announced,
    }


def _node_from_json(d: dict) -> NodeRecord:
    return NodeRecord(
        decode_value(d["val"]), int(d["seq"]), int(d["pid"]), d["prev"], d["prevExecution"],
        None if d["startVts"] is None else tuple(d["startVts"]),
        None if d["endVts"] is None else tuple(d["endVts"]),
        int(d["inWork"]), bool(d["announced"]),
    )


def snapshot_to_json(s: MemorySnapshot) -> dict:
    return {
        "record": "snapshot",
        "tail": s.tail,
        "announce": list(s.announce),
        "vts": list(s.vts),
        "seq": list(s.seq),
        "heap": [_node_to_json(r) for r in s.heap],
        "lock": [[list(k), v] for k, v in s.lock],
    }


def snapshot_from_json(d: dict) -> MemorySnapshot:
    return MemorySnapshot(
        tail=d["tail"],
        announce=tuple(d["announce"]),
        vts=tuple(d["vts"]),
        heap=tuple(_node_from_json(r) for r in d["heap"]),
        seq=tuple(d["seq"]),
        lock=tuple((tuple(k), v) for k, v in d["lock"]),
    )


def _jsonable(x: Any) -> Any:
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if x is None or isinstance(x, (int, str, float, bool)):
        return x
    return repr(x)


def step_to_json(s: tuple) -> dict:
    pid, op, addr, value = s
    return {"record": "step", "pid": pid, "op": op, "addr": _jsonable(addr),
            "value": _jsonable(value)}


# -- whole files ---------------------------------------------------------------


def from_result(result: RunResult, with_steps: bool = False,
                with_snapshots: bool = True) -> TraceFile:
    return TraceFile(
        header=config_to_header(result.config),
        events=list(result.history),
        steps=[step_to_json(s) for s in result.trace] if with_steps and result.trace else None,
        snapshots=list(result.crash_snapshots) if with_snapshots else None,
    )


def lines(tf: TraceFile) -> Iterable[str]:
    yield dumps(tf.header)
    for e in tf.events:
        yield dumps(event_to_json(e))
    for s in tf.steps or ():
        yield dumps(s)
    for snap in tf.snapshots or ():
        yield dumps(snapshot_to_json(snap))


def write(tf: TraceFile, fh: TextIO) -> None:
    for line in lines(tf):
        fh.write(line)
        fh.write("\n")


def dump_path(tf: TraceFile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write(tf, fh)


def read(fh: TextIO) -> TraceFile:
    header = None
    events: list = []
    steps: list = []
    snaps: list = []
    for lineno, line in enumerate(fh, 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as e:
            raise TraceFormatError(f"line {lineno}: {e}") from None
        if not isinstance(d, dict):
            raise TraceFormatError(f"line {lineno}: expected a JSON object")
        try:
            if header is None:
                if d.get("formatVersion") != FORMAT_VERSION:
                    raise TraceFormatError(f"line {lineno}: unsupported or missing formatVersion")
                for key in ("model", "n", "seed", "schedulerPolicy", "crashPlan"):
                    if key not in d:
                        raise TraceFormatError(f"header lacks {key!r}")
                header = d
                continue
            kind = d.get("record")
            if kind == "event":
                events.append(event_from_json(d))
            elif kind == "step":
                steps.append(d)
            elif kind == "snapshot":
                snaps.append(snapshot_from_json(d))
            else:
                raise TraceFormatError(f"line {lineno}: unknown record {kind!r}")
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, TraceFormatError):
                raise
            raise TraceFormatError(f"line {lineno}: {e}") from None
    if header is None:
        raise TraceFormatError("empty trace file")
    tf = TraceFile(header, events, steps or None, snaps or None)
    validate(tf)
    return tf


def load_path(path: str) -> TraceFile:
    with open(path, encoding="utf-8") as fh:
        return read(fh)


def validate(tf: TraceFile) -> None:
    """Header ``n`` covers every pid seen and steps never go backwards."""
    n = tf.header["n"]
    last = -1
    for i, e in enumerate(tf.events):
        if not 1 <= e.pid <= n:
            raise TraceFormatError(f"event {i}: pid {e.pid} outside 1..{n}")
        if e.step < last:
            raise TraceFormatError(f"event {i}: step index goes backwards")
        last = e.step
