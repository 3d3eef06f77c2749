"""Domain types shared by the simulator, the recovery code and the checkers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple

VectorTimestamp = Tuple[int, ...]


class RecoSwapError(Exception):
    """Base class for every error raised by this package."""


class InvariantViolation(RecoSwapError, AssertionError):
    """A hard fault: some safety property of the algorithms was broken."""


class PrevRewriteFault(InvariantViolation):
    pass


class CycleFault(InvariantViolation):
    pass


class LostStateError(InvariantViolation):
    """Volatile state lost in a crash was used before being rewritten."""


class _Bottom:
    __slots__ = ()
    _instance: Optional["_Bottom"] = None

    def __new__(cls) -> "_Bottom":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BOTTOM"

    def __reduce__(self):
        return (_Bottom, ())

    # BOTTOM sorts before every Value
    def __lt__(self, other: object) -> bool:
        return other is not self

    def __gt__(self, other: object) -> bool:
        return False


BOTTOM = _Bottom()


class Value(NamedTuple):
    """A swap operand. Workload operands encode the invoking operation."""

    pid: int
    seq: int

    def __repr__(self) -> str:
        return f"v{self.pid}.{self.seq}"


class OpIdentity(NamedTuple):
    pid: int
    seq: int


@dataclass(slots=True)
class NodeRecord:
    """Non-volatile record of one SWAP operation.

    ``prev`` and ``prev_execution`` hold heap indices. ``pid`` and
    ``announced`` are audit metadata; the algorithms never read them.
    """

    val: object
    seq: int
    pid: int
    prev: Optional[int] = None
    prev_execution: Optional[int] = None
    start_vts: Optional[VectorTimestamp] = None
    end_vts: Optional[VectorTimestamp] = None
    in_work: int = 0
    announced: bool = False

    def copy(self) -> "NodeRecord":
        return NodeRecord(
            self.val, self.seq, self.pid, self.prev, self.prev_execution,
            self.start_vts, self.end_vts, self.in_work, self.announced,
        )

    def key(self) -> tuple:
        return (self.val, self.seq, self.pid, self.prev, self.prev_execution,
                self.start_vts, self.end_vts, self.in_work, self.announced)


def vts_dominates(u: Sequence[int], v: Sequence[int]) -> bool:
    """True iff ``u >= v`` componentwise with at least one strict entry."""
    if len(u) != len(v):
        raise InvariantViolation(f"timestamp length mismatch: {len(u)} vs {len(v)}")
    strict = False
    for a, b in zip(u, v):
        if a < b:
            return False
        if a > b:
            strict = True
    return strict


class PathOrder(enum.Enum):
    A_SUCC_B = "A_SUCC_B"
    B_SUCC_A = "B_SUCC_A"
    EQUAL = "EQUAL"


def _succeeds(a: Sequence[NodeRecord], b: Sequence[NodeRecord]) -> bool:
    ends = [nb.end_vts for nb in b if nb.end_vts is not None]
    if not ends:
        return False
    for na in a:
        start = na.start_vts
        if start is None:
            continue
        for end in ends:
            if vts_dominates(start, end):
                return True
    return False


def path_compare(a: Sequence[NodeRecord], b: Sequence[NodeRecord]) -> PathOrder:
    """Order two fragments by their node timestamps.

    A fragment succeeds another when one of its nodes started after a node
    of the other ended. Nodes without an end timestamp are never the
    dominated side.
    """
    ab = _succeeds(a, b)
    ba = _succeeds(b, a)
    if ab and ba:
        raise InvariantViolation("fragments succeed each other in both directions")
    if ab:
        return PathOrder.A_SUCC_B
    if ba:
        return PathOrder.B_SUCC_A
    return PathOrder.EQUAL


class EventKind(str, enum.Enum):
    INV = "INV"
    RES = "RES"
    CRASH = "CRASH"
    REC = "REC"


@dataclass(frozen=True, slots=True)
class HistoryEvent:
    kind: EventKind
    pid: int
    step: int = 0
    op: Optional[OpIdentity] = None
    arg: object = None
    ret: object = None

    def key(self) -> tuple:
        """Identity of the event without its step index."""
        return (self.kind.value, self.pid, self.op, self.arg, self.ret)


@dataclass
class Verdict:
    """Checker answer. Truthy iff the checked property holds."""

    ok: bool
    reason: str = ""
    witness: Optional[list] = field(default=None)

    def __bool__(self) -> bool:
        return self.ok
