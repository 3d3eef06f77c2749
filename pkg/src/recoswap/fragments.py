"""Recovery graph machinery shared by both swap algorithms.

A fragment is a maximal chain of nodes linked by ``prev`` pointers. Crashes
between the tail swap and the persist of ``prev`` split the logical list into
several fragments; recovery gathers them into a graph, classifies them and
splices them back together in an order that respects real time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .core import CycleFault, InvariantViolation, NodeRecord, PathOrder, path_compare
from .machine import Frame, Return, SPIN
from .memory import HEAD, Memory

TAILNODE = -1  # volatile marker vertex standing for the tail variable

Path = tuple


@dataclass
class FragmentGraph:
    V: set = field(default_factory=set)
    E: dict = field(default_factory=dict)  # u -> v meaning u.prev == v

    def add_node(self, u: int, prev: Optional[int]) -> None:
        self.V.add(u)
        if prev is not None:
            self.V.add(prev)
            self.E[u] = prev


@dataclass
class FragmentClassification:
    head_path: Optional[Path]
    tail_path: Optional[Path]
    middle_paths: list
    single_nodes: list
    full_path: Optional[Path] = None


def gather_graph_plain(mem: Memory) -> FragmentGraph:
    """Collect every announced node and every persisted prev edge.

    This reads shared memory directly, so the caller must be the only actor
    touching it (the global recovery procedure).
    """
    g = FragmentGraph()
    heap = mem.heap
    for i in range(mem.n + 1):
        cur = mem.announce[i]
        while cur is not None:
            rec = heap[cur]
            g.add_node(cur, rec.prev)
            cur = rec.prev_execution
    return g


def maximal_paths(g: FragmentGraph) -> list[Path]:
    """Split an in/out-degree <= 1 graph into its maximal paths."""
    indeg: dict = {}
    for u, v in g.E.items():
        if u not in g.V or v not in g.V:
            raise InvariantViolation(f"edge ({u}, {v}) leaves the vertex set")
        indeg[v] = indeg.get(v, 0) + 1
        if indeg[v] > 1:
            raise InvariantViolation(f"vertex {v} has two predecessors")
    paths = []
    covered = 0
    for s in sorted(v for v in g.V if v not in indeg):
        path = [s]
        cur = g.E.get(s)
        while cur is not None:
            path.append(cur)
            cur = g.E.get(cur)
        covered += len(path)
        paths.append(tuple(path))
    if covered != len(g.V):
        raise CycleFault("fragment graph contains a cycle")
    return paths


def classify(paths: Iterable[Path], separate_singles: bool) -> FragmentClassification:
    """Partition maximal paths into head, tail, middle and single fragments.

    The sentinel's fragment is always the head fragment, even when the
    sentinel is isolated.
    """
    head = tail = full = None
    middle: list = []
    singles: list = []
    for path in paths:
        has_tail = TAILNODE in path
        has_head = HEAD in path
        if has_tail and has_head:
            full = path
        elif has_tail:
            tail = path
        elif has_head:
            head = path
        elif separate_singles and len(path) == 1:
            singles.append(path[0])
        else:
            middle.append(path)
    return FragmentClassification(head, tail, middle, singles, full)


def _start_key(heap: Sequence[NodeRecord], path: Path) -> tuple:
    rec = heap[next(v for v in path if v != TAILNODE)]
    return (rec.pid, rec.seq)


def arrange(fragments: Sequence[Path], heap: Sequence[NodeRecord],
            first: Optional[Path] = None) -> list[Path]:
    """Order fragments so that whenever A succeeds B, A comes first.

    The succession relation is only a partial relation, so this is a
    topological sort over pairwise comparisons with ties broken by the
    (pid, seq) of each fragment's first node. ``first``, if given, wins
    every tie, so it lands as early as the relation allows.
    """
    k = len(fragments)
    recs = [[heap[v] for v in f if v != TAILNODE] for f in fragments]
    after: list[list[int]] = [[] for _ in range(k)]
    indeg = [0] * k
    for i in range(k):
        for j in range(i + 1, k):
            order = path_compare(recs[i], recs[j])
            if order is PathOrder.A_SUCC_B:
                after[i].append(j)
                indeg[j] += 1
            elif order is PathOrder.B_SUCC_A:
                after[j].append(i)
                indeg[i] += 1
    keys = [(0,) if f == first else (1,) + _start_key(heap, f) for f in fragments]
    ready = [i for i in range(k) if indeg[i] == 0]
    out = []
    while ready:
        ready.sort(key=keys.__getitem__)
        i = ready.pop(0)
        out.append(fragments[i])
        for j in after[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
    if len(out) != k:
        raise CycleFault("fragment succession relation is cyclic")
    return out


def splice_plan(cls: FragmentClassification, heap: Sequence[NodeRecord]) -> list[tuple]:
    """prev writes that append every middle/single fragment, then the head."""
    if cls.tail_path is None or cls.head_path is None:
        raise InvariantViolation("no head or tail fragment to splice between")
    pieces = list(cls.middle_paths) + [(s,) for s in cls.single_nodes]
    end = cls.tail_path[-1]
    writes = []
    for path in arrange(pieces, heap):
        writes.append((end, path[0]))
        end = path[-1]
    writes.append((end, cls.head_path[0]))
    return writes


def check_degrees(mem: Memory) -> None:
    """Every node has at most one predecessor, counting tail as one."""
    seen: dict = {mem.tail: "tail"}
    for ref, rec in enumerate(mem.heap):
        if rec.prev is None:
            continue
        if rec.prev in seen:
            raise InvariantViolation(
                f"node {rec.prev} pointed to by {seen[rec.prev]} and node {ref}")
        seen[rec.prev] = f"node {ref}"


class GatherGraphFrame(Frame):
    """Awaiting graph gather run by a lock-holding recoverer.

    Each announced node is added only once its inWork flag reads 0 or 2, so
    no node in the result has a prev pointer that may still change. Waiting
    is a spin: the step is consumed without progress. The result
    ``(V, E)`` is written to the caller's volatile slot ``out``.
    """

    __slots__ = ("pc", "out", "phase")

    def __init__(self, out: str, phase: str = "GATHER") -> None:
        self.pc = "GATHER_START"
        self.out = out
        self.phase = phase

    def label(self) -> str:
        return self.phase

    def key(self) -> tuple:
        return ("gather", self.pc, self.out, self.phase)

    def step(self, p):
        env = p.env
        mem = p.mem
        if self.pc == "GATHER_START":
            env["g.j"] = 0
            env["g.V"] = frozenset()
            env["g.E"] = frozenset()
            self.pc = "GATHER_READ_SLOT"
            return None
        if self.pc == "GATHER_READ_SLOT":
            j = env["g.j"]
            cur = mem.read_announce(p.pid, j)
            if cur is None:
                return self._next_slot(p, j)
            env["g.cur"] = cur
            self.pc = "GATHER_VISIT"
            return None
        # GATHER_VISIT
        cur = env["g.cur"]
        in_work = mem.read_field(p.pid, cur, "in_work")
        if in_work == 1:
            return SPIN
        prev = mem.read_field(p.pid, cur, "prev")
        if prev is None:
            env["g.V"] = env["g.V"] | {cur}
        else:
            env["g.V"] = env["g.V"] | {cur, prev}
            env["g.E"] = env["g.E"] | {(cur, prev)}
        nxt = mem.read_field(p.pid, cur, "prev_execution")
        if nxt is None:
            return self._next_slot(p, env["g.j"])
        env["g.cur"] = nxt
        return None

    def _next_slot(self, p, j: int):
        if j >= p.mem.n:
            p.env[self.out] = (p.env["g.V"], p.env["g.E"])
            return Return(None)
        p.env["g.j"] = j + 1
        self.pc = "GATHER_READ_SLOT"
        return None


def graph_from(parts: Iterable[tuple]) -> FragmentGraph:
    g = FragmentGraph()
    for V, E in parts:
        g.V |= set(V)
        for u, v in E:
            old = g.E.get(u)
            if old is not None and old != v:
                raise InvariantViolation(f"node {u} has two prev values in the gathered graph")
            g.E[u] = v
    return g


def nodes_of(heap: Sequence[NodeRecord], path: Path) -> list[NodeRecord]:
    return [heap[v] for v in path if v != TAILNODE]


def prev_edges(mem: Memory) -> Mapping[int, int]:
    return {ref: rec.prev for ref, rec in enumerate(mem.heap) if rec.prev is not None}
