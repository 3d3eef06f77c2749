from __future__ import annotations

import itertools

import pytest
from hypothesis import given, strategies as st

from recoswap.core import (
    BOTTOM,
    InvariantViolation,
    NodeRecord,
    PathOrder,
    Value,
    path_compare,
    vts_dominates,
)
from recoswap.sim import Simulation, check_timestamp_order, figure1_config, run, RunConfig

from ._support import node_of


def _rec(start, end=None):
    return NodeRecord(Value(1, 1), 1, 1, start_vts=tuple(start),
                      end_vts=None if end is None else tuple(end))


# -- vts_dominates ---------------------------------------------------------------


def test_equal_vectors_do_not_dominate():
    assert not vts_dominates([1, 1], [1, 1])


def test_one_strict_entry_dominates():
    assert vts_dominates([2, 1], [1, 1])


def test_crossed_vectors_are_incomparable():
    assert not vts_dominates([1, 2], [2, 1])
    assert not vts_dominates([2, 1], [1, 2])


def test_dominance_matches_direct_enumeration():
    for u, v in itertools.product(itertools.product(range(3), repeat=2), repeat=2):
        ge = all(a >= b for a, b in zip(u, v))
        gt = any(a > b for a, b in zip(u, v))
        assert vts_dominates(u, v) == (ge and gt)


def test_length_mismatch_faults():
    with pytest.raises(InvariantViolation):
        vts_dominates([1], [1, 2])


vectors = st.lists(st.integers(0, 4), min_size=3, max_size=3)


@given(vectors)
def test_dominance_is_irreflexive(u):
    assert not vts_dominates(u, u)


@given(vectors, vectors)
def test_dominance_is_antisymmetric(u, v):
    assert not (vts_dominates(u, v) and vts_dominates(v, u))


@given(vectors, vectors, vectors)
def test_dominance_is_transitive(u, v, w):
    if vts_dominates(u, v) and vts_dominates(v, w):
        assert vts_dominates(u, w)


# -- path_compare ----------------------------------------------------------------


def test_later_start_succeeds():
    a = [_rec([2, 0], [2, 0])]
    b = [_rec([1, 0], [1, 0])]
    assert path_compare(a, b) is PathOrder.A_SUCC_B
    assert path_compare(b, a) is PathOrder.B_SUCC_A


def test_incomparable_fresh_nodes_are_equal():
    assert path_compare([_rec([1, 0])], [_rec([0, 1])]) is PathOrder.EQUAL
    assert path_compare([_rec([1, 0], [1, 0])], [_rec([0, 1], [0, 1])]) is PathOrder.EQUAL


def test_missing_end_is_never_dominated():
    a = [_rec([5, 5], [5, 5])]
    b = [_rec([1, 1])]  # crashed before its end timestamp
    assert path_compare(a, b) is PathOrder.EQUAL


def test_both_directions_fault():
    a = [_rec([2, 0], [0, 1])]
    b = [_rec([0, 2], [1, 0])]
    with pytest.raises(InvariantViolation):
        path_compare(a, b)


def _brute_succ(a, b):
    return any(x.start_vts is not None and y.end_vts is not None
               and vts_dominates(x.start_vts, y.end_vts) for x in a for y in b)


def test_fixture_fragments_agree_with_pairwise_scan():
    sim = Simulation(figure1_config())
    sim.run()
    heap = sim.crash_snapshots[0].heap
    frag_op3 = [heap[node_of(heap, "op3")], heap[node_of(heap, "op4")]]
    frag_op2 = [heap[node_of(heap, "op2")], heap[node_of(heap, "op1")]]
    want = (PathOrder.A_SUCC_B if _brute_succ(frag_op3, frag_op2)
            else PathOrder.B_SUCC_A if _brute_succ(frag_op2, frag_op3) else PathOrder.EQUAL)
    assert path_compare(frag_op3, frag_op2) is want
    # op3 began after op2 returned, so its fragment must go above op2's
    assert want is PathOrder.A_SUCC_B


# -- real time shows up in timestamps -------------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_completed_before_invoked_implies_dominance(seed):
    result = run(RunConfig(n=3, ops_per_process=4, seed=seed))
    check_timestamp_order(result)


def test_bottom_is_distinct_from_every_operand():
    assert BOTTOM != Value(1, 1)
    assert BOTTOM == BOTTOM
