from __future__ import annotations

import ctypes
import dataclasses

import pytest
from hypothesis import given, strategies as st

from recoswap.checker import check_nrl, check_recoverable_well_formed, check_swap_fast
from recoswap.core import EventKind
from recoswap.kernels import XorShift64Star
from recoswap.sim import (
    AtLabel,
    AtStep,
    ConfigError,
    CrashPlan,
    Model,
    Outcome,
    Policy,
    RandomCrash,
    RunConfig,
    config_from_header,
    config_to_header,
    default_step_budget,
    figure1_config,
    parse_crash_plan,
    plan_from_text,
    replay,
    run,
)
from recoswap import tracefile

from ._support import global_stress_config, independent_stress_config


def _cfg(**kw) -> RunConfig:
    return RunConfig(**kw)


# -- validation -------------------------------------------------------------------


@pytest.mark.parametrize("kw", [
    dict(n=0),
    dict(step_budget=0),
    dict(ops_per_process=[1]),
    dict(ops_per_process=-1),
    dict(check_level="loud"),
    dict(crash_plan=CrashPlan((AtStep(3, scope=1),))),
    dict(model=Model.INDEPENDENT, crash_plan=CrashPlan((AtStep(3),))),
    dict(model=Model.INDEPENDENT, crash_plan=CrashPlan((AtStep(3, scope=9),))),
    dict(model=Model.INDEPENDENT, crash_plan=CrashPlan((AtLabel(0, "ALLOC"),))),
    dict(crash_plan=CrashPlan((AtLabel(7, "ALLOC"),))),
    dict(crash_plan=CrashPlan((AtLabel(1, "ALLOC", 0),))),
    dict(crash_plan=CrashPlan((RandomCrash(1.5),))),
    dict(crash_plan=CrashPlan((AtStep(3, delay=-1),))),
    dict(crash_plan=CrashPlan((AtStep(-3),))),
    dict(scheduler=Policy.SCRIPTED, script=((5, 1),)),
])
def test_invalid_configs_are_rejected(kw):
    with pytest.raises(ConfigError):
        run(_cfg(**kw))


def test_crash_plan_syntax():
    plan = parse_crash_plan("all:step=40; all:rate=0.01,max=3")
    assert plan.triggers == (AtStep(40), RandomCrash(0.01, "all", 3))
    plan = parse_crash_plan("p2:label=PRIM_SWAP@2,delay=7;any:rate=0.02")
    assert plan.triggers == (AtLabel(2, "PRIM_SWAP", 2, None, 7), RandomCrash(0.02, "any"))
    assert parse_crash_plan("all:label=G_BUILD,pid=0").triggers == (AtLabel(0, "G_BUILD", 1, "all"),)
    assert parse_crash_plan("none") == CrashPlan()


@pytest.mark.parametrize("text", ["step=3", "q1:step=3", "all:step", "all:foo=1",
                                  "all:step=x", "all:label=ALLOC", "all:step=3,bogus=1"])
def test_bad_crash_plan_syntax(text):
    with pytest.raises(ConfigError):
        parse_crash_plan(text)


def test_named_fixture_plan():
    cfg = plan_from_text("fixture:figure1", RunConfig(seed=4))
    assert cfg.n == 6 and cfg.seed == 4 and cfg.scheduler is Policy.SCRIPTED


plans = st.lists(st.one_of(
    st.builds(AtStep, st.integers(0, 500), st.just("all"), st.integers(0, 9)),
    st.builds(AtLabel, st.integers(1, 4), st.sampled_from(["ALLOC", "PRIM_SWAP"]),
              st.integers(1, 3), st.sampled_from([None, "any", 2]), st.integers(0, 9)),
    st.builds(RandomCrash, st.floats(0, 1), st.sampled_from(["any", 1]),
              st.one_of(st.none(), st.integers(0, 5)), st.integers(0, 9)),
), max_size=4).map(lambda ts: CrashPlan(tuple(ts)))


@given(plans)
def test_plan_json_round_trip(plan):
    assert CrashPlan.from_json(plan.to_json()) == plan


def test_env_var_sets_default_budget(monkeypatch):
    monkeypatch.setenv("RECOSWAP_STEP_BUDGET", "1234")
    assert default_step_budget() == 1234
    assert RunConfig().step_budget == 1234


# -- runs -------------------------------------------------------------------------


def test_round_robin_crash_free_example():
    result = run(RunConfig(n=2, ops_per_process=2, seed=0, scheduler=Policy.ROUND_ROBIN))
    kinds = [e.kind for e in result.history]
    assert len(kinds) == 8 and set(kinds) == {EventKind.INV, EventKind.RES}
    assert check_swap_fast(result.history)


def test_round_robin_alternates_processes():
    result = run(RunConfig(n=3, ops_per_process=1, scheduler=Policy.ROUND_ROBIN))
    invs = [e.pid for e in result.history if e.kind is EventKind.INV]
    assert invs == [1, 2, 3]
    assert result.steps == 3 * (8 + 2 * 3)


def _trace_text(result) -> str:
    return "\n".join(tracefile.lines(tracefile.from_result(result, with_steps=True)))


@pytest.mark.parametrize("make", [global_stress_config, independent_stress_config])
def test_same_config_gives_identical_trace(make):
    cfg = make(11)
    cfg.record_trace = True
    assert _trace_text(run(cfg)) == _trace_text(run(dataclasses.replace(cfg)))


def test_different_seeds_give_different_schedules():
    a = run(RunConfig(n=3, ops_per_process=3, seed=1)).history
    b = run(RunConfig(n=3, ops_per_process=3, seed=2)).history
    assert a != b


@pytest.mark.parametrize("seed", range(40))
def test_no_invocation_during_system_wide_recovery(seed):
    result = run(global_stress_config(seed))
    outstanding: set = set()
    for e in result.history:
        if e.kind is EventKind.CRASH:
            outstanding.add(e.pid)
        elif e.kind is EventKind.RES:
            outstanding.discard(e.pid)
        elif e.kind is EventKind.INV:
            assert not outstanding, (seed, e)


@pytest.mark.parametrize("seed", range(40))
def test_histories_are_recoverable_well_formed(seed):
    for make in (global_stress_config, independent_stress_config):
        assert check_recoverable_well_formed(run(make(seed)).history)


def test_fixture_history_has_four_pending_at_the_crash():
    result = run(figure1_config())
    crashed = sorted((e.op.pid, e.op.seq) for e in result.history if e.kind is EventKind.CRASH)
    assert crashed == [(1, 2), (2, 1), (3, 2), (4, 1)]
    assert check_nrl(result.history)


def test_blocked_witness():
    cfg = RunConfig(model=Model.INDEPENDENT, n=2, ops_per_process=1,
                    scheduler=Policy.ROUND_ROBIN, step_budget=2000,
                    crash_plan=parse_crash_plan(
                        "p1:label=PRIM_SWAP@1,delay=100000000;p2:label=PRIM_SWAP@1"))
    result = run(cfg)
    assert result.outcome is Outcome.BLOCKED
    assert result.steps == 2000


def test_budget_exhaustion_without_spin_is_incomplete():
    result = run(RunConfig(n=2, ops_per_process=3, step_budget=10))
    assert result.outcome is Outcome.INCOMPLETE


@pytest.mark.parametrize("seed", range(60))
def test_runs_complete_or_block(seed):
    cfg = independent_stress_config(seed)
    cfg.step_budget = 150
    result = run(cfg)
    assert result.outcome in (Outcome.COMPLETED, Outcome.BLOCKED, Outcome.INCOMPLETE)
    assert check_recoverable_well_formed(result.history)


# -- replay -----------------------------------------------------------------------


def test_replay_of_a_run_is_identical():
    cfg = independent_stress_config(7)
    result = run(cfg)
    assert replay(config_to_header(cfg), result.history).ok


def test_replay_reports_a_mutated_return():
    cfg = global_stress_config(3)
    result = run(cfg)
    events = list(result.history)
    i = next(k for k, e in enumerate(events) if e.kind is EventKind.RES)
    events[i] = dataclasses.replace(events[i], ret=events[0].arg)
    rep = replay(config_to_header(cfg), events)
    assert not rep.ok and rep.index == i and rep.step == events[i].step


def test_replay_rejects_a_model_mismatch():
    cfg = global_stress_config(1)
    with pytest.raises(ConfigError):
        replay(config_to_header(cfg), run(cfg).history, model="independent")


def test_header_round_trip():
    for cfg in (global_stress_config(5), independent_stress_config(5), figure1_config()):
        back = config_from_header(config_to_header(cfg))
        assert config_to_header(back) == config_to_header(cfg)


# -- generator ----------------------------------------------------------------------


def _oracle_stream(seed: int, count: int) -> list:
    u64 = ctypes.c_uint64
    x = u64(seed ^ 0x9E3779B97F4A7C15).value or 0x9E3779B97F4A7C15
    out = []
    for _ in range(count):
        x = u64(x ^ (x >> 12)).value
        x = u64(x ^ u64(x << 25).value).value
        x = u64(x ^ (x >> 27)).value
        out.append(u64(x * 0x2545F4914F6CDD1D).value)
    return out


@pytest.mark.parametrize("seed", [0, 1, 42, 0x9E3779B97F4A7C15, 2**64 - 1])
def test_generator_matches_reference_stream(seed):
    g = XorShift64Star(seed)
    assert [g.next() for _ in range(100)] == _oracle_stream(seed, 100)


def test_generator_helpers_stay_in_range():
    g = XorShift64Star(9)
    assert all(0 <= g.below(7) < 7 for _ in range(1000))
    assert all(0.0 <= g.random() < 1.0 for _ in range(1000))
