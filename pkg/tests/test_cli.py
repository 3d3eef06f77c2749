from __future__ import annotations

import io
import json

import pytest

from recoswap import tracefile
from recoswap.cli import main
from recoswap.sim import figure1_config, run

from ._support import FIGURE1_ASSIGNMENTS, figure_returns, global_stress_config, independent_stress_config

BLOCKED_PLAN = "p1:label=PRIM_SWAP@1,delay=100000000;p2:label=PRIM_SWAP@1"


def _json(capsys) -> dict:
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


# -- trace files --------------------------------------------------------------------


@pytest.mark.parametrize("cfg", [global_stress_config(4), independent_stress_config(9), figure1_config()])
def test_trace_round_trip_is_byte_identical(cfg):
    cfg.record_trace = True
    tf = tracefile.from_result(run(cfg), with_steps=True)
    first = io.StringIO()
    tracefile.write(tf, first)
    back = tracefile.read(io.StringIO(first.getvalue()))
    second = io.StringIO()
    tracefile.write(back, second)
    assert first.getvalue() == second.getvalue()
    assert back.events == tf.events and (back.snapshots or []) == (tf.snapshots or [])


@pytest.mark.parametrize("text", [
    "", "not json\n", "[1]\n", '{"formatVersion": 99}\n',
    '{"formatVersion":1,"model":"global","n":2,"seed":0,"schedulerPolicy":"round_robin","crashPlan":[]}\n{"record":"nope"}\n',
    '{"formatVersion":1,"model":"global","n":1,"seed":0,"schedulerPolicy":"round_robin","crashPlan":[]}\n'
    '{"record":"event","kind":"INV","pid":3,"step":0,"op":[3,1],"arg":[3,1]}\n',
])
def test_malformed_trace_is_rejected(text):
    with pytest.raises(tracefile.TraceFormatError):
        tracefile.read(io.StringIO(text))


def test_malformed_trace_file_exits_65(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{oops\n")
    assert main(["check", str(bad)]) == 65
    assert main(["replay", str(bad)]) == 65
    assert main(["check", str(tmp_path / "missing.jsonl")]) == 65


# -- run ------------------------------------------------------------------------------


def test_run_global_checks_nrl(capsys):
    assert main(["run", "--model", "global", "--n", "3", "--ops", "5", "--seed", "42",
                 "--check", "nrl"]) == 0
    report = _json(capsys)
    assert report["outcome"] == "COMPLETED" and report["check"]["ok"]


def test_all_scope_is_invalid_for_independent(capsys):
    assert main(["run", "--model", "independent", "--crash-plan", "all:rate=0.01"]) == 64
    assert "independent" in capsys.readouterr().err


def test_bad_flags_exit_64(capsys):
    assert main(["run", "--model", "sideways"]) == 64
    assert main(["run", "--crash-plan", "all:wobble=1"]) == 64
    assert main(["run", "--n", "0"]) == 64


def test_fixture_run(tmp_path, capsys):
    out = tmp_path / "fig.jsonl"
    assert main(["run", "--model", "global", "--n", "6", "--ops", "1",
                 "--crash-plan", "fixture:figure1", "--check", "nrl", "--out", str(out)]) == 0
    tf = tracefile.load_path(str(out))
    got = figure_returns(tf.events)
    assert {k: got[k] for k in ("op1", "op4", "op5", "op7")} in FIGURE1_ASSIGNMENTS
    assert len(tf.snapshots) == 1


def test_blocking_witness_exits_2(capsys):
    assert main(["run", "--model", "independent", "--n", "2", "--ops", "1",
                 "--scheduler", "round_robin", "--crash-plan", BLOCKED_PLAN,
                 "--step-budget", "2000"]) == 2
    assert _json(capsys)["outcome"] == "BLOCKED"


def test_crash_plan_from_json_file(tmp_path, capsys):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps([{"kind": "step", "step": 30}]))
    assert main(["run", "--n", "2", "--ops", "2", "--crash-plan", str(plan)]) == 0


# -- check and replay --------------------------------------------------------------


@pytest.fixture
def trace(tmp_path):
    path = tmp_path / "t.jsonl"
    assert main(["run", "--model", "independent", "--n", "3", "--ops", "2", "--seed", "5",
                 "--crash-plan", "any:rate=0.02,delay=5", "--out", str(path)]) == 0
    return path


def _mutate_first_res(path):
    lines = path.read_text().splitlines()
    for i, line in enumerate(lines):
        d = json.loads(line)
        if d.get("kind") == "RES":
            d["ret"] = [9, 9]
            lines[i] = json.dumps(d)
            break
    path.write_text("\n".join(lines) + "\n")


def test_check_valid_trace(trace, capsys):
    capsys.readouterr()
    for method in ("nrl", "fast", "brute"):
        assert main(["check", str(trace), "--check", method]) == 0
        assert _json(capsys)["ok"]


def test_check_mutated_return_exits_3(trace, capsys):
    _mutate_first_res(trace)
    capsys.readouterr()
    assert main(["check", str(trace)]) == 3
    report = _json(capsys)
    assert not report["ok"] and "v9.9" in report["reason"]


def test_brute_force_refuses_oversized_trace(tmp_path, capsys):
    path = tmp_path / "big.jsonl"
    assert main(["run", "--n", "4", "--ops", "5", "--out", str(path)]) == 0
    assert main(["check", str(path), "--check", "brute"]) == 64
    assert "refused" in capsys.readouterr().err


def test_replay(trace, capsys):
    assert main(["replay", str(trace)]) == 0
    assert main(["replay", str(trace), "--model", "global"]) == 64
    _mutate_first_res(trace)
    capsys.readouterr()
    assert main(["replay", str(trace)]) == 3
    assert _json(capsys)["index"] is not None


# -- sweep ----------------------------------------------------------------------------


def test_crash_free_sweep(capsys):
    assert main(["sweep", "--seeds", "0:200", "--n-range", "2:5", "--ops", "3"]) == 0
    report = _json(capsys)
    assert report["runs"] == 200 and report["checkFailures"] == 0 and report["completed"] == 200


def test_sweep_reports_invalid_configs_as_skipped(capsys):
    assert main(["sweep", "--seeds", "0:6", "--n-range", "0,2", "--ops", "2"]) == 0
    report = _json(capsys)
    assert report["skipped"] == 3 and report["completed"] == 3


def test_sweep_jobs_do_not_change_the_report(capsys):
    args = ["sweep", "--model", "independent", "--seeds", "0:24", "--n-range", "2:4",
            "--ops", "2", "--rate-max", "0.02", "--delay", "5"]
    assert main(args + ["--jobs", "1"]) == 0
    one = _json(capsys)
    assert main(args + ["--jobs", "4"]) == 0
    assert _json(capsys) == one
