"""Command-line front end.

Exit codes: 0 success, 2 run blocked or incomplete, 3 check failed,
64 usage error or refused request, 65 malformed trace file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from . import tracefile
from .checker import CheckRefused, check_linearizable_bruteforce, check_nrl, check_swap_fast, strip
from .core import InvariantViolation, Verdict
from .sim import (
    ConfigError,
    CrashPlan,
    Model,
    Outcome,
    Policy,
    RunConfig,
    default_step_budget,
    plan_from_text,
    replay,
    run,
)

EXIT_OK = 0
EXIT_BLOCKED = 2
EXIT_CHECK_FAILED = 3
EXIT_USAGE = 64
EXIT_BAD_FILE = 65


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default, which means BLOCKED here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(obj: dict) -> None:
    print(json.dumps(obj, sort_keys=True))


def _load_plan(text: str) -> str:
    """A crash plan argument is either inline syntax or a path to a JSON file."""
    if os.path.isfile(text):
        with open(text, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"crash plan file {text}: {e}") from None
        if isinstance(data, str):
            return data
        return json.dumps(CrashPlan.from_json(data).to_json())
    return text


def _build_config(args) -> RunConfig:
    base = RunConfig(
        model=Model(args.model),
        n=args.n,
        ops_per_process=args.ops,
        seed=args.seed,
        step_budget=args.step_budget,
        scheduler=Policy(args.scheduler),
        check_level=args.invariants,
        record_trace=getattr(args, "trace_steps", False),
    )
    plan = _load_plan(args.crash_plan) if args.crash_plan else ""
    if plan.startswith("["):
        base.crash_plan = CrashPlan.from_json(json.loads(plan))
        base.validate()
        return base
    cfg = plan_from_text(plan, base)
    cfg.validate()
    return cfg


def _run_check(history, method: str) -> Optional[Verdict]:
    if method == "none":
        return None
    if method == "nrl":
        return check_nrl(history)
    if method == "fast":
        return check_swap_fast(strip(history))
    return check_linearizable_bruteforce(strip(history))


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=[m.value for m in Model], default="global")
    p.add_argument("--ops", type=int, default=5, help="operations per process")
    p.add_argument("--crash-plan", default="",
                   help="inline plan (e.g. 'all:step=40'), a JSON file, or fixture:figure1")
    p.add_argument("--step-budget", type=int, default=default_step_budget())
    p.add_argument("--scheduler", choices=[q.value for q in Policy if q is not Policy.SCRIPTED],
                   default=Policy.SEEDED_RANDOM.value)
    p.add_argument("--check", choices=["nrl", "fast", "brute", "none"], default="nrl")
    p.add_argument("--invariants", choices=["none", "basic", "full"], default="full",
                   help="runtime invariant checking level")


def cmd_run(args) -> int:
    try:
        cfg = _build_config(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = run(cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as e:
        print(f"invariant violated (seed {cfg.seed}): {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    if args.out:
        tracefile.dump_path(tracefile.from_result(result, with_steps=args.trace_steps), args.out)
    report = {
        "model": Model(cfg.model).value, "n": cfg.n, "seed": cfg.seed,
        "outcome": result.outcome.value, "steps": result.steps,
        "events": len(result.history),
        "returns": {f"p{e.pid}.{e.op.seq}": repr(e.ret) for e in result.history
                    if e.kind.value == "RES"},
    }
    if result.outcome is not Outcome.COMPLETED:
        _emit(report)
        return EXIT_BLOCKED
    try:
        verdict = _run_check(result.history, args.check)
    except CheckRefused as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_USAGE
    if verdict is not None:
        report["check"] = {"method": args.check, "ok": verdict.ok, "reason": verdict.reason}
    _emit(report)
    if verdict is not None and not verdict:
        print(f"check failed (seed {cfg.seed}): {verdict.reason}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        tf = tracefile.load_path(args.trace)
    except (OSError, tracefile.TraceFormatError) as e:
        print(f"malformed trace: {e}", file=sys.stderr)
        return EXIT_BAD_FILE
    try:
        verdict = _run_check(tf.events, args.check)
    except CheckRefused as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_USAGE
    if verdict is None:
        return EXIT_OK
    _emit({"method": args.check, "ok": verdict.ok, "reason": verdict.reason,
           "witness": None if verdict.witness is None else [list(w) for w in verdict.witness]})
    return EXIT_OK if verdict else EXIT_CHECK_FAILED


def cmd_replay(args) -> int:
    try:
        tf = tracefile.load_path(args.trace)
    except (OSError, tracefile.TraceFormatError) as e:
        print(f"malformed trace: {e}", file=sys.stderr)
        return EXIT_BAD_FILE
    try:
        report = replay(tf.header, tf.events, model=args.model)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as e:
        print(f"invariant violated during replay: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    _emit({"ok": report.ok, "message": report.message, "index": report.index,
           "step": report.step})
    return EXIT_OK if report.ok else EXIT_CHECK_FAILED


def _sweep_one(job: tuple) -> tuple:
    seed, model, n, ops, plan, budget, check = job
    try:
        cfg = RunConfig(model=Model(model), n=n, ops_per_process=ops, seed=seed,
                        step_budget=budget, check_level="full")
        cfg = plan_from_text(plan, cfg)
        cfg.validate()
    except ConfigError as e:
        return seed, "skipped", str(e)
    try:
        result = run(cfg)
    except ConfigError as e:
        return seed, "skipped", str(e)
    except InvariantViolation as e:
        return seed, "failed", str(e)
    if result.outcome is Outcome.BLOCKED:
        return seed, "blocked", ""
    if result.outcome is not Outcome.COMPLETED:
        return seed, "incomplete", ""
    try:
        verdict = _run_check(result.history, check)
    except CheckRefused as e:
        return seed, "skipped", str(e)
    if verdict is not None and not verdict:
        return seed, "failed", verdict.reason
    return seed, "completed", ""


def _parse_range(text: str) -> range:
    lo, sep, hi = text.partition(":")
    if not sep:
        return range(int(lo), int(lo) + 1)
    return range(int(lo), int(hi))


def sweep_jobs(args) -> list:
    seeds = _parse_range(args.seeds)
    ns = _parse_range(args.n_range) if ":" in args.n_range else [int(x) for x in args.n_range.split(",")]
    jobs = []
    scope = "all" if args.model == Model.GLOBAL.value else "any"
    for i, seed in enumerate(seeds):
        n = list(ns)[i % len(ns)]
        if args.crash_plan:
            plan = args.crash_plan
        elif args.rate_max > 0:
            span = len(seeds) - 1 or 1
            rate = args.rate_min + (args.rate_max - args.rate_min) * i / span
            extra = ",max=3" if scope == "all" else f",delay={args.delay}"
            plan = f"{scope}:rate={rate:.6g}{extra}"
        else:
            plan = ""
        jobs.append((seed, args.model, n, args.ops, plan, args.step_budget, args.check))
    return jobs


def cmd_sweep(args) -> int:
    try:
        jobs = sweep_jobs(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, jobs, chunksize=8))
    else:
        results = [_sweep_one(j) for j in jobs]
    counts = {"completed": 0, "blocked": 0, "failed": 0, "skipped": 0, "incomplete": 0}
    failures = []
    for seed, status, reason in sorted(results):
        counts[status] += 1
        if status == "failed":
            failures.append({"seed": seed, "reason": reason})
    _emit({
        "runs": len(results),
        "completed": counts["completed"],
        "blocked": counts["blocked"] + counts["incomplete"],
        "checkFailures": counts["failed"],
        "skipped": counts["skipped"],
        "failures": failures,
    })
    return EXIT_OK if not failures else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="recoswap", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one simulation and check its history")
    p.add_argument("--n", type=int, default=2, help="number of processes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the trace file here")
    p.add_argument("--trace-steps", action="store_true", help="include low-level memory steps")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="check the history in a trace file")
    p.add_argument("trace")
    p.add_argument("--check", choices=["nrl", "fast", "brute", "none"], default="nrl")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("replay", help="re-run a trace file and diff its events")
    p.add_argument("trace")
    p.add_argument("--model", choices=[m.value for m in Model])
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("sweep", help="run a seed campaign and summarise it")
    p.add_argument("--seeds", default="0:100", help="seed range lo:hi")
    p.add_argument("--n-range", default="2:5", help="process counts, lo:hi or a comma list")
    p.add_argument("--rate-min", type=float, default=0.0)
    p.add_argument("--rate-max", type=float, default=0.0)
    p.add_argument("--delay", type=int, default=10, help="re-admission delay (independent model)")
    p.add_argument("--jobs", type=int, default=1)
    _add_run_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:  # usage errors and --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
