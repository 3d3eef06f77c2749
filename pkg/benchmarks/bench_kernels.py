"""Compare the compiled and pure-Python checker kernels.

Usage: python benchmarks/bench_kernels.py [--histories N] [--repeat R]
"""

from __future__ import annotations

import argparse
import random
import sys
import timeit
from pathlib import Path

from recoswap import _pykernels
from recoswap.checker import operations, strip
from recoswap.core import BOTTOM
from recoswap.sim import RunConfig, run

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from tests._support import random_history  # noqa: E402

try:
    from recoswap import _ckernels
except ImportError:
    _ckernels = None


def _bf_inputs(histories):
    out = []
    for h in histories:
        ops = operations(strip(h))
        codes = {BOTTOM: 0}
        for o in ops:
            codes.setdefault(o.arg, len(codes))
        out.append((
            [codes[o.arg] for o in ops],
            [-2 if o.pending else codes.get(o.ret, -1) for o in ops],
            [o.inv for o in ops],
            [-1 if o.res is None else o.res for o in ops],
        ))
    return out


def _fast_inputs(histories):
    out = []
    for h in histories:
        ops = operations(strip(h))
        owner = {o.arg: i for i, o in enumerate(ops)}
        pred = [-2 if o.pending else (-1 if o.ret is BOTTOM else owner[o.ret]) for o in ops]
        out.append((pred, [o.inv for o in ops], [-1 if o.res is None else o.res for o in ops]))
    return out


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--histories", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; nothing to compare")
        return 1

    r = random.Random(1)
    small = [random_history(r, max_ops=9) for _ in range(args.histories)]
    bf = _bf_inputs(small)
    big = [run(RunConfig(n=8, ops_per_process=40, seed=s)).history for s in range(20)]
    fast = _fast_inputs(big)

    cases = {
        "brute force (<=9 ops)": lambda k: [k.bf_swap(*a) for a in bf],
        "fast check (320 ops)": lambda k: [k.fast_swap(*a) for a in fast],
        "xorshift64* 1e5 draws": lambda k: [g.below(8) for g in [k.XorShift64Star(3)] for _ in range(100_000)],
    }
    print(f"{'kernel':26} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for name, fn in cases.items():
        assert fn(_pykernels) == fn(_ckernels), name
        py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat))
        cy = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat))
        print(f"{name:26} {py * 1e3:10.1f} {cy * 1e3:10.1f} {py / cy:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
