"""Time the compiled and pure-Python replication kernels on the same workload.

    python3 benchmarks/bench_kernels.py [--reps N] [--sizes 10 20 40]

Both backends consume identical random streams, so the script also checks
that they return bit-identical estimates before reporting speedups.
"""

import argparse
import time

import numpy as np

from bctables import _backend
from bctables.harness import regular_instance
from bctables.sis_engine import run_batch_arrays


def timed(inst, reps, backend):
    t0 = time.perf_counter()
    out = run_batch_arrays(inst, reps, seed=1, backend=backend)
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 20, 40])
    args = ap.parse_args()
    if "compiled" not in _backend.available():
        raise SystemExit("compiled kernel not built; nothing to compare")
    print(f"{'n':>4} {'reps':>6} {'python ms/rep':>14} {'compiled ms/rep':>16} {'speedup':>8} "
          f"{'ops/rep':>10}")
    for n in args.sizes:
        inst = regular_instance(n)
        tp, a = timed(inst, args.reps, "python")
        tc, b = timed(inst, args.reps, "compiled")
        if not np.array_equal(a.log_estimates, b.log_estimates):
            raise SystemExit(f"backends disagree at n={n}")
        print(f"{n:>4} {args.reps:>6} {1e3 * tp / args.reps:>14.3f} {1e3 * tc / args.reps:>16.4f} "
              f"{tp / tc:>8.1f} {np.mean(a.ops):>10.0f}")


if __name__ == "__main__":
    main()
