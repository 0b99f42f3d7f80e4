"""Benchmark the compiled Jacobi kernel against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--sizes 8,16,32,64] [--reps 50]

The eigensolver dominates the simulator's per-round diagnostics (one
spectral norm of the realized mixing matrix per round) and the Monte-Carlo
contraction estimates (one per sample), so this is the loop worth compiling.
"""

import argparse
import time

import numpy as np

from tadlora.kernels import available_backends


def bench(fn, mats, reps):
    best = float("inf")
    for _ in range(reps):
        start = time.perf_counter()
        for m in mats:
            fn(m)
        best = min(best, time.perf_counter() - start)
    return best / len(mats)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="8,16,32,64")
    parser.add_argument("--reps", type=int, default=30)
    parser.add_argument("--batch", type=int, default=20)
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    impls = available_backends()
    if "compiled" not in impls:
        print("compiled kernel not built; showing pure-Python timings only")

    rng = np.random.default_rng(0)
    header = f"{'n':>4} " + " ".join(f"{name:>14}" for name in impls)
    if len(impls) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for n in sizes:
        mats = []
        for _ in range(args.batch):
            s = rng.standard_normal((n, n))
            mats.append(np.ascontiguousarray((s + s.T) / 2.0))
        times = {name: bench(fn, mats, args.reps) for name, fn in impls.items()}
        row = f"{n:>4} " + " ".join(f"{times[name] * 1e6:>12.1f}us" for name in impls)
        if "compiled" in times and "python" in times:
            row += f" {times['python'] / times['compiled']:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
