"""Compare the compiled kernels with the numpy fallback.

Times one training iteration of each solver per backend on a synthetic
matrix and checks that both backends produce the same objective trace.

    python3 benchmarks/bench_backends.py --size 600 500 --density 0.01 --k 16 --z 2
"""

import argparse
import statistics

import numpy as np

from eals import Hyperparams
from eals._backend import BACKENDS
from eals.bench import random_weights, synthetic_matrix
from eals.solver_fast import train_fast
from eals.solver_vanilla import train_vanilla


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", nargs=2, type=int, default=[600, 500], metavar=("M", "N"))
    ap.add_argument("--density", type=float, default=0.01)
    ap.add_argument("--k", type=int, default=16)
    ap.add_argument("--z", type=int, default=2)
    ap.add_argument("--iters", type=int, default=3)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--skip-vanilla", action="store_true")
    args = ap.parse_args(argv)

    M, N = args.size
    data = synthetic_matrix(M, N, args.density, seed=0)
    weights = random_weights(M, N, args.z, seed=1)
    hp = Hyperparams(K=args.k, max_iters=args.iters, rel_tol=0.0)
    solvers = {"fast": lambda b: train_fast(data, weights, hp, threads=args.threads, backend=b)}
    if not args.skip_vanilla:
        solvers["vanilla"] = lambda b: train_vanilla(data, weights, hp, backend=b)

    print(f"M={M} N={N} nnz={data.nnz} K={args.k} Z={args.z} backends={sorted(BACKENDS)}")
    print("solver,backend,median_seconds_per_iter")
    traces, medians = {}, {}
    for solver, run in solvers.items():
        for name in sorted(BACKENDS):
            samples = []
            for _ in range(args.repeats):
                res = run(name)
                samples += res.seconds
            traces[(solver, name)] = np.array(res.trace)
            medians[(solver, name)] = statistics.median(samples)
            print(f"{solver},{name},{medians[(solver, name)]:.6f}")
    if "compiled" in BACKENDS:
        for solver in solvers:
            ratio = medians[(solver, "python")] / medians[(solver, "compiled")]
            a, b = traces[(solver, "python")], traces[(solver, "compiled")]
            diff = float(np.max(np.abs(a - b) / np.abs(a)))
            print(f"{solver}: compiled is {ratio:.1f}x faster; max trace rel diff {diff:.1e}")


if __name__ == "__main__":
    main()
