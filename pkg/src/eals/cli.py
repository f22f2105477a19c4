"""Command line entry point: ``eals {train,eval,bench,sweep,stats}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import bench, ingest
from .core import Hyperparams
from .errors import ConvergenceError, DataError, DimensionError, SingularUpdateError, \
    UncertifiedWeightsError
from .evaluation import DEFAULT_TOPN, evaluate, leave_one_out
from .solver_fast import load_checkpoint, save_checkpoint, train_fast
from .solver_vanilla import train_vanilla
from .weights import activity_missing, load_weights, popularity_missing, uniform_missing

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class UsageError(Exception):
    pass


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_data_args(p):
    p.add_argument("--data", required=True, help="rating log: user item rating [timestamp]")
    p.add_argument("--sep", default=None, help="field separator: tab, comma, space (default: detect)")
    p.add_argument("--binarize", action="store_true", help="set every observed value to 1")


def _add_model_args(p):
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6, help="relative objective change to stop at")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--init-stddev", type=float, default=0.01)


def build_parser():
    parser = argparse.ArgumentParser(prog="eals", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--solver", choices=["vanilla", "fast"], default="fast")
    p.add_argument("--scheme", choices=["uniform", "popularity", "user", "file"], default="uniform")
    p.add_argument("--c0", type=float, default=None,
                   help="missing-data weight (uniform: per cell; popularity/user: total mass)")
    p.add_argument("--alpha", type=float, default=None, help="popularity exponent")
    p.add_argument("--weights-file", default=None)
    p.add_argument("--lambda-guard", type=float, default=None,
                   help="allow uncertified weight files when lambda >= this value")
    p.add_argument("--holdout", choices=["loo", "none"], default="loo",
                   help="train on the leave-one-out split (default) or on every entry")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", default=None, help="training log path (default: stdout)")
    p.add_argument("--no-timing", action="store_true", help="omit the seconds column from the log")

    p = sub.add_parser("eval", help="leave-one-out HR/NDCG of a checkpoint")
    _add_data_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--topn", type=int, default=DEFAULT_TOPN)
    p.add_argument("--per-user", default=None, help="write per-user hit/ndcg rows to this file")

    p = sub.add_parser("bench", help="per-iteration timing over K and Z grids")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data")
    src.add_argument("--synthetic", nargs=4, metavar=("M", "N", "DENSITY", "SEED"))
    p.add_argument("--sep", default=None)
    p.add_argument("--grid-k", type=_int_list, default=[8, 16])
    p.add_argument("--grid-z", type=_int_list, default=[1, 2, 4])
    p.add_argument("--solvers", default="fast", help="comma list of fast,vanilla")
    p.add_argument("--backend", default=None, help="compiled or python (default: best available)")
    p.add_argument("--iters", type=int, default=3)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sweep", help="grid over c0 and alpha with popularity weights")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--grid-c0", type=_float_list, required=True)
    p.add_argument("--grid-alpha", type=_float_list, required=True)
    p.add_argument("--topn", type=int, default=DEFAULT_TOPN)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("stats", help="dataset statistics")
    _add_data_args(p)
    return parser


def _hyperparams(args):
    return Hyperparams(K=args.k, lam=args.lam, max_iters=args.iters, rel_tol=args.tol,
                       seed=args.seed, init_stddev=args.init_stddev)


def _check_scheme_flags(args):
    if args.alpha is not None and args.scheme != "popularity":
        raise UsageError("--alpha requires --scheme popularity")
    if args.weights_file is not None and args.scheme != "file":
        raise UsageError("--weights-file requires --scheme file")
    if args.scheme == "file":
        if args.weights_file is None:
            raise UsageError("--scheme file requires --weights-file")
        if args.c0 is not None:
            raise UsageError("--c0 does not apply to --scheme file")
    if args.lambda_guard is not None and args.scheme != "file":
        raise UsageError("--lambda-guard only applies to --scheme file")


def _weights(args, data):
    c0 = 1.0 if args.c0 is None else args.c0
    if args.scheme == "uniform":
        return uniform_missing(data.num_rows, data.num_cols, c0)
    if args.scheme == "popularity":
        return popularity_missing(data, c0, 0.0 if args.alpha is None else args.alpha)
    if args.scheme == "user":
        return activity_missing(data, c0)
    return load_weights(args.weights_file)


def _load_split(args):
    entries = ingest.parse_ratings(args.data, sep=args.sep)
    return entries, leave_one_out(entries, binarize=args.binarize)


def cmd_train(args):
    _check_scheme_flags(args)
    hp = _hyperparams(args)
    entries, split = _load_split(args)
    if args.holdout == "loo":
        data = split.train
    else:
        data, _ = ingest.build_matrix(entries, binarize=args.binarize, id_maps=split.id_maps)
    weights = _weights(args, data)

    out = open(args.log, "w") if args.log else sys.stdout
    try:
        def log_line(it, obj, secs):
            if args.no_timing:
                out.write(f"{it},{obj!r}\n")
            else:
                out.write(f"{it},{obj!r},{secs:.6f}\n")
            out.flush()

        if args.solver == "fast":
            result = train_fast(data, weights, hp, threads=args.threads,
                                lambda_guard=args.lambda_guard, callback=log_line)
        else:
            result = train_vanilla(data, weights, hp, lambda_guard=args.lambda_guard,
                                   callback=log_line)
    finally:
        if out is not sys.stdout:
            out.close()
    save_checkpoint(args.out, result.model)
    ingest.save_id_map(args.out + ".users.tsv", split.id_maps.users)
    ingest.save_id_map(args.out + ".items.tsv", split.id_maps.items)
    return 0


def cmd_eval(args):
    if args.topn < 1:
        raise UsageError("--topn must be >= 1")
    _, split = _load_split(args)
    model = load_checkpoint(args.checkpoint)
    metrics = evaluate(model, split, args.topn)
    sys.stdout.write(metrics.report())
    if args.per_user:
        with open(args.per_user, "w") as fh:
            fh.write("user,hit,ndcg\n")
            for u, hit, g in metrics.per_user:
                fh.write(f"{split.id_maps.users[u]},{hit},{g!r}\n")
    return 0


def cmd_bench(args):
    if args.synthetic:
        M, N, density, seed = args.synthetic
        data = bench.synthetic_matrix(int(M), int(N), float(density), int(seed))
    else:
        entries = ingest.parse_ratings(args.data, sep=args.sep)
        data, _ = ingest.build_matrix(entries)
    solvers = tuple(s.strip() for s in args.solvers.split(",") if s.strip())
    if not solvers or any(s not in ("fast", "vanilla") for s in solvers):
        raise UsageError("--solvers takes a comma list of fast,vanilla")
    start = time.perf_counter()
    cells = bench.run_grid(data, args.grid_k, args.grid_z, solvers=solvers, iters=args.iters,
                           repeats=args.repeats, threads=args.threads, backend=args.backend,
                           seed=args.seed)
    sys.stdout.write(bench.format_table(cells))
    sys.stdout.write(bench.format_report(bench.scaling_report(cells, data)))
    sys.stdout.write(f"total_seconds={time.perf_counter() - start:.2f}\n")
    return 0


def sweep_rows(split, hp, grid_c0, grid_alpha, topn, threads=1):
    """Train and evaluate one model per (c0, alpha); yields CSV-ready tuples."""
    for c0 in grid_c0:
        for alpha in grid_alpha:
            weights = popularity_missing(split.train, c0, alpha)
            result = train_fast(split.train, weights, hp, threads=threads)
            m = evaluate(result.model, split, topn)
            yield c0, alpha, m.hr, m.ndcg


def cmd_sweep(args):
    hp = _hyperparams(args)
    _, split = _load_split(args)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write(f"c0,alpha,hr@{args.topn},ndcg@{args.topn}\n")
        for c0, alpha, hr, ndcg in sweep_rows(split, hp, args.grid_c0, args.grid_alpha,
                                              args.topn, args.threads):
            out.write(f"{c0!r},{alpha!r},{hr!r},{ndcg!r}\n")
            out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_stats(args):
    entries = ingest.parse_ratings(args.data, sep=args.sep)
    data, _ = ingest.build_matrix(entries, binarize=args.binarize)
    stats = ingest.dataset_stats(data)
    sys.stdout.write(stats.report() + "\n")
    for count, n_items in stats.histogram.items():
        sys.stdout.write(f"items_with_{count}_entries={n_items}\n")
    return 0


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "bench": cmd_bench, "sweep": cmd_sweep,
            "stats": cmd_stats}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"eals: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularUpdateError, ConvergenceError, UncertifiedWeightsError) as exc:
        print(f"eals: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, DimensionError, OSError) as exc:
        print(f"eals: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"eals: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
