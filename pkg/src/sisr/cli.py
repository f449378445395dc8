"""Command-line entry point: ``sisr {solve,shapley,gen,isotonic,reproduce}``.

Exit status 0 on success, 1 for bad input data, 2 for usage errors and 3 for
numerical failures.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from ._exceptions import (
    CapacityError,
    ConfigurationError,
    DataError,
    DegenerateThresholdError,
    DomainError,
    FlatPayoffError,
    NonInvertibleTransformError,
    NumericalError,
    StructuralError,
    UnsupportedInputError,
)
from .engine import SolveOptions, ric_select, solve
from .io import (
    RunManifest,
    atomic_write_text,
    columns_text,
    payoff_csv_text,
    read_isotonic_csv,
    read_payoff_csv,
    solution_document,
    transform_tsv_text,
    write_json,
)
from .isotonic import build_order, isotonic_fit
from .shapley import exact_shapley, wls_shapley

logger = logging.getLogger("sisr")

EXIT_OK, EXIT_DATA, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

_EXIT_CODES = (
    ((ConfigurationError, DomainError), EXIT_USAGE),
    ((DataError, StructuralError, UnsupportedInputError, FlatPayoffError, CapacityError), EXIT_DATA),
    ((NumericalError, NonInvertibleTransformError, DegenerateThresholdError), EXIT_NUMERICAL),
)

GEN_SCHEMES = ("sparse", "max", "r2", "pseudo-r2", "transform")


class UsageError(Exception):
    pass


def _ric_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected SMIN:SMAX, got {text!r}") from None
    if not 1 <= lo <= hi:
        raise argparse.ArgumentTypeError(f"need 1 <= SMIN <= SMAX, got {text!r}")
    return lo, hi


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _default_out(payoffs: str, suffix: str) -> Path:
    p = Path(payoffs)
    return p.with_name(p.stem + suffix)


def _solve_options(args) -> SolveOptions:
    return SolveOptions(
        sparsity=args.sparsity,
        outer_tol=args.outer_tol,
        max_outer=args.max_outer,
        infinite_multiplier=args.multiplier,
    )


def cmd_solve(args) -> int:
    start = time.perf_counter()
    table = read_payoff_csv(args.payoffs)
    options = _solve_options(args)
    ric = None
    if args.ric is not None:
        lo, hi = args.ric
        ric = ric_select(table, lo, hi, options)
        sol = ric.solution
        options_echo = {**options.to_dict(), "sparsity": sol.s, "ric": [lo, hi]}
    else:
        if args.sparsity > table.p:
            raise UsageError(f"--sparsity {args.sparsity} exceeds the number of features p={table.p}")
        sol = solve(table, options)
        options_echo = options.to_dict()

    manifest = RunManifest("solve", options_echo, seed=args.seed, version=__version__)
    manifest.add_input(args.payoffs)
    out = Path(args.out) if args.out else _default_out(args.payoffs, ".solution.json")
    tsv = Path(args.tsv) if args.tsv else out.with_name(out.name.replace(".json", "") + ".transform.tsv")
    manifest.wall_time = time.perf_counter() - start
    write_json(out, solution_document(sol, options_echo, ric, manifest))
    atomic_write_text(tsv, transform_tsv_text(sol.nu, sol.t))
    print(
        f"s={sol.s} objective={sol.objective!r} support_size={len(sol.support)} "
        f"converged={str(sol.converged).lower()}"
    )
    return EXIT_OK


def cmd_shapley(args) -> int:
    table = read_payoff_csv(args.payoffs)
    shap = exact_shapley(table)
    out = Path(args.out) if args.out else _default_out(args.payoffs, ".shapley.csv")
    features = [str(j) for j in range(1, table.p + 1)] + ["baseline"]
    values = list(shap.beta) + [shap.baseline]
    atomic_write_text(out, columns_text("feature,value", [features, values]))
    if args.check_wls:
        gap = float(np.max(np.abs(wls_shapley(table).beta - shap.beta)))
        print(f"max |exact - wls| = {gap!r}")
    else:
        print(f"wrote {table.p} Shapley values to {out}")
    return EXIT_OK


def cmd_gen(args) -> int:
    from .lab import generators as G
    from .lab import regression as R

    start = time.perf_counter()
    p, seed = args.p, args.seed
    truth_doc: dict = {"scheme": args.scheme, "p": p, "seed": seed}
    design = None
    if args.scheme == "sparse":
        gamma = None if args.gamma is None else np.asarray(args.gamma, dtype=float)
        table, truth = G.gen_sparse_payoffs(p, gamma, transform=args.transform, sigma0=args.sigma0, seed=seed)
        truth_doc.update(truth.to_dict())
    elif args.scheme == "transform":
        table, truth = G.gen_transform_payoffs(p, args.transform_scheme, seed)
        truth_doc.update(truth.to_dict())
    elif args.scheme == "max":
        beta = None if args.beta is None else np.asarray(args.beta, dtype=float)
        table = G.gen_max_payoffs(p, beta)
        truth_doc["beta_star"] = np.arange(1.0, p + 1.0) if beta is None else beta
    else:
        task = "continuous" if args.scheme == "r2" else "binary"
        alpha = None if args.alpha is None else np.asarray(args.alpha, dtype=float)
        design = R.gen_gaussian_design(args.n, p, args.theta, alpha, task, seed)
        fn = R.r2_payoffs if task == "continuous" else R.pseudo_r2_payoffs
        table = fn(design, n_jobs=args.threads)
        flagged = table.meta.get("rank_deficient", table.meta.get("nonconverged", []))
        truth_doc.update(
            alpha_star=design.alpha_star, theta=design.theta, n=design.n, task=task, flagged=flagged
        )

    out = Path(args.out)
    truth_path = Path(args.truth) if args.truth else out.with_name(out.stem + ".truth.json")
    atomic_write_text(out, payoff_csv_text(table))
    echo = {k: v for k, v in vars(args).items() if k not in ("func", "out", "truth", "design", "verbose")}
    manifest = RunManifest("gen", echo, seed=seed, version=__version__)
    manifest.wall_time = time.perf_counter() - start
    truth_doc["manifest"] = manifest.to_dict()
    write_json(truth_path, truth_doc)
    if design is not None and args.design:
        header = ",".join([f"x{j}" for j in range(1, p + 1)] + ["y"])
        atomic_write_text(args.design, columns_text(header, list(design.X.T) + [design.y]))
    print(f"wrote {table.n} payoffs to {out}")
    return EXIT_OK


def cmd_isotonic(args) -> int:
    values, weights, keys = read_isotonic_csv(args.input)
    order_key = np.arange(values.size, dtype=float) if keys is None else keys
    fit = isotonic_fit(values, weights, build_order(order_key))
    out = Path(args.out) if args.out else _default_out(args.input, ".fitted.csv")
    cols = [values, weights] + ([keys] if keys is not None else []) + [fit.t]
    header = "value,weight" + (",key" if keys is not None else "") + ",fitted"
    atomic_write_text(out, columns_text(header, cols))
    print(f"objective={fit.objective!r} blocks={fit.n_blocks}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    from .lab import experiments as E

    options = SolveOptions(outer_tol=args.outer_tol, max_outer=args.max_outer)
    name = args.experiment
    if name == "transforms":
        schemes = [args.scheme] if args.scheme else list(E.TRANSFORM_SCHEMES)
        res = E.transforms(args.p or 10, schemes, args.seed, options)
    elif name == "table1":
        p_list = args.p_list or [args.p or 10]
        sig = args.sigma0 or [1e-3, 1e-2, 2e-1]
        res = E.table1(p_list, sig, args.runs, args.seed, options=options)
    elif name == "timing":
        res = E.timing(args.p or 15, seed=args.seed, repeats=args.repeats, options=options)
    else:
        p_list = args.p_list or [args.p or 8]
        res = E.r2_grid(p_list, [args.theta], seed=args.seed, options=options, n_jobs=args.threads)
    out = Path(args.out) if args.out else Path(f"{name}.tsv")
    atomic_write_text(out, res.table)
    for suffix, text in res.extra.items():
        atomic_write_text(out.with_name(f"{out.stem}.{suffix}.tsv"), text)
    sys.stdout.write(res.table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sisr", description="Sparse isotonic Shapley regression.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--threads", type=int, default=None, help="cap on worker and BLAS threads")
    sub = parser.add_subparsers(dest="command", required=True)

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--outer-tol", type=float, default=1e-9)
    solver.add_argument("--max-outer", type=int, default=500)

    p = sub.add_parser("solve", parents=[common, solver], help="fit SISR to a payoff CSV")
    p.add_argument("--payoffs", required=True, help="CSV with header mask,value")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--sparsity", "-s", type=int)
    grp.add_argument("--ric", type=_ric_range, metavar="SMIN:SMAX", help="select s by RIC over a range")
    p.add_argument("--multiplier", type=float, default=10.0, help="weight multiplier for the empty/grand coalitions")
    p.add_argument("--out", help="solution JSON (default: <payoffs>.solution.json)")
    p.add_argument("--tsv", help="transform samples TSV (default next to --out)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("shapley", parents=[common], help="exact Shapley values of a full payoff table")
    p.add_argument("--payoffs", required=True)
    p.add_argument("--out", help="output CSV feature,value (default: <payoffs>.shapley.csv)")
    p.add_argument("--check-wls", action="store_true", help="also solve the weighted least-squares form")
    p.set_defaults(func=cmd_shapley)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic payoff table")
    p.add_argument("--scheme", required=True, choices=GEN_SCHEMES)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--out", default="payoffs.csv")
    p.add_argument("--truth", help="truth JSON (default: <out>.truth.json)")
    p.add_argument("--design", help="design CSV for r2/pseudo-r2 (x1..xp,y)")
    p.add_argument("--sigma0", type=float, default=1e-3)
    p.add_argument("--transform", default="cube-root", help="T* for the sparse scheme")
    p.add_argument("--transform-scheme", default="square-root", help="generator for the transform scheme")
    p.add_argument("--gamma", type=_float_list, help="gamma* for the sparse scheme (unit norm)")
    p.add_argument("--beta", type=_float_list, help="beta* for the max scheme")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--n", type=int, default=None, help="sample size (default 5p)")
    p.add_argument("--alpha", type=_float_list, help="alpha* for r2/pseudo-r2 (default all 3)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("isotonic", parents=[common], help="weighted isotonic regression of a CSV")
    p.add_argument("--input", required=True, help="CSV value,weight[,key]")
    p.add_argument("--out")
    p.set_defaults(func=cmd_isotonic)

    p = sub.add_parser("reproduce", parents=[common, solver], help="rerun a synthetic experiment")
    p.add_argument("experiment", choices=("transforms", "table1", "timing", "r2-grid"))
    p.add_argument("--p", type=int)
    p.add_argument("--p-list", type=_int_list)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--sigma0", type=_float_list)
    p.add_argument("--scheme", help="single transform scheme for 'transforms'")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    threads = args.threads or os.cpu_count() or 1
    try:
        with threadpool_limits(limits=threads):
            return args.func(args)
    except UsageError as exc:
        print(f"sisr {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        for kinds, code in _EXIT_CODES:
            if isinstance(exc, kinds):
                print(f"sisr {args.command}: {exc}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
