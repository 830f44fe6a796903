"""Command-line interface.

Subcommands: train (single seeded run), bench (multi-seed benchmark with
aggregation), plot (SVG learning curves), verify-lemma (tabular
performance-gap check), grad-check (backprop vs finite differences), and
controversy-exp (same- vs opposite-target critic disagreement).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

from .config import RunConfig, load_config, resolve_out_dir, save_config
from .harness import bench, controversy_experiment, run_name, run_single
from .nets import grad_check_suite
from .svgchart import plot_csvs
from .tabular import run_bound_trials


def _base_config(args) -> RunConfig:
    overrides = {
        "env": args.env,
        "algorithm": args.algo,
        "total_steps": args.steps,
        "out_dir": args.out,
    }
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = (args.seed,)
    if getattr(args, "seeds", None) is not None:
        overrides["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    if args.config:
        return load_config(args.config, overrides)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def _add_run_flags(p: argparse.ArgumentParser, multi_seed: bool):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--env", choices=("pendulum", "pointmaze"))
    p.add_argument("--algo", choices=("ccep", "ccep-separate", "td3", "ddpg"))
    p.add_argument("--steps", type=int, help="total environment steps")
    p.add_argument("--out", help="output directory (rooted at $CCEP_OUT_ROOT if set)")
    if multi_seed:
        p.add_argument("--seeds", help="comma-separated seed list")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes (seeds are independent)")
    else:
        p.add_argument("--seed", type=int, help="run seed")


def cmd_train(args) -> int:
    cfg = _base_config(args)
    if len(cfg.seeds) != 1:
        print("train runs a single seed; use bench for seed lists", file=sys.stderr)
        return 2
    seed = cfg.seeds[0]
    out = resolve_out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{run_name(cfg, seed)}.csv"
    try:
        result = run_single(cfg, seed, csv_path)
    except OSError as e:
        print(f"I/O failure for {csv_path}: {e}", file=sys.stderr)
        return 1
    save_config(cfg, out / f"{run_name(cfg, seed)}.config.json")
    last = result.rows[-1]
    print(f"wrote {result.csv_path}")
    print(f"final eval return {last.return_mean:.2f} +- {last.return_std:.2f}, "
          f"coverage {last.coverage:.3f}, max avg return {result.max_avg_return:.2f}")
    return 0


def cmd_bench(args) -> int:
    cfg = _base_config(args)
    res = bench(cfg, workers=args.workers)
    for r in res.results:
        print(f"seed {r.seed}: max avg return {r.max_avg_return:.2f}, "
              f"final coverage {r.final_coverage:.3f}")
    for seed, msg in res.failures:
        print(f"seed {seed}: FAILED ({msg})", file=sys.stderr)
    print(f"aggregate: {res.aggregate_path}")
    print(f"max average return over {len(res.results)} seeds: {res.max_avg_return:.2f}")
    return 1 if res.failures else 0


def cmd_plot(args) -> int:
    try:
        plot_csvs(args.csvs, args.out, window=args.window, title=args.title)
    except ValueError as e:
        print(f"plot failed: {e}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


def cmd_verify_lemma(args) -> int:
    t0 = time.perf_counter()
    n_holds, max_ratio = run_bound_trials(args.trials, seed=args.seed)
    dt = time.perf_counter() - t0
    ok = n_holds == args.trials
    print(f"trials: {args.trials}")
    print(f"bound holds: {n_holds}/{args.trials}")
    print(f"max observed lhs/rhs ratio: {max_ratio:.6f}")
    print(f"elapsed: {dt:.2f}s")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_grad_check(args) -> int:
    t0 = time.perf_counter()
    worst = grad_check_suite(args.nets, seed=args.seed)
    dt = time.perf_counter() - t0
    print(f"nets checked: {args.nets}")
    print(f"max relative error vs central finite differences: {worst:.3e}")
    print(f"elapsed: {dt:.2f}s")
    ok = worst < args.tolerance
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_controversy_exp(args) -> int:
    cfg = _base_config(args)
    cfg = dataclasses.replace(cfg, env="pendulum")
    comparison = controversy_experiment(cfg, workers=args.workers)
    print("seed  same-target  opposite-target")
    for s, a, b in zip(comparison.seeds, comparison.same_target,
                       comparison.opposite_target):
        print(f"{s:4d}  {a:11.4f}  {b:15.4f}")
    n = len(comparison.seeds)
    print(f"opposite targets kept more controversy in {comparison.wins}/{n} seeds")
    out = resolve_out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    table = out / "controversy_comparison.csv"
    lines = ["seed,same_target,opposite_target"]
    lines += [f"{s},{repr(a)},{repr(b)}"
              for s, a, b in zip(comparison.seeds, comparison.same_target,
                                 comparison.opposite_target)]
    table.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    print(f"wrote {table}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one seed and write its metrics CSV")
    _add_run_flags(p, multi_seed=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="run a seed list and aggregate")
    _add_run_flags(p, multi_seed=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot", help="render learning curves to SVG")
    p.add_argument("csvs", nargs="+", help="run or aggregate CSV files")
    p.add_argument("--out", required=True, help="output .svg path")
    p.add_argument("--window", type=int, default=0,
                   help="moving-average window (0 = raw data)")
    p.add_argument("--title", default="")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("verify-lemma",
                       help="check the performance-gap bound on random MDPs")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_lemma)

    p = sub.add_parser("grad-check",
                       help="compare backprop with central finite differences")
    p.add_argument("--nets", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("controversy-exp",
                       help="same- vs opposite-target critic disagreement")
    _add_run_flags(p, multi_seed=True)
    p.set_defaults(func=cmd_controversy_exp)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
