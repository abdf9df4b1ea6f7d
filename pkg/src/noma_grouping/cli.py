"""Command line front end for the experiment harness."""

from __future__ import annotations

import argparse
import sys

from .baselines import StrategyKind
from .harness import ExperimentSpec, load_config, run_experiment, summarize, watts_to_dbm


def _parse_strategy(text: str) -> StrategyKind:
    if ":" in text:
        kind, alpha = text.split(":", 1)
        return StrategyKind(kind.strip(), float(alpha))
    return StrategyKind(text.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noma-grouping",
        description="Run seeded user-grouping experiments and write a CSV of metrics.",
    )
    parser.add_argument("--config", help="JSON scenario config (sets the defaults of the sweep)")
    parser.add_argument(
        "--strategy",
        action="append",
        default=None,
        help="strategy to run: eba, fga[:alpha], sccd, gale_shapley, exhaustive "
        "(repeatable; default: fga sccd gale_shapley)",
    )
    parser.add_argument("--alpha", type=float, nargs="+", default=[5.0],
                        help="restart factor(s) for fga strategies without an explicit alpha")
    parser.add_argument("--users", type=int, nargs="+", default=None, help="user counts to sweep")
    parser.add_argument("--groups", type=int, nargs="+", default=None, help="subchannel counts to sweep")
    parser.add_argument("--bs", type=int, nargs="+", default=None, help="BS counts to sweep")
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="CSV output path")
    parser.add_argument("--oracle", action="store_true",
                        help="also run the exhaustive oracle (tiny instances only)")
    parser.add_argument("--trace-dir", default=None,
                        help="write per-trial game trace logs into this directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    users = args.users
    groups = args.groups
    bs = args.bs
    rate_ranges = None
    if args.config:
        cfg = load_config(args.config)
        users = users or [cfg.num_users]
        groups = groups or [cfg.num_channels]
        bs = bs or [cfg.num_bs]
        rate_ranges = [cfg.rate_range_bps]

    strategies = [_parse_strategy(s) for s in (args.strategy or ["fga", "sccd", "gale_shapley"])]
    if args.oracle and not any(s.kind == "exhaustive" for s in strategies):
        strategies.append(StrategyKind("exhaustive"))

    spec = ExperimentSpec(
        strategies=strategies,
        trials=args.trials,
        base_seed=args.seed,
        num_users_list=users or [50],
        num_channels_list=groups or [10],
        num_bs_list=bs or [4],
        rate_ranges_bps=rate_ranges or [(60e3, 600e3)],
        alphas=args.alpha,
        output_path=args.out,
    )
    results = run_experiment(spec, trace_dir=args.trace_dir)
    summary = summarize(results)

    print(f"{'sweep':>5} {'strategy':<18} {'ok':>4} {'mean dBm':>10} {'mean I (W)':>12}")
    for row in summary["stats"]:
        dbm = watts_to_dbm(row["mean_power_w"])
        print(
            f"{row['sweep_index']:>5} {row['strategy']:<18} "
            f"{row['feasible']:>3}/{row['trials']:<3} {dbm:>10.3f} "
            f"{row['mean_interference_w']:>12.4e}"
        )
    if args.out:
        print(f"wrote {len(results)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
