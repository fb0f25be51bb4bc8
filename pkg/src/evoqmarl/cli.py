"""Command line entry point: ``evoqmarl {run,aggregate,plot,replay}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import (
    CONCEPTS,
    ExperimentConfig,
    aggregate,
    read_aggregate,
    read_records,
    render_plots,
    replay_best,
    run_experiment,
    write_aggregate,
)
from .evolution import STRATEGIES


def _run(args) -> int:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {
        "concept": args.concept,
        "strategy": args.strategy,
        "generations": args.generations,
        "population": args.population,
        "steps": args.steps,
        "layers": args.layers,
        "gates": args.gates,
        "out": args.out,
        "jobs": args.jobs,
        "seeds": args.seed,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if args.fixed_eval_seed:
        cfg.fixed_eval_seed = True
    path = run_experiment(cfg, resume=args.resume)
    print(path)
    return 0


def _aggregate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for csv_path in args.csv:
        csv_path = Path(csv_path)
        agg = aggregate(read_records(csv_path))
        target = out / f"{csv_path.stem}_agg.csv"
        write_aggregate(agg, target)
        print(target)
    return 0


def _plot(args) -> int:
    data = {}
    for path in args.aggregated:
        label = Path(path).stem.removesuffix("_agg")
        data[label] = read_aggregate(path)
    for path in render_plots(data, args.out, fmt=args.format):
        print(path)
    return 0


def _replay(args) -> int:
    lines, metrics = replay_best(args.checkpoint, args.seed)
    for line in lines:
        print(line)
    print(
        f"score={metrics.score} total_coins={metrics.total_coins} "
        f"own_coins={metrics.own_coins} own_coin_rate={metrics.own_coin_rate:.4f}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evoqmarl", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evolve agents and write per-generation metrics")
    run.add_argument("--config", help="JSON config file (flags override it)")
    run.add_argument("--concept", choices=CONCEPTS)
    run.add_argument("--strategy", choices=STRATEGIES)
    run.add_argument("--seed", type=int, action="append", help="repeat for several seeds")
    run.add_argument("--generations", type=int)
    run.add_argument("--population", type=int)
    run.add_argument("--steps", type=int)
    run.add_argument("--layers", type=int)
    run.add_argument("--gates", type=int)
    run.add_argument("--out")
    run.add_argument("--jobs", type=int)
    run.add_argument("--fixed-eval-seed", action="store_true")
    run.add_argument("--resume", action="store_true", help="continue from per-seed checkpoints")
    run.set_defaults(func=_run)

    agg = sub.add_parser("aggregate", help="cross-seed mean and std per generation")
    agg.add_argument("csv", nargs="+")
    agg.add_argument("--out", default=".")
    agg.set_defaults(func=_aggregate)

    plot = sub.add_parser("plot", help="render line charts from aggregated CSVs")
    plot.add_argument("aggregated", nargs="+")
    plot.add_argument("--out", default="plots")
    plot.add_argument("--format", default="svg")
    plot.set_defaults(func=_plot)

    replay = sub.add_parser("replay", help="play one episode with a checkpoint's elite")
    replay.add_argument("checkpoint")
    replay.add_argument("--seed", type=int)
    replay.set_defaults(func=_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
