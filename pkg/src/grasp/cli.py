"""Command-line entry point.

Subcommands: run, plot, visualize-affordances, switch-analysis, gradcheck.
Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

import argparse
import json
import os
import sys
import threading

import numpy as np

from .agent import Agent
from .autodiff import GradError
from .config import Config, ConfigError, apply_env_overrides, parse_file
from .nn import NumericsError


def _load_config(args):
    if args.config:
        cfg = parse_file(args.config)
    else:
        cfg = apply_env_overrides(Config())
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        cfg.set(key.strip(), value.strip())
    return cfg.validate()


def _cmd_run(args):
    from .plotting import plot_learning_curves, write_aggregate_csv, aggregate_runs
    from .trainer import Trainer

    cfg = _load_config(args)
    out_dir = args.out or cfg["run.out_dir"]
    if args.dry_run:
        sys.stdout.write(cfg.resolved_text())
        return 0
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.resolved"), "w") as f:
        f.write(cfg.resolved_text())
    seeds = cfg["train.seeds"]
    csv_paths = [os.path.join(out_dir, f"seed_{s}", "metrics.csv") for s in seeds]

    def train_one(seed, path):
        Trainer(cfg, seed, os.path.dirname(path)).run()

    if args.parallel_seeds and len(seeds) > 1:
        threads = [threading.Thread(target=train_one, args=(s, p))
                   for s, p in zip(seeds, csv_paths)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    else:
        for s, p in zip(seeds, csv_paths):
            train_one(s, p)

    steps, metrics = aggregate_runs(csv_paths)
    write_aggregate_csv(os.path.join(out_dir, "aggregate.csv"), steps, metrics)
    label = f"{cfg['afford.variant']}-{cfg['afford.K']}"
    plot_learning_curves({label: csv_paths}, os.path.join(out_dir, "figures"))
    print(f"wrote {out_dir} ({len(seeds)} seeds)")
    return 0


def _cmd_plot(args):
    from .plotting import plot_learning_curves

    groups = {}
    for spec_arg in args.group:
        if "=" not in spec_arg:
            raise ConfigError(f"expected LABEL=csv[,csv...], got {spec_arg!r}")
        label, paths = spec_arg.split("=", 1)
        groups[label] = [p for p in paths.split(",") if p]
    try:
        written = plot_learning_curves(groups, args.out)
    except (OSError, ValueError) as e:
        raise ConfigError(str(e))
    for w in written:
        print(w)
    return 0


def _agent_from_checkpoint(args):
    cfg = _load_config(args)
    agent = Agent(cfg, seed=0)
    try:
        agent.load(args.checkpoint)
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot load checkpoint: {e}")
    return agent, cfg


def _cmd_visualize(args):
    from .analysis import default_grid, head_rollouts, write_trajectory_dump
    from .plotting import plot_trajectories

    agent, cfg = _agent_from_checkpoint(args)
    if cfg["env.id"] == "reachgoal":
        raise ConfigError("visualize-affordances expects an option environment")
    try:
        n = int(args.grid.lower().split("x")[0])
    except ValueError:
        raise ConfigError(f"bad grid spec {args.grid!r}, expected e.g. 3x3")
    os.makedirs(args.out, exist_ok=True)
    starts = default_grid(n)
    rows, trajectories, objects = head_rollouts(
        agent, starts, layout_seed=args.seed, goal_index=args.goal_index)
    dump = os.path.join(args.out, "trajectories.csv")
    write_trajectory_dump(dump, rows, with_velocity=cfg["env.id"] == "pointmass")
    svg = plot_trajectories(trajectories, objects,
                            os.path.join(args.out, "affordances.svg"))
    print(dump)
    print(svg)
    return 0


def _cmd_switch(args):
    from .analysis import switch_analysis
    from .plotting import plot_switch_histograms

    agent, cfg = _agent_from_checkpoint(args)
    if cfg["afford.K"] < 2:
        raise ConfigError("switch-analysis needs afford.K >= 2")
    os.makedirs(args.out, exist_ok=True)
    report = switch_analysis(agent, n_configs=args.configs, seed=args.seed)
    np.savetxt(os.path.join(args.out, "deltas.csv"), report.deltas.T,
               delimiter=",", fmt="%.10g",
               header=",".join(f"delta_head{k}" for k in range(agent.afford.K)),
               comments="")
    summary = {
        "planner_mean_return": float(report.planner_returns.mean()),
        "head_mean_returns": [float(m) for m in report.head_returns.mean(axis=1)],
        "heads": report.summary,
    }
    with open(os.path.join(args.out, "summary.json"), "w") as f:
        json.dump(summary, f, indent=2)
    plot_switch_histograms(report.deltas, args.out)
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_gradcheck(args):
    from .gradcheck import run_suite

    results = run_suite(seed=args.seed)
    failed = []
    for name, (err, threshold) in sorted(results.items()):
        status = "ok" if err < threshold else "FAIL"
        print(f"{name:40s} {err:12.3e}  (< {threshold:g})  {status}")
        if err >= threshold:
            failed.append(name)
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return 2
    print(f"all {len(results)} checks passed")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="grasp",
                                     description="Affordance-based planning agents")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_opts(p):
        p.add_argument("--config", help="config file (key = value lines)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a single config key")

    p = sub.add_parser("run", help="train one agent over the configured seeds")
    add_config_opts(p)
    p.add_argument("--out", help="output directory (default run.out_dir)")
    p.add_argument("--dry-run", action="store_true",
                   help="print the resolved config and exit")
    p.add_argument("--parallel-seeds", action="store_true",
                   help="one thread per seed")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("plot", help="learning-curve SVGs from metric CSVs")
    p.add_argument("group", nargs="+", metavar="LABEL=CSV[,CSV...]")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("visualize-affordances",
                       help="roll out each head from a grid of starts")
    add_config_opts(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--grid", default="3x3")
    p.add_argument("--goal-index", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_visualize)

    p = sub.add_parser("switch-analysis",
                       help="paired planner-vs-single-head evaluation")
    add_config_opts(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--configs", type=int, default=1000,
                   help="number of paired start/goal configurations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_switch)

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except (NumericsError, GradError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
