"""Command-line front end.

    nmqaoa solve|sweep|explore|benchmark|multinode --config cfg.json
           [--out path] [--seed N] [--workers N] [--no-figures]

Command-specific settings (sweep values, sample counts, node lists) live in
the config file under "extras".  Results go to --out (CSV/JSON, with a PNG
figure beside them) or to stdout.  Exit codes: 0 success, 2 configuration
error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

from . import plots
from .experiments import (ConfigError, ExperimentConfig, SolverError,
                          cmd_benchmark, cmd_explore_scatter, cmd_multinode,
                          cmd_solve, cmd_sweep, format_csv, format_json)
from .optimizer import OptimizerError
from .parallel import resolve_workers
from .trajectory import StepSizeError, TrajectoryConfig

COMMANDS = ("solve", "sweep", "explore", "benchmark", "multinode")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nmqaoa",
        description="QAOA on structured noise: solve, sweep, and benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output file (CSV or JSON)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int,
                       help="worker processes (also NMQAOA_WORKERS)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip the PNG figure next to --out")
    return parser


def _apply_seed(config: ExperimentConfig, seed) -> ExperimentConfig:
    if seed is None:
        return config
    solver = config.solver
    if isinstance(solver, TrajectoryConfig):
        solver = dataclasses.replace(solver, base_seed=int(seed))
    return dataclasses.replace(config, seed=int(seed), solver=solver)


def _run(args) -> tuple:
    """(rendered text, figure payload) for the chosen command."""
    config = _apply_seed(ExperimentConfig.from_json(args.config), args.seed)
    workers = resolve_workers(args.workers)
    extras = config.extras
    if args.command == "solve":
        doc = cmd_solve(config, workers)
        return format_json(doc), doc
    if args.command == "sweep":
        section = extras.get("sweep")
        if not section:
            raise ConfigError('sweep needs extras["sweep"] with '
                              '"param" and "values"')
        param = section.get("param", "")
        header, rows = cmd_sweep(config, param, section.get("values", []),
                                 workers)
        return format_csv(header, rows), (param, rows)
    if args.command == "explore":
        section = extras.get("explore", {})
        header, rows = cmd_explore_scatter(
            config, int(section.get("n_samples", 28)),
            tuple(section.get("tau_range", (0.5, 4.0))), workers)
        return format_csv(header, rows), rows
    if args.command == "benchmark":
        section = extras.get("benchmark", {})
        _, (header, rows) = cmd_benchmark(
            config, section.get("node_counts", [5, 6, 7, 8]),
            section.get("traj_counts", [500]), workers)
        return format_csv(header, rows), rows
    section = extras.get("multinode", {})
    header, rows = cmd_multinode(config,
                                 section.get("nodes", list(range(5, 12))),
                                 workers)
    return format_csv(header, rows), rows


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text, figure_payload = _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, StepSizeError, OptimizerError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        if not args.no_figures:
            for path in plots.render(args.command, figure_payload, args.out):
                print(f"figure: {path}")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
