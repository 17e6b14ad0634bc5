"""Command line interface.

Subcommands::

    solve  --config PATH [--out DIR] [--seed N]
    adapt  --config PATH [--out DIR] [--levels N] [--theta T] [--seed N]
    study  --config PATH [--out DIR] [--levels N] [--seed N]

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
1 output error.  ``DWCOUPLE_WORKERS`` sets the number of assembly threads.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .bem import WORKERS_ENV
from .config import ConfigError, load_config
from .estimator import adaptive_loop
from .mesh import MeshError
from .output import OutputError, write_outputs
from .solver import SolverError
from .steklov import SteklovError

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("dwcouple")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dwcouple",
        description="FE/BE coupling for the relaxed double-well transmission problem "
                    "with Signorini contact.",
        epilog=f"Set {WORKERS_ENV} to control the number of assembly threads.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("solve", "single solve on the initial mesh"),
                           ("adapt", "adaptive loop with Dörfler marking"),
                           ("study", "uniform refinement study")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="TOML problem configuration")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="seed for a random initial guess")
        if name != "solve":
            p.add_argument("--levels", type=int, help="maximal number of levels")
        if name == "adapt":
            p.add_argument("--theta", type=float, help="bulk parameter in (0, 1]")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        overrides = {"output": args.out, "seed": args.seed}
        if args.command == "solve":
            overrides.update(mode="single_solve", max_levels=1)
        elif args.command == "adapt":
            overrides.update(mode="adaptive", max_levels=args.levels, theta=args.theta)
        else:
            overrides.update(mode="uniform_study", max_levels=args.levels)
        cfg = cfg.with_overrides(**overrides)
        mesh = cfg.initial_mesh()
    except (ConfigError, MeshError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        record = adaptive_loop(mesh, cfg.wells, cfg.problem_data(), cfg.solve_options(),
                               cfg.adaptive_options())
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        for rec in exc.history[-10:]:
            print("  " + rec.format(), file=sys.stderr)
        return EXIT_SOLVER
    except SteklovError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    header = (f"command={args.command} mode={cfg.mode} theta={cfg.theta!r} "
              f"levels={cfg.max_levels} seed={cfg.seed} wells={tuple(map(float, cfg.wells.f1))}/{tuple(map(float, cfg.wells.f2))} "
              f"f={cfg.f.source} t0={cfg.t0.source} u0={cfg.u0.source}")
    try:
        paths = write_outputs(record, cfg.output, header)
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO
    last = record.levels[-1]
    print(f"{len(record.levels)} level(s); final: {last.n_dofs} dofs, J_h={last.j_h!r}, "
          f"eta={last.report.total!r}; wrote {len(paths)} files to {cfg.output}")
    return EXIT_OK


def main() -> None:
    sys.exit(run())
