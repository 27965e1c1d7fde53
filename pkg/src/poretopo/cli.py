"""Command line driver.

Subcommands:
    optimize   --config FILE --out DIR
    analyze    --config FILE --design CSV --out DIR
    flat-sheet --config FILE --out DIR

``--threads`` (or the PORETOPO_THREADS environment variable) sets the number
of assembly worker threads; results are independent of the thread count.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

from . import __version__
from .config import load_config
from .errors import PoretopoError
from .exports import read_design_csv
from .runner import run_analysis, run_flat_sheet, run_optimization

_log = logging.getLogger("poretopo")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("PORETOPO_THREADS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poretopo",
        description="Topography optimization of porous hyperelastic membranes",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=_default_threads(),
                       help="assembly worker threads (default: "
                            "PORETOPO_THREADS or 1)")
        p.add_argument("--log-level", default="INFO",
                       choices=["DEBUG", "INFO", "WARNING", "ERROR"])
        p.add_argument("--dump-states", action="store_true",
                       help="write per-load-step displacement CSVs")

    p_opt = sub.add_parser("optimize", help="run the design optimization loop")
    common(p_opt)

    p_ana = sub.add_parser("analyze", help="solve a fixed design and report HD curves")
    common(p_ana)
    p_ana.add_argument("--design", required=True,
                       help="design CSV as written by optimize")

    p_flat = sub.add_parser("flat-sheet",
                            help="uniform minimum-thickness baseline analysis")
    common(p_flat)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        if args.dump_states:
            config = dataclasses.replace(
                config, solver=dataclasses.replace(config.solver, dump_states=True)
            )
        if args.command == "optimize":
            outputs = run_optimization(config, args.out, threads=args.threads)
            _log.info(
                "done: f0=%.6e, V/Vmax=%.4f, outputs in %s",
                outputs.final_objective, outputs.volume_ratio, args.out,
            )
        elif args.command == "analyze":
            zeta = read_design_csv(args.design)
            outputs = run_analysis(config, zeta, args.out, threads=args.threads)
            _log.info("done: outputs in %s", args.out)
        else:
            outputs = run_flat_sheet(config, args.out, threads=args.threads)
            _log.info("done: outputs in %s", args.out)
    except PoretopoError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_status
    return 0


if __name__ == "__main__":
    sys.exit(main())
