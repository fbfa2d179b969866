"""Command-line entry point for evidence-plane.

Usage:
    evidence-plane run configs/gaussian_dense.cfg [--seed 3] [--out runs/g3]
    evidence-plane suite configs/ [--out runs/suite] [--workers 4]
    evidence-plane plots runs/gaussian
    evidence-plane oracle binary-image-kl --d 8 --p 0.1 [--mc 1000000]
    evidence-plane oracle binary-image-sweep --sides 4,6,8,10 --p 0.1 --k 100
    evidence-plane oracle gaussian-envelope --shift 1.0

Exit codes: 0 ok, 2 configuration error, 3 data or I/O error, 4 numerical abort.
Set EVIDENCE_PLANE_DEBUG=true (or pass --verbose) for debug logging.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .datasets.binary_image import EXACT_MAX_SIDE, BinaryImageSpec, binary_image_analytic_kl
from .divergence import binary_image_kl_sweep
from .errors import EXIT_CONFIG, EXIT_OK, EvidencePlaneError, exit_code_for
from .harness import plots_exit_code, run_experiment, run_suite
from .models import KnnEstimatorConfig
from .plane import np_plane_data

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def debug_from_env() -> bool:
    return os.getenv("EVIDENCE_PLANE_DEBUG", "").lower() in ("true", "1", "yes")


def configure_logging(verbose: bool = False) -> None:
    debug_mode = verbose or debug_from_env()
    logging.basicConfig(
        level=logging.DEBUG if debug_mode else logging.INFO,
        format=LOG_FORMAT,
        force=True,
    )
    if debug_mode:
        logger.debug("Starting in DEBUG mode")


def _int_list(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evidence-plane",
        description="Train classifiers and place them on the evidence-error plane",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging")

    overrides = argparse.ArgumentParser(add_help=False)
    overrides.add_argument("--seed", type=int, help="Override the master seed")
    overrides.add_argument("--out", help="Override the output directory")

    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[overrides], help="Run one experiment config")
    run.add_argument("config", help="Path to a key = value config file")

    suite = commands.add_parser("suite", parents=[overrides], help="Run every *.cfg in a directory")
    suite.add_argument("directory", help="Directory of config files")
    suite.add_argument("--workers", type=int, default=1, help="Runs executed in parallel")

    plots = commands.add_parser("plots", help="Write plot tables for a run directory")
    plots.add_argument("run_dir", help="Run output directory")

    oracle = commands.add_parser("oracle", help="Analytic divergence oracles")
    oracles = oracle.add_subparsers(dest="oracle", required=True)

    kl = oracles.add_parser("binary-image-kl", help="KL between row and column images")
    kl.add_argument("--d", type=int, required=True, help="Image side")
    kl.add_argument("--p", type=float, required=True, help="Pixel flip probability")
    kl.add_argument("--mc", type=int, help="Use Monte Carlo with this many samples")
    kl.add_argument("--seed", type=int, default=0)
    kl.add_argument("--workers", type=int, default=1)

    sweep = oracles.add_parser("binary-image-sweep", help="Analytic vs kNN KL across image sides")
    sweep.add_argument("--sides", type=_int_list, default=[4, 6, 8, 10])
    sweep.add_argument("--p", type=float, default=0.1)
    sweep.add_argument("--n-per-class", type=int, default=10_000)
    sweep.add_argument("--mc", type=int, default=200_000, help="Monte Carlo samples for d > 6")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--k", default="auto", help="Neighbour order, or 'auto' for null-consistency selection")

    envelope = oracles.add_parser("gaussian-envelope", help="Neyman-Pearson envelope table")
    envelope.add_argument("--shift", type=float, default=1.0)
    envelope.add_argument("--points", type=int, default=99)
    return parser


def _oracle(args: argparse.Namespace) -> int:
    if args.oracle == "binary-image-kl":
        spec = BinaryImageSpec(args.d, args.p)
        if args.mc is None and args.d <= EXACT_MAX_SIDE:
            result = binary_image_analytic_kl(spec, "exact")
        else:
            result = binary_image_analytic_kl(
                spec,
                "monte_carlo",
                n_samples=args.mc or 1_000_000,
                seed=args.seed,
                workers=args.workers,
            )
        print("d\tp\tkl_bits\tstandard_error\tmethod\tsamples")
        print(f"{args.d}\t{args.p}\t{result.value!r}\t{result.standard_error!r}\t{result.method}\t{result.samples}")
    elif args.oracle == "binary-image-sweep":
        rows = binary_image_kl_sweep(
            args.sides, args.p, args.n_per_class, KnnEstimatorConfig(seed=args.seed, k=args.k), args.seed, args.mc
        )
        print("d\tanalytic_bits\tanalytic_se\tknn_bits")
        for row in rows:
            print(f"{row.side}\t{row.analytic_bits!r}\t{row.analytic_se!r}\t{row.knn_bits!r}")
    else:
        alphas = [(i + 1) / (args.points + 1) for i in range(args.points)]
        print("alpha\tbeta_star\tdiagonal")
        for alpha, beta, diagonal in np_plane_data(args.shift, alphas):
            print(f"{alpha!r}\t{beta!r}\t{diagonal!r}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        if args.command == "run":
            return run_experiment(args.config, seed=args.seed, output_dir=args.out).exit_code
        if args.command == "suite":
            summary = run_suite(args.directory, output_dir=args.out, seed=args.seed, workers=args.workers)
            print(summary)
            return EXIT_OK
        if args.command == "plots":
            return plots_exit_code(args.run_dir)
        return _oracle(args)
    except (EvidencePlaneError, OSError) as e:
        logger.error("%s", e)
        return exit_code_for(e)
    except ValueError as e:
        logger.error("%s", e)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
