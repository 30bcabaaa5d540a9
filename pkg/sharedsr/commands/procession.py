"""
``procession`` subcommand: the data-reduction experiment.
"""

import argparse
import logging
import sys

from sharedsr.commands.common import EXIT_INPUT_ERROR, EXIT_OK
from sharedsr.config import get_config
from sharedsr.exceptions import SharedSRError
from sharedsr.models.schemas import FitOptions
from sharedsr.services.procession import (
    DEFAULT_EXPRESSION,
    DEFAULT_SCHEMA,
    ProcessionSettings,
    run_processions,
    summarize,
)
from sharedsr.services.reports import write_procession_log
from sharedsr.services.serialization import parse
from sharedsr.utils.logging_config import log_performance

logger = logging.getLogger(__name__)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _non_negative_float(text: str) -> float:
    value = float(text)
    if not value >= 0.0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "procession", help="move points to a test set until the data stop sufficing"
    )
    parser.add_argument("--processions", type=_positive_int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--expr",
        default=DEFAULT_EXPRESSION,
        help="expression over v1 and categories U (A-D) and L (a-c)",
    )
    parser.add_argument("--perturb-scale", type=_non_negative_float, default=0.1)
    parser.add_argument("--workers", type=_positive_int, help="concurrent processions")
    parser.add_argument("--output", help="CSV log path; stdout when omitted")
    parser.set_defaults(handler=run)


@log_performance(logger)
def run(args: argparse.Namespace) -> int:
    """Run the processions, write the CSV log and log a summary."""
    try:
        expr = parse(args.expr, DEFAULT_SCHEMA, n_features=1)
    except SharedSRError as e:
        logger.error(f"Procession setup failed: {e}")
        return EXIT_INPUT_ERROR

    settings = ProcessionSettings(perturb_scale=args.perturb_scale, fit=FitOptions())
    rows = run_processions(
        args.processions,
        expr,
        args.seed,
        settings,
        n_workers=args.workers or get_config().workers,
    )
    try:
        write_procession_log(rows, args.output or sys.stdout)
    except OSError as e:
        logger.error(f"Cannot write procession log: {e}")
        return EXIT_INPUT_ERROR

    summary = summarize(rows)
    minimum = summary["min_identifiable_train"]
    assert isinstance(minimum, dict)
    logger.info(
        "Processions complete",
        extra={
            "processions": args.processions,
            "fitted_rows": summary["fitted_rows"],
            "accurate_fraction": summary["accurate_fraction"],
            "unmet_inaccurate_fraction": summary["unmet_inaccurate_fraction"],
            "refit_failures": summary["refit_failures"],
            "smallest_train": min(minimum.values(), default=None),
        },
    )
    return EXIT_OK
