"""
``check`` subcommand: minimum data requirement verdict for an expression.
"""

import argparse
import logging

from sharedsr.commands.common import (
    EXIT_INPUT_ERROR,
    EXIT_NOT_IDENTIFIABLE,
    EXIT_OK,
    add_data_arguments,
    load_dataset,
    run_config_from_args,
)
from sharedsr.exceptions import SharedSRError
from sharedsr.services.identifiability import check_identifiability
from sharedsr.services.reports import format_check_report
from sharedsr.services.serialization import parse
from sharedsr.utils.logging_config import log_performance

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "check", help="check whether the data can identify every individual parameter"
    )
    add_data_arguments(parser)
    parser.add_argument("--expr", required=True, help="expression text")
    parser.set_defaults(handler=run)


@log_performance(logger)
def run(args: argparse.Namespace) -> int:
    """Print the cell counts, shortfalls and verdict; exit 0 if feasible, 3 if not."""
    try:
        config = run_config_from_args(args)
        ds = load_dataset(config)
        expr = parse(args.expr, ds.schema, ds.n_features)
    except SharedSRError as e:
        logger.error(f"Check failed: {e}")
        return EXIT_INPUT_ERROR

    feasible, report = check_identifiability(expr, ds)
    print(format_check_report(report))
    return EXIT_OK if feasible else EXIT_NOT_IDENTIFIABLE
