"""
``search`` subcommand: multi-objective expression search.
"""

import argparse
import logging

import numpy as np

from sharedsr.commands.common import (
    EXIT_INPUT_ERROR,
    EXIT_OK,
    add_data_arguments,
    load_dataset,
    run_config_from_args,
)
from sharedsr.config import get_config
from sharedsr.exceptions import SharedSRError
from sharedsr.services.data_loader import stratified_split
from sharedsr.services.reports import format_pareto_table, write_search_report
from sharedsr.services.search import run_search
from sharedsr.utils.logging_config import log_performance

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("search", help="search for expressions")
    add_data_arguments(parser)
    parser.add_argument("--output", help="structured report path (one JSON record per line)")
    parser.add_argument("--test-fraction", type=float, help="held-out share of every cell")
    parser.add_argument("--population-size", type=int)
    parser.add_argument("--generations", type=int)
    parser.add_argument("--max-complexity", type=int)
    parser.add_argument("--tournament-size", type=int)
    parser.add_argument("--restarts", type=int, help="extra random starts per candidate fit")
    parser.add_argument("--max-iterations", type=int, help="iterations per candidate fit")
    parser.add_argument("--workers", type=int, help="concurrent candidate fits")
    parser.add_argument(
        "--no-parameter-objective",
        dest="use_parameter_objective",
        action="store_const",
        const=False,
        help="rank on loss and complexity only",
    )
    parser.set_defaults(handler=run)


def default_workers() -> int | None:
    """Worker count from SHAREDSR_WORKERS when it asks for more than one."""
    workers = get_config().workers
    return workers if workers > 1 else None


@log_performance(logger)
def run(args: argparse.Namespace) -> int:
    """Run the search, print the Pareto table and write the structured report."""
    try:
        config = run_config_from_args(
            args,
            output=args.output,
            test_fraction=args.test_fraction,
            population_size=args.population_size,
            generations=args.generations,
            max_complexity=args.max_complexity,
            tournament_size=args.tournament_size,
            restarts=args.restarts,
            max_iterations=args.max_iterations,
            n_workers=args.workers or default_workers(),
            use_parameter_objective=args.use_parameter_objective,
        )
        search_config = config.search_config()
        ds = load_dataset(config)
    except (SharedSRError, ValueError) as e:
        logger.error(f"Search setup failed: {e}")
        return EXIT_INPUT_ERROR

    train, test = ds, None
    if config.test_fraction > 0:
        train, test = stratified_split(ds, config.test_fraction, np.random.default_rng(config.seed))
        logger.info("Split dataset", extra={"train_rows": train.n_rows, "test_rows": test.n_rows})
    if train.n_rows == 0:
        logger.error("Search setup failed: no training rows")
        return EXIT_INPUT_ERROR

    report = run_search(train, search_config)
    print(format_pareto_table(report, test))
    if config.output:
        try:
            with open(config.output, "w", encoding="utf-8") as out:
                n_records = write_search_report(out, report, train, test)
        except OSError as e:
            logger.error(f"Cannot write search report: {e}")
            return EXIT_INPUT_ERROR
        logger.info("Wrote search report", extra={"path": config.output, "records": n_records})
    return EXIT_OK
