"""
Command-line entry point.

Builds the ``sharedsr`` parser from the subcommand modules, configures
logging from the environment and dispatches to the chosen subcommand.
"""

import argparse
import logging
import sys

from sharedsr.commands import COMMANDS
from sharedsr.commands.common import EXIT_INPUT_ERROR
from sharedsr.config import get_config
from sharedsr.utils.logging_config import setup_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sharedsr",
        description="Symbolic regression with shared, partially shared and non-shared parameters",
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="overrides SHAREDSR_LOG_LEVEL",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Parse ``argv``, run the subcommand and return its exit code."""
    args = build_parser().parse_args(argv)
    config = get_config()
    try:
        config.validate_config()
    except ValueError as e:
        setup_logging()
        logger.error(f"Invalid environment configuration: {e}")
        return EXIT_INPUT_ERROR

    setup_logging(
        log_level=args.log_level or config.log_level,
        log_file=config.log_file,
        enable_json=config.log_json,
        colored=config.is_development,
    )
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
