"""
Shared argument handling for the command-line subcommands.
"""

import argparse
import logging
from typing import Any

from sharedsr.config import load_run_config
from sharedsr.models.dataset import Dataset
from sharedsr.models.schemas import RunConfig
from sharedsr.services.data_loader import load_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FIT_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_NOT_IDENTIFIABLE = 3


def comma_list(text: str) -> list[str]:
    """Argparse type for comma-separated column names."""
    return [part.strip() for part in text.split(",") if part.strip()]


def add_data_arguments(parser: argparse.ArgumentParser) -> None:
    """Input file, column roles and the optional config file."""
    parser.add_argument("--config", help="key = value run configuration file")
    parser.add_argument("--data", help="input CSV path")
    parser.add_argument("--features", type=comma_list, help="feature columns, comma-separated")
    parser.add_argument(
        "--categories", type=comma_list, help="categorical columns, comma-separated"
    )
    parser.add_argument("--target", help="target column")
    parser.add_argument("--seed", type=int, help="random seed")


def run_config_from_args(args: argparse.Namespace, **overrides: Any) -> RunConfig:
    """
    Run configuration from ``--config`` with flag values layered on top.

    Raises:
        ConfigError: On unknown keys, invalid values or missing column roles.
    """
    flags = {
        "data": args.data,
        "features": args.features,
        "categories": args.categories,
        "target": args.target,
        "seed": args.seed,
        **overrides,
    }
    return load_run_config(args.config, flags)


def load_dataset(config: RunConfig) -> Dataset:
    return load_csv(config.data, config.features, config.categories, config.target)
