"""
``fit`` subcommand: identify the parameters of a fixed expression.
"""

import argparse
import logging
from pathlib import Path

import numpy as np
from pydantic import TypeAdapter, ValidationError

from sharedsr.commands.common import (
    EXIT_FIT_FAILED,
    EXIT_INPUT_ERROR,
    EXIT_OK,
    add_data_arguments,
    load_dataset,
    run_config_from_args,
)
from sharedsr.exceptions import ConfigError, FitError, SharedSRError
from sharedsr.models.binding import ParameterBinding, ParameterLayout
from sharedsr.models.dataset import CategorySchema
from sharedsr.models.expression import Expression, terminal_labels
from sharedsr.models.schemas import FitReport
from sharedsr.services.fitting import fit_parameters
from sharedsr.services.identifiability import check_identifiability
from sharedsr.services.reports import build_fit_report, format_fit_report
from sharedsr.services.serialization import parse
from sharedsr.utils.logging_config import log_performance

logger = logging.getLogger(__name__)

LABELED_VALUES = TypeAdapter(dict[str, float])


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("fit", help="fit the parameters of one expression")
    add_data_arguments(parser)
    parser.add_argument("--expr", required=True, help="expression text")
    parser.add_argument(
        "--init",
        default="random",
        help="'random', or a JSON file of label -> value pairs or a saved fit report",
    )
    parser.add_argument("--restarts", type=int, help="extra random starts")
    parser.add_argument("--max-iterations", type=int, help="iteration budget per start")
    parser.add_argument("--output", help="write the fit report as JSON to this path")
    parser.set_defaults(handler=run)


def load_init(path: str | Path, expr: Expression, schema: CategorySchema) -> ParameterBinding:
    """
    Starting binding from a JSON file.

    The file holds either an object mapping every parameter label (such as
    ``C1_1[B]``) to a value, or a fit report written by ``--output``.

    Raises:
        ConfigError: If the file is unreadable or labels are missing or unknown.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"init file {path} does not exist")
    text = path.read_text(encoding="utf-8")
    try:
        report = FitReport.model_validate_json(text)
        values = {p.label: p.value for p in report.parameters}
    except ValidationError:
        try:
            values = LABELED_VALUES.validate_json(text)
        except ValidationError as e:
            raise ConfigError(f"init file {path} is not a label -> value object: {e}") from e

    layout = ParameterLayout.of(expr, schema)
    labels = layout.labels(terminal_labels(expr))
    missing = [label for label in labels if label not in values]
    unknown = sorted(set(values) - set(labels))
    if missing or unknown:
        raise ConfigError(
            f"init file {path} does not match the expression "
            f"(missing: {', '.join(missing) or 'none'}; unknown: {', '.join(unknown) or 'none'})"
        )
    return ParameterBinding(layout=layout, values=np.array([values[label] for label in labels]))


@log_performance(logger)
def run(args: argparse.Namespace) -> int:
    """Fit, print the report and optionally save it; exit 1 when fitting fails."""
    try:
        config = run_config_from_args(
            args, restarts=args.restarts, max_iterations=args.max_iterations
        )
        ds = load_dataset(config)
        expr = parse(args.expr, ds.schema, ds.n_features)
        init: ParameterBinding | str = (
            "random" if args.init == "random" else load_init(args.init, expr, ds.schema)
        )
    except SharedSRError as e:
        logger.error(f"Fit setup failed: {e}")
        return EXIT_INPUT_ERROR

    feasible, requirement = check_identifiability(expr, ds)
    if not feasible:
        logger.warning(
            "Data do not meet the minimum requirements; parameters may not be identifiable",
            extra={"shortfalls": [s.requirement for s in requirement.shortfalls]},
        )

    try:
        fit = fit_parameters(
            expr, ds, init, config.fit_options(), np.random.default_rng(config.seed)
        )
    except FitError as e:
        logger.error(f"Fit failed: {e}")
        return EXIT_FIT_FAILED

    report = build_fit_report(expr, fit, feasible)
    print(format_fit_report(report))
    if args.output:
        try:
            Path(args.output).write_text(
                report.model_dump_json(indent=2) + "\n", encoding="utf-8"
            )
        except OSError as e:
            logger.error(f"Cannot write fit report: {e}")
            return EXIT_INPUT_ERROR
    return EXIT_OK
