"""
Data-reduction experiment for the minimum data requirements.

A procession starts from eight points per category-value combination,
generated from a known expression and parameter values. It repeatedly moves
one random training point to the test set, checks identifiability on what is
left, refits from perturbed true values and records the test mse. It stops
at the first training set that no longer meets the requirements; that set is
still refitted so the log shows how prediction fails once they are unmet.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from sharedsr.exceptions import FitError
from sharedsr.models.binding import ParameterBinding, ParameterLayout
from sharedsr.models.dataset import CategorySchema, Dataset
from sharedsr.models.expression import Expression
from sharedsr.models.schemas import FitOptions, ProcessionRow
from sharedsr.services.data_loader import dataset_from_counts
from sharedsr.services.fitting import FitResult, fit_parameters, mse, perturb, predict
from sharedsr.services.identifiability import check_identifiability
from sharedsr.services.serialization import parse

logger = logging.getLogger(__name__)

POINTS_PER_CELL = 8
FEATURE_RANGE = (-20.0, 20.0)
MAX_REFIT_RESTARTS = 5
ACCURATE_MSE = 1e-6

DEFAULT_SCHEMA = CategorySchema.from_mapping(
    {"U": ["A", "B", "C", "D"], "L": ["a", "b", "c"]}
)
DEFAULT_EXPRESSION = "CS1 * v1 + C1_1 * square(v1) + C2_1 * (v1 ^ 3) + CI1 * (v1 ^ 4)"


def default_truth(expr: Expression, schema: CategorySchema) -> ParameterBinding:
    """Reference values: 100 shared, 10..40 per U value, 1..3 per L value, 0.01..0.12 per cell."""
    layout = ParameterLayout.of(expr, schema)
    return ParameterBinding.from_parts(
        layout,
        shared=[100.0],
        partial={0: [[10.0, 20.0, 30.0, 40.0]], 1: [[1.0, 2.0, 3.0]]},
        nonshared=[np.round(np.arange(1, 13) * 0.01, 2)],
    )


def truth_binding(
    expr: Expression, schema: CategorySchema, rng: np.random.Generator
) -> ParameterBinding:
    """
    True parameter values for a procession.

    The reference expression gets the reference values; any other
    expression gets individual values uniform in ``[0.5, 2]``.
    """
    reference = parse(DEFAULT_EXPRESSION, DEFAULT_SCHEMA, n_features=1)
    layout = ParameterLayout.of(expr, schema)
    if schema == DEFAULT_SCHEMA and layout.kinds == ParameterLayout.of(reference, schema).kinds:
        return default_truth(expr, schema)
    return ParameterBinding(layout=layout, values=rng.uniform(0.5, 2.0, size=layout.size))


def sample_dataset(
    expr: Expression,
    truth: ParameterBinding,
    rng: np.random.Generator,
    points_per_cell: int = POINTS_PER_CELL,
) -> Dataset:
    """Uniform features in [-20, 20] with noise-free targets from ``truth``."""
    schema = truth.layout.schema
    low, high = FEATURE_RANGE
    ds = dataset_from_counts(
        schema, [points_per_cell] * schema.n_combinations, rng, low=low, high=high
    )
    return Dataset(
        schema=schema,
        features=ds.features,
        cat_index=ds.cat_index,
        target=predict(expr, truth, ds),
        feature_names=ds.feature_names,
    )


@dataclass(frozen=True)
class ProcessionSettings:
    perturb_scale: float = 0.1
    points_per_cell: int = POINTS_PER_CELL
    max_refit_restarts: int = MAX_REFIT_RESTARTS
    fit: FitOptions = FitOptions()


def refit(
    expr: Expression,
    train: Dataset,
    truth: ParameterBinding,
    settings: ProcessionSettings,
    rng: np.random.Generator,
) -> FitResult | None:
    """
    Fit from perturbed true values, retrying with fresh perturbations.

    Returns the first converged fit, else the lowest-sse one, or None when
    every attempt failed.
    """
    best: FitResult | None = None
    for attempt in range(1 + settings.max_refit_restarts):
        init = perturb(truth, settings.perturb_scale, rng)
        try:
            result = fit_parameters(expr, train, init, settings.fit, rng)
        except FitError:
            logger.debug("Refit attempt %d failed", attempt + 1)
            continue
        if best is None or result.sse < best.sse:
            best = result
        if result.converged:
            break
    return best


def run_procession(
    index: int,
    expr: Expression,
    seed: int,
    settings: ProcessionSettings,
    schema: CategorySchema = DEFAULT_SCHEMA,
) -> list[ProcessionRow]:
    """
    One procession, numbered from 1.

    Its random stream is derived from ``(seed, index)`` so results do not
    depend on which worker runs it.
    """
    rng = np.random.default_rng([seed, index])
    truth = truth_binding(expr, schema, rng)
    ds = sample_dataset(expr, truth, rng, settings.points_per_cell)
    in_train = np.ones(ds.n_rows, dtype=bool)

    def _row(train: Dataset, mse_test: float | None, feasible: bool, refit_ok: bool = True):
        return ProcessionRow(
            procession=index,
            n_train=train.n_rows,
            cell_counts=train.describe(),
            mse_test=mse_test,
            feasible=feasible,
            refit_ok=refit_ok,
        )

    feasible, _ = check_identifiability(expr, ds)
    rows = [_row(ds, None, feasible)]
    if truth.layout.n_terminals == 0:
        logger.warning("Expression has no parameters; nothing to remove points for")
        return rows
    while feasible and in_train.any():
        moved = rng.choice(np.flatnonzero(in_train))
        in_train[moved] = False
        train = ds.subset(np.flatnonzero(in_train))
        test = ds.subset(np.flatnonzero(~in_train))

        # verdict is decided on counts alone, before any refit
        feasible, _ = check_identifiability(expr, train)
        fit = refit(expr, train, truth, settings, rng) if train.n_rows else None
        if fit is None:
            rows.append(_row(train, None, feasible, refit_ok=False))
            continue
        mse_test = mse(test.target, predict(expr, fit.binding, test))
        rows.append(_row(train, mse_test, feasible, refit_ok=fit.converged))

    logger.debug(
        "Procession finished",
        extra={"procession": index, "rows": len(rows), "min_train": rows[-1].n_train},
    )
    return rows


def run_processions(
    n_processions: int,
    expr: Expression,
    seed: int,
    settings: ProcessionSettings,
    n_workers: int = 1,
    schema: CategorySchema = DEFAULT_SCHEMA,
) -> list[ProcessionRow]:
    """All processions' rows, ordered by procession index."""
    indices = range(1, n_processions + 1)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            per_procession = list(
                pool.map(lambda i: run_procession(i, expr, seed, settings, schema), indices)
            )
    else:
        per_procession = [run_procession(i, expr, seed, settings, schema) for i in indices]
    return [row for rows in per_procession for row in rows]


def summarize(rows: list[ProcessionRow]) -> dict[str, float | int | dict[int, int]]:
    """
    Aggregate statistics of a procession log.

    Returns:
        Number of refitted identifiable rows, the fraction of them with test
        mse below 1e-6, the number of unidentifiable rows, the fraction of
        those whose test mse is not below 1e-6 (or missing), the number of
        refit failures, and the smallest identifiable training size reached by
        each procession.
    """
    fitted = [r for r in rows if r.feasible and r.mse_test is not None]
    accurate = sum(1 for r in fitted if r.mse_test is not None and r.mse_test < ACCURATE_MSE)
    unmet = [r for r in rows if not r.feasible]
    inaccurate = sum(1 for r in unmet if r.mse_test is None or not r.mse_test < ACCURATE_MSE)
    min_train: dict[int, int] = {}
    for r in rows:
        if r.feasible:
            min_train[r.procession] = min(min_train.get(r.procession, r.n_train), r.n_train)
    return {
        "fitted_rows": len(fitted),
        "accurate_fraction": accurate / len(fitted) if fitted else 1.0,
        "unmet_rows": len(unmet),
        "unmet_inaccurate_fraction": inaccurate / len(unmet) if unmet else 1.0,
        "refit_failures": sum(1 for r in rows if not r.refit_ok),
        "min_identifiable_train": min_train,
    }
