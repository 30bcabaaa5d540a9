"""
CSV ingestion and stratified splitting.

Category value labels are taken in order of first appearance in the file,
so the same file always yields the same combination indices.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from sharedsr.exceptions import DatasetError
from sharedsr.models.dataset import Category, CategorySchema, Dataset

logger = logging.getLogger(__name__)


def load_csv(
    path: str | Path,
    feature_columns: list[str],
    category_columns: list[str],
    target_column: str,
) -> Dataset:
    """
    Load a comma-separated file with a header row.

    Args:
        path: CSV file path.
        feature_columns: Continuous feature columns, in feature order.
        category_columns: Categorical columns, in category order.
        target_column: Target column.

    Returns:
        Dataset with a schema inferred from the categorical columns.

    Raises:
        DatasetError: On a missing file or column, an empty file, or a
            numeric cell that cannot be parsed (named by row and column).
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"data file {path} does not exist")
    if not category_columns:
        raise DatasetError("at least one category column is required")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DatasetError(f"data file {path} is empty") from e
    if frame.empty:
        raise DatasetError(f"data file {path} has no data rows")

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [
        c for c in [*feature_columns, *category_columns, target_column] if c not in frame.columns
    ]
    if missing:
        raise DatasetError(f"missing column(s): {', '.join(missing)}")

    numeric = {}
    for column in [*feature_columns, target_column]:
        parsed = pd.to_numeric(frame[column].str.strip(), errors="coerce")
        bad = parsed.isna() | ~np.isfinite(parsed.to_numpy(dtype=float, na_value=np.nan))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            # +2: header line plus 1-based numbering
            raise DatasetError(
                f"unparsable numeric value {frame[column].iloc[row]!r} "
                f"at row {row + 2}, column {column!r}"
            )
        numeric[column] = parsed.to_numpy(dtype=float)

    categories = []
    indices = []
    for column in category_columns:
        labels = frame[column].str.strip()
        codes, uniques = pd.factorize(labels, sort=False)
        categories.append(Category(name=column, values=tuple(str(u) for u in uniques)))
        indices.append(codes)

    schema = CategorySchema(categories=tuple(categories))
    features = (
        np.column_stack([numeric[c] for c in feature_columns])
        if feature_columns
        else np.zeros((len(frame), 0))
    )
    ds = Dataset(
        schema=schema,
        features=features,
        cat_index=np.column_stack(indices),
        target=numeric[target_column],
        feature_names=tuple(feature_columns),
    )
    logger.info(
        "Loaded dataset",
        extra={"path": str(path), "rows": ds.n_rows, "cells": schema.n_combinations},
    )
    return ds


def cell_counts(ds: Dataset) -> dict[int, int]:
    """Rows per combination index; empty combinations report 0."""
    counts = np.bincount(ds.combination, minlength=ds.schema.n_combinations)
    return {combo: int(count) for combo, count in enumerate(counts)}


def dataset_from_counts(
    schema: CategorySchema,
    counts: list[int],
    rng: np.random.Generator,
    low: float = -20.0,
    high: float = 20.0,
    n_features: int = 1,
) -> Dataset:
    """
    Rows with prescribed per-cell counts and uniform features.

    Targets are zero; callers that need targets generate them from a binding.
    """
    if len(counts) != schema.n_combinations:
        raise DatasetError(
            f"expected {schema.n_combinations} cell counts, got {len(counts)}"
        )
    combos = np.repeat(np.arange(schema.n_combinations), counts)
    cat_index = np.array([schema.decode(int(c)) for c in combos], dtype=np.int64).reshape(
        -1, schema.n_categories
    )
    features = rng.uniform(low, high, size=(combos.shape[0], n_features))
    return Dataset(
        schema=schema,
        features=features,
        cat_index=cat_index,
        target=np.zeros(combos.shape[0]),
    )


def _round_half_down(value: float) -> int:
    """Nearest integer, ties toward the smaller value."""
    return int(np.ceil(value - 0.5))


def stratified_split(
    ds: Dataset, test_fraction: float, rng: np.random.Generator
) -> tuple[Dataset, Dataset]:
    """
    Split every combination cell separately.

    Each cell sends ``round(count * test_fraction)`` rows (ties toward the
    training side) to the test set, chosen uniformly without replacement.
    Row order inside each part follows the input.
    """
    if not 0.0 <= test_fraction < 1.0:
        raise ValueError("test_fraction must be in [0, 1)")
    test_rows: list[np.ndarray] = []
    for rows in ds.cell_rows().values():
        n_test = _round_half_down(len(rows) * test_fraction)
        if n_test:
            test_rows.append(rng.choice(rows, size=n_test, replace=False))
    test_mask = np.zeros(ds.n_rows, dtype=bool)
    if test_rows:
        test_mask[np.concatenate(test_rows)] = True
    return ds.subset(np.flatnonzero(~test_mask)), ds.subset(np.flatnonzero(test_mask))
