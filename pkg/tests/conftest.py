"""
Pytest configuration and fixtures for sharedsr tests.
"""

import os

import numpy as np
import pytest

os.environ.update(
    {
        "SHAREDSR_LOG_LEVEL": "WARNING",
        "SHAREDSR_LOG_FILE": "",
    }
)

from sharedsr.models.binding import ParameterBinding, ParameterLayout  # noqa: E402
from sharedsr.models.dataset import CategorySchema, Dataset  # noqa: E402
from sharedsr.services.serialization import parse  # noqa: E402

EXAMPLE_EXPRESSION = "CS1 * v1 + C1_1 * square(v1) + C2_1 * (v1 ^ 3) + CI1 * (v1 ^ 4)"

EXAMPLE_TARGETS = [
    111.01, 112.02, 113.03,
    121.04, 122.05, 123.06,
    131.07, 132.08, 133.09,
    141.1, 142.11, 143.12,
]

# Cell counts Aa..Dc and the expected verdict of the example expression.
PROCESSION_ROWS = {
    "1:96": ([8] * 12, True),
    "1:90": ([8, 7, 8, 8, 8, 8, 5, 8, 8, 8, 6, 8], True),
    "1:60": ([7, 3, 5, 7, 6, 4, 3, 6, 6, 5, 3, 5], True),
    "1:30": ([2, 2, 1, 3, 4, 1, 1, 5, 5, 4, 1, 1], True),
    "1:22": ([2, 1, 1, 2, 3, 1, 1, 2, 5, 2, 1, 1], True),
    "1:21": ([2, 1, 1, 2, 3, 1, 1, 2, 5, 1, 1, 1], False),
    "2:20": ([1, 1, 2, 1, 4, 1, 2, 1, 1, 2, 2, 2], True),
    "2:19": ([1, 1, 2, 1, 4, 1, 2, 1, 1, 1, 2, 2], False),
    "3:26": ([3, 1, 1, 1, 4, 1, 1, 4, 5, 1, 3, 1], True),
    "3:25": ([2, 1, 1, 1, 4, 1, 1, 4, 5, 1, 3, 1], False),
    "4:48": ([5, 6, 3, 5, 6, 7, 4, 5, 3, 1, 1, 2], True),
    "4:47": ([5, 6, 3, 5, 6, 7, 4, 5, 3, 1, 1, 1], False),
}


@pytest.fixture
def schema() -> CategorySchema:
    """Two categories: U with values A-D and L with values a-c."""
    return CategorySchema.from_mapping({"U": ["A", "B", "C", "D"], "L": ["a", "b", "c"]})


@pytest.fixture
def single_cell_schema() -> CategorySchema:
    return CategorySchema.from_mapping({"G": ["only"]})


@pytest.fixture
def example_expr(schema):
    return parse(EXAMPLE_EXPRESSION, schema, n_features=1)


@pytest.fixture
def example_dataset(schema) -> Dataset:
    """One row per cell with v1 = 1 and the reference targets."""
    cat_index = [schema.decode(combo) for combo in range(schema.n_combinations)]
    return Dataset(
        schema=schema,
        features=np.ones((12, 1)),
        cat_index=np.array(cat_index),
        target=np.array(EXAMPLE_TARGETS),
    )


@pytest.fixture
def example_binding(schema, example_expr) -> ParameterBinding:
    """Reference values: 100 shared, 10..40 on U, 1..3 on L, 0.01..0.12 per cell."""
    return ParameterBinding.from_parts(
        ParameterLayout.of(example_expr, schema),
        shared=[100.0],
        partial={0: [[10.0, 20.0, 30.0, 40.0]], 1: [[1.0, 2.0, 3.0]]},
        nonshared=[[0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1, 0.11, 0.12]],
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def sampled_dataset(schema, example_expr, example_binding):
    """Eight uniform points in [-20, 20] per cell with noise-free targets."""
    from sharedsr.services.data_loader import dataset_from_counts
    from sharedsr.services.fitting import predict

    ds = dataset_from_counts(schema, [8] * 12, np.random.default_rng(7))
    return Dataset(
        schema=schema,
        features=ds.features,
        cat_index=ds.cat_index,
        target=predict(example_expr, example_binding, ds),
    )


@pytest.fixture
def csv_file(tmp_path):
    """Write CSV text to a temporary file and return its path."""

    def _write(text: str, name: str = "data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def example_csv(csv_file):
    """The reference table as CSV with columns u, l, v1, y."""
    rows = ["u,l,v1,y"]
    targets = iter(EXAMPLE_TARGETS)
    for u in "ABCD":
        for l_value in "abc":
            rows.append(f"{u},{l_value},1,{next(targets)}")
    return csv_file("\n".join(rows) + "\n", "example.csv")
