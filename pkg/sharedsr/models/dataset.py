"""
Category schema and dataset containers.

A dataset row carries continuous features, one value index per categorical
variable, and a target. Rows are grouped into cells, one per
category-value combination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sharedsr.exceptions import DatasetError


class Category(BaseModel):
    """One categorical variable and its ordered value labels."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(description="Column name of the categorical variable")
    values: tuple[str, ...] = Field(description="Value labels in index order")

    @field_validator("values")
    @classmethod
    def _check_values(cls, values: tuple[str, ...]) -> tuple[str, ...]:
        if not values:
            raise ValueError("a category needs at least one value")
        if len(set(values)) != len(values):
            raise ValueError("value labels must be unique within a category")
        return values


class CategorySchema(BaseModel):
    """
    The categorical variables of a problem.

    Defines the combination index of a row as the mixed-radix encoding of its
    per-category value indices, first category most significant.
    """

    model_config = ConfigDict(frozen=True)

    categories: tuple[Category, ...] = Field(description="Categorical variables")

    @model_validator(mode="after")
    def _check_categories(self) -> CategorySchema:
        if not self.categories:
            raise ValueError("a schema needs at least one category")
        return self

    @classmethod
    def from_mapping(cls, mapping: dict[str, list[str]]) -> CategorySchema:
        """Build a schema from an ordered ``name -> values`` mapping."""
        return cls(
            categories=tuple(
                Category(name=name, values=tuple(values))
                for name, values in mapping.items()
            )
        )

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    @property
    def sizes(self) -> tuple[int, ...]:
        """Number of values of each category."""
        return tuple(len(c.values) for c in self.categories)

    @property
    def n_combinations(self) -> int:
        return math.prod(self.sizes)

    def combination_index(self, value_indices: np.ndarray) -> np.ndarray:
        """
        Encode per-category value indices as combination indices.

        Args:
            value_indices: Integer array of shape (n, n_categories).

        Returns:
            Integer array of shape (n,).
        """
        value_indices = np.asarray(value_indices, dtype=np.int64)
        combos = np.zeros(value_indices.shape[0], dtype=np.int64)
        for c, size in enumerate(self.sizes):
            combos = combos * size + value_indices[:, c]
        return combos

    def decode(self, combination: int) -> tuple[int, ...]:
        """Per-category value indices of a combination index."""
        indices = []
        for size in reversed(self.sizes):
            combination, rem = divmod(combination, size)
            indices.append(rem)
        return tuple(reversed(indices))

    def combination_labels(self, combination: int) -> tuple[str, ...]:
        """Value labels of a combination, one per category."""
        return tuple(
            category.values[i]
            for category, i in zip(self.categories, self.decode(combination), strict=True)
        )

    def cell_names(self) -> list[str]:
        """Table-style cell headers, e.g. ``Aa``, ``Ab``, ... for two categories."""
        return [
            "".join(labels)
            for labels in product(*(c.values for c in self.categories))
        ]


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Immutable table of features, category value indices and targets.

    Attributes:
        schema: Categorical variables of the rows.
        features: Real matrix of shape (n, d).
        cat_index: Integer matrix of shape (n, n_categories).
        target: Real vector of shape (n,).
        feature_names: Optional column names of the features.
    """

    schema: CategorySchema
    features: np.ndarray
    cat_index: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...] = ()
    combination: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        cat_index = np.asarray(self.cat_index, dtype=np.int64).reshape(
            -1, self.schema.n_categories
        )
        target = np.asarray(self.target, dtype=float).reshape(-1)

        n = features.shape[0]
        if cat_index.shape[0] != n or target.shape[0] != n:
            raise DatasetError(
                f"row count mismatch: features {n}, categories "
                f"{cat_index.shape[0]}, target {target.shape[0]}"
            )
        if n and (
            (cat_index < 0).any() or (cat_index >= np.array(self.schema.sizes)).any()
        ):
            raise DatasetError("category value index out of range")
        if not np.isfinite(features).all() or not np.isfinite(target).all():
            raise DatasetError("features and target must be finite")

        for array in (features, cat_index, target):
            array.setflags(write=False)
        combination = self.schema.combination_index(cat_index)
        combination.setflags(write=False)

        object.__setattr__(self, "features", features)
        object.__setattr__(self, "cat_index", cat_index)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "combination", combination)
        if not self.feature_names:
            object.__setattr__(
                self,
                "feature_names",
                tuple(f"v{j + 1}" for j in range(features.shape[1])),
            )

    @property
    def n_rows(self) -> int:
        return int(self.target.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def subset(self, rows: np.ndarray | list[int]) -> Dataset:
        """Rows selected by index, in the given order."""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            schema=self.schema,
            features=self.features[rows],
            cat_index=self.cat_index[rows],
            target=self.target[rows],
            feature_names=self.feature_names,
        )

    def cell_rows(self) -> dict[int, np.ndarray]:
        """Row indices per combination cell; empty cells are omitted."""
        return {
            int(cell): np.flatnonzero(self.combination == cell)
            for cell in np.unique(self.combination)
        }

    def describe(self) -> dict[str, int]:
        """Row count per cell keyed by the table-style cell name."""
        counts = np.bincount(self.combination, minlength=self.schema.n_combinations)
        return dict(zip(self.schema.cell_names(), counts.tolist(), strict=True))
