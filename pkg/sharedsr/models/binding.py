"""
Concrete values behind parameter terminals.

The flat vector of individual parameters is ordered as: shared terminals,
then per category the partial terminals on it (terminal order, value
order), then non-shared terminals (terminal order, combination order).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from sharedsr.exceptions import BindingShapeError
from sharedsr.models.dataset import CategorySchema, Dataset
from sharedsr.models.expression import (
    Expression,
    ParamKind,
    SharingLevel,
    terminal_kinds,
    terminal_labels,
)


@dataclass(frozen=True)
class ParameterLayout:
    """Column placement of every terminal's individual parameters."""

    schema: CategorySchema
    kinds: dict[int, ParamKind]
    offsets: dict[int, int] = field(init=False)
    size: int = field(init=False)

    def __post_init__(self) -> None:
        for kind in self.kinds.values():
            if kind.category is not None and kind.category >= self.schema.n_categories:
                raise BindingShapeError(
                    f"partial parameter on category {kind.category + 1} but the "
                    f"schema has {self.schema.n_categories}"
                )
        offsets: dict[int, int] = {}
        position = 0
        for terminal_id in self.ordered_terminals():
            offsets[terminal_id] = position
            position += self.kinds[terminal_id].size(self.schema)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "size", position)

    @classmethod
    def of(cls, expr: Expression, schema: CategorySchema) -> ParameterLayout:
        return cls(schema=schema, kinds=terminal_kinds(expr))

    @property
    def n_terminals(self) -> int:
        return len(self.kinds)

    def ordered_terminals(self) -> list[int]:
        """Terminal ids in flattening order."""
        return sorted(self.kinds, key=lambda t: (self.kinds[t].sort_key(), t))

    def terminals_of(self, kind: ParamKind) -> list[int]:
        return [t for t in self.ordered_terminals() if self.kinds[t] == kind]

    def block(self, terminal_id: int) -> slice:
        """Columns holding one terminal's individual parameters."""
        start = self.offsets[terminal_id]
        return slice(start, start + self.kinds[terminal_id].size(self.schema))

    def active_columns(self, ds: Dataset) -> np.ndarray:
        """
        Column of the individual parameter each row uses, per terminal.

        Returns:
            Integer matrix of shape (n, m); column ``t`` is for terminal id ``t``.
        """
        if ds.schema != self.schema:
            raise BindingShapeError("dataset schema differs from the binding schema")
        columns = np.empty((ds.n_rows, self.n_terminals), dtype=np.int64)
        for terminal_id, kind in self.kinds.items():
            if kind.level is SharingLevel.SHARED:
                local = np.zeros(ds.n_rows, dtype=np.int64)
            elif kind.level is SharingLevel.PARTIAL:
                local = ds.cat_index[:, kind.category]
            else:
                local = ds.combination
            columns[:, terminal_id] = self.offsets[terminal_id] + local
        return columns

    def labels(self, token_labels: dict[int, str]) -> list[str]:
        """Human-readable label of every individual parameter, in flat order."""
        labels = [""] * self.size
        for terminal_id in self.ordered_terminals():
            kind = self.kinds[terminal_id]
            token = token_labels[terminal_id]
            start = self.offsets[terminal_id]
            if kind.level is SharingLevel.SHARED:
                labels[start] = token
            elif kind.level is SharingLevel.PARTIAL:
                assert kind.category is not None
                for i, value in enumerate(self.schema.categories[kind.category].values):
                    labels[start + i] = f"{token}[{value}]"
            else:
                for combo in range(self.schema.n_combinations):
                    cell = ",".join(self.schema.combination_labels(combo))
                    labels[start + combo] = f"{token}[{cell}]"
        return labels


@dataclass(frozen=True, eq=False)
class ParameterBinding:
    """Individual parameter values of an expression under a schema."""

    layout: ParameterLayout
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape[0] != self.layout.size:
            raise BindingShapeError(
                f"expected {self.layout.size} individual parameters, got {values.shape[0]}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def unflatten(cls, layout: ParameterLayout, vector: np.ndarray) -> ParameterBinding:
        return cls(layout=layout, values=vector)

    @classmethod
    def from_parts(
        cls,
        layout: ParameterLayout,
        shared: list[float] | np.ndarray,
        partial: dict[int, list[list[float]] | np.ndarray] | None = None,
        nonshared: list[list[float]] | np.ndarray | None = None,
    ) -> ParameterBinding:
        """
        Build a binding from per-kind arrays.

        Args:
            layout: Target layout.
            shared: One value per shared terminal, terminal order.
            partial: Per category index, array (n_partial_c, n_values_c).
            nonshared: Array (n_nonshared, n_combinations).
        """
        vector = np.zeros(layout.size)
        schema = layout.schema
        groups: list[tuple[list[int], np.ndarray]] = [
            (layout.terminals_of(ParamKind.shared()), np.asarray(shared, dtype=float).reshape(-1, 1))
        ]
        for c in range(schema.n_categories):
            terminals = layout.terminals_of(ParamKind.partial(c))
            rows = (partial or {}).get(c, np.zeros((0, schema.sizes[c])))
            groups.append((terminals, np.asarray(rows, dtype=float).reshape(-1, schema.sizes[c])))
        rows = nonshared if nonshared is not None else np.zeros((0, schema.n_combinations))
        groups.append(
            (
                layout.terminals_of(ParamKind.nonshared()),
                np.asarray(rows, dtype=float).reshape(-1, schema.n_combinations),
            )
        )
        for terminals, block in groups:
            if block.shape[0] != len(terminals):
                raise BindingShapeError(
                    f"expected {len(terminals)} terminal rows, got {block.shape[0]}"
                )
            for terminal_id, row in zip(terminals, block, strict=True):
                vector[layout.block(terminal_id)] = row
        return cls(layout=layout, values=vector)

    def flatten(self) -> np.ndarray:
        return self.values.copy()

    def terminal_values(self, terminal_id: int) -> np.ndarray:
        """Individual values of one terminal."""
        return self.values[self.layout.block(terminal_id)]

    @property
    def shared(self) -> np.ndarray:
        terminals = self.layout.terminals_of(ParamKind.shared())
        return np.array([self.terminal_values(t)[0] for t in terminals])

    @property
    def partial(self) -> dict[int, np.ndarray]:
        schema = self.layout.schema
        return {
            c: np.array(
                [self.terminal_values(t) for t in self.layout.terminals_of(ParamKind.partial(c))]
            ).reshape(-1, schema.sizes[c])
            for c in range(schema.n_categories)
        }

    @property
    def nonshared(self) -> np.ndarray:
        terminals = self.layout.terminals_of(ParamKind.nonshared())
        return np.array([self.terminal_values(t) for t in terminals]).reshape(
            -1, self.layout.schema.n_combinations
        )

    def active_values(self, ds: Dataset) -> dict[int, np.ndarray]:
        """Per terminal id, the value each row of ``ds`` uses."""
        columns = self.layout.active_columns(ds)
        return {t: self.values[columns[:, t]] for t in self.layout.kinds}

    def labeled(self, expr: Expression) -> list[tuple[str, float]]:
        """``(label, value)`` pairs such as ``("C1_1[B]", 20.0)`` in flat order."""
        if terminal_kinds(expr) != self.layout.kinds:
            raise BindingShapeError("expression terminals do not match the binding")
        labels = self.layout.labels(terminal_labels(expr))
        return list(zip(labels, self.values.tolist(), strict=True))
