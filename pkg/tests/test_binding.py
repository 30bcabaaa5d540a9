"""
Tests for parameter layouts and bindings.
"""

import numpy as np
import pytest

from sharedsr.exceptions import BindingShapeError
from sharedsr.models.binding import ParameterBinding, ParameterLayout
from sharedsr.models.expression import ParamKind
from sharedsr.services.serialization import parse


class TestParameterLayout:
    """Test flat ordering of individual parameters."""

    def test_offsets_follow_kind_order(self, example_expr, schema):
        """Test shared, partial by category, then non-shared."""
        layout = ParameterLayout.of(example_expr, schema)
        assert layout.size == 20
        assert layout.n_terminals == 4
        assert [layout.offsets[t] for t in range(4)] == [0, 1, 5, 8]

    def test_kind_order_independent_of_appearance(self, schema):
        """Test a non-shared terminal appearing first still goes last."""
        expr = parse("CI1 * v1 + C2_1 + CS1", schema)
        layout = ParameterLayout.of(expr, schema)
        assert layout.ordered_terminals() == [2, 1, 0]
        assert layout.block(0) == slice(4, 16)

    def test_active_columns(self, example_expr, schema, example_dataset):
        """Test the column each row uses for each terminal."""
        columns = ParameterLayout.of(example_expr, schema).active_columns(example_dataset)
        assert columns[0].tolist() == [0, 1, 5, 8]
        assert columns[11].tolist() == [0, 4, 7, 19]
        assert columns[4].tolist() == [0, 2, 6, 12]

    def test_labels(self, example_expr, schema):
        """Test labels carry tokens and category values."""
        from sharedsr.models.expression import terminal_labels

        labels = ParameterLayout.of(example_expr, schema).labels(terminal_labels(example_expr))
        assert labels[:2] == ["CS1", "C1_1[A]"]
        assert labels[5:8] == ["C2_1[a]", "C2_1[b]", "C2_1[c]"]
        assert labels[8] == "CI1[A,a]"
        assert labels[-1] == "CI1[D,c]"

    def test_unknown_category(self, schema):
        """Test a layout rejects a category outside the schema."""
        with pytest.raises(BindingShapeError):
            ParameterLayout(schema=schema, kinds={0: ParamKind.partial(5)})


class TestParameterBinding:
    """Test binding construction and views."""

    def test_from_parts_and_views(self, example_binding):
        """Test per-kind views of the reference binding."""
        assert example_binding.shared.tolist() == [100.0]
        assert example_binding.partial[0].tolist() == [[10.0, 20.0, 30.0, 40.0]]
        assert example_binding.partial[1].tolist() == [[1.0, 2.0, 3.0]]
        assert example_binding.nonshared.shape == (1, 12)
        assert example_binding.nonshared[0, 9] == pytest.approx(0.1)

    def test_flatten_unflatten(self, example_binding):
        """Test the flat vector round trip."""
        vector = example_binding.flatten()
        vector[0] = 1.0
        rebuilt = ParameterBinding.unflatten(example_binding.layout, vector)
        assert rebuilt.shared.tolist() == [1.0]
        assert example_binding.shared.tolist() == [100.0]

    def test_wrong_size(self, example_binding):
        """Test a vector of the wrong length."""
        with pytest.raises(BindingShapeError):
            ParameterBinding(layout=example_binding.layout, values=np.zeros(19))

    def test_from_parts_wrong_shape(self, example_expr, schema):
        """Test a partial block with the wrong number of values."""
        layout = ParameterLayout.of(example_expr, schema)
        with pytest.raises((BindingShapeError, ValueError)):
            ParameterBinding.from_parts(
                layout,
                shared=[1.0],
                partial={0: [[1.0, 2.0, 3.0]], 1: [[1.0, 2.0, 3.0]]},
                nonshared=[np.zeros(12)],
            )

    def test_from_parts_missing_terminal(self, example_expr, schema):
        """Test a missing non-shared block."""
        layout = ParameterLayout.of(example_expr, schema)
        with pytest.raises(BindingShapeError):
            ParameterBinding.from_parts(
                layout, shared=[1.0], partial={0: [[1, 2, 3, 4]], 1: [[1, 2, 3]]}
            )

    def test_values_read_only(self, example_binding):
        """Test stored values cannot be changed in place."""
        with pytest.raises(ValueError):
            example_binding.values[0] = 0.0

    def test_active_values(self, example_binding, example_dataset):
        """Test per-row values of every terminal."""
        active = example_binding.active_values(example_dataset)
        assert active[1].tolist() == [10.0] * 3 + [20.0] * 3 + [30.0] * 3 + [40.0] * 3
        assert active[2].tolist() == [1.0, 2.0, 3.0] * 4

    def test_labeled(self, example_binding, example_expr):
        """Test label and value pairs."""
        pairs = dict(example_binding.labeled(example_expr))
        assert pairs["C1_1[B]"] == 20.0
        assert pairs["CI1[D,a]"] == pytest.approx(0.1)
        assert len(pairs) == 20

    def test_labeled_rejects_other_expression(self, example_binding, schema):
        """Test labels need the matching expression."""
        with pytest.raises(BindingShapeError):
            example_binding.labeled(parse("CS1 * v1", schema))
