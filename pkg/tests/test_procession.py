"""
Tests for the data-reduction procession.
"""

import numpy as np
import pytest

from sharedsr.models.schemas import ProcessionRow
from sharedsr.services.procession import (
    DEFAULT_EXPRESSION,
    DEFAULT_SCHEMA,
    ProcessionSettings,
    default_truth,
    run_procession,
    run_processions,
    sample_dataset,
    summarize,
    truth_binding,
)
from sharedsr.services.serialization import parse


@pytest.fixture
def reference_expr():
    return parse(DEFAULT_EXPRESSION, DEFAULT_SCHEMA, n_features=1)


@pytest.fixture
def small_expr():
    return parse("CS1 * v1 + C1_1", DEFAULT_SCHEMA, n_features=1)


def _row(procession, n_train, mse_test, feasible=True, refit_ok=True) -> ProcessionRow:
    return ProcessionRow(
        procession=procession,
        n_train=n_train,
        cell_counts={"Aa": n_train},
        mse_test=mse_test,
        feasible=feasible,
        refit_ok=refit_ok,
    )


class TestTruth:
    """Test the generating values."""

    def test_reference_values(self, reference_expr, rng):
        """Test the reference expression gets the published values."""
        truth = truth_binding(reference_expr, DEFAULT_SCHEMA, rng)
        assert truth.values.tolist() == default_truth(reference_expr, DEFAULT_SCHEMA).values.tolist()
        assert truth.shared.tolist() == [100.0]
        assert truth.nonshared[0, -1] == pytest.approx(0.12)

    def test_other_expression_uniform(self, small_expr, rng):
        """Test other expressions draw values in [0.5, 2]."""
        truth = truth_binding(small_expr, DEFAULT_SCHEMA, rng)
        assert truth.values.size == 5
        assert np.all((truth.values >= 0.5) & (truth.values <= 2.0))

    def test_sample_dataset(self, reference_expr, rng):
        """Test eight points per cell in [-20, 20]."""
        truth = default_truth(reference_expr, DEFAULT_SCHEMA)
        ds = sample_dataset(reference_expr, truth, rng)
        assert ds.n_rows == 96
        assert set(ds.describe().values()) == {8}
        assert np.all(np.abs(ds.features) <= 20.0)


class TestRunProcession:
    """Test one procession."""

    def test_exact_refits(self, reference_expr):
        """Test refitting from the true values reproduces the test data."""
        rows = run_procession(1, reference_expr, 0, ProcessionSettings(perturb_scale=0.0))
        first, last = rows[0], rows[-1]
        assert first.n_train == 96
        assert first.mse_test is None
        assert set(first.cell_counts.values()) == {8}
        assert not last.feasible
        assert last.mse_test is not None
        for row in rows[1:-1]:
            assert row.feasible
            assert row.mse_test is not None and row.mse_test < 1e-20

    def test_one_point_per_step(self, small_expr):
        """Test training size drops by one and cell counts never grow."""
        rows = run_procession(2, small_expr, 5, ProcessionSettings())
        for before, after in zip(rows, rows[1:]):
            assert after.n_train == before.n_train - 1
            for cell, count in after.cell_counts.items():
                assert count <= before.cell_counts[cell]
        assert all(r.feasible for r in rows[:-1])
        assert not rows[-1].feasible

    def test_final_row_is_refitted(self, reference_expr):
        """Test the first unidentifiable training set is still fitted and scored."""
        rows = run_procession(4, reference_expr, 1, ProcessionSettings())
        last = rows[-1]
        assert not last.feasible
        assert last.mse_test is not None
        assert last.mse_test >= 1e-6
        assert all(r.feasible for r in rows[:-1])

    def test_parameter_free_expression(self):
        """Test an expression without parameters stops after the first row."""
        expr = parse("square(v1)", DEFAULT_SCHEMA, n_features=1)
        rows = run_procession(1, expr, 0, ProcessionSettings())
        assert len(rows) == 1
        assert rows[0].n_train == 96
        assert rows[0].feasible

    def test_row_ids(self, small_expr):
        """Test ``procession:n_train`` identifiers."""
        rows = run_procession(3, small_expr, 0, ProcessionSettings())
        assert rows[0].row_id == "3:96"
        assert rows[1].row_id == "3:95"

    def test_deterministic(self, small_expr):
        """Test the same seed and index give the same rows."""
        settings = ProcessionSettings()
        assert run_procession(1, small_expr, 9, settings) == run_procession(
            1, small_expr, 9, settings
        )


class TestRunProcessions:
    """Test running several processions."""

    def test_workers_match_sequential(self, small_expr):
        """Test thread workers give the same ordered rows."""
        settings = ProcessionSettings()
        sequential = run_processions(3, small_expr, 4, settings)
        threaded = run_processions(3, small_expr, 4, settings, n_workers=3)
        assert sequential == threaded
        assert [r.procession for r in sequential] == sorted(r.procession for r in sequential)
        assert {r.procession for r in sequential} == {1, 2, 3}


class TestSummarize:
    """Test log aggregation."""

    def test_counts(self):
        """Test accuracy fraction, failures and the smallest feasible size."""
        rows = [
            _row(1, 96, None),
            _row(1, 95, 1e-9),
            _row(1, 94, 1e-3, refit_ok=False),
            _row(1, 93, 4.2e3, feasible=False),
            _row(2, 96, None),
            _row(2, 95, 1e-12),
            _row(2, 94, 1e-8, feasible=False),
        ]
        summary = summarize(rows)
        assert summary["fitted_rows"] == 3
        assert summary["accurate_fraction"] == pytest.approx(2 / 3)
        assert summary["unmet_rows"] == 2
        assert summary["unmet_inaccurate_fraction"] == pytest.approx(1 / 2)
        assert summary["refit_failures"] == 1
        assert summary["min_identifiable_train"] == {1: 94, 2: 95}

    def test_empty_log(self):
        """Test no rows."""
        summary = summarize([])
        assert summary["fitted_rows"] == 0
        assert summary["unmet_rows"] == 0


@pytest.mark.slow
class TestReferenceProcessions:
    """Test refits over many reference processions."""

    def test_refits_are_accurate(self, reference_expr):
        """Test at least 95% of refits reach test mse below 1e-6."""
        rows = run_processions(20, reference_expr, 2024, ProcessionSettings())
        summary = summarize(rows)
        assert summary["accurate_fraction"] >= 0.95
        finals = [
            row for i, row in enumerate(rows) if i + 1 == len(rows) or rows[i + 1].n_train == 96
        ]
        assert len(finals) == 20
        assert all(not row.feasible and row.mse_test is not None for row in finals)

    def test_unmet_requirements_break_prediction(self, reference_expr):
        """Test refits on the first insufficient training sets miss the test data."""
        rows = run_processions(20, reference_expr, 2024, ProcessionSettings())
        summary = summarize(rows)
        assert summary["unmet_rows"] == 20
        assert summary["unmet_inaccurate_fraction"] >= 0.9
