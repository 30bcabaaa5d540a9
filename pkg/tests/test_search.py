"""
Tests for candidate scoring, selection and the search loop.
"""

import math

import numpy as np
import pytest

from sharedsr.models.binding import ParameterBinding, ParameterLayout
from sharedsr.models.dataset import CategorySchema, Dataset
from sharedsr.models.schemas import FitOptions, SearchConfig
from sharedsr.services.data_loader import dataset_from_counts
from sharedsr.services.fitting import FitResult
from sharedsr.services.pareto import dominates
from sharedsr.services.search import (
    Candidate,
    environmental_selection,
    evaluate_candidate,
    loss_of,
    run_search,
    score,
    tournament,
    update_archive,
)
from sharedsr.services.serialization import parse, to_string


def _fit(schema, sse, r_squared) -> FitResult:
    layout = ParameterLayout.of(parse("v1", schema), schema)
    return FitResult(
        binding=ParameterBinding(layout=layout, values=[]),
        sse=sse,
        r_squared=r_squared,
        n_iterations=1,
        converged=True,
    )


def _candidate(schema, text, loss) -> Candidate:
    expr = parse(text, schema)
    candidate = score(expr, None, schema)
    return Candidate(
        expression=expr,
        fit=None,
        loss=loss,
        complexity=candidate.complexity,
        n_parameters=candidate.n_parameters,
    )


class TestLoss:
    """Test the accuracy objective."""

    def test_one_minus_r_squared(self, schema):
        """Test the regular case."""
        assert loss_of(_fit(schema, 1.0, 0.75)) == pytest.approx(0.25)

    def test_failed_fit(self):
        """Test a missing fit is infinitely bad."""
        assert loss_of(None) == math.inf

    def test_non_finite_sse(self, schema):
        """Test nan sse is infinitely bad."""
        assert loss_of(_fit(schema, float("nan"), None)) == math.inf

    def test_constant_target(self, schema):
        """Test zero-variance targets: exact fits score 0, others infinity."""
        assert loss_of(_fit(schema, 0.0, None)) == 0.0
        assert loss_of(_fit(schema, 1e-3, None)) == math.inf

    def test_constant_target_tolerance(self, schema):
        """Test round-off residuals on a constant target count as exact."""
        assert loss_of(_fit(schema, 1e-30, None), n_rows=20) == 0.0
        assert loss_of(_fit(schema, 2e-11, None), n_rows=20) == 0.0
        assert loss_of(_fit(schema, 1e-9, None), n_rows=20) == math.inf

    def test_worse_than_mean_is_kept(self, schema):
        """Test negative R^2 gives a loss above one."""
        assert loss_of(_fit(schema, 5.0, -1.0)) == 2.0


class TestScore:
    """Test objective bookkeeping."""

    def test_reference_objectives(self, example_expr, schema):
        """Test complexity 20 and 20 individual parameters."""
        candidate = score(example_expr, None, schema)
        assert candidate.objectives() == (math.inf, 20.0, 20.0)
        assert candidate.objectives(use_parameter_objective=False) == (math.inf, 20.0)
        assert not candidate.finite

    def test_evaluate_recovers_reference(self, example_expr, sampled_dataset):
        """Test a fitted candidate on noise-free data has near-zero loss."""
        candidate = evaluate_candidate(example_expr, sampled_dataset, FitOptions(restarts=2), 3)
        assert candidate.finite
        assert candidate.loss < 1e-10

    def test_evaluate_failure_is_infinite(self, schema, sampled_dataset):
        """Test an expression with no finite start."""
        expr = parse("log(-1 * square(CS1) - 1) * v1", schema)
        candidate = evaluate_candidate(expr, sampled_dataset, FitOptions(), 0)
        assert candidate.fit is None
        assert candidate.loss == math.inf


class TestSelection:
    """Test tournaments, survivor selection and the archive."""

    def test_tournament_prefers_rank_then_crowding(self, rng):
        """Test the full-size tournament returns the best contestant."""
        ranks = {0: 1, 1: 0, 2: 0}
        crowding = {0: math.inf, 1: 0.5, 2: 2.0}
        assert tournament(ranks, crowding, [0, 1, 2], 3, rng) == 2

    def test_environmental_selection_keeps_front(self, schema):
        """Test finite candidates come front by front before infinite ones."""
        pool = [
            _candidate(schema, "CS1 * v1", math.inf),
            _candidate(schema, "CS1 * v1 + CS2", 0.1),
            _candidate(schema, "v1", 0.5),
            _candidate(schema, "v1 + CS1 * square(v1)", 0.3),
        ]
        chosen = environmental_selection(pool, 3, True)
        assert len(chosen) == 3
        assert all(c.finite for c in chosen)
        assert pool[0] not in chosen

    def test_infinite_fill_remaining(self, schema):
        """Test infinite-loss candidates fill slots when too few are finite."""
        pool = [_candidate(schema, "CS1 * v1", math.inf), _candidate(schema, "v1", 0.5)]
        chosen = environmental_selection(pool, 2, True)
        assert chosen == [pool[1], pool[0]]

    def test_archive_is_non_dominated_and_unique(self, schema):
        """Test dominated and repeated expressions are dropped."""
        good = _candidate(schema, "CS1 * v1", 0.1)
        worse = _candidate(schema, "CS1 * v1 + CS2", 0.2)
        twin = _candidate(schema, "CS1 * v1", 0.05)
        simple = _candidate(schema, "v1", 0.6)
        archive = update_archive([], [good, worse, twin, simple], True)
        texts = [to_string(c.expression) for c in archive]
        assert texts == ["CS1 * v1", "v1"]
        objs = [c.objectives() for c in archive]
        assert not any(dominates(a, b) for a in objs for b in objs if a is not b)

    def test_archive_ignores_infinite(self, schema):
        """Test failed candidates never enter the archive."""
        assert update_archive([], [_candidate(schema, "v1", math.inf)], True) == []


class TestRunSearch:
    """Test the search loop end to end."""

    @pytest.fixture
    def linear_dataset(self, schema) -> Dataset:
        """y = 2 v1 + per-U offset."""
        rng = np.random.default_rng(9)
        combos = np.repeat(np.arange(12), 6)
        cat_index = np.array([schema.decode(int(c)) for c in combos])
        features = rng.uniform(-5, 5, size=(combos.size, 1))
        offsets = np.array([1.0, -2.0, 3.0, 0.5])
        target = 2.0 * features[:, 0] + offsets[cat_index[:, 0]]
        return Dataset(schema=schema, features=features, cat_index=cat_index, target=target)

    def _config(self, **overrides) -> SearchConfig:
        settings = {
            "population_size": 12,
            "generations": 2,
            "max_complexity": 7,
            "seed": 1,
            "fit": FitOptions(max_iterations=20),
        }
        settings.update(overrides)
        return SearchConfig(**settings)

    def test_archive_shape(self, linear_dataset):
        """Test the archive is finite, non-dominated and within the cap."""
        generations = []
        report = run_search(
            linear_dataset, self._config(), on_generation=lambda g, _: generations.append(g)
        )
        assert generations == [1, 2]
        assert report.generations_run == 2
        assert report.candidates
        for candidate in report.candidates:
            assert candidate.finite
            assert candidate.complexity <= 7
        objs = [c.objectives() for c in report.candidates]
        assert not any(dominates(a, b) for a in objs for b in objs if a is not b)
        assert report.metrics["counters"]["search.evaluations"] >= 12 * 3

    def test_best_loss_never_increases(self, linear_dataset):
        """Test the best archived loss is non-increasing across generations."""
        best = []
        run_search(
            linear_dataset,
            self._config(generations=6),
            on_generation=lambda _, archive: best.append(min(c.loss for c in archive)),
        )
        assert len(best) == 6
        assert all(later <= earlier for earlier, later in zip(best, best[1:]))

    def test_deterministic_in_seed(self, linear_dataset):
        """Test two runs with one seed give the same archive."""
        first = run_search(linear_dataset, self._config())
        second = run_search(linear_dataset, self._config())
        assert [to_string(c.expression) for c in first.candidates] == [
            to_string(c.expression) for c in second.candidates
        ]

    def test_threads_match_sequential(self, linear_dataset):
        """Test worker threads do not change the outcome."""
        sequential = run_search(linear_dataset, self._config())
        threaded = run_search(linear_dataset, self._config(n_workers=3))
        assert [c.loss for c in sequential.candidates] == [c.loss for c in threaded.candidates]

    def test_two_objectives(self, linear_dataset):
        """Test ranking without the parameter objective."""
        report = run_search(linear_dataset, self._config(use_parameter_objective=False))
        objs = [c.objectives(False) for c in report.candidates]
        assert all(len(o) == 2 for o in objs)
        assert not any(dominates(a, b) for a in objs for b in objs if a is not b)

    def test_constant_target(self, single_cell_schema):
        """Test a constant target still fills the archive with exact models."""
        rng = np.random.default_rng(2)
        ds = Dataset(
            schema=single_cell_schema,
            features=rng.uniform(-5, 5, size=(20, 1)),
            cat_index=np.zeros((20, 1), dtype=int),
            target=np.full(20, 5.0),
        )
        report = run_search(ds, self._config(population_size=10))
        assert report.candidates
        assert min(c.loss for c in report.candidates) == 0.0

    def test_empty_dataset(self, linear_dataset):
        """Test searching no rows is an error."""
        with pytest.raises(ValueError):
            run_search(linear_dataset.subset([]), self._config())

    @pytest.mark.slow
    def test_recovers_partial_offset(self, linear_dataset):
        """Test a longer run finds an exact model of the generating form."""
        report = run_search(
            linear_dataset,
            self._config(population_size=60, generations=30, seed=4, fit=FitOptions(restarts=1)),
        )
        assert min(c.loss for c in report.candidates) < 1e-6


def _min_k_by_complexity(candidates: list[Candidate]) -> dict[int, int]:
    smallest: dict[int, int] = {}
    for c in candidates:
        smallest[c.complexity] = min(smallest.get(c.complexity, c.n_parameters), c.n_parameters)
    return smallest


@pytest.mark.slow
class TestRecovery:
    """Test stochastic recovery over several seeds."""

    def test_shared_slope(self):
        """Test one cell of y = 3 v1 is recovered in at least 4 of 5 seeds."""
        schema = CategorySchema.from_mapping({"G": ["only"]})
        ds = dataset_from_counts(schema, [20], np.random.default_rng(0))
        ds = Dataset(
            schema=schema,
            features=ds.features,
            cat_index=ds.cat_index,
            target=3.0 * ds.features[:, 0],
        )
        recovered = 0
        for seed in range(5):
            report = run_search(ds, SearchConfig(population_size=100, generations=20, seed=seed))
            recovered += any(c.loss <= 1e-3 for c in report.candidates)
        assert recovered >= 4

    def test_partial_quadratic(self, schema):
        """Test y = 100 v1 + p_U v1^2 reaches R^2 >= 0.999 with k <= 20 in 3 of 5 seeds."""
        ds = dataset_from_counts(schema, [8] * 12, np.random.default_rng(11))
        p_u = np.array([10.0, 20.0, 30.0, 40.0])[ds.cat_index[:, 0]]
        v1 = ds.features[:, 0]
        ds = Dataset(
            schema=schema,
            features=ds.features,
            cat_index=ds.cat_index,
            target=100.0 * v1 + p_u * v1**2,
        )
        recovered = 0
        for seed in range(5):
            config = SearchConfig(
                population_size=200, generations=50, max_complexity=15, seed=seed
            )
            report = run_search(ds, config)
            recovered += any(c.loss <= 1e-3 and c.n_parameters <= 20 for c in report.candidates)
        assert recovered >= 3

    def test_parameter_objective_lowers_k(self, schema):
        """Test dropping the parameter objective never lowers k at fixed complexity on average."""
        ds = dataset_from_counts(schema, [4] * 12, np.random.default_rng(5), low=-5.0, high=5.0)
        offsets = np.array([1.0, -2.0, 3.0, 0.5])[ds.cat_index[:, 0]]
        ds = Dataset(
            schema=schema,
            features=ds.features,
            cat_index=ds.cat_index,
            target=3.0 * ds.features[:, 0] + offsets,
        )
        differences = []
        for seed in range(20):
            settings = {
                "population_size": 30,
                "generations": 8,
                "max_complexity": 9,
                "seed": seed,
                "fit": FitOptions(max_iterations=30),
            }
            with_k = _min_k_by_complexity(run_search(ds, SearchConfig(**settings)).candidates)
            without_k = _min_k_by_complexity(
                run_search(
                    ds, SearchConfig(**settings, use_parameter_objective=False)
                ).candidates
            )
            differences += [without_k[c] - with_k[c] for c in with_k.keys() & without_k.keys()]
        assert differences
        assert np.mean(differences) >= 0.0
