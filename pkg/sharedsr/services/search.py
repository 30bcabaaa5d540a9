"""
Multi-objective genetic-programming search.

Candidates are ranked on (1 - R^2, complexity, individual parameter count)
by non-dominated sorting with crowding distance. Fitted parameter values are
kept on every candidate and reused as warm starts for its offspring.
"""

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from sharedsr.exceptions import FitError
from sharedsr.models.binding import ParameterBinding
from sharedsr.models.dataset import CategorySchema, Dataset
from sharedsr.models.expression import (
    Expression,
    complexity,
    count_individual_parameters,
)
from sharedsr.models.schemas import FitOptions, SearchConfig
from sharedsr.services.fitting import FitResult, align_binding, fit_parameters
from sharedsr.services.generation import random_expression
from sharedsr.services.pareto import dominates, rank_with_crowding
from sharedsr.services.serialization import to_string
from sharedsr.services.simplifier import simplify
from sharedsr.services.variation import (
    point_mutation,
    subtree_crossover,
    subtree_mutation,
)
from sharedsr.utils.logging_config import log_performance
from sharedsr.utils.metrics import SearchMetrics

logger = logging.getLogger(__name__)

CONSTANT_FIT_MSE = 1e-12


@dataclass(frozen=True)
class Candidate:
    """An expression with its fitted parameters and objective values."""

    expression: Expression
    fit: FitResult | None
    loss: float
    complexity: int
    n_parameters: int

    @property
    def finite(self) -> bool:
        return math.isfinite(self.loss)

    @property
    def binding(self) -> ParameterBinding | None:
        return self.fit.binding if self.fit is not None else None

    def objectives(self, use_parameter_objective: bool = True) -> tuple[float, ...]:
        if use_parameter_objective:
            return self.loss, float(self.complexity), float(self.n_parameters)
        return self.loss, float(self.complexity)


def loss_of(fit: FitResult | None, n_rows: int = 1) -> float:
    """
    ``1 - R^2``; infinity for failed or non-finite fits.

    A constant target leaves R^2 undefined: the loss is then 0 when the mean
    squared residual is at most ``CONSTANT_FIT_MSE`` and infinity otherwise.
    """
    if fit is None or not math.isfinite(fit.sse):
        return math.inf
    if fit.r_squared is None:
        return 0.0 if fit.sse <= CONSTANT_FIT_MSE * max(n_rows, 1) else math.inf
    loss = 1.0 - fit.r_squared
    return max(loss, 0.0) if math.isfinite(loss) else math.inf


def score(
    expr: Expression, fit: FitResult | None, schema: CategorySchema, n_rows: int = 1
) -> Candidate:
    """Candidate with objectives derived from the expression and its fit on ``n_rows`` rows."""
    return Candidate(
        expression=expr,
        fit=fit,
        loss=loss_of(fit, n_rows),
        complexity=complexity(expr),
        n_parameters=count_individual_parameters(expr, schema),
    )


def evaluate_candidate(
    expr: Expression,
    ds: Dataset,
    options: FitOptions,
    seed: int,
    warm_start: ParameterBinding | None = None,
) -> Candidate:
    """Fit and score one expression; fit failures become infinite loss."""
    rng = np.random.default_rng(seed)
    init: ParameterBinding | str = "random"
    if warm_start is not None:
        init = align_binding(warm_start, expr, rng, options.init_low, options.init_high)
    try:
        fit: FitResult | None = fit_parameters(expr, ds, init, options, rng)
    except FitError as e:
        logger.debug("Candidate fit failed: %s", e)
        fit = None
    return score(expr, fit, ds.schema, ds.n_rows)


@dataclass
class ParetoReport:
    """Final archive of a search together with its settings."""

    candidates: list[Candidate]
    config: SearchConfig
    schema: CategorySchema
    generations_run: int
    metrics: dict = field(default_factory=dict)

    def sorted_by_complexity(self) -> list[Candidate]:
        return sorted(self.candidates, key=lambda c: (c.complexity, c.loss, c.n_parameters))


class Evaluator:
    """Runs candidate fits sequentially or on a thread pool."""

    def __init__(self, ds: Dataset, options: FitOptions, n_workers: int, metrics: SearchMetrics):
        self.ds = ds
        self.options = options
        self.n_workers = n_workers
        self.metrics = metrics

    def __call__(
        self,
        expressions: Sequence[Expression],
        seeds: Sequence[int],
        warm_starts: Sequence[ParameterBinding | None],
    ) -> list[Candidate]:
        jobs = list(zip(expressions, seeds, warm_starts, strict=True))

        def _run(job: tuple[Expression, int, ParameterBinding | None]) -> Candidate:
            expr, seed, warm = job
            return evaluate_candidate(expr, self.ds, self.options, seed, warm)

        if self.n_workers > 1:
            with ThreadPoolExecutor(max_workers=self.n_workers) as pool:
                results = list(pool.map(_run, jobs))
        else:
            results = [_run(job) for job in jobs]
        for candidate in results:
            self.metrics.track_evaluation(candidate.fit is None, candidate.finite)
        return results


def _seeds(rng: np.random.Generator, n: int) -> list[int]:
    return [int(s) for s in rng.integers(0, 2**63 - 1, size=n)]


def initialize_population(
    config: SearchConfig,
    schema: CategorySchema,
    n_features: int,
    rng: np.random.Generator,
    evaluate: Callable[..., list[Candidate]],
) -> list[Candidate]:
    """
    Random, simplified, fitted and scored starting population.

    Slots whose candidate has non-finite loss are regenerated up to
    ``config.max_init_retries`` times and then kept with infinite loss.
    """
    population: list[Candidate | None] = [None] * config.population_size
    pending = list(range(config.population_size))
    for attempt in range(config.max_init_retries + 1):
        expressions = [
            simplify(
                random_expression(
                    schema, n_features, config.max_complexity, rng, config.terminal_probability
                )
            )
            for _ in pending
        ]
        results = evaluate(expressions, _seeds(rng, len(pending)), [None] * len(pending))
        still_pending = []
        for slot, candidate in zip(pending, results, strict=True):
            population[slot] = candidate
            if not candidate.finite and attempt < config.max_init_retries:
                still_pending.append(slot)
        pending = still_pending
        if not pending:
            break
    return [c for c in population if c is not None]


def tournament(
    ranks: dict[int, int],
    crowding: dict[int, float],
    eligible: list[int],
    size: int,
    rng: np.random.Generator,
) -> int:
    """Index of the best of ``size`` random contestants by (rank, -crowding)."""
    contestants = rng.choice(eligible, size=min(size, len(eligible)), replace=False)
    return int(min(contestants, key=lambda i: (ranks[int(i)], -crowding[int(i)], int(i))))


def environmental_selection(
    candidates: list[Candidate], size: int, use_parameter_objective: bool
) -> list[Candidate]:
    """Keep the best ``size`` candidates front by front; infinite-loss ones fill last."""
    finite = [i for i, c in enumerate(candidates) if c.finite]
    objs = [candidates[i].objectives(use_parameter_objective) for i in finite]
    fronts, _ = rank_with_crowding(objs)
    chosen: list[Candidate] = []
    for front in fronts:
        for local in front:
            if len(chosen) == size:
                return chosen
            chosen.append(candidates[finite[local]])
    for candidate in candidates:
        if len(chosen) == size:
            break
        if not candidate.finite:
            chosen.append(candidate)
    return chosen


def update_archive(
    archive: list[Candidate], newcomers: Sequence[Candidate], use_parameter_objective: bool
) -> list[Candidate]:
    """All-time non-dominated candidates, one per distinct expression text."""
    seen = {to_string(c.expression) for c in archive}
    pool = list(archive)
    for candidate in newcomers:
        if not candidate.finite:
            continue
        text = to_string(candidate.expression)
        if text in seen:
            continue
        seen.add(text)
        pool.append(candidate)
    objs = [c.objectives(use_parameter_objective) for c in pool]
    return [
        c
        for i, c in enumerate(pool)
        if not any(dominates(objs[j], objs[i]) for j in range(len(pool)) if j != i)
    ]


def make_offspring(
    parent: Candidate,
    other: Candidate,
    config: SearchConfig,
    schema: CategorySchema,
    n_features: int,
    rng: np.random.Generator,
) -> Expression:
    """Crossover with its probability, then subtree or point mutation with theirs."""
    child = parent.expression
    if rng.random() < config.crossover_probability:
        child = subtree_crossover(child, other.expression, rng, config.max_complexity)
    draw = rng.random()
    if draw < config.subtree_mutation_probability:
        child = subtree_mutation(
            child, schema, rng, n_features, config.max_complexity, config.terminal_probability
        )
    elif draw < config.subtree_mutation_probability + config.point_mutation_probability:
        child = point_mutation(child, schema, rng, n_features)
    return simplify(child)


@log_performance(logger)
def run_search(
    ds: Dataset,
    config: SearchConfig,
    on_generation: Callable[[int, list[Candidate]], None] | None = None,
) -> ParetoReport:
    """
    Evolve expressions for ``ds`` and return the all-time Pareto archive.

    Args:
        ds: Non-empty training data.
        config: Search settings; single-worker runs are deterministic in ``seed``.
        on_generation: Optional callback receiving the generation number and
            the archive after each generation.
    """
    if ds.n_rows == 0:
        raise ValueError("cannot search on an empty dataset")
    rng = np.random.default_rng(config.seed)
    metrics = SearchMetrics()
    evaluate = Evaluator(ds, config.fit, config.n_workers, metrics)
    use_k = config.use_parameter_objective
    schema, n_features = ds.schema, ds.n_features

    population = initialize_population(config, schema, n_features, rng, evaluate)
    archive = update_archive([], population, use_k)

    for generation in range(1, config.generations + 1):
        with metrics.generation_timer():
            finite = [i for i, c in enumerate(population) if c.finite]
            eligible = finite or list(range(len(population)))
            objs = [population[i].objectives(use_k) for i in eligible]
            fronts, local_crowding = rank_with_crowding(objs)
            ranks = {eligible[i]: r for r, front in enumerate(fronts) for i in front}
            crowding = {eligible[i]: d for i, d in local_crowding.items()}

            parents = []
            children = []
            for _ in range(config.population_size):
                first = population[tournament(ranks, crowding, eligible, config.tournament_size, rng)]
                second = population[tournament(ranks, crowding, eligible, config.tournament_size, rng)]
                children.append(make_offspring(first, second, config, schema, n_features, rng))
                parents.append(first)

            offspring = evaluate(
                children, _seeds(rng, len(children)), [p.binding for p in parents]
            )
            population = environmental_selection(
                population + offspring, config.population_size, use_k
            )
            archive = update_archive(archive, offspring, use_k)

        best = min((c.loss for c in archive), default=math.inf)
        metrics.track_generation(generation, best, len(archive))
        logger.info(
            "Generation complete",
            extra={
                "generation": generation,
                "best_loss": best,
                "archive_size": len(archive),
                "evaluations": metrics.count("evaluations"),
                "fit_failures": metrics.count("fit_failures"),
            },
        )
        if on_generation is not None:
            on_generation(generation, archive)

    return ParetoReport(
        candidates=archive,
        config=config,
        schema=schema,
        generations_run=config.generations,
        metrics=metrics.snapshot(),
    )
