"""
Pydantic models for run configuration and reports.

Defines the validated option sets for fitting and search, the flat run
configuration read by the command line, and the records written to
structured reports.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class FitOptions(BaseModel):
    """Levenberg-Marquardt options."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iterations: int = Field(default=200, ge=1, description="Iteration budget per start")
    gradient_tol: float = Field(default=1e-10, ge=0.0, description="Gradient max-norm stop")
    step_tol: float = Field(default=1e-12, ge=0.0, description="Relative step norm stop")
    restarts: int = Field(default=0, ge=0, description="Extra random starts")
    init_low: float = Field(default=-1.0, description="Lower bound of random init")
    init_high: float = Field(default=1.0, description="Upper bound of random init")
    initial_damping: float = Field(default=1e-3, gt=0.0, description="Initial lambda")

    @model_validator(mode="after")
    def _check_init_range(self) -> "FitOptions":
        if self.init_low > self.init_high:
            raise ValueError("init_low must not exceed init_high")
        return self


class SearchConfig(BaseModel):
    """Genetic-programming search settings."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    population_size: int = Field(default=200, ge=2, description="Candidates per generation")
    generations: int = Field(default=100, ge=0, description="Number of generations")
    max_complexity: int = Field(default=15, ge=1, description="Node-count cap")
    tournament_size: int = Field(default=2, ge=1, description="Tournament arity")
    crossover_probability: float = Field(default=0.5, ge=0.0, le=1.0)
    subtree_mutation_probability: float = Field(default=0.3, ge=0.0, le=1.0)
    point_mutation_probability: float = Field(default=0.2, ge=0.0, le=1.0)
    terminal_probability: float = Field(
        default=0.3, ge=0.0, le=1.0, description="Chance of a leaf while growing"
    )
    use_parameter_objective: bool = Field(
        default=True, description="Rank on individual parameter count as third objective"
    )
    max_init_retries: int = Field(default=10, ge=0, description="Regenerations per slot")
    n_workers: int = Field(default=1, ge=1, description="Concurrent fitness evaluations")
    seed: int = Field(default=0, description="Random seed")
    fit: FitOptions = Field(default_factory=lambda: FitOptions(max_iterations=50))


class RunConfig(BaseModel):
    """
    Flat configuration of a command-line run.

    Mirrors ``SearchConfig`` and ``FitOptions`` as flat keys plus the CSV
    column roles. Unknown keys are rejected.
    """

    model_config = ConfigDict(extra="forbid")

    data: str = Field(description="Input CSV path")
    features: list[str] = Field(description="Continuous feature columns")
    categories: list[str] = Field(description="Categorical columns")
    target: str = Field(description="Target column")
    output: str | None = Field(default=None, description="Structured report path")
    test_fraction: float = Field(default=0.0, ge=0.0, lt=1.0)

    population_size: int = 200
    generations: int = 100
    max_complexity: int = 15
    tournament_size: int = 2
    crossover_probability: float = 0.5
    subtree_mutation_probability: float = 0.3
    point_mutation_probability: float = 0.2
    terminal_probability: float = 0.3
    use_parameter_objective: bool = True
    n_workers: int = 1
    seed: int = 0

    max_iterations: int = 50
    gradient_tol: float = 1e-10
    step_tol: float = 1e-12
    restarts: int = 0

    def fit_options(self) -> FitOptions:
        return FitOptions(
            max_iterations=self.max_iterations,
            gradient_tol=self.gradient_tol,
            step_tol=self.step_tol,
            restarts=self.restarts,
        )

    def search_config(self) -> SearchConfig:
        return SearchConfig(
            population_size=self.population_size,
            generations=self.generations,
            max_complexity=self.max_complexity,
            tournament_size=self.tournament_size,
            crossover_probability=self.crossover_probability,
            subtree_mutation_probability=self.subtree_mutation_probability,
            point_mutation_probability=self.point_mutation_probability,
            terminal_probability=self.terminal_probability,
            use_parameter_objective=self.use_parameter_objective,
            n_workers=self.n_workers,
            seed=self.seed,
            fit=self.fit_options(),
        )


class ParameterValue(BaseModel):
    """One individual parameter in a report."""

    label: str = Field(description="Terminal token with category values, e.g. C1_1[B]")
    value: float = Field(description="Fitted value")


class Shortfall(BaseModel):
    """Unmet data requirement of one parameter group."""

    requirement: str = Field(description="What the data must cover")
    demand: int = Field(description="Points required")
    supplied: int = Field(description="Points that could be assigned")

    @property
    def missing(self) -> int:
        return self.demand - self.supplied


class IdentifiabilityReport(BaseModel):
    """Verdict of the minimum data requirement check."""

    feasible: bool = Field(description="True if every requirement can be met")
    cell_counts: dict[str, int] = Field(description="Rows per category-value combination")
    total_demand: int = Field(description="Surplus points the parameters need")
    total_supplied: int = Field(description="Surplus points that could be assigned")
    shortfalls: list[Shortfall] = Field(default_factory=list)


class FitReport(BaseModel):
    """Result of fitting one fixed expression."""

    expression: str
    sse: float
    r_squared: float | None = Field(description="None when the target has no variance")
    n_iterations: int
    converged: bool
    identifiable: bool
    parameters: list[ParameterValue]


class CandidateRecord(BaseModel):
    """One archived search candidate in the structured report."""

    expression: str
    loss: float = Field(description="1 - R^2 on the training data")
    complexity: int
    n_parameters: int = Field(description="Individual parameter count k")
    r_squared: float | None
    test_r_squared: float | None = None
    parameters: list[ParameterValue]
    seed: int


class SearchReportHeader(BaseModel):
    """First record of a structured search report."""

    record: str = "header"
    seed: int
    config: SearchConfig
    n_rows: int
    n_test_rows: int
    categories: dict[str, list[str]]
    metrics: dict = Field(default_factory=dict)


class ProcessionRow(BaseModel):
    """One line of a procession log."""

    procession: int
    n_train: int
    cell_counts: dict[str, int]
    mse_test: float | None = Field(description="None before any point was moved")
    feasible: bool
    refit_ok: bool = True

    @property
    def row_id(self) -> str:
        return f"{self.procession}:{self.n_train}"
