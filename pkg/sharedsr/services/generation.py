"""
Random expression generation over the sharing-aware terminal set.

Trees are grown recursively with a node budget: at each node a leaf is
drawn with ``terminal_probability`` (always when the budget is 1), otherwise
an operator that fits the remaining budget.
"""

import numpy as np

from sharedsr.models.dataset import CategorySchema
from sharedsr.models.expression import (
    BINARY_OPERATORS,
    UNARY_OPERATORS,
    BinaryOp,
    Expression,
    Literal,
    Param,
    ParamKind,
    Terminal,
    UnaryOp,
    Variable,
    iter_nodes,
)

# leaf family weights: variable, literal, parameter
LEAF_WEIGHTS = np.array([0.35, 0.15, 0.5])
LITERAL_RANGE = (-5.0, 5.0)
MAX_DRAWS = 100


def parameter_kinds(schema: CategorySchema) -> list[ParamKind]:
    """Every terminal kind: shared, partial on each category, non-shared."""
    return [
        ParamKind.shared(),
        *(ParamKind.partial(c) for c in range(schema.n_categories)),
        ParamKind.nonshared(),
    ]


class TerminalSampler:
    """Draws leaves from the adapted terminal set."""

    def __init__(self, schema: CategorySchema, n_features: int):
        self.kinds = parameter_kinds(schema)
        self.n_features = n_features
        weights = LEAF_WEIGHTS.copy()
        if n_features == 0:
            weights[0] = 0.0
        self.weights = weights / weights.sum()

    def kind(self, rng: np.random.Generator) -> ParamKind:
        # shared, partial (any category) and non-shared are equally likely
        level = rng.integers(3)
        if level == 0:
            return self.kinds[0]
        if level == 2:
            return self.kinds[-1]
        partial = self.kinds[1:-1]
        return partial[rng.integers(len(partial))]

    def draw(self, rng: np.random.Generator, terminal_id: int) -> Terminal:
        family = rng.choice(3, p=self.weights)
        if family == 0:
            return Variable(int(rng.integers(self.n_features)))
        if family == 1:
            return Literal(float(np.round(rng.uniform(*LITERAL_RANGE), 3)))
        return Param(self.kind(rng), terminal_id)


def grow(
    sampler: TerminalSampler,
    budget: int,
    rng: np.random.Generator,
    terminal_probability: float = 0.3,
    first_terminal_id: int = 0,
) -> Expression:
    """
    Grow a tree of at most ``budget`` nodes.

    Parameter leaves get consecutive fresh ids starting at
    ``first_terminal_id``, so a grown tree never ties parameters.
    """
    next_id = first_terminal_id

    def _build(remaining: int) -> Expression:
        nonlocal next_id
        if remaining < 2 or rng.random() < terminal_probability:
            leaf = sampler.draw(rng, next_id)
            if isinstance(leaf, Param):
                next_id += 1
            return leaf
        operators = list(UNARY_OPERATORS) + (list(BINARY_OPERATORS) if remaining >= 3 else [])
        op = operators[rng.integers(len(operators))]
        if op in UNARY_OPERATORS:
            return UnaryOp(op, _build(remaining - 1))
        left_budget = int(rng.integers(1, remaining - 1))
        left = _build(left_budget)
        right = _build(remaining - 1 - left_budget)
        return BinaryOp(op, left, right)

    return _build(budget)


def _degenerate(expr: Expression) -> bool:
    """A tree without variables or parameters is a constant."""
    return not any(isinstance(node, (Variable, Param)) for node in iter_nodes(expr))


def random_expression(
    schema: CategorySchema,
    n_features: int,
    max_complexity: int,
    rng: np.random.Generator,
    terminal_probability: float = 0.3,
) -> Expression:
    """
    Random valid expression with complexity at most ``max_complexity``.

    Constant-only trees are redrawn; parameter terminals of every kind (and
    every category for partial ones) have nonzero probability.
    """
    if max_complexity < 1:
        raise ValueError("max_complexity must be at least 1")
    sampler = TerminalSampler(schema, n_features)
    expr = grow(sampler, max_complexity, rng, terminal_probability)
    for _ in range(MAX_DRAWS):
        if not _degenerate(expr):
            break
        expr = grow(sampler, max_complexity, rng, terminal_probability)
    return expr
