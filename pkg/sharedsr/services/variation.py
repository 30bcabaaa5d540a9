"""
Genetic operators: point mutation, subtree mutation and subtree crossover.

All operators return expressions with dense terminal ids and never exceed
the complexity cap; when no valid offspring is found within the retry
budget the parent is returned unchanged.
"""

import logging

import numpy as np

from sharedsr.models.dataset import CategorySchema
from sharedsr.models.expression import (
    BINARY_OPERATORS,
    UNARY_OPERATORS,
    BinaryOp,
    Expression,
    Param,
    UnaryOp,
    complexity,
    densify,
    node_at,
    offset_terminals,
    parameters,
    replace_at,
)
from sharedsr.services.generation import TerminalSampler, grow

logger = logging.getLogger(__name__)

MAX_RETRIES = 10
MAX_LEAF_DRAWS = 100


def _fresh_id(expr: Expression) -> int:
    return max((p.terminal_id for p in parameters(expr)), default=-1) + 1


def _same_leaf(a: Expression, b: Expression) -> bool:
    if isinstance(a, Param) and isinstance(b, Param):
        return a.kind == b.kind
    return a == b


def point_mutation(
    expr: Expression,
    schema: CategorySchema,
    rng: np.random.Generator,
    n_features: int,
) -> Expression:
    """
    Replace one uniformly chosen node by a different node of the same arity.

    Leaves are redrawn from the full terminal set (variables, literals and
    every parameter kind); operators keep their children.
    """
    index = int(rng.integers(complexity(expr)))
    node = node_at(expr, index)

    if isinstance(node, UnaryOp):
        options = [op for op in UNARY_OPERATORS if op != node.op]
        replacement: Expression = UnaryOp(options[rng.integers(len(options))], node.child)
    elif isinstance(node, BinaryOp):
        options = [op for op in BINARY_OPERATORS if op != node.op]
        replacement = BinaryOp(options[rng.integers(len(options))], node.left, node.right)
    else:
        sampler = TerminalSampler(schema, n_features)
        replacement = node
        for _ in range(MAX_LEAF_DRAWS):
            candidate = sampler.draw(rng, _fresh_id(expr))
            if not _same_leaf(candidate, node):
                replacement = candidate
                break
    return densify(replace_at(expr, index, replacement))


def subtree_mutation(
    expr: Expression,
    schema: CategorySchema,
    rng: np.random.Generator,
    n_features: int,
    max_complexity: int,
    terminal_probability: float = 0.3,
) -> Expression:
    """Replace a uniformly chosen subtree by a freshly grown one."""
    sampler = TerminalSampler(schema, n_features)
    size = complexity(expr)
    for _ in range(MAX_RETRIES):
        index = int(rng.integers(size))
        budget = max_complexity - (size - complexity(node_at(expr, index)))
        if budget < 1:
            continue
        subtree = grow(sampler, budget, rng, terminal_probability, _fresh_id(expr))
        offspring = replace_at(expr, index, subtree)
        if complexity(offspring) <= max_complexity:
            return densify(offspring)
    logger.debug("Subtree mutation found no offspring within the complexity cap")
    return expr


def subtree_crossover(
    a: Expression,
    b: Expression,
    rng: np.random.Generator,
    max_complexity: int,
) -> Expression:
    """
    Insert a uniformly chosen subtree of ``b`` at a uniformly chosen node of ``a``.

    Donor terminals are renumbered apart from the receiver's, so ties inside
    each parent survive and nothing is tied across parents.
    """
    size_a, size_b = complexity(a), complexity(b)
    donor = offset_terminals(b, _fresh_id(a))
    for _ in range(MAX_RETRIES):
        i = int(rng.integers(size_a))
        j = int(rng.integers(size_b))
        offspring = replace_at(a, i, node_at(donor, j))
        if complexity(offspring) <= max_complexity:
            return densify(offspring)
    logger.debug("Crossover found no offspring within the complexity cap")
    return a
