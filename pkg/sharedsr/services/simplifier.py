"""
Kind-aware simplification.

Rewrites keep every fitted prediction reachable: a rule may only merge
parameters when one free value of the result can reproduce any value of the
input, so ``C1 * C2`` stays as it is while ``CS1 + CS2`` becomes ``CS1``.
Tied terminals (used by more than one leaf) are never merged.
"""

import logging
import math
import warnings

import numpy as np

from sharedsr.models.expression import (
    BinaryOp,
    Expression,
    Literal,
    Param,
    UnaryOp,
    complexity,
    densify,
    terminal_uses,
    transform,
)
from sharedsr.services.evaluation import BINARY_FUNCTIONS, UNARY_FUNCTIONS

logger = logging.getLogger(__name__)

FOLDABLE = ("+", "*")


def _fold_literals(node: Expression) -> Expression:
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore")
        if isinstance(node, UnaryOp) and isinstance(node.child, Literal):
            value = float(UNARY_FUNCTIONS[node.op](np.float64(node.child.value)))
        elif (
            isinstance(node, BinaryOp)
            and isinstance(node.left, Literal)
            and isinstance(node.right, Literal)
        ):
            value = float(
                BINARY_FUNCTIONS[node.op](
                    np.float64(node.left.value), np.float64(node.right.value)
                )
            )
        else:
            return node
    # keep invalid domains visible instead of baking nan into the tree
    return Literal(value) if math.isfinite(value) else node


def _merge_parameters(node: Expression, uses: dict[int, int]) -> Expression:
    if not isinstance(node, BinaryOp) or node.op not in FOLDABLE:
        return node
    left, right = node.left, node.right

    def _free(leaf: Expression) -> bool:
        return isinstance(leaf, Param) and uses.get(leaf.terminal_id, 0) == 1

    if _free(left) and _free(right):
        assert isinstance(left, Param) and isinstance(right, Param)
        # cross-kind and cross-category pairs stay apart
        return left if left.kind == right.kind else node

    for param, other in ((left, right), (right, left)):
        if _free(param) and isinstance(other, Literal):
            if node.op == "*" and other.value == 0.0:
                return node
            return param
    return node


def simplify(expr: Expression) -> Expression:
    """
    Rewrite to a fixed point and re-densify terminal ids.

    Rules: literal-only subtrees fold to a literal; ``Param + Param`` and
    ``Param * Param`` fold when both terminals have the same kind and
    category; ``Param + Literal`` and ``Param * Literal`` (nonzero literal)
    fold to the parameter.
    """
    current = expr
    while True:
        uses = terminal_uses(current)
        rewritten = transform(current, _fold_literals)
        rewritten = transform(rewritten, lambda node: _merge_parameters(node, uses))
        if rewritten == current:
            break
        current = rewritten
    result = densify(current)
    if result != expr:
        logger.debug(
            "Simplified expression from %d to %d nodes", complexity(expr), complexity(result)
        )
    return result
