"""
Vectorized tree evaluation with forward-mode derivatives.

Parameter leaves are supplied as one value per row (the individual value
active for that row), so derivatives are taken with respect to the ``m``
terminals rather than the ``k`` individual parameters.
"""

from collections.abc import Callable, Mapping

import numpy as np

from sharedsr.models.expression import (
    BinaryOp,
    Expression,
    Literal,
    Param,
    UnaryOp,
    Variable,
)

UNARY_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exp": np.exp,
    "log": np.log,
    "square": np.square,
    "sqrt": np.sqrt,
}

BINARY_FUNCTIONS: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


def evaluate(
    expr: Expression,
    features: np.ndarray,
    active_values: Mapping[int, np.ndarray],
    n_terminals: int,
    with_derivatives: bool = False,
) -> tuple[np.ndarray, np.ndarray | None]:
    """
    Evaluate an expression on every row.

    Args:
        expr: Expression tree.
        features: Real matrix of shape (n, d).
        active_values: Per terminal id, the value active on each row, shape (n,).
        n_terminals: Number of distinct terminals (m).
        with_derivatives: Also return derivatives w.r.t. the active values.

    Returns:
        Tuple of predictions, shape (n,), and derivatives, shape (n, m), or
        None when not requested. Invalid domains yield non-finite entries.
    """
    n = features.shape[0]
    with np.errstate(all="ignore"):
        value, grad = _forward(expr, features, active_values, n, n_terminals, with_derivatives)
    if with_derivatives and grad is None:
        grad = np.zeros((n, n_terminals))
    return value, grad


def _forward(
    node: Expression,
    features: np.ndarray,
    active: Mapping[int, np.ndarray],
    n: int,
    m: int,
    track: bool,
) -> tuple[np.ndarray, np.ndarray | None]:
    # a None derivative stands for an all-zero block
    if isinstance(node, Variable):
        return features[:, node.index].astype(float), None
    if isinstance(node, Literal):
        return np.full(n, float(node.value)), None
    if isinstance(node, Param):
        grad = None
        if track:
            grad = np.zeros((n, m))
            grad[:, node.terminal_id] = 1.0
        return np.asarray(active[node.terminal_id], dtype=float), grad

    if isinstance(node, UnaryOp):
        x, dx = _forward(node.child, features, active, n, m, track)
        value = UNARY_FUNCTIONS[node.op](x)
        if dx is None:
            return value, None
        if node.op == "exp":
            scale = value
        elif node.op == "log":
            scale = 1.0 / x
        elif node.op == "square":
            scale = 2.0 * x
        else:
            scale = 0.5 / value
        return value, dx * scale[:, None]

    assert isinstance(node, BinaryOp)
    a, da = _forward(node.left, features, active, n, m, track)
    b, db = _forward(node.right, features, active, n, m, track)
    value = BINARY_FUNCTIONS[node.op](a, b)
    if da is None and db is None:
        return value, None

    if node.op == "+":
        return value, _combine(da, 1.0, db, 1.0)
    if node.op == "-":
        return value, _combine(da, 1.0, db, -1.0)
    if node.op == "*":
        return value, _combine(da, b, db, a)
    if node.op == "/":
        return value, _combine(da, 1.0 / b, db, -a / (b * b))

    # power: d(a^b) = b a^(b-1) da + a^b log(a) db
    grad = np.zeros((n, m))
    if da is not None:
        grad += _masked_product(da, b * np.power(a, b - 1.0))
    if db is not None:
        grad += _masked_product(db, value * np.log(a))
    return value, grad


def _combine(
    da: np.ndarray | None,
    ca: np.ndarray | float,
    db: np.ndarray | None,
    cb: np.ndarray | float,
) -> np.ndarray:
    parts = []
    if da is not None:
        parts.append(da * (ca[:, None] if isinstance(ca, np.ndarray) else ca))
    if db is not None:
        parts.append(db * (cb[:, None] if isinstance(cb, np.ndarray) else cb))
    return parts[0] if len(parts) == 1 else parts[0] + parts[1]


def _masked_product(direction: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """``direction * scale`` where zero directions stay zero even if scale is not finite."""
    product = direction * scale[:, None]
    return np.where(direction != 0.0, product, 0.0)
