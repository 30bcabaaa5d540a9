"""
Expression trees with sharing-aware parameter terminals.

Nodes are immutable. A parameter leaf carries its sharing kind and a
terminal id; leaves with the same terminal id are one tied parameter.
"""

from __future__ import annotations

import enum
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from typing import Union

from sharedsr.models.dataset import CategorySchema


class SharingLevel(enum.Enum):
    """How widely a parameter's value is shared across category values."""

    SHARED = "shared"
    PARTIAL = "partial"
    NONSHARED = "nonshared"


@dataclass(frozen=True)
class ParamKind:
    """
    Sharing kind of a parameter terminal.

    ``category`` is set only for partially-shared parameters and names the
    category whose values the parameter depends on.
    """

    level: SharingLevel
    category: int | None = None

    def __post_init__(self) -> None:
        if (self.level is SharingLevel.PARTIAL) != (self.category is not None):
            raise ValueError("only partially-shared parameters carry a category")
        if self.category is not None and self.category < 0:
            raise ValueError("category index must be non-negative")

    @classmethod
    def shared(cls) -> ParamKind:
        return cls(SharingLevel.SHARED)

    @classmethod
    def partial(cls, category: int) -> ParamKind:
        return cls(SharingLevel.PARTIAL, category)

    @classmethod
    def nonshared(cls) -> ParamKind:
        return cls(SharingLevel.NONSHARED)

    def size(self, schema: CategorySchema) -> int:
        """Number of individual values behind one terminal of this kind."""
        if self.level is SharingLevel.SHARED:
            return 1
        if self.level is SharingLevel.PARTIAL:
            assert self.category is not None
            return schema.sizes[self.category]
        return schema.n_combinations

    def sort_key(self) -> tuple[int, int]:
        """Flattening order: shared, partial by category, then non-shared."""
        order = {SharingLevel.SHARED: 0, SharingLevel.PARTIAL: 1, SharingLevel.NONSHARED: 2}
        return order[self.level], -1 if self.category is None else self.category


BINARY_OPERATORS = ("+", "-", "*", "/", "^")
UNARY_OPERATORS = ("exp", "log", "square", "sqrt")


@dataclass(frozen=True)
class Variable:
    index: int


@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class Param:
    kind: ParamKind
    terminal_id: int


@dataclass(frozen=True)
class UnaryOp:
    op: str
    child: Expression

    def __post_init__(self) -> None:
        if self.op not in UNARY_OPERATORS:
            raise ValueError(f"unknown unary operator {self.op!r}")


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: Expression
    right: Expression

    def __post_init__(self) -> None:
        if self.op not in BINARY_OPERATORS:
            raise ValueError(f"unknown binary operator {self.op!r}")


Terminal = Union[Variable, Literal, Param]
Expression = Union[BinaryOp, UnaryOp, Variable, Literal, Param]


def children(node: Expression) -> tuple[Expression, ...]:
    if isinstance(node, BinaryOp):
        return node.left, node.right
    if isinstance(node, UnaryOp):
        return (node.child,)
    return ()


def with_children(node: Expression, new_children: tuple[Expression, ...]) -> Expression:
    if isinstance(node, BinaryOp):
        return BinaryOp(node.op, new_children[0], new_children[1])
    if isinstance(node, UnaryOp):
        return UnaryOp(node.op, new_children[0])
    return node


def iter_nodes(expr: Expression) -> Iterator[Expression]:
    """Pre-order traversal; leaves come out in left-to-right order."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def node_at(expr: Expression, index: int) -> Expression:
    """Node at a pre-order position."""
    for i, node in enumerate(iter_nodes(expr)):
        if i == index:
            return node
    raise IndexError(f"node index {index} out of range")


def replace_at(expr: Expression, index: int, replacement: Expression) -> Expression:
    """Copy of ``expr`` with the subtree at pre-order ``index`` replaced."""

    def _walk(node: Expression, offset: int) -> tuple[Expression, int]:
        if offset == index:
            return replacement, offset + complexity(node)
        position = offset + 1
        new_children = []
        for child in children(node):
            new_child, position = _walk(child, position)
            new_children.append(new_child)
        return with_children(node, tuple(new_children)), position

    if not 0 <= index < complexity(expr):
        raise IndexError(f"node index {index} out of range")
    return _walk(expr, 0)[0]


def transform(expr: Expression, fn: Callable[[Expression], Expression]) -> Expression:
    """Bottom-up rewrite applying ``fn`` to every node after its children."""
    rebuilt = with_children(expr, tuple(transform(c, fn) for c in children(expr)))
    return fn(rebuilt)


def complexity(expr: Expression) -> int:
    """Number of operators and operands in the tree."""
    return sum(1 for _ in iter_nodes(expr))


def depth(expr: Expression) -> int:
    kids = children(expr)
    return 1 + (max(depth(c) for c in kids) if kids else 0)


def parameters(expr: Expression) -> list[Param]:
    """Parameter leaves in left-to-right order (tied leaves repeat)."""
    return [node for node in iter_nodes(expr) if isinstance(node, Param)]


def terminal_kinds(expr: Expression) -> dict[int, ParamKind]:
    """Sharing kind of each distinct terminal id, in first-appearance order."""
    kinds: dict[int, ParamKind] = {}
    for param in parameters(expr):
        known = kinds.setdefault(param.terminal_id, param.kind)
        if known != param.kind:
            raise ValueError(
                f"terminal {param.terminal_id} used with two kinds: {known} and {param.kind}"
            )
    return kinds


def terminal_uses(expr: Expression) -> dict[int, int]:
    """How many leaves refer to each terminal id."""
    uses: dict[int, int] = {}
    for param in parameters(expr):
        uses[param.terminal_id] = uses.get(param.terminal_id, 0) + 1
    return uses


def n_terminals(expr: Expression) -> int:
    """Number of distinct parameter terminals (m)."""
    return len(terminal_kinds(expr))


def densify(expr: Expression) -> Expression:
    """
    Renumber terminal ids to 0..m-1 in first-appearance order.

    Leaves sharing an id before renumbering still share one afterwards.
    """
    mapping: dict[int, int] = {}
    for param in parameters(expr):
        mapping.setdefault(param.terminal_id, len(mapping))
    if all(old == new for old, new in mapping.items()):
        return expr

    def _renumber(node: Expression) -> Expression:
        if isinstance(node, Param):
            return Param(node.kind, mapping[node.terminal_id])
        return node

    return transform(expr, _renumber)


def offset_terminals(expr: Expression, offset: int) -> Expression:
    """Shift every terminal id by ``offset``, keeping ties."""

    def _shift(node: Expression) -> Expression:
        if isinstance(node, Param):
            return Param(node.kind, node.terminal_id + offset)
        return node

    return transform(expr, _shift)


def is_dense(expr: Expression) -> bool:
    return list(terminal_kinds(expr)) == list(range(n_terminals(expr)))


def count_by_kind(expr: Expression) -> dict[ParamKind, int]:
    """Number of distinct terminals of each sharing kind."""
    counts: dict[ParamKind, int] = {}
    for kind in terminal_kinds(expr).values():
        counts[kind] = counts.get(kind, 0) + 1
    return counts


def count_individual_parameters(expr: Expression, schema: CategorySchema) -> int:
    """
    Number of individual real values behind all parameter terminals (k).

    A shared terminal contributes 1, a partial terminal on category ``c``
    contributes the number of values of ``c``, and a non-shared terminal one
    value per category-value combination.
    """
    return sum(kind.size(schema) * n for kind, n in count_by_kind(expr).items())


def validate(expr: Expression, schema: CategorySchema, n_features: int | None = None) -> None:
    """
    Check the structural invariants of an expression.

    Raises:
        ValueError: If terminal ids are not dense, a partial parameter names
            an unknown category, or a variable index is out of range.
    """
    kinds = terminal_kinds(expr)
    if list(kinds) != list(range(len(kinds))):
        raise ValueError("terminal ids are not dense in first-appearance order")
    for kind in kinds.values():
        if kind.category is not None and kind.category >= schema.n_categories:
            raise ValueError(
                f"partial parameter on category {kind.category + 1} but the "
                f"schema has {schema.n_categories}"
            )
    if n_features is not None:
        for node in iter_nodes(expr):
            if isinstance(node, Variable) and not 0 <= node.index < n_features:
                raise ValueError(f"variable v{node.index + 1} out of range")


def kind_token(kind: ParamKind, occurrence: int) -> str:
    """Text token of the ``occurrence``-th terminal of a kind (1-based)."""
    if kind.level is SharingLevel.SHARED:
        return f"CS{occurrence}"
    if kind.level is SharingLevel.NONSHARED:
        return f"CI{occurrence}"
    assert kind.category is not None
    return f"C{kind.category + 1}_{occurrence}"


def terminal_labels(expr: Expression) -> dict[int, str]:
    """Token of every terminal id, numbering each kind in first-appearance order."""
    counters: dict[ParamKind, int] = {}
    labels: dict[int, str] = {}
    for terminal_id, kind in terminal_kinds(expr).items():
        counters[kind] = counters.get(kind, 0) + 1
        labels[terminal_id] = kind_token(kind, counters[kind])
    return labels
