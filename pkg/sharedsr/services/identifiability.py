"""
Minimum data requirements for identifying sharing-aware parameters.

Every non-shared terminal needs one point in every combination cell. Points
beyond that are surplus and each can serve one further requirement: a
terminal partially shared on category ``c`` needs one surplus point for
every value of ``c`` (from a cell carrying that value), and a shared
terminal needs one surplus point anywhere. Whether the surplus can cover all
requirements at once is a transportation problem, decided by max-flow.
"""

import logging

import networkx as nx
import numpy as np

from sharedsr.models.dataset import Dataset
from sharedsr.models.expression import Expression, SharingLevel, count_by_kind
from sharedsr.models.schemas import IdentifiabilityReport, Shortfall

logger = logging.getLogger(__name__)

SOURCE = "source"
SINK = "sink"


def requirement_counts(expr: Expression, n_categories: int) -> tuple[int, list[int], int]:
    """Terminal counts by kind: (non-shared, partial per category, shared)."""
    n_nonshared, n_shared = 0, 0
    n_partial = [0] * n_categories
    for kind, count in count_by_kind(expr).items():
        if kind.level is SharingLevel.NONSHARED:
            n_nonshared += count
        elif kind.level is SharingLevel.SHARED:
            n_shared += count
        else:
            assert kind.category is not None
            n_partial[kind.category] += count
    return n_nonshared, n_partial, n_shared


def check_counts(
    expr: Expression, ds: Dataset, counts: np.ndarray | list[int] | None = None
) -> IdentifiabilityReport:
    """
    Decide identifiability from per-cell counts.

    Args:
        expr: Expression whose terminals set the requirements.
        ds: Dataset providing the schema (and the counts when ``counts`` is None).
        counts: Optional per-combination counts overriding the dataset rows.

    Returns:
        Report with the verdict and one shortfall per unmet requirement.
    """
    schema = ds.schema
    if counts is None:
        counts = np.bincount(ds.combination, minlength=schema.n_combinations)
    counts = np.asarray(counts, dtype=np.int64)
    cell_names = schema.cell_names()
    n_nonshared, n_partial, n_shared = requirement_counts(expr, schema.n_categories)

    shortfalls: list[Shortfall] = []
    for combo, count in enumerate(counts):
        if count < n_nonshared:
            shortfalls.append(
                Shortfall(
                    requirement=f"non-shared parameters in cell {cell_names[combo]}",
                    demand=n_nonshared,
                    supplied=int(count),
                )
            )

    graph = nx.DiGraph()
    demands: dict[str, tuple[str, int]] = {}
    for c, category in enumerate(schema.categories):
        if not n_partial[c]:
            continue
        for v, value in enumerate(category.values):
            node = f"partial:{c}:{v}"
            demands[node] = (f"partially-shared parameters on {category.name} = {value}", n_partial[c])
            graph.add_edge(node, SINK, capacity=n_partial[c])
    if n_shared:
        demands["shared"] = ("shared parameters", n_shared)
        graph.add_edge("shared", SINK, capacity=n_shared)

    total_demand = sum(d for _, d in demands.values())
    for combo, count in enumerate(counts):
        surplus = int(count) - n_nonshared
        if surplus <= 0 or not demands:
            continue
        cell = f"cell:{combo}"
        graph.add_edge(SOURCE, cell, capacity=surplus)
        for c, v in enumerate(schema.decode(combo)):
            if n_partial[c]:
                graph.add_edge(cell, f"partial:{c}:{v}")
        if n_shared:
            graph.add_edge(cell, "shared")

    supplied: dict[str, int] = {node: 0 for node in demands}
    total_supplied = 0
    if demands and graph.has_node(SOURCE):
        total_supplied, flow = nx.maximum_flow(graph, SOURCE, SINK)
        for node in demands:
            supplied[node] = int(flow[node].get(SINK, 0))

    for node, (label, demand) in demands.items():
        if supplied[node] < demand:
            shortfalls.append(Shortfall(requirement=label, demand=demand, supplied=supplied[node]))

    feasible = not shortfalls
    logger.debug(
        "Identifiability check",
        extra={"feasible": feasible, "demand": total_demand, "supplied": total_supplied},
    )
    return IdentifiabilityReport(
        feasible=feasible,
        cell_counts=dict(zip(cell_names, counts.tolist(), strict=True)),
        total_demand=total_demand,
        total_supplied=int(total_supplied),
        shortfalls=shortfalls,
    )


def check_identifiability(expr: Expression, ds: Dataset) -> tuple[bool, IdentifiabilityReport]:
    """
    Minimum data requirement verdict for fitting ``expr`` on ``ds``.

    Returns:
        ``(feasible, report)``; feasible iff every cell holds the non-shared
        terminals and the surplus points cover all partial and shared
        requirements simultaneously.
    """
    report = check_counts(expr, ds)
    return report.feasible, report
