"""
Non-dominated sorting and crowding distance for minimization objectives.
"""

from collections.abc import Sequence

import numpy as np

Objectives = Sequence[float]


def dominates(a: Objectives, b: Objectives) -> bool:
    """True if ``a`` is no worse than ``b`` everywhere and better somewhere."""
    return all(x <= y for x, y in zip(a, b, strict=True)) and any(
        x < y for x, y in zip(a, b, strict=True)
    )


def nondominated_sort(objs: Sequence[Objectives]) -> list[list[int]]:
    """Fronts of indices; front 0 holds the non-dominated points."""
    n = len(objs)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    counts = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if dominates(objs[p], objs[q]):
                dominated_by[p].append(q)
            elif dominates(objs[q], objs[p]):
                counts[p] += 1
        if counts[p] == 0:
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        following = []
        for p in fronts[i]:
            for q in dominated_by[p]:
                counts[q] -= 1
                if counts[q] == 0:
                    following.append(q)
        i += 1
        fronts.append(sorted(following))
    fronts.pop()
    return fronts


def crowding_distance(front: Sequence[int], objs: Sequence[Objectives]) -> dict[int, float]:
    """Crowding distance of each member of one front; boundary points get infinity."""
    if not front:
        return {}
    distance = {idx: 0.0 for idx in front}
    n_objectives = len(objs[front[0]])
    for m in range(n_objectives):
        ordered = sorted(front, key=lambda i: objs[i][m])
        low, high = objs[ordered[0]][m], objs[ordered[-1]][m]
        distance[ordered[0]] = distance[ordered[-1]] = float("inf")
        span = high - low
        if not np.isfinite(span) or span <= 0:
            continue
        for j in range(1, len(ordered) - 1):
            distance[ordered[j]] += (objs[ordered[j + 1]][m] - objs[ordered[j - 1]][m]) / span
    return distance


def rank_with_crowding(
    objs: Sequence[Objectives],
) -> tuple[list[list[int]], dict[int, float]]:
    """
    Rank candidates by non-dominated sorting on minimization objectives.

    Objectives are ``(loss, complexity, k)`` or any prefix of it.

    Returns:
        Fronts of indices, each ordered by decreasing crowding distance with
        ties broken by lower last objective, then lower second objective,
        then input order; and the crowding distance of every index.
    """
    fronts = nondominated_sort(objs)
    crowding: dict[int, float] = {}
    ordered_fronts = []
    for front in fronts:
        distance = crowding_distance(front, objs)
        crowding.update(distance)
        ordered_fronts.append(
            sorted(front, key=lambda i: (-distance[i], *objs[i][:0:-1], i))
        )
    return ordered_fronts, crowding


def pareto_rank(objs: Sequence[Objectives]) -> list[list[int]]:
    """Fronts of candidate indices in selection order (see ``rank_with_crowding``)."""
    return rank_with_crowding(objs)[0]
