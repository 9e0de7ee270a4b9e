"""Potentially-optimal subspace selection.

Rects are compared through lightweight ``RectStat`` records (id, size
group, center value), so the same functions run on a live partition or on
synthetic configurations in tests.  Sizes are grouped by the minimum
trisection depth; group ``k`` has size ``0.5 * 3**-k``.

Selection conventions (empty-set cases):
  * the minimum slope over an empty larger-size set is ``+inf``;
  * the maximum slope over the smaller-size set is floored at 0, since
    only positive Lipschitz constants are admissible.

These keep every largest rect eligible, so at least one rect is selected
whenever any rect is still divisible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .partition import Partition


@dataclass(frozen=True)
class RectStat:
    """Snapshot of one live rect for selection purposes."""

    id: int
    depth_key: int
    value: float

    @property
    def size(self) -> float:
        return group_size(self.depth_key)


def group_size(depth_key: int) -> float:
    return 0.5 * 3.0 ** (-depth_key)


def stats_from_partition(partition: Partition) -> list[RectStat]:
    return [RectStat(r.id, r.min_depth, r.value) for r in partition]


def group_by_size(stats: Iterable[RectStat]) -> dict[int, list[RectStat]]:
    """Depth key -> stats of that size, keys ascending (largest first)."""
    groups: dict[int, list[RectStat]] = {}
    for s in stats:
        groups.setdefault(s.depth_key, []).append(s)
    return {k: groups[k] for k in sorted(groups)}


def group_minima(groups: Mapping[int, Sequence[RectStat]]) -> dict[int, float]:
    return {k: min(s.value for s in members) for k, members in groups.items()}


def larger_slope(stat: RectStat, minima: Mapping[int, float]) -> float:
    """min over strictly larger groups of (value_q - value_p)/(size_q - size_p).

    For a fixed larger group the minimising rect is the one with the least
    center value, so only group minima are needed.  Empty set -> +inf.
    """
    best = math.inf
    for key, vmin in minima.items():
        if key < stat.depth_key:
            slope = (vmin - stat.value) / (group_size(key) - stat.size)
            if slope < best:
                best = slope
    return best


def smaller_slope(stat: RectStat, minima: Mapping[int, float]) -> float:
    """max over strictly smaller groups, floored at 0."""
    best = 0.0
    for key, vmin in minima.items():
        if key > stat.depth_key:
            slope = (stat.value - vmin) / (stat.size - group_size(key))
            if slope > best:
                best = slope
    return best


def optimal_score(stat: RectStat, minima: Mapping[int, float]) -> float:
    """Width of the admissible local-slope bracket for ``stat``.

    Positive means some slope constant makes this rect the most promising
    of its size; rects in the largest group score ``+inf``.
    """
    return larger_slope(stat, minima) - smaller_slope(stat, minima)


def alpha_candidates(
    group: Sequence[RectStat],
    scores: Mapping[int, float],
    alpha: int,
) -> list[RectStat]:
    """Up to ``alpha`` positive-score rects of one size, best score first.

    Empty when no rect in the group scores above zero.  Ties are broken by
    lower center value, then lower id.
    """
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    positive = [s for s in group if scores[s.id] > 0.0]
    positive.sort(key=lambda s: (-scores[s.id], s.value, s.id))
    return positive[:alpha]


def sufficient_descent(
    stat: RectStat,
    l_min: float,
    tau: float,
    minima: Mapping[int, float],
) -> bool:
    """Whether dividing ``stat`` can improve ``l_min`` by more than ``tau``.

    Uses the least slope toward larger rects as the admissible-constant
    upper bound; with no larger rects the potential improvement is
    unbounded and the test passes.
    """
    upper = larger_slope(stat, minima)
    if l_min != 0.0:
        return tau <= (l_min - stat.value) / abs(l_min) + stat.size * upper / abs(l_min)
    return stat.value <= stat.size * upper


def select_po(
    stats: Iterable[RectStat],
    alpha: int,
    tau: float,
    l_min: float,
    max_depth: int,
) -> list[int]:
    """Potentially-optimal rect ids, grouped pass over sizes above the depth cap.

    For each size group still divisible (depth key below ``max_depth``)
    the top-``alpha`` positive-score rects are kept if they also pass the
    sufficient-descent test.  Ids come back ordered by group (largest
    size first) then rank.
    """
    groups = group_by_size(stats)
    minima = group_minima(groups)
    selected: list[int] = []
    for key, group in groups.items():
        if key >= max_depth:
            continue
        scores = {s.id: optimal_score(s, minima) for s in group}
        for cand in alpha_candidates(group, scores, alpha):
            if sufficient_descent(cand, l_min, tau, minima):
                selected.append(cand.id)
    return selected
