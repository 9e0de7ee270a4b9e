"""Local slope estimates and the anytime lower bound on the global minimum.

Slopes are measured in physical parameter units (degrees, scale units,
pixels), so the resulting bound does not depend on how the box was
normalised.  The default bound radius is the center-to-sample Manhattan
radius used by the estimate; ``cover=True`` switches to the full Manhattan
half-diameter of the rect, which actually covers every point of the
subspace and turns a user-supplied Lipschitz constant into a sound bound.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

from .partition import HyperRect, ParamSpace


def sample_distance(depth: int, dim: int, space: ParamSpace) -> float:
    """Physical distance from a rect center to its division samples."""
    return 3.0 ** (-(depth + 1)) * float(space.ranges[dim])


def local_slope(
    center_value: float,
    samples: Mapping[tuple[int, int], float],
    distances: Mapping[int, float],
) -> float:
    """Largest per-sample slope magnitude around a divided center.

    ``samples`` maps ``(dim, sign)`` to the value at the matching sample
    point; ``distances`` gives the physical center-to-sample distance per
    sampled dimension.
    """
    best = 0.0
    for (dim, _), value in samples.items():
        slope = abs(center_value - value) / distances[dim]
        if slope > best:
            best = slope
    return best


def sample_radius(depths: Sequence[int], space: ParamSpace) -> float:
    """Half the Manhattan sum of per-dimension sample distances."""
    return 0.5 * sum(
        3.0 ** (-(d + 1)) * float(space.ranges[i]) for i, d in enumerate(depths)
    )


def cover_radius(depths: Sequence[int], space: ParamSpace) -> float:
    """Manhattan half-diameter of the rect in physical units.

    Upper-bounds the L1 distance from the center to any point of the
    subspace, unlike :func:`sample_radius` which stops a third of the way
    to the faces.
    """
    return 0.5 * sum(3.0 ** (-d) * float(space.ranges[i]) for i, d in enumerate(depths))


def estimate_lower_bound(
    rect: HyperRect,
    slope_max: float,
    space: ParamSpace,
    cover: bool = False,
) -> float:
    """Estimated floor under the global minimum from the best rect.

    ``rect`` must be the rect whose center achieved the current best
    value.  With ``cover=False`` this is the running estimate driven by
    observed slopes; with ``cover=True`` and a true Lipschitz constant it
    is a certificate whenever the best rect contains the minimiser.
    """
    radius = cover_radius(rect.depths, space) if cover else sample_radius(rect.depths, space)
    return rect.value - slope_max * radius


class SlopeTracker:
    """Running maximum of local slopes over every center ever divided.

    The maximum never decreases, matching the ever-growing index set of
    queried centers; per-rect slopes live on the rects themselves.
    """

    def __init__(self, space: ParamSpace) -> None:
        self.space = space
        self.k_max = 0.0

    def observe(
        self,
        center_value: float,
        samples: Mapping[tuple[int, int], float],
        depth: int,
    ) -> tuple[float, dict[tuple[int, int], float]]:
        """Record slopes from one division.

        Returns the divided center's new local slope and the single-pair
        slope seen at each sample point (the initial slope of the child
        rect centered there).
        """
        distances = {dim: sample_distance(depth, dim, self.space) for dim, _ in samples}
        pair = {
            key: abs(center_value - value) / distances[key[0]]
            for key, value in samples.items()
        }
        k_c = max(pair.values()) if pair else 0.0
        if k_c > self.k_max:
            self.k_max = k_c
        if not math.isfinite(self.k_max):
            raise ValueError("non-finite slope observed")
        return k_c, pair
