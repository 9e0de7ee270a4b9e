"""Unit-cube search space bookkeeping: hyperrectangles and trisection.

The search always runs on the unit hypercube [0, 1]^n.  Physical factor
ranges (degrees, scale units, pixels) live in :class:`ParamSpace`, which
maps unit points to physical points.

Centers and side lengths are kept in exact integer form: along dimension
``i`` a rectangle has trisection depth ``d_i`` (side length ``3**-d_i``)
and its center coordinate is ``num_i / (2 * 3**d_i)`` with ``num_i`` odd.
This makes size grouping, volume accounting, and point identity exact, so
no floating-point tolerances are ever needed for the partition itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping

import numpy as np


class PartitionError(ValueError):
    """Malformed partition state or division request."""


class ParamSpace:
    """Axis-aligned box of physical transformation factors.

    Args:
        bounds: sequence of ``(lo, hi)`` pairs, one per dimension, in
            physical units.  Every pair must satisfy ``hi > lo``.
    """

    def __init__(self, bounds) -> None:
        pairs = tuple((float(lo), float(hi)) for lo, hi in bounds)
        if len(pairs) == 0:
            raise PartitionError("parameter space needs at least one dimension")
        for i, (lo, hi) in enumerate(pairs):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise PartitionError(f"non-finite bounds on dimension {i}: ({lo}, {hi})")
            if not hi > lo:
                raise PartitionError(f"empty range on dimension {i}: ({lo}, {hi})")
        self.bounds = pairs
        self.lows = np.array([lo for lo, _ in pairs])
        self.highs = np.array([hi for _, hi in pairs])
        self.ranges = self.highs - self.lows

    @property
    def n(self) -> int:
        return len(self.bounds)

    def to_physical(self, u) -> np.ndarray:
        """Map unit-cube point(s) to physical coordinates.

        Accepts a single point of shape ``(n,)`` or a batch ``(B, n)``.
        Evaluated as ``lo * (1 - u) + hi * u``, which is exact at both
        endpoints and at the midpoint (the identity transformation).
        """
        u = np.asarray(u, dtype=float)
        return self.lows * (1.0 - u) + self.highs * u

    def __repr__(self) -> str:
        return f"ParamSpace({list(self.bounds)!r})"


def _canonical_key(nums, depths) -> tuple:
    """Reduced (numerator, depth) pairs identifying a point exactly.

    ``num / (2 * 3**d)`` equals ``(num / 3) / (2 * 3**(d-1))`` whenever
    ``num`` is divisible by 3; reducing gives one canonical encoding per
    geometric point.
    """
    key = []
    for num, d in zip(nums, depths):
        while d > 0 and num % 3 == 0:
            num //= 3
            d -= 1
        key.append((num, d))
    return tuple(key)


def _center_array(nums, depths) -> np.ndarray:
    return np.array([num / (2 * 3**d) for num, d in zip(nums, depths)])


@dataclass
class HyperRect:
    """One subspace of the unit cube.

    ``nums``/``depths`` encode the exact center; ``value`` is the cached
    objective at the center and ``slope`` the local slope estimate in
    physical units.
    """

    id: int
    nums: tuple[int, ...]
    depths: tuple[int, ...]
    value: float = math.nan
    slope: float = 0.0
    divided: bool = False

    @property
    def n(self) -> int:
        return len(self.depths)

    @property
    def min_depth(self) -> int:
        return min(self.depths)

    @property
    def size(self) -> float:
        """Half the longest side (L-infinity measure)."""
        return 0.5 * 3.0 ** (-self.min_depth)

    def side(self, dim: int) -> float:
        return 3.0 ** (-self.depths[dim])

    def center(self) -> np.ndarray:
        return _center_array(self.nums, self.depths)

    def center_key(self) -> tuple:
        return _canonical_key(self.nums, self.depths)

    def long_dims(self) -> list[int]:
        d = self.min_depth
        return [i for i, di in enumerate(self.depths) if di == d]

    def volume(self) -> Fraction:
        return Fraction(1, 3 ** sum(self.depths))

    def box(self) -> np.ndarray:
        """Unit-cube bounds, shape (n, 2)."""
        c = self.center()
        half = np.array([0.5 * 3.0**-d for d in self.depths])
        return np.stack([c - half, c + half], axis=1)

    def contains(self, u) -> bool:
        b = self.box()
        u = np.asarray(u, dtype=float)
        return bool(np.all(u >= b[:, 0]) and np.all(u <= b[:, 1]))


@dataclass(frozen=True)
class SamplePoint:
    """A point ``c +/- 3**-(d+1) e_dim`` queued for evaluation."""

    dim: int
    sign: int
    nums: tuple[int, ...]
    depths: tuple[int, ...]

    def center(self) -> np.ndarray:
        return _center_array(self.nums, self.depths)

    def key(self) -> tuple:
        return _canonical_key(self.nums, self.depths)


@dataclass
class DivideResult:
    """Outcome of one trisection: ids in creation order plus the center id."""

    new_ids: list[int]
    pair_ids: dict[tuple[int, int], int] = field(default_factory=dict)
    center_id: int = -1


class Partition:
    """The live set of hyperrectangles tiling the unit cube.

    Mutation is single-writer; snapshots of rect stats may be shared
    freely.  Division replaces the parent with ``2m + 1`` children where
    ``m`` is the number of longest sides.
    """

    def __init__(self, n: int) -> None:
        if n < 1:
            raise PartitionError("partition needs at least one dimension")
        self.n = n
        self.rects: dict[int, HyperRect] = {}
        self._groups: dict[int, dict[int, None]] = {}
        self._by_center: dict[tuple, int] = {}
        self._next_id = 0
        root = HyperRect(id=self._take_id(), nums=(1,) * n, depths=(0,) * n)
        self._add(root)

    def _take_id(self) -> int:
        i = self._next_id
        self._next_id += 1
        return i

    def _add(self, rect: HyperRect) -> None:
        self.rects[rect.id] = rect
        self._groups.setdefault(rect.min_depth, {})[rect.id] = None
        self._by_center[rect.center_key()] = rect.id

    def _remove(self, rect: HyperRect) -> None:
        del self.rects[rect.id]
        group = self._groups[rect.min_depth]
        del group[rect.id]
        if not group:
            del self._groups[rect.min_depth]
        del self._by_center[rect.center_key()]

    def __len__(self) -> int:
        return len(self.rects)

    def __iter__(self) -> Iterator[HyperRect]:
        return iter(self.rects.values())

    def groups(self) -> dict[int, list[int]]:
        """Min-depth key -> live rect ids, keys ascending."""
        return {k: list(self._groups[k]) for k in sorted(self._groups)}

    def id_at_center(self, key: tuple) -> int:
        return self._by_center[key]

    def total_volume(self) -> Fraction:
        return sum((r.volume() for r in self.rects.values()), Fraction(0))

    def divide(self, rect_id: int, results: Mapping[tuple[int, int], float]) -> DivideResult:
        """Trisect a rect along all of its longest sides.

        ``results`` maps ``(dim, sign)`` to the objective value observed at
        the matching :func:`sample_points` point.  Dimensions are divided
        in ascending order of ``w_i = min(value at +, value at -)`` (ties
        broken by lower dimension index), so the best query point ends up
        at the center of one of the two largest children.
        """
        rect = self.rects.get(rect_id)
        if rect is None:
            raise PartitionError(f"rect {rect_id} is not live")
        dims = rect.long_dims()
        expected = {(i, s) for i in dims for s in (-1, 1)}
        if set(results) != expected:
            raise PartitionError(
                f"query results do not cover the sampled points of rect {rect_id}: "
                f"got {sorted(results)}, need {sorted(expected)}"
            )
        for k, v in results.items():
            if not math.isfinite(v):
                raise PartitionError(f"non-finite query result {v} at {k}")

        w = {i: min(results[(i, -1)], results[(i, 1)]) for i in dims}
        order = sorted(dims, key=lambda i: (w[i], i))

        depth = rect.min_depth
        out = DivideResult(new_ids=[])
        self._remove(rect)
        rect.divided = True

        # Split stage by stage: after stage k the center cell is deepened
        # along the first k dims; the stage-k side pair keeps the remaining
        # long dims.
        center_nums = list(rect.nums)
        center_depths = list(rect.depths)
        for dim in order:
            for sign in (-1, 1):
                nums = list(center_nums)
                depths = list(center_depths)
                nums[dim] = 3 * nums[dim] + 2 * sign
                depths[dim] = depth + 1
                child = HyperRect(
                    id=self._take_id(),
                    nums=tuple(nums),
                    depths=tuple(depths),
                    value=results[(dim, sign)],
                )
                self._add(child)
                out.new_ids.append(child.id)
                out.pair_ids[(dim, sign)] = child.id
            center_nums[dim] = 3 * center_nums[dim]
            center_depths[dim] = depth + 1

        center = HyperRect(
            id=self._take_id(),
            nums=tuple(center_nums),
            depths=tuple(center_depths),
            value=rect.value,
            slope=rect.slope,
        )
        self._add(center)
        out.new_ids.append(center.id)
        out.center_id = center.id
        return out


def init_space(param_space: ParamSpace) -> Partition:
    """Fresh partition: a single unit cube centered at (0.5, ..., 0.5)."""
    return Partition(param_space.n)


def sample_points(rect: HyperRect, max_depth: int | None = None) -> list[SamplePoint]:
    """Points ``c +/- 3**-(d+1) e_i`` for every longest side of ``rect``.

    Short sides are ignored.  A rect already at ``max_depth`` along every
    longest side yields an empty list and should be skipped by the caller.
    """
    depth = rect.min_depth
    if max_depth is not None and depth >= max_depth:
        return []
    points = []
    for dim in rect.long_dims():
        for sign in (-1, 1):
            nums = list(rect.nums)
            depths = list(rect.depths)
            nums[dim] = 3 * nums[dim] + 2 * sign
            depths[dim] = depth + 1
            points.append(SamplePoint(dim, sign, tuple(nums), tuple(depths)))
    return points
