"""Objectives: classifier margins under warps, and synthetic test functions.

The margin of a prediction is the true-class logit minus the best other
logit; it is negative exactly when the classifier picks another class.  A
:class:`MarginObjective` composes matrix building, warping, and a model
forward pass into the batch evaluator consumed by the search engine.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import build_matrix_batch, validate_image, warp_batch
from .partition import ParamSpace

FACTOR_ORDER = ("rotation", "scale", "t_hor", "t_vrt")
IDENTITY_VALUES = {"rotation": 0.0, "scale": 1.0, "t_hor": 0.0, "t_vrt": 0.0}


def margin_loss(logits, label: int) -> float:
    """True-class logit minus the largest competing logit."""
    logits = np.asarray(logits, dtype=float)
    if logits.ndim != 1 or logits.size < 2:
        raise ValueError("margin needs a vector of at least two logits")
    if not 0 <= label < logits.size:
        raise ValueError(f"label {label} out of range for {logits.size} classes")
    others = np.delete(logits, label)
    return float(logits[label] - others.max())


def margin_batch(logits: np.ndarray, label: int) -> np.ndarray:
    """Vectorised :func:`margin_loss` over (B, K) logits."""
    logits = np.asarray(logits, dtype=float)
    if logits.ndim != 2 or logits.shape[1] < 2:
        raise ValueError("margin needs (B, K) logits with K >= 2")
    if not 0 <= label < logits.shape[1]:
        raise ValueError(f"label {label} out of range for {logits.shape[1]} classes")
    masked = logits.copy()
    masked[:, label] = -np.inf
    return logits[:, label] - masked.max(axis=1)


@dataclass(frozen=True)
class TransformDomain:
    """Axis-aligned box of admissible transformation factors.

    Each factor is a ``(lo, hi)`` interval or ``None`` when held at its
    identity value.  The search runs only over the active factors, in the
    fixed order rotation, scale, horizontal, vertical translation.
    """

    rotation: tuple[float, float] | None = None
    scale: tuple[float, float] | None = None
    t_hor: tuple[float, float] | None = None
    t_vrt: tuple[float, float] | None = None

    @classmethod
    def from_ranges(
        cls,
        rotation: float = 0.0,
        scale: float = 0.0,
        translate: tuple[float, float] = (0.0, 0.0),
    ) -> "TransformDomain":
        """Symmetric ranges: rotation within +-r degrees, scale within
        1 +- s, translation within +-t pixels per axis.  Zero-width
        factors are dropped from the search."""

        def sym(center: float, radius: float):
            if radius == 0.0:
                return None
            if radius < 0.0:
                raise ValueError(f"negative range radius {radius}")
            return (center - radius, center + radius)

        return cls(
            rotation=sym(0.0, float(rotation)),
            scale=sym(1.0, float(scale)),
            t_hor=sym(0.0, float(translate[0])),
            t_vrt=sym(0.0, float(translate[1])),
        )

    @property
    def factors(self) -> tuple[str, ...]:
        return tuple(f for f in FACTOR_ORDER if getattr(self, f) is not None)

    def param_space(self) -> ParamSpace:
        active = self.factors
        if not active:
            raise ValueError("no transformation factor has a nonzero range")
        return ParamSpace([getattr(self, f) for f in active])

    def factor_columns(self, thetas: np.ndarray) -> dict[str, np.ndarray]:
        """Split (B, n) physical points into per-factor columns with
        identity values filled in for inactive factors."""
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        active = self.factors
        if thetas.shape[1] != len(active):
            raise ValueError(
                f"expected {len(active)} factor columns ({active}), got {thetas.shape[1]}"
            )
        columns = {}
        b = thetas.shape[0]
        for f in FACTOR_ORDER:
            if f in active:
                columns[f] = thetas[:, active.index(f)]
            else:
                columns[f] = np.full(b, IDENTITY_VALUES[f])
        return columns


class MarginObjective:
    """Batch margin evaluator over transformation factors.

    ``model`` maps a (B, H, W, C) image batch to (B, K) logits.  Calling
    the objective with (B, n) physical factor points warps the clean image
    once per point, runs one forward pass for the whole batch, and returns
    the margins.  Results depend only on the points, not on batch order.
    """

    def __init__(
        self,
        model: Callable[[np.ndarray], np.ndarray],
        image,
        label: int,
        domain: TransformDomain,
        mode: str = "cos-scaled",
    ) -> None:
        self.model = model
        self.image = validate_image(image, check_range=True)
        self.label = int(label)
        self.domain = domain
        self.mode = mode

    def __call__(self, thetas) -> np.ndarray:
        cols = self.domain.factor_columns(thetas)
        matrices = build_matrix_batch(
            cols["rotation"], cols["scale"], cols["t_hor"], cols["t_vrt"], self.mode
        )
        warped = warp_batch(self.image, matrices)
        logits = np.asarray(self.model(warped), dtype=float)
        return margin_batch(logits, self.label)

    @property
    def clean_margin(self) -> float:
        """Margin on the untouched input (no warp in the path)."""
        logits = np.asarray(self.model(self.image[None]), dtype=float)
        return margin_loss(logits[0], self.label)


@dataclass(frozen=True)
class TestFunction:
    """Closed-form objective with known minimum for optimiser validation."""

    name: str
    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    bounds: tuple[tuple[float, float], ...]
    lipschitz: float  # per-coordinate slope bound over the box
    min_value: float
    min_loc: np.ndarray

    def __call__(self, thetas) -> np.ndarray:
        return self.fn(np.atleast_2d(np.asarray(thetas, dtype=float)))

    def param_space(self) -> ParamSpace:
        return ParamSpace(self.bounds)


def _abs_target(dim: int) -> np.ndarray:
    return np.array([0.3 if i % 2 == 0 else 0.7 for i in range(dim)])


def make_multi_basin(seed: int) -> TestFunction:
    """A deterministic multi-modal instance: cosine waves over a shallow bowl.

    Instances differ by seed; the minimum location is not analytic, so
    tests pin it with a dense grid.  The recorded Lipschitz value is an
    upper bound from the wave amplitudes and frequencies.
    """
    rng = np.random.default_rng(seed)
    n_waves = 4
    amps = rng.uniform(0.08, 0.22, size=n_waves)
    freqs = rng.integers(1, 4, size=(n_waves, 2)).astype(float)
    freqs *= rng.choice([-1.0, 1.0], size=(n_waves, 2))
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n_waves)
    center = rng.uniform(0.25, 0.75, size=2)

    def fn(thetas: np.ndarray) -> np.ndarray:
        waves = sum(
            a * np.cos(2.0 * math.pi * (thetas @ k) + p)
            for a, k, p in zip(amps, freqs, phases)
        )
        bowl = 0.5 * np.sum((thetas - center) ** 2, axis=1)
        return waves + bowl

    k_bound = float(sum(2.0 * math.pi * a * np.abs(k).max() for a, k in zip(amps, freqs)) + 1.0)
    return TestFunction(
        name=f"multi-basin[{seed}]",
        dim=2,
        fn=fn,
        bounds=((0.0, 1.0), (0.0, 1.0)),
        lipschitz=k_bound,
        min_value=math.nan,  # pinned per instance by a grid oracle in tests
        min_loc=np.array([math.nan, math.nan]),
    )


# Canonical multi-basin fixture (seed 0): minimum pinned by a 1000x1000
# inclusive grid over the unit square (20 grid-local minima).
MULTI_BASIN_SEED = 0
MULTI_BASIN_GRID = 1000
MULTI_BASIN_MIN_VALUE = -0.43811780709552245
MULTI_BASIN_MIN_LOC = (0.7527527527527528, 0.6396396396396397)


def test_function(name: str) -> TestFunction:
    """Look up a validation objective by name.

    Known names: ``abs1d``, ``separable-abs-<n>d``, ``quadratic-bowl``
    (optionally ``quadratic-bowl-<n>d``), ``multi-basin``.
    """
    if name == "abs1d":
        target = _abs_target(1)
        return TestFunction(
            name=name,
            dim=1,
            fn=lambda t: np.abs(t - target).sum(axis=1),
            bounds=((0.0, 1.0),),
            lipschitz=1.0,
            min_value=0.0,
            min_loc=target,
        )
    m = re.fullmatch(r"separable-abs-(\d+)d", name)
    if m:
        dim = int(m.group(1))
        if dim < 1:
            raise ValueError(f"bad dimension in {name!r}")
        target = _abs_target(dim)
        return TestFunction(
            name=name,
            dim=dim,
            fn=lambda t: np.abs(t - target).sum(axis=1),
            bounds=((0.0, 1.0),) * dim,
            lipschitz=1.0,
            min_value=0.0,
            min_loc=target,
        )
    m = re.fullmatch(r"quadratic-bowl(?:-(\d+)d)?", name)
    if m:
        dim = int(m.group(1)) if m.group(1) else 2
        if dim < 1:
            raise ValueError(f"bad dimension in {name!r}")
        return TestFunction(
            name=name,
            dim=dim,
            fn=lambda t: ((t - 0.5) ** 2).sum(axis=1),
            bounds=((0.0, 1.0),) * dim,
            lipschitz=1.0,
            min_value=0.0,
            min_loc=np.full(dim, 0.5),
        )
    if name == "multi-basin":
        base = make_multi_basin(MULTI_BASIN_SEED)
        return TestFunction(
            name=name,
            dim=2,
            fn=base.fn,
            bounds=base.bounds,
            lipschitz=base.lipschitz,
            min_value=MULTI_BASIN_MIN_VALUE,
            min_loc=np.array(MULTI_BASIN_MIN_LOC),
        )
    raise ValueError(f"unknown test function {name!r}")
