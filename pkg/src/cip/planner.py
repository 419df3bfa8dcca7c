"""Aspect-ratio grid planning for the complementary image pyramid.

A plan picks one tile grid per pyramid level. The detailed level carries
the high-resolution crops, the adaptive level is chosen so its crop lines
never coincide with the detailed ones (the grids' axis counts must not be
integer multiples of one another), and the global level is always the
whole image as a single tile. Baseline single-grid strategies share the
same machinery.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple

BUDGET_DEFAULT = 24
TILE_SIDE_DEFAULT = 448
DETAILED_MIN_DEFAULT = 10
ADAPTIVE_MIN_TILES = 3
ADAPTIVE_MAX_TILES = 8
# Tiles reserved next to the detailed grid: smallest adaptive grid plus the
# global tile. Caps the detailed group so a full pyramid always fits.
RESERVED_TILES = ADAPTIVE_MIN_TILES + 1

STRATEGIES = ("cip", "dynamic", "fixed", "overlapping", "multiscale_fixed")

FIXED_GRID_DEFAULT = (3, 3)
OVERLAP_FRAC_DEFAULT = 0.5


class BudgetTooSmallError(ValueError):
    """The tile budget admits no detailed grid."""


class EmptyPoolError(ValueError):
    """A ratio was requested from an empty candidate pool."""


@dataclass(frozen=True)
class AspectRatio:
    """A crop grid: ``rows`` tiles along height, ``cols`` along width."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must have positive dims, got {self.rows}x{self.cols}")

    @property
    def tile_count(self) -> int:
        return self.rows * self.cols

    @property
    def value(self) -> float:
        """Width/height ratio of the grid."""
        return self.cols / self.rows


@dataclass(frozen=True)
class RatioGroups:
    """The candidate grids partitioned into detailed/adaptive/global pools."""

    detailed: frozenset[AspectRatio]
    adaptive: frozenset[AspectRatio]
    global_: frozenset[AspectRatio]
    budget: int


class Rect(NamedTuple):
    x: int
    y: int
    w: int
    h: int


@dataclass(frozen=True)
class PlanLevel:
    name: str
    grid: AspectRatio
    resized_w: int
    resized_h: int
    tiles: tuple[Rect, ...]


@dataclass(frozen=True)
class PyramidPlan:
    strategy: str
    budget: int
    tile_side: int
    input_w: int
    input_h: int
    levels: tuple[PlanLevel, ...]
    # True when the divisibility filter emptied the adaptive pool and the
    # planner fell back to minimizing shared crop lines. Not serialized.
    adaptive_fallback: bool = field(default=False, compare=False)

    def level(self, name: str) -> PlanLevel:
        for lv in self.levels:
            if lv.name == name:
                return lv
        raise KeyError(name)

    @property
    def total_tiles(self) -> int:
        return sum(len(lv.tiles) for lv in self.levels)

    def to_json(self, indent: int | None = 2) -> str:
        doc = {
            "strategy": self.strategy,
            "budget": self.budget,
            "tile_side": self.tile_side,
            "input": {"w": self.input_w, "h": self.input_h},
            "levels": [
                {
                    "name": lv.name,
                    "grid": {"rows": lv.grid.rows, "cols": lv.grid.cols},
                    "resized": {"w": lv.resized_w, "h": lv.resized_h},
                    "tiles": [{"x": t.x, "y": t.y, "w": t.w, "h": t.h} for t in lv.tiles],
                }
                for lv in self.levels
            ],
        }
        return json.dumps(doc, indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "PyramidPlan":
        doc = json.loads(text)
        levels = tuple(
            PlanLevel(
                name=lv["name"],
                grid=AspectRatio(lv["grid"]["rows"], lv["grid"]["cols"]),
                resized_w=lv["resized"]["w"],
                resized_h=lv["resized"]["h"],
                tiles=tuple(Rect(t["x"], t["y"], t["w"], t["h"]) for t in lv["tiles"]),
            )
            for lv in doc["levels"]
        )
        return cls(
            strategy=doc["strategy"],
            budget=doc["budget"],
            tile_side=doc["tile_side"],
            input_w=doc["input"]["w"],
            input_h=doc["input"]["h"],
            levels=levels,
        )


@lru_cache(maxsize=64)
def generate_candidates(budget: int) -> frozenset[AspectRatio]:
    """All grids whose tile count is at most ``budget``."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    out = set()
    for rows in range(1, budget + 1):
        for cols in range(1, budget // rows + 1):
            out.add(AspectRatio(rows, cols))
    return frozenset(out)


def group_candidates(
    candidates: Iterable[AspectRatio],
    budget: int,
    detailed_min: int = DETAILED_MIN_DEFAULT,
) -> RatioGroups:
    """Partition candidates into detailed / adaptive / global pools.

    Grids with 2 or 9 tiles fall between the pools and are dropped. The
    detailed pool is capped at ``budget - 4`` tiles so the smallest
    adaptive grid plus the global tile always fit in the budget.
    """
    cs = frozenset(candidates)
    detailed = frozenset(r for r in cs if detailed_min <= r.tile_count <= budget - RESERVED_TILES)
    adaptive = frozenset(r for r in cs if ADAPTIVE_MIN_TILES <= r.tile_count <= ADAPTIVE_MAX_TILES)
    return RatioGroups(
        detailed=detailed,
        adaptive=adaptive,
        global_=frozenset({AspectRatio(1, 1)}),
        budget=budget,
    )


def closest_ratio(target_ar: float, pool: Iterable[AspectRatio]) -> AspectRatio:
    """Grid whose width/height ratio is nearest ``target_ar``.

    Ties go to the larger tile count, then the larger column count, so the
    winner is unique and independent of pool iteration order.
    """
    pool = list(pool)
    if not pool:
        raise EmptyPoolError("no candidate ratios to choose from")
    if not target_ar > 0:
        raise ValueError(f"target aspect ratio must be positive, got {target_ar}")
    return min(pool, key=lambda r: (abs(target_ar - r.value), -r.tile_count, -r.cols))


def _axis_multiple(a: int, b: int) -> bool:
    return a % b == 0 or b % a == 0


def filter_adaptive(
    detailed: AspectRatio, adaptive_pool: Iterable[AspectRatio]
) -> frozenset[AspectRatio]:
    """Drop adaptive grids whose axis counts are integer multiples of the
    detailed grid's (in either direction): a divisor relation on one axis
    is enough to disqualify, because it makes full rows of crop lines of
    one grid land on the other's.
    """
    return frozenset(
        a
        for a in adaptive_pool
        if not _axis_multiple(detailed.rows, a.rows)
        and not _axis_multiple(detailed.cols, a.cols)
    )


def shared_interior_lines(a: AspectRatio, b: AspectRatio) -> tuple[int, int]:
    """(vertical, horizontal) interior crop-line positions common to both grids.

    Grid ``a`` places vertical lines at i/a.cols for 0 < i < a.cols; the
    shared count with grid ``b`` is gcd(a.cols, b.cols) - 1, and likewise
    for rows.
    """
    return (math.gcd(a.cols, b.cols) - 1, math.gcd(a.rows, b.rows) - 1)


def coincidence_count(a: AspectRatio, b: AspectRatio) -> int:
    """Total interior crop-line positions shared between two grids."""
    v, h = shared_interior_lines(a, b)
    return v + h


def _grid_tiles(grid: AspectRatio, tile_side: int) -> tuple[Rect, ...]:
    return tuple(
        Rect(c * tile_side, r * tile_side, tile_side, tile_side)
        for r in range(grid.rows)
        for c in range(grid.cols)
    )


def _overlap_tiles(grid: AspectRatio, tile_side: int, overlap_frac: float) -> tuple[Rect, ...]:
    # Windows advance by tile_side - floor(overlap_frac * tile_side) so
    # adjacent tiles share exactly floor(overlap_frac * tile_side) pixels.
    stride = tile_side - math.floor(overlap_frac * tile_side)
    canvas_w = grid.cols * tile_side
    canvas_h = grid.rows * tile_side
    xs = list(range(0, canvas_w - tile_side + 1, stride))
    ys = list(range(0, canvas_h - tile_side + 1, stride))
    return tuple(Rect(x, y, tile_side, tile_side) for y in ys for x in xs)


def _level(name: str, grid: AspectRatio, tile_side: int, tiles=None) -> PlanLevel:
    return PlanLevel(
        name=name,
        grid=grid,
        resized_w=grid.cols * tile_side,
        resized_h=grid.rows * tile_side,
        tiles=_grid_tiles(grid, tile_side) if tiles is None else tiles,
    )


def _check_dims(input_dims: tuple[int, int]):
    w, h = input_dims
    if w < 1 or h < 1:
        raise ValueError(f"input dims must be positive, got {w}x{h}")
    return w, h


def plan_cip(
    input_dims: tuple[int, int],
    budget: int = BUDGET_DEFAULT,
    tile_side: int = TILE_SIDE_DEFAULT,
    detailed_min: int = DETAILED_MIN_DEFAULT,
) -> PyramidPlan:
    """Select the detailed/adaptive/global grids for one input image.

    The adaptive pool is first restricted to grids that fit the remaining
    budget, then filtered for crop-line coincidence. When the filter
    empties the pool, the fallback keeps the grids sharing the fewest
    interior lines with the detailed grid and picks the closest ratio
    among them.
    """
    w, h = _check_dims(input_dims)
    groups = group_candidates(generate_candidates(budget), budget, detailed_min)
    if not groups.detailed:
        raise BudgetTooSmallError(f"budget too small for detailed group (budget={budget})")
    target = w / h
    detailed = closest_ratio(target, groups.detailed)

    remaining = budget - detailed.tile_count - 1
    budgeted = frozenset(a for a in groups.adaptive if a.tile_count <= remaining)
    filtered = filter_adaptive(detailed, budgeted)
    fell_back = not filtered
    if fell_back:
        best = min(coincidence_count(a, detailed) for a in budgeted)
        filtered = frozenset(a for a in budgeted if coincidence_count(a, detailed) == best)
    adaptive = closest_ratio(target, filtered)

    levels = (
        _level("detailed", detailed, tile_side),
        _level("adaptive", adaptive, tile_side),
        _level("global", AspectRatio(1, 1), tile_side),
    )
    return PyramidPlan(
        strategy="cip",
        budget=budget,
        tile_side=tile_side,
        input_w=w,
        input_h=h,
        levels=levels,
        adaptive_fallback=fell_back,
    )


def plan_baseline(
    strategy: str,
    input_dims: tuple[int, int],
    budget: int = BUDGET_DEFAULT,
    tile_side: int = TILE_SIDE_DEFAULT,
    overlap_frac: float = OVERLAP_FRAC_DEFAULT,
    fixed_grid: tuple[int, int] = FIXED_GRID_DEFAULT,
) -> PyramidPlan:
    """Single-grid and fixed multi-scale comparison strategies.

    dynamic: closest ratio over every grid within budget, one level.
    fixed: the preset grid regardless of input shape.
    overlapping: the dynamic grid with stride-overlapped windows.
    multiscale_fixed: the preset grid plus a global 1x1 level.
    """
    w, h = _check_dims(input_dims)
    if strategy not in STRATEGIES or strategy == "cip":
        raise ValueError(f"unknown baseline strategy {strategy!r}")
    if not 0.0 <= overlap_frac < 1.0:
        raise ValueError(f"overlap_frac must be in [0, 1), got {overlap_frac}")
    target = w / h

    if strategy == "dynamic":
        grid = closest_ratio(target, generate_candidates(budget))
        levels = (_level("detailed", grid, tile_side),)
    elif strategy == "fixed":
        levels = (_level("detailed", AspectRatio(*fixed_grid), tile_side),)
    elif strategy == "overlapping":
        grid = closest_ratio(target, generate_candidates(budget))
        tiles = _overlap_tiles(grid, tile_side, overlap_frac)
        levels = (_level("detailed", grid, tile_side, tiles=tiles),)
    else:  # multiscale_fixed
        levels = (
            _level("detailed", AspectRatio(*fixed_grid), tile_side),
            _level("global", AspectRatio(1, 1), tile_side),
        )
    return PyramidPlan(
        strategy=strategy,
        budget=budget,
        tile_side=tile_side,
        input_w=w,
        input_h=h,
        levels=levels,
    )


def make_plan(strategy: str, input_dims, budget=BUDGET_DEFAULT, tile_side=TILE_SIDE_DEFAULT, **kw) -> PyramidPlan:
    """Dispatch to plan_cip or plan_baseline by strategy name."""
    if strategy == "cip":
        return plan_cip(input_dims, budget, tile_side, **kw)
    return plan_baseline(strategy, input_dims, budget, tile_side, **kw)
