"""Crop-boundary analysis on synthetic scenes.

Measures how often axis-aligned objects are split by interior crop lines
under each tiling strategy, and whether the pyramid leaves every object
whole at some level. All cut decisions use exact integer arithmetic
(cross-multiplied rational comparisons), so the reported rates are exact
fractions of the object count. The cut-rate metric is a geometric proxy
for boundary damage, not a semantic measurement.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .planner import AspectRatio, PlanLevel, PyramidPlan, Rect, make_plan

Box = tuple[int, int, int, int]


@dataclass(frozen=True)
class SceneSpec:
    """A canvas plus axis-aligned object boxes, reproducible from its seed."""

    width: int
    height: int
    boxes: tuple[Box, ...]
    seed: int


@dataclass(frozen=True)
class LevelStats:
    name: str
    grid: AspectRatio
    cut_count: int
    cut_rate: Fraction


@dataclass(frozen=True)
class StrategyStats:
    strategy: str
    levels: tuple[LevelStats, ...]
    cut_every_level_count: int
    cut_rate: Fraction
    complementarity_rate: Fraction
    mean_cuts_per_level: Fraction


@dataclass(frozen=True)
class SawtoothReport:
    scene: SceneSpec
    budget: int
    tile_side: int
    strategies: tuple[StrategyStats, ...]

    def strategy(self, name: str) -> StrategyStats:
        for st in self.strategies:
            if st.strategy == name:
                return st
        raise KeyError(name)


def generate_scene(
    canvas: tuple[int, int],
    n_objects: int,
    size_range: tuple[int, int],
    seed: int,
) -> SceneSpec:
    """Uniformly place non-degenerate boxes fully inside the canvas."""
    w, h = canvas
    lo, hi = size_range
    if n_objects < 0:
        raise ValueError("n_objects must be >= 0")
    if not (1 <= lo <= hi and hi <= w and hi <= h):
        raise ValueError(f"size range {size_range} infeasible on a {w}x{h} canvas")
    rng = np.random.default_rng(seed)
    boxes = []
    for _ in range(n_objects):
        bw = int(rng.integers(lo, hi + 1))
        bh = int(rng.integers(lo, hi + 1))
        x = int(rng.integers(0, w - bw + 1))
        y = int(rng.integers(0, h - bh + 1))
        boxes.append((x, y, bw, bh))
    return SceneSpec(width=w, height=h, boxes=tuple(boxes), seed=seed)


def _axis_is_cut(start: int, extent: int, canvas_dim: int, resized_dim: int, tile_side: int, n_tiles: int) -> bool:
    # A line at k*tile_side (resized coords) cuts the box iff it falls
    # strictly inside the scaled interval; cross-multiplying by canvas_dim
    # keeps the comparison exact: start*resized < k*tile_side*canvas < end*resized.
    left = start * resized_dim
    right = (start + extent) * resized_dim
    for k in range(1, n_tiles):
        line = k * tile_side * canvas_dim
        if left < line < right:
            return True
    return False


def is_cut(box: Box, grid: AspectRatio, canvas: tuple[int, int], resized: tuple[int, int], tile_side: int) -> bool:
    """True iff an interior grid line passes strictly through the box."""
    x, y, w, h = box
    cw, ch = canvas
    rw, rh = resized
    return _axis_is_cut(x, w, cw, rw, tile_side, grid.cols) or _axis_is_cut(
        y, h, ch, rh, tile_side, grid.rows
    )


def _box_in_tile(box: Box, rect: Rect, canvas: tuple[int, int], resized: tuple[int, int]) -> bool:
    x, y, w, h = box
    cw, ch = canvas
    rw, rh = resized
    # Touching a tile edge from inside still counts as contained.
    return (
        rect.x * cw <= x * rw
        and (x + w) * rw <= (rect.x + rect.w) * cw
        and rect.y * ch <= y * rh
        and (y + h) * rh <= (rect.y + rect.h) * ch
    )


def level_cuts(scene: SceneSpec, level: PlanLevel, tile_side: int, threads: int = 1) -> list[bool]:
    """Per-object cut flags for one plan level.

    Partition levels use the interior-line rule; overlapping levels count
    an object as uncut when some window contains it whole (the two rules
    agree on partitions).
    """
    canvas = (scene.width, scene.height)
    resized = (level.resized_w, level.resized_h)
    partition = len(level.tiles) == level.grid.tile_count

    def one(box: Box) -> bool:
        if partition:
            return is_cut(box, level.grid, canvas, resized, tile_side)
        return not any(_box_in_tile(box, r, canvas, resized) for r in level.tiles)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, scene.boxes))
    return [one(b) for b in scene.boxes]


def analyze(
    scene: SceneSpec,
    strategies: list[str],
    budget: int = 24,
    tile_side: int = 448,
    overlap_frac: float = 0.5,
    threads: int = 1,
) -> SawtoothReport:
    """Cut statistics per strategy: per-level rates plus the every-level rate."""
    if not strategies:
        raise ValueError("need at least one strategy")
    n = len(scene.boxes)
    total = max(n, 1)
    stats = []
    for name in strategies:
        kw = {"overlap_frac": overlap_frac} if name == "overlapping" else {}
        plan = make_plan(name, (scene.width, scene.height), budget, tile_side, **kw)
        per_level = [level_cuts(scene, lv, tile_side, threads=threads) for lv in plan.levels]
        level_stats = tuple(
            LevelStats(
                name=lv.name,
                grid=lv.grid,
                cut_count=sum(flags),
                cut_rate=Fraction(sum(flags), total),
            )
            for lv, flags in zip(plan.levels, per_level)
        )
        cut_everywhere = sum(all(flags) for flags in zip(*per_level)) if n else 0
        cut_rate = Fraction(cut_everywhere, total)
        mean_cuts = Fraction(sum(sum(f) for f in per_level), len(per_level))
        stats.append(
            StrategyStats(
                strategy=name,
                levels=level_stats,
                cut_every_level_count=cut_everywhere,
                cut_rate=cut_rate,
                complementarity_rate=1 - cut_rate,
                mean_cuts_per_level=mean_cuts,
            )
        )
    return SawtoothReport(scene=scene, budget=budget, tile_side=tile_side, strategies=tuple(stats))


def _rate(fr: Fraction) -> dict:
    return {"value": float(fr), "exact": f"{fr.numerator}/{fr.denominator}"}


def report_to_dict(report: SawtoothReport) -> dict:
    return {
        "scene": {
            "canvas": {"w": report.scene.width, "h": report.scene.height},
            "n_objects": len(report.scene.boxes),
            "seed": report.scene.seed,
        },
        "budget": report.budget,
        "tile_side": report.tile_side,
        "strategies": [
            {
                "strategy": st.strategy,
                "cut_rate": _rate(st.cut_rate),
                "complementarity_rate": _rate(st.complementarity_rate),
                "mean_cuts_per_level": _rate(st.mean_cuts_per_level),
                "levels": [
                    {
                        "name": ls.name,
                        "grid": {"rows": ls.grid.rows, "cols": ls.grid.cols},
                        "cut_count": ls.cut_count,
                        "cut_rate": _rate(ls.cut_rate),
                    }
                    for ls in st.levels
                ],
            }
            for st in report.strategies
        ],
    }


def report_to_json(report: SawtoothReport, indent: int | None = 2) -> str:
    return json.dumps(report_to_dict(report), indent=indent)


def report_to_csv(report: SawtoothReport) -> str:
    """One row per strategy x level, plus an all-levels summary row each."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["strategy", "level", "grid_rows", "grid_cols", "cut_count", "cut_rate"])
    for st in report.strategies:
        for ls in st.levels:
            writer.writerow(
                [st.strategy, ls.name, ls.grid.rows, ls.grid.cols, ls.cut_count, f"{float(ls.cut_rate):.6f}"]
            )
        writer.writerow(
            [st.strategy, "all", "", "", st.cut_every_level_count, f"{float(st.cut_rate):.6f}"]
        )
    return buf.getvalue()


def budget_curves(
    scene: SceneSpec,
    strategies: list[str],
    budgets: list[int],
    tile_side: int = 448,
    overlap_frac: float = 0.5,
) -> list[dict]:
    """Cut rate per (strategy, budget) pair, for rate-vs-budget plots."""
    rows = []
    for budget in budgets:
        report = analyze(scene, strategies, budget, tile_side, overlap_frac)
        for st in report.strategies:
            rows.append(
                {
                    "strategy": st.strategy,
                    "budget": budget,
                    "cut_rate": float(st.cut_rate),
                    "detailed_cut_rate": float(st.levels[0].cut_rate),
                }
            )
    return rows


def curves_to_gnuplot(rows: list[dict]) -> str:
    """Gnuplot-friendly data: one block per strategy, blank-line separated."""
    lines = ["# strategy blocks: budget cut_rate detailed_cut_rate"]
    by_strategy: dict[str, list[dict]] = {}
    for row in rows:
        by_strategy.setdefault(row["strategy"], []).append(row)
    for name, block in by_strategy.items():
        lines.append(f'# strategy: {name}')
        for row in sorted(block, key=lambda r: r["budget"]):
            lines.append(f'{row["budget"]} {row["cut_rate"]:.6f} {row["detailed_cut_rate"]:.6f}')
        lines.append("")
    return "\n".join(lines)
