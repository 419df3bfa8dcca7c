"""Execute a pyramid plan on a raster image: resize per level, crop tiles.

Images are (H, W, 3) uint8 arrays in RGB. The resize is the fixed bilinear
from :mod:`cip.kernels`, so tile bytes are reproducible across runs,
thread counts, and kernel backends.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .kernels import resize_bilinear
from .planner import AspectRatio, PyramidPlan, Rect


@dataclass(frozen=True)
class TileSet:
    """All tiles of one pyramid level, in row-major rectangle order."""

    level: str
    grid: AspectRatio
    tile_side: int
    tiles: tuple[np.ndarray, ...]
    rects: tuple[Rect, ...]


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Read a PNG or JPEG as an (H, W, 3) uint8 RGB array; alpha is dropped."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_png(img: np.ndarray, path: str | os.PathLike) -> None:
    Image.fromarray(img, mode="RGB").save(path, format="PNG")


def resize(img: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Deterministic bilinear resize to (width, height)."""
    w, h = target
    _validate_image(img)
    return resize_bilinear(img, w, h)


def _validate_image(img: np.ndarray):
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError("expected an (H, W, 3) uint8 RGB image")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")


def crop_tiles(img: np.ndarray, plan: PyramidPlan, threads: int = 1) -> list[TileSet]:
    """Cut the plan's tiles out of the per-level resized images.

    Extraction order is fixed by the plan's row-major rectangles, so the
    output is identical for any thread count.
    """
    _validate_image(img)
    h, w = img.shape[:2]
    if (w, h) != (plan.input_w, plan.input_h):
        raise ValueError(
            f"plan was made for {plan.input_w}x{plan.input_h}, image is {w}x{h}"
        )
    out = []
    for lv in plan.levels:
        canvas = resize_bilinear(img, lv.resized_w, lv.resized_h)

        def cut(rect: Rect, canvas=canvas):
            return np.ascontiguousarray(canvas[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w])

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                tiles = tuple(pool.map(cut, lv.tiles))
        else:
            tiles = tuple(cut(r) for r in lv.tiles)
        out.append(
            TileSet(level=lv.name, grid=lv.grid, tile_side=plan.tile_side, tiles=tiles, rects=lv.tiles)
        )
    return out


def tile_filename(level: str, index: int, grid_cols_positions: int) -> str:
    row, col = divmod(index, grid_cols_positions)
    return f"{level}_{row}_{col}.png"


def _positions_per_row(ts: TileSet) -> int:
    # Overlapping levels have more windows per row than grid columns; count
    # distinct x origins instead of trusting the grid.
    return len({r.x for r in ts.rects})


def write_tiles(tilesets: list[TileSet], out_dir: str | os.PathLike, plan: PyramidPlan) -> list[Path]:
    """Write every tile as ``{level}_{row}_{col}.png`` plus the plan JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for ts in tilesets:
        per_row = _positions_per_row(ts)
        for i, tile in enumerate(ts.tiles):
            p = out_dir / tile_filename(ts.level, i, per_row)
            save_png(tile, p)
            written.append(p)
    plan_path = out_dir / "plan.json"
    plan_path.write_text(plan.to_json() + "\n")
    written.append(plan_path)
    return written


def reassemble(ts: TileSet) -> np.ndarray:
    """Stitch a non-overlapping tile set back into its level canvas."""
    rows, cols = ts.grid.rows, ts.grid.cols
    if len(ts.tiles) != rows * cols:
        raise ValueError("tile set does not partition its canvas")
    side = ts.tile_side
    out = np.empty((rows * side, cols * side, 3), dtype=np.uint8)
    for i, tile in enumerate(ts.tiles):
        r, c = divmod(i, cols)
        out[r * side : (r + 1) * side, c * side : (c + 1) * side] = tile
    return out
