"""Complementary image pyramid planning, tiling, and token compression."""

from .encoder import TokenMatrix, embed_text, encode_tiles, read_cipt, write_cipt
from .kernels import active_backend
from .planner import (
    AspectRatio,
    BudgetTooSmallError,
    EmptyPoolError,
    PyramidPlan,
    RatioGroups,
    closest_ratio,
    coincidence_count,
    filter_adaptive,
    generate_candidates,
    group_candidates,
    make_plan,
    plan_baseline,
    plan_cip,
)
from .sawtooth import SceneSpec, analyze, generate_scene, is_cut
from .scm import (
    AttentionScores,
    CompressionResult,
    assemble_llm_input,
    compress,
    fastv_baseline_score,
    positional_encoding,
    score,
)
from .tiler import TileSet, crop_tiles, load_image, resize

__version__ = "0.1.0"

__all__ = [
    "AspectRatio",
    "AttentionScores",
    "BudgetTooSmallError",
    "CompressionResult",
    "EmptyPoolError",
    "PyramidPlan",
    "RatioGroups",
    "SceneSpec",
    "TileSet",
    "TokenMatrix",
    "active_backend",
    "analyze",
    "assemble_llm_input",
    "closest_ratio",
    "coincidence_count",
    "compress",
    "crop_tiles",
    "embed_text",
    "encode_tiles",
    "fastv_baseline_score",
    "filter_adaptive",
    "generate_candidates",
    "generate_scene",
    "group_candidates",
    "is_cut",
    "load_image",
    "make_plan",
    "plan_baseline",
    "plan_cip",
    "positional_encoding",
    "read_cipt",
    "resize",
    "score",
    "write_cipt",
]
