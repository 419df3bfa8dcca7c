"""Deterministic stand-in encoder: tiles and prompts to token matrices.

The encoder exists so the compression path runs end-to-end without model
weights. Tokens are average-pooled pixel blocks pushed through one fixed
seed-derived linear map; only shapes and determinism matter, not
semantics. Token matrices round-trip through the CIPT binary format.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tiler import TileSet

PATCH_DEFAULT = 14
DOWNSAMPLE_DEFAULT = 2

LEVEL_TAGS = {"detailed": 0, "adaptive": 1, "global": 2, "text": 3}
TAG_LEVELS = {v: k for k, v in LEVEL_TAGS.items()}

_MAGIC = b"CIPT"


class FormatError(ValueError):
    """Malformed CIPT payload."""


@dataclass(frozen=True, eq=False)
class TokenMatrix:
    """An (L, C) float32 token block tagged with its pyramid level."""

    data: np.ndarray
    level: str

    def __post_init__(self):
        if self.level not in LEVEL_TAGS:
            raise ValueError(f"unknown level tag {self.level!r}")
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError("token matrix must be a nonempty 2-D array")
        if not np.isfinite(self.data).all():
            raise ValueError("token matrix contains non-finite entries")

    @property
    def length(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[1]


def tokens_per_tile(tile_side: int, patch: int = PATCH_DEFAULT, downsample: int = DOWNSAMPLE_DEFAULT) -> int:
    block = patch * downsample
    if tile_side % block != 0:
        raise ValueError(f"tile side {tile_side} not divisible by patch*downsample = {block}")
    return (tile_side // block) ** 2


def _projection(channels: int, in_dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((in_dim, channels))


def encode_tiles(
    tiles: TileSet,
    channels: int,
    seed: int,
    patch: int = PATCH_DEFAULT,
    downsample: int = DOWNSAMPLE_DEFAULT,
) -> TokenMatrix:
    """Encode every tile of a level into one concatenated token matrix.

    Each tile is average-pooled over patch x patch blocks, neighboring
    downsample x downsample pooled vectors are concatenated into one token,
    and a fixed random map (shared across tiles, derived from the seed)
    projects tokens to ``channels`` dims. Token count per tile is
    (tile_side / (patch * downsample))^2.
    """
    side = tiles.tile_side
    if side % (patch * downsample) != 0:
        raise ValueError(f"tile side {side} not divisible by patch*downsample = {patch * downsample}")
    per_side = side // patch
    tokens_side = per_side // downsample
    in_dim = 3 * downsample * downsample
    proj = _projection(channels, in_dim, seed)

    blocks = []
    for tile in tiles.tiles:
        pix = tile.astype(np.float64)
        pooled = pix.reshape(per_side, patch, per_side, patch, 3).mean(axis=(1, 3))
        grouped = (
            pooled.reshape(tokens_side, downsample, tokens_side, downsample, 3)
            .transpose(0, 2, 1, 3, 4)
            .reshape(tokens_side * tokens_side, in_dim)
        )
        blocks.append(grouped @ proj)
    out = np.concatenate(blocks, axis=0).astype(np.float32)
    return TokenMatrix(data=out, level=tiles.level)


def embed_text(prompt: str, channels: int, seed: int) -> TokenMatrix:
    """One token per whitespace-delimited word, hashed independently."""
    words = prompt.split()
    if not words:
        raise ValueError("prompt must contain at least one word")
    seed_bytes = struct.pack("<q", seed)
    rows = np.empty((len(words), channels), dtype=np.float64)
    for i, word in enumerate(words):
        digest = hashlib.blake2b(seed_bytes + word.encode("utf-8"), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        rows[i] = rng.standard_normal(channels)
    return TokenMatrix(data=rows.astype(np.float32), level="text")


def write_cipt(tm: TokenMatrix, path: str | os.PathLike) -> None:
    """CIPT layout: magic, u32le rank=2, u32le L, u32le C, f32le payload, tag byte."""
    payload = np.ascontiguousarray(tm.data, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", 2, tm.length, tm.channels))
        fh.write(payload.tobytes())
        fh.write(bytes([LEVEL_TAGS[tm.level]]))


def read_cipt(path: str | os.PathLike) -> TokenMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != _MAGIC:
        raise FormatError(f"{path}: not a CIPT file")
    rank, length, channels = struct.unpack_from("<III", raw, 4)
    if rank != 2:
        raise FormatError(f"{path}: unsupported rank {rank}")
    body = 16 + 4 * length * channels
    if len(raw) != body + 1:
        raise FormatError(f"{path}: truncated or oversized payload")
    tag = raw[body]
    if tag not in TAG_LEVELS:
        raise FormatError(f"{path}: unknown level tag {tag}")
    data = np.frombuffer(raw, dtype="<f4", count=length * channels, offset=16)
    return TokenMatrix(data=data.reshape(length, channels).copy(), level=TAG_LEVELS[tag])
