"""Scale compression: score detailed tokens by cross-scale attention, keep top-K.

Adaptive, global, and text tokens form the query block; detailed tokens
are the keys. The attention map's column means rank the detailed tokens,
and compression keeps the best-ranked K in their original order.
"""

from __future__ import annotations

import numpy as np

from .encoder import TokenMatrix
from .kernels import row_softmax_colmean


class AttentionScores:
    """Row-stochastic attention over detailed tokens plus its column means.

    ``matrix`` is (L2+L3+T, L1); ``weights`` is the length-L1 column mean.
    """

    __slots__ = ("matrix", "weights")

    def __init__(self, matrix: np.ndarray, weights: np.ndarray):
        self.matrix = matrix
        self.weights = weights


class CompressionResult:
    """Kept detailed-token indices (ascending) and the compressed block."""

    __slots__ = ("kept_indices", "tokens", "ratio")

    def __init__(self, kept_indices: tuple[int, ...], tokens: TokenMatrix, ratio: float):
        self.kept_indices = kept_indices
        self.tokens = tokens
        self.ratio = ratio


def positional_encoding(n_tokens: int, channels: int) -> np.ndarray:
    """Sinusoidal encoding over the flat token index.

    entry(i, 2j) = sin(i / 10000^(2j/C)), entry(i, 2j+1) = cos of the same
    argument. Channels must be even.
    """
    if n_tokens < 1:
        raise ValueError(f"n_tokens must be >= 1, got {n_tokens}")
    if channels < 2 or channels % 2 != 0:
        raise ValueError(f"channels must be a positive even number, got {channels}")
    pos = np.arange(n_tokens, dtype=np.float64)[:, None]
    # arange(0, C, 2) enumerates the 2j exponents directly.
    freq = np.power(10000.0, -np.arange(0, channels, 2, dtype=np.float64) / channels)
    ang = pos * freq[None, :]
    out = np.empty((n_tokens, channels), dtype=np.float64)
    out[:, 0::2] = np.sin(ang)
    out[:, 1::2] = np.cos(ang)
    return out


def _as_f64(tm: TokenMatrix) -> np.ndarray:
    data = np.asarray(tm.data, dtype=np.float64)
    if not np.isfinite(data).all():
        raise ValueError(f"{tm.level} tokens contain non-finite entries")
    return data


def score(
    detailed: TokenMatrix,
    adaptive: TokenMatrix,
    global_: TokenMatrix,
    text: TokenMatrix,
    use_pe: bool = True,
    projections: tuple[np.ndarray, np.ndarray] | None = None,
) -> AttentionScores:
    """Attend from [adaptive; global; text] onto the detailed tokens.

    Logits are (Q + PE(Q)) @ (K + PE(K))^T / sqrt(D) with each side's
    encoding indexed from 0. ``projections`` optionally applies a fixed
    (query, key) linear pair after the encoding; D is then the projected
    width instead of the channel count. Softmax runs per query row in
    double precision.
    """
    channels = detailed.channels
    for tm in (adaptive, global_, text):
        if tm.channels != channels:
            raise ValueError(
                f"channel mismatch: {tm.level} has {tm.channels}, detailed has {channels}"
            )
    keys = _as_f64(detailed)
    query = np.concatenate([_as_f64(adaptive), _as_f64(global_), _as_f64(text)], axis=0)
    if use_pe:
        query = query + positional_encoding(query.shape[0], channels)
        keys = keys + positional_encoding(keys.shape[0], channels)
    if projections is not None:
        w_query, w_key = projections
        if w_query.shape[0] != channels or w_key.shape[0] != channels:
            raise ValueError("projection input dims must match the channel count")
        if w_query.shape[1] != w_key.shape[1]:
            raise ValueError("query/key projections must share an output dim")
        query = query @ np.asarray(w_query, dtype=np.float64)
        keys = keys @ np.asarray(w_key, dtype=np.float64)
    width = query.shape[1]
    logits = (query @ keys.T) / np.sqrt(float(width))
    matrix, weights = row_softmax_colmean(logits)
    return AttentionScores(matrix=matrix, weights=weights)


def top_k_indices(weights: np.ndarray, k: int) -> tuple[int, ...]:
    """Indices of the k largest weights, ties to the smaller index, ascending."""
    order = np.argsort(-weights, kind="stable")
    return tuple(sorted(int(i) for i in order[:k]))


def compress(detailed: TokenMatrix, scores: AttentionScores, drop_ratio: float) -> CompressionResult:
    """Keep the top K = max(1, round((1 - drop_ratio) * L1)) detailed tokens."""
    if not 0.0 <= drop_ratio < 1.0:
        raise ValueError(f"drop_ratio must be in [0, 1), got {drop_ratio}")
    l1 = detailed.length
    if scores.weights.shape[0] != l1:
        raise ValueError("scores were computed for a different detailed block")
    k = max(1, round((1.0 - drop_ratio) * l1))
    kept = top_k_indices(scores.weights, k)
    tokens = TokenMatrix(data=detailed.data[list(kept)].copy(), level=detailed.level)
    return CompressionResult(kept_indices=kept, tokens=tokens, ratio=k / l1)


def assemble_llm_input(
    compressed: CompressionResult,
    adaptive: TokenMatrix,
    global_: TokenMatrix,
    text: TokenMatrix,
) -> TokenMatrix:
    """Concatenate [compressed detailed, adaptive, global, text] rows."""
    channels = compressed.tokens.channels
    for tm in (adaptive, global_, text):
        if tm.channels != channels:
            raise ValueError(
                f"channel mismatch: {tm.level} has {tm.channels}, compressed has {channels}"
            )
    data = np.concatenate(
        [compressed.tokens.data, adaptive.data, global_.data, text.data], axis=0
    )
    return TokenMatrix(data=data, level="text")


def fastv_baseline_score(
    tokens: TokenMatrix,
    n_visual: int | None = None,
    use_pe: bool = True,
    k_layer: int = 2,
) -> np.ndarray:
    """Naive whole-sequence self-attention ranking, the comparison baseline.

    Single head, identity projections: every token attends to every token
    and the column means over the first ``n_visual`` positions are
    returned (all positions when None). ``k_layer`` is carried for config
    parity with layer-indexed pruners; the naive scorer has no layer stack.
    """
    del k_layer
    seq = _as_f64(tokens)
    if use_pe:
        seq = seq + positional_encoding(seq.shape[0], seq.shape[1])
    logits = (seq @ seq.T) / np.sqrt(float(seq.shape[1]))
    _, weights = row_softmax_colmean(logits)
    if n_visual is None:
        return weights
    if not 1 <= n_visual <= seq.shape[0]:
        raise ValueError(f"n_visual must be in [1, {seq.shape[0]}], got {n_visual}")
    return weights[:n_visual]


def sidecar_dict(result: CompressionResult, drop_ratio: float, l1: int) -> dict:
    """The JSON sidecar written next to a compressed tensor."""
    return {
        "L1": l1,
        "K": len(result.kept_indices),
        "drop_ratio": drop_ratio,
        "kept_indices": list(result.kept_indices),
    }
