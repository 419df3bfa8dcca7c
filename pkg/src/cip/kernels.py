"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is selected once per call from the ``CIP_NUMBA`` environment
variable: any value other than ``0``/``false``/``off`` (or unset) uses the
numba kernels when numba is importable, otherwise the numpy implementations
run. Both paths evaluate the same float64 expression tree per element, so
the bilinear resize is byte-identical across backends.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def _env_wants_numba() -> bool:
    flag = os.environ.get("CIP_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off")


def active_backend() -> str:
    """Name of the kernel backend that will serve the next call."""
    return "numba" if (_HAVE_NUMBA and _env_wants_numba()) else "numpy"


def axis_samples(src: int, dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half-pixel-centered bilinear sample positions along one axis.

    Returns (lo, hi, frac): integer neighbor indices into the source axis
    and the float64 interpolation fraction, clamped at the borders.
    """
    scale = src / dst
    pos = (np.arange(dst, dtype=np.float64) + 0.5) * scale - 0.5
    np.clip(pos, 0.0, float(src - 1), out=pos)
    lo = np.floor(pos).astype(np.int64)
    np.minimum(lo, src - 1, out=lo)
    frac = pos - lo
    hi = np.minimum(lo + 1, src - 1)
    return lo, hi, frac


def _resize_core_numpy(img, y0, y1, fy, x0, x1, fx):
    # Gather uint8 neighbors first; promotion to float64 happens per
    # sample and is exact, so full-image conversion is never needed.
    omf = (1.0 - fx)[None, :, None]
    f = fx[None, :, None]
    omg = (1.0 - fy)[:, None, None]
    g = fy[:, None, None]
    v00 = img[np.ix_(y0, x0)]
    v10 = img[np.ix_(y0, x1)]
    v01 = img[np.ix_(y1, x0)]
    v11 = img[np.ix_(y1, x1)]
    top = v00 * omf + v10 * f
    bot = v01 * omf + v11 * f
    return top * omg + bot * g


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _resize_core_numba(img, y0, y1, fy, x0, x1, fx):  # pragma: no cover - numba
        oh = y0.shape[0]
        ow = x0.shape[0]
        nc = img.shape[2]
        out = np.empty((oh, ow, nc), dtype=np.float64)
        for i in range(oh):
            r0 = y0[i]
            r1 = y1[i]
            g = fy[i]
            omg = 1.0 - g
            for j in range(ow):
                c0 = x0[j]
                c1 = x1[j]
                f = fx[j]
                omf = 1.0 - f
                for ch in range(nc):
                    top = img[r0, c0, ch] * omf + img[r0, c1, ch] * f
                    bot = img[r1, c0, ch] * omf + img[r1, c1, ch] * f
                    out[i, j, ch] = top * omg + bot * g
        return out

    @numba.njit(cache=True)
    def _softmax_colmean_numba(logits):  # pragma: no cover - numba
        m = logits.shape[0]
        n = logits.shape[1]
        attn = np.empty((m, n), dtype=np.float64)
        colsum = np.zeros(n, dtype=np.float64)
        for i in range(m):
            mx = logits[i, 0]
            for j in range(1, n):
                if logits[i, j] > mx:
                    mx = logits[i, j]
            s = 0.0
            for j in range(n):
                e = math.exp(logits[i, j] - mx)
                attn[i, j] = e
                s += e
            for j in range(n):
                attn[i, j] = attn[i, j] / s
                colsum[j] += attn[i, j]
        return attn, colsum / m


def _softmax_colmean_numpy(logits):
    mx = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - mx)
    attn = e / e.sum(axis=1, keepdims=True)
    return attn, attn.mean(axis=0)


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int, backend: str | None = None) -> np.ndarray:
    """Bilinear resize of an (H, W, C) uint8 image, round-half-to-even.

    Deterministic: float64 throughout, fixed evaluation order, ``np.rint``
    for the final quantization.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"resize target must be positive, got {out_w}x{out_h}")
    if img.ndim != 3:
        raise ValueError("expected an (H, W, C) image array")
    src_h, src_w = img.shape[:2]
    if (src_w, src_h) == (out_w, out_h):
        return img.copy()
    y0, y1, fy = axis_samples(src_h, out_h)
    x0, x1, fx = axis_samples(src_w, out_w)
    src = np.ascontiguousarray(img)
    if backend is None:
        backend = active_backend()
    if backend == "numba":
        if not _HAVE_NUMBA:
            raise ValueError("numba backend requested but numba is not installed")
        out = _resize_core_numba(src, y0, y1, fy, x0, x1, fx)
    elif backend == "numpy":
        out = _resize_core_numpy(src, y0, y1, fy, x0, x1, fx)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    np.rint(out, out=out)
    np.clip(out, 0.0, 255.0, out=out)
    return out.astype(np.uint8)


def row_softmax_colmean(logits: np.ndarray, backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise softmax (max-subtracted, float64) and its column mean."""
    logits = np.ascontiguousarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[0] < 1 or logits.shape[1] < 1:
        raise ValueError("logits must be a nonempty 2-D array")
    if backend is None:
        backend = active_backend()
    if backend == "numba":
        if not _HAVE_NUMBA:
            raise ValueError("numba backend requested but numba is not installed")
        return _softmax_colmean_numba(logits)
    if backend == "numpy":
        return _softmax_colmean_numpy(logits)
    raise ValueError(f"unknown backend {backend!r}")
