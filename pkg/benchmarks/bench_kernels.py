"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs the two hot paths (bilinear resize, row softmax + column mean) on
pipeline-sized inputs and prints a comparison table. Invoke as:

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from cip.kernels import resize_bilinear, row_softmax_colmean


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_resize(repeats):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (3024, 4032, 3), dtype=np.uint8)
    cases = [
        ("photo -> detailed 5x448 x 3x448", (2240, 1344)),
        ("photo -> global 448 x 448", (448, 448)),
    ]
    rows = []
    for name, (w, h) in cases:
        # Warm the JIT outside the timed region.
        resize_bilinear(img, w, h, backend="numba")
        t_numba = timeit(lambda: resize_bilinear(img, w, h, backend="numba"), repeats)
        t_numpy = timeit(lambda: resize_bilinear(img, w, h, backend="numpy"), repeats)
        same = np.array_equal(
            resize_bilinear(img, w, h, backend="numba"),
            resize_bilinear(img, w, h, backend="numpy"),
        )
        rows.append((name, t_numba, t_numpy, same))
    return rows


def bench_softmax(repeats):
    rng = np.random.default_rng(1)
    cases = [
        ("attn 515 x 3840", (515, 3840)),
        ("attn 1795 x 3840", (1795, 3840)),
    ]
    rows = []
    for name, shape in cases:
        logits = rng.standard_normal(shape)
        row_softmax_colmean(logits, backend="numba")
        t_numba = timeit(lambda: row_softmax_colmean(logits, backend="numba"), repeats)
        t_numpy = timeit(lambda: row_softmax_colmean(logits, backend="numpy"), repeats)
        wa_nb = row_softmax_colmean(logits, backend="numba")[1]
        wa_np = row_softmax_colmean(logits, backend="numpy")[1]
        same = bool(np.allclose(wa_nb, wa_np, atol=1e-12))
        rows.append((name, t_numba, t_numpy, same))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rows = bench_resize(args.repeats) + bench_softmax(args.repeats)
    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}  agree")
    for name, t_numba, t_numpy, same in rows:
        print(
            f"{name:<{width}}  {t_numba * 1e3:>8.2f}ms  {t_numpy * 1e3:>8.2f}ms"
            f"  {t_numpy / t_numba:>7.2f}x  {same}"
        )


if __name__ == "__main__":
    main()
