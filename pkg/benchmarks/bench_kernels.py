"""Compare the numba kernel path against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Reports per-kernel wall time for both implementations plus the speedup,
after verifying bit-identical outputs on the benchmark inputs.
"""

import argparse
import time

import numpy as np

from relayer._kernels import _numba, _numpy


def _time(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_alpha_over(repeat):
    rng = np.random.default_rng(0)
    dst = rng.integers(0, 256, size=(1024, 1024, 4), dtype=np.uint8)
    src = rng.integers(0, 256, size=(1024, 1024, 4), dtype=np.uint8)

    a, b = dst.copy(), dst.copy()
    _numpy.alpha_over(a, src)
    _numba.alpha_over(b, src)
    assert np.array_equal(a, b), "alpha_over paths diverge"

    t_np = _time(lambda: _numpy.alpha_over(dst.copy(), src), repeat=repeat)
    t_nb = _time(lambda: _numba.alpha_over(dst.copy(), src), repeat=repeat)
    return "alpha_over (1024^2 RGBA)", t_np, t_nb


def bench_row_blend_fill(repeat):
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, size=(1024, 1024, 4), dtype=np.uint8)
    mask = (rng.random((1024, 1024)) < 0.25).astype(np.uint8)

    a, b = img.copy(), img.copy()
    _numpy.row_blend_fill(a, mask)
    _numba.row_blend_fill(b, mask)
    assert np.array_equal(a, b), "row_blend_fill paths diverge"

    t_np = _time(lambda: _numpy.row_blend_fill(img.copy(), mask), repeat=repeat)
    t_nb = _time(lambda: _numba.row_blend_fill(img.copy(), mask), repeat=repeat)
    return "row_blend_fill (1024^2, 25% masked)", t_np, t_nb


def bench_levenshtein(repeat):
    rng = np.random.default_rng(2)
    a = rng.integers(0, 64, size=2000).astype(np.int32)
    b = rng.integers(0, 64, size=2000).astype(np.int32)
    assert _numpy.levenshtein(a, b) == _numba.levenshtein(a, b)

    t_np = _time(_numpy.levenshtein, a, b, repeat=repeat)
    t_nb = _time(_numba.levenshtein, a, b, repeat=repeat)
    return "levenshtein (2000x2000)", t_np, t_nb


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    # warm up jit compilation outside the timed region
    warm = np.zeros((2, 2, 4), dtype=np.uint8)
    _numba.alpha_over(warm.copy(), warm)
    _numba.row_blend_fill(warm.copy(), np.zeros((2, 2), dtype=np.uint8))
    _numba.levenshtein(np.zeros(2, dtype=np.int32), np.zeros(2, dtype=np.int32))

    print(f"{'kernel':40s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for bench in (bench_alpha_over, bench_row_blend_fill, bench_levenshtein):
        name, t_np, t_nb = bench(args.repeat)
        print(f"{name:40s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms "
              f"{t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
