"""numba-compiled versions of the hot pixel kernels.

Must stay bit-identical to ``_numpy``; the test suite runs both paths.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def alpha_over(dst, src):
    h, w, _ = dst.shape
    for y in range(h):
        for x in range(w):
            a = np.uint32(src[y, x, 3])
            ia = np.uint32(255) - a
            for c in range(3):
                num = a * np.uint32(src[y, x, c]) + ia * np.uint32(dst[y, x, c])
                dst[y, x, c] = np.uint8((2 * num + 255) // 510)
            na = np.uint32(255) * a + ia * np.uint32(dst[y, x, 3])
            dst[y, x, 3] = np.uint8((2 * na + 255) // 510)


@njit(cache=True)
def row_blend_fill(img, mask):
    h, w = mask.shape
    for y in range(h):
        x = 0
        while x < w:
            if mask[y, x] == 0:
                x += 1
                continue
            l = x
            while x < w and mask[y, x] != 0:
                x += 1
            r = x
            has_left = l > 0
            has_right = r < w
            for i in range(l, r):
                for c in range(3):
                    if not has_left and not has_right:
                        img[y, i, c] = 128
                    elif not has_left:
                        img[y, i, c] = img[y, r, c]
                    elif not has_right:
                        img[y, i, c] = img[y, l - 1, c]
                    else:
                        t = (i - l + 1) / (r - l + 1)
                        v = img[y, l - 1, c] * (1.0 - t) + img[y, r, c] * t
                        img[y, i, c] = np.uint8(np.floor(v + 0.5))
                img[y, i, 3] = 255


@njit(cache=True)
def levenshtein(a, b):
    n, m = a.size, b.size
    if n == 0:
        return m
    if m == 0:
        return n
    prev = np.empty(m + 1, dtype=np.int64)
    cur = np.empty(m + 1, dtype=np.int64)
    for j in range(m + 1):
        prev[j] = j
    for i in range(1, n + 1):
        cur[0] = i
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            best = prev[j - 1] + cost
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        for j in range(m + 1):
            prev[j] = cur[j]
    return prev[m]
