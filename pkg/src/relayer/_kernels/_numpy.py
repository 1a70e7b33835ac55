"""Pure-numpy reference implementations of the hot pixel kernels."""

import numpy as np


def alpha_over(dst: np.ndarray, src: np.ndarray) -> None:
    """Composite ``src`` over ``dst`` in place (both HxWx4 uint8).

    Color math is the non-premultiplied source-over rule with
    round-half-up integer arithmetic:
        out = floor((2*(a*src + (255-a)*dst) + 255) / 510)
    """
    a = src[..., 3:4].astype(np.uint32)
    num = a * src[..., :3] + (255 - a) * dst[..., :3].astype(np.uint32)
    dst[..., :3] = ((2 * num + 255) // 510).astype(np.uint8)
    na = 255 * a[..., 0] + (255 - a[..., 0]) * dst[..., 3]
    dst[..., 3] = ((2 * na + 255) // 510).astype(np.uint8)


def row_blend_fill(img: np.ndarray, mask: np.ndarray) -> None:
    """Fill masked pixels of ``img`` (HxWx4 uint8) per row.

    Each maximal masked run is replaced by the linear blend of the nearest
    unmasked pixels to its left and right.  Runs touching an image edge
    copy the single available neighbor; fully masked rows become gray.
    """
    h, w = mask.shape
    for y in range(h):
        row = mask[y]
        x = 0
        while x < w:
            if not row[x]:
                x += 1
                continue
            l = x
            while x < w and row[x]:
                x += 1
            r = x  # run is [l, r)
            left = img[y, l - 1, :3].astype(np.float64) if l > 0 else None
            right = img[y, r, :3].astype(np.float64) if r < w else None
            if left is None and right is None:
                img[y, l:r, :3] = 128
            elif left is None:
                img[y, l:r, :3] = right.astype(np.uint8)
            elif right is None:
                img[y, l:r, :3] = left.astype(np.uint8)
            else:
                span = r - l + 1
                t = (np.arange(1, r - l + 1, dtype=np.float64) / span)[:, None]
                vals = left[None, :] * (1.0 - t) + right[None, :] * t
                img[y, l:r, :3] = np.floor(vals + 0.5).astype(np.uint8)
            img[y, l:r, 3] = 255


def levenshtein(a: np.ndarray, b: np.ndarray) -> int:
    """Edit distance between two int32 code sequences."""
    if a.size == 0:
        return int(b.size)
    if b.size == 0:
        return int(a.size)
    prev = np.arange(b.size + 1, dtype=np.int64)
    cur = np.empty_like(prev)
    for i in range(1, a.size + 1):
        cur[0] = i
        sub = prev[:-1] + (b != a[i - 1])
        # ins/del need the running minimum, so fall back to a scan
        for j in range(1, b.size + 1):
            cur[j] = min(sub[j - 1], prev[j] + 1, cur[j - 1] + 1)
        prev, cur = cur, prev
    return int(prev[b.size])
