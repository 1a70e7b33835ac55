"""Hot pixel kernels with a numba fast path.

Set ``RELAYER_NO_NUMBA=1`` to force the pure-numpy implementations
(useful for debugging and as the portability fallback).  Both paths are
bit-identical; ``benchmarks/bench_kernels.py`` compares their speed.
"""

import os

USE_NUMBA = os.environ.get("RELAYER_NO_NUMBA", "") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from ._numba import alpha_over, levenshtein, row_blend_fill
    except ImportError:  # numba unavailable
        USE_NUMBA = False
        from ._numpy import alpha_over, levenshtein, row_blend_fill
else:
    from ._numpy import alpha_over, levenshtein, row_blend_fill

__all__ = ["alpha_over", "row_blend_fill", "levenshtein", "USE_NUMBA"]
