"""Exact integer matrix multiplication kernel.

Delegates to the BLAS float64 GEMM (a cache-blocked cubic multiply) whenever
every intermediate value is exactly representable in a double (< 2**53),
falling back to NumPy's native int64 product otherwise. Both paths are exact;
inputs large enough to overflow int64 raise instead of wrapping.
"""

from __future__ import annotations

import numpy as np

_FLOAT_EXACT = 1 << 53
_INT64_LIMIT = 1 << 63


def product_bound(a: np.ndarray, b: np.ndarray) -> int:
    """Upper bound on |entry| of a @ b, used to pick an exact path."""
    k = a.shape[1]
    amax = int(np.abs(a).max(initial=0))
    bmax = int(np.abs(b).max(initial=0))
    return amax * bmax * max(k, 1)


def imatmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact product of two int64 matrices."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    bound = product_bound(a, b)
    if bound < _FLOAT_EXACT:
        # All products and partial sums are integers below 2**53, so the
        # float64 GEMM computes them exactly regardless of summation order.
        return (a.astype(np.float64) @ b.astype(np.float64)).astype(np.int64)
    if bound < _INT64_LIMIT:
        return a @ b
    raise OverflowError(f"matrix product may exceed int64 (bound {bound})")
