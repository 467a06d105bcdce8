"""Pairwise ("pyramid") summation with one fixed bracketing.

Each level adds adjacent pairs ``(a0+a1), (a2+a3), ...``; an odd trailing
element is carried up unchanged.  The numpy and numba versions perform the
same additions in the same order, so they agree bitwise.
"""

import numba
import numpy as np


def pyramid_sum(values):
    a = np.asarray(values).ravel()
    if a.dtype.kind == "b":
        a = a.astype(np.int64)
    if a.size == 0:
        return a.dtype.type(0).item()
    while a.size > 1:
        n = a.size
        pairs = a[0:n - 1:2] + a[1:n:2]
        a = np.concatenate([pairs, a[-1:]]) if n % 2 else pairs
    return a[0].item()


@numba.njit(cache=True, nogil=True)
def pyramid_sum_inplace(buf, n):
    """Reduce ``buf[:n]`` in place (clobbers it) and return the sum."""
    if n == 0:
        return 0.0
    while n > 1:
        half = n // 2
        for i in range(half):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if n % 2:
            buf[half] = buf[n - 1]
            n = half + 1
        else:
            n = half
    return buf[0]
