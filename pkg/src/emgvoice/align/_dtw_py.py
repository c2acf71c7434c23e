"""Pure-Python alignment kernel, used when the compiled extension is absent.

Semantics (including tie-breaking) are kept identical to _native/dtw.pyx;
both run the same IEEE double operations in the same order, so results are
bit-equal across backends.
"""

import numpy as np

_DIAG, _UP, _LEFT = 0, 1, 2


def dtw_kernel(delta):
    """Accumulate costs, backtrack, return (total_cost, path_i, path_j)."""
    n, m = delta.shape
    acc = np.empty((n, m), dtype=np.float64)
    ptr = np.zeros((n, m), dtype=np.uint8)

    acc[0, 0] = delta[0, 0]
    for j in range(1, m):
        acc[0, j] = delta[0, j] + acc[0, j - 1]
        ptr[0, j] = _LEFT
    # Row-major Python loops: the j recurrence forbids vectorizing a row,
    # which is exactly why the compiled kernel exists.
    for i in range(1, n):
        acc[i, 0] = delta[i, 0] + acc[i - 1, 0]
        ptr[i, 0] = _UP
        row = acc[i]
        above = acc[i - 1]
        drow = delta[i]
        prow = ptr[i]
        for j in range(1, m):
            best = above[j - 1]
            code = _DIAG
            if above[j] < best:
                best = above[j]
                code = _UP
            if row[j - 1] < best:
                best = row[j - 1]
                code = _LEFT
            row[j] = drow[j] + best
            prow[j] = code

    rev = []
    i, j = n - 1, m - 1
    while True:
        rev.append((i, j))
        if i == 0 and j == 0:
            break
        code = ptr[i, j]
        if code == _DIAG:
            i -= 1
            j -= 1
        elif code == _UP:
            i -= 1
        else:
            j -= 1
    rev.reverse()
    path_i = np.array([p[0] for p in rev], dtype=np.int64)
    path_j = np.array([p[1] for p in rev], dtype=np.int64)
    return float(acc[n - 1, m - 1]), path_i, path_j
