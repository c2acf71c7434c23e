# cython: boundscheck=False, wraparound=False, cdivision=True
"""Native dynamic-programming kernel for monotonic sequence alignment.

Must stay operation-for-operation identical to emgvoice.align._dtw_py so the
two backends are interchangeable (the test suite enforces equivalence).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

# backpointer codes
DEF DIAG = 0
DEF UP = 1
DEF LEFT = 2


def dtw_kernel(double[:, ::1] delta):
    """Fill the accumulated-cost table, backtrack, and return the path.

    Returns (total_cost, path_i, path_j) with the path ordered from (0, 0)
    to (n-1, m-1). Ties in the min() are broken diagonal-first, then the
    i-1 predecessor, then the j-1 predecessor.
    """
    cdef Py_ssize_t n = delta.shape[0]
    cdef Py_ssize_t m = delta.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] acc_arr = np.empty((n, m), dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] ptr_arr = np.zeros((n, m), dtype=np.uint8)
    cdef double[:, ::1] acc = acc_arr
    cdef unsigned char[:, ::1] ptr = ptr_arr
    cdef Py_ssize_t i, j
    cdef double best
    cdef unsigned char code

    acc[0, 0] = delta[0, 0]
    for j in range(1, m):
        acc[0, j] = delta[0, j] + acc[0, j - 1]
        ptr[0, j] = LEFT
    for i in range(1, n):
        acc[i, 0] = delta[i, 0] + acc[i - 1, 0]
        ptr[i, 0] = UP
        for j in range(1, m):
            best = acc[i - 1, j - 1]
            code = DIAG
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
                code = UP
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
                code = LEFT
            acc[i, j] = delta[i, j] + best
            ptr[i, j] = code

    # backtrack; path length is at most n + m - 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rev_i = np.empty(n + m - 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rev_j = np.empty(n + m - 1, dtype=np.int64)
    cdef Py_ssize_t k = 0
    i = n - 1
    j = m - 1
    while True:
        rev_i[k] = i
        rev_j[k] = j
        k += 1
        if i == 0 and j == 0:
            break
        code = ptr[i, j]
        if code == DIAG:
            i -= 1
            j -= 1
        elif code == UP:
            i -= 1
        else:
            j -= 1

    path_i = rev_i[:k][::-1].copy()
    path_j = rev_j[:k][::-1].copy()
    return acc_arr[n - 1, m - 1], path_i, path_j
