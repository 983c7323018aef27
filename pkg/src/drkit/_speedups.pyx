# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels for fuzzy anchor matching.

Mirrors the pure-Python implementations in drkit.text_match; both backends
must return identical values for identical inputs.
"""

from libc.stdlib cimport malloc, free


def bounded_levenshtein(str a, str b, int limit):
    """Levenshtein distance between a and b, early-abandoned at limit.

    Returns the exact distance if it is <= limit, otherwise limit + 1.
    A negative limit is treated as 0.
    """
    cdef int la = len(a)
    cdef int lb = len(b)
    if limit < 0:
        limit = 0
    if la > lb:
        a, b = b, a
        la, lb = lb, la
    if lb - la > limit:
        return limit + 1
    if la == 0:
        return lb if lb <= limit else limit + 1

    cdef int *prev = <int *> malloc((la + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((la + 1) * sizeof(int))
    if prev == NULL or cur == NULL:
        if prev != NULL:
            free(prev)
        if cur != NULL:
            free(cur)
        raise MemoryError()

    cdef int i, j, cost, row_min, dist
    cdef Py_UCS4 cb
    cdef int *tmp
    try:
        for i in range(la + 1):
            prev[i] = i
        for j in range(1, lb + 1):
            cb = b[j - 1]
            cur[0] = j
            row_min = cur[0]
            for i in range(1, la + 1):
                cost = 0 if a[i - 1] == cb else 1
                dist = prev[i - 1] + cost
                if prev[i] + 1 < dist:
                    dist = prev[i] + 1
                if cur[i - 1] + 1 < dist:
                    dist = cur[i - 1] + 1
                cur[i] = dist
                if dist < row_min:
                    row_min = dist
            if row_min > limit:
                return limit + 1
            tmp = prev
            prev = cur
            cur = tmp
        dist = prev[la]
    finally:
        free(prev)
        free(cur)
    return dist if dist <= limit else limit + 1
