# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled association kernels; see _kernels_py for the reference semantics."""
import numpy as np
cimport numpy as cnp

from ._kernels_py import count_injective

cnp.import_array()


def enumerate_injective(Py_ssize_t n, Py_ssize_t m):
    cdef Py_ssize_t total = count_injective(n, m)
    out_arr = np.zeros((total, n), dtype=np.int64)
    if n == 0:
        return out_arr
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef cnp.int64_t[::1] row = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] nxt = np.zeros(n, dtype=np.int64)
    cdef cnp.uint8_t[::1] placed = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] used = np.zeros(m + 1, dtype=np.uint8)
    cdef Py_ssize_t pos = 0, k = 0, i
    cdef cnp.int64_t v
    # iterative depth-first search; nxt[pos] is the next candidate value at pos
    while pos >= 0:
        if pos == n:
            for i in range(n):
                out[k, i] = row[i]
            k += 1
            pos -= 1
            continue
        if placed[pos]:
            if row[pos] != 0:
                used[row[pos]] = 0
            placed[pos] = 0
        v = nxt[pos]
        while v <= m and v != 0 and used[v]:
            v += 1
        if v > m:
            pos -= 1
            continue
        row[pos] = v
        placed[pos] = 1
        nxt[pos] = v + 1
        if v != 0:
            used[v] = 1
        pos += 1
        if pos < n:
            nxt[pos] = 0
            placed[pos] = 0
    return out_arr


def mta_log_scores(table, mtas):
    cdef double[:, ::1] t = np.ascontiguousarray(table, dtype=np.float64)
    cdef cnp.int64_t[:, ::1] a = np.ascontiguousarray(mtas, dtype=np.int64)
    cdef Py_ssize_t r, i, nr = a.shape[0], nc = a.shape[1]
    out_arr = np.zeros(nr, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc
    for r in range(nr):
        acc = 0.0
        for i in range(nc):
            acc += t[i, a[r, i]]
        out[r] = acc
    return out_arr
