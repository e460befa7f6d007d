# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Mirrors ``_pykernels`` function for function."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef extern from *:
    int __builtin_clzll(unsigned long long) nogil


cdef inline Py_ssize_t _find(int64_t[::1] parent, Py_ssize_t x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def h0_merges(Py_ssize_t n, const int64_t[::1] eu, const int64_t[::1] ev):
    """Flag the edges (given in filtration order) that merge two components."""
    cdef Py_ssize_t m = eu.shape[0]
    cdef int64_t[::1] parent = np.arange(n, dtype=np.int64)
    cdef int64_t[::1] rank = np.zeros(n, dtype=np.int64)
    out = np.zeros(m, dtype=np.bool_)
    cdef cnp.npy_bool[::1] merged = out
    cdef Py_ssize_t e, a, b
    with nogil:
        for e in range(m):
            a = _find(parent, eu[e])
            b = _find(parent, ev[e])
            if a == b:
                continue
            if rank[a] < rank[b]:
                a, b = b, a
            parent[b] = a
            if rank[a] == rank[b]:
                rank[a] += 1
            merged[e] = 1
    return out


cdef inline Py_ssize_t _low(uint64_t[:, ::1] M, Py_ssize_t c, Py_ssize_t nw) noexcept nogil:
    cdef Py_ssize_t w
    for w in range(nw - 1, -1, -1):
        if M[c, w]:
            return w * 64 + 63 - __builtin_clzll(M[c, w])
    return -1


def reduce_columns(Py_ssize_t n_rows, const int64_t[:, ::1] faces):
    """Standard left-to-right F2 column reduction.

    ``faces[c]`` lists the row indices of column ``c``. Returns the pivot
    (lowest nonzero row) of every reduced column, -1 for zero columns.
    """
    cdef Py_ssize_t nc = faces.shape[0]
    cdef Py_ssize_t nf = faces.shape[1]
    cdef Py_ssize_t nw = (n_rows + 63) // 64
    if nw == 0:
        nw = 1
    cdef uint64_t[:, ::1] M = np.zeros((nc, nw), dtype=np.uint64)
    cdef int64_t[::1] pivot = np.full(max(n_rows, 1), -1, dtype=np.int64)
    low_arr = np.full(nc, -1, dtype=np.int64)
    cdef int64_t[::1] low = low_arr
    cdef Py_ssize_t c, f, r, w, other, lc
    cdef uint64_t one = 1
    with nogil:
        for c in range(nc):
            for f in range(nf):
                r = faces[c, f]
                M[c, r >> 6] ^= one << (r & 63)
            lc = _low(M, c, nw)
            while lc >= 0 and pivot[lc] >= 0:
                other = pivot[lc]
                for w in range(nw):
                    M[c, w] ^= M[other, w]
                lc = _low(M, c, nw)
            low[c] = lc
            if lc >= 0:
                pivot[lc] = c
    return low_arr


def landscape_levels(const double[::1] births, const double[::1] deaths,
                     const double[::1] grid, Py_ssize_t k_max):
    """Top ``k_max`` tent values at every grid position, descending per column."""
    cdef Py_ssize_t P = births.shape[0]
    cdef Py_ssize_t G = grid.shape[0]
    out = np.zeros((k_max, G), dtype=np.float64)
    cdef double[:, ::1] lv = out
    cdef Py_ssize_t g, p, j
    cdef double t, v
    with nogil:
        for g in range(G):
            t = grid[g]
            for p in range(P):
                v = t - births[p]
                if deaths[p] - t < v:
                    v = deaths[p] - t
                if v <= lv[k_max - 1, g]:
                    continue
                j = k_max - 1
                while j > 0 and lv[j - 1, g] < v:
                    lv[j, g] = lv[j - 1, g]
                    j -= 1
                lv[j, g] = v
    return out
