"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def h0_merges(n, eu, ev):
    """Flag the edges (given in filtration order) that merge two components."""
    parent = list(range(n))
    rank = [0] * n

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    merged = np.zeros(len(eu), dtype=bool)
    for e, (u, v) in enumerate(zip(eu.tolist(), ev.tolist())):
        a, b = find(u), find(v)
        if a == b:
            continue
        if rank[a] < rank[b]:
            a, b = b, a
        parent[b] = a
        if rank[a] == rank[b]:
            rank[a] += 1
        merged[e] = True
    return merged


def reduce_columns(n_rows, faces):
    """Standard left-to-right F2 column reduction, columns held as int bitsets."""
    pivot = {}
    low = np.full(len(faces), -1, dtype=np.int64)
    reduced = []
    for c, rows in enumerate(faces.tolist()):
        col = 0
        for r in rows:
            col ^= 1 << r
        while col:
            lc = col.bit_length() - 1
            other = pivot.get(lc)
            if other is None:
                pivot[lc] = c
                low[c] = lc
                break
            col ^= reduced[other]
        reduced.append(col)
    return low


def landscape_levels(births, deaths, grid, k_max):
    """Top ``k_max`` tent values at every grid position, descending per column."""
    out = np.zeros((k_max, len(grid)))
    if len(births) == 0:
        return out
    t = np.asarray(grid)[None, :]
    tents = np.minimum(t - np.asarray(births)[:, None], np.asarray(deaths)[:, None] - t)
    np.maximum(tents, 0.0, out=tents)
    tents = -np.sort(-tents, axis=0)
    k = min(k_max, tents.shape[0])
    out[:k] = tents[:k]
    return out
