"""Vietoris-Rips persistent homology in dimensions 0 and 1, over F2.

Simplices enter the filtration at their diameter and are ordered by
(filtration value, dimension, lexicographic vertex tuple). Dimension 0 is
computed by single-linkage merging; dimension 1 by reducing the boundary
matrix of the triangles. :func:`brute_force_persistence` reduces the whole
boundary matrix densely and serves as a test oracle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CapacityError, ValidationError

MAX_H1_POINTS = 32
MAX_BRUTE_POINTS = 10


class FiniteMetric:
    """Symmetric, non-negative dissimilarity matrix with zero diagonal.

    The triangle inequality is not required.
    """

    def __init__(self, d, *, atol=1e-12):
        d = np.array(d, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValidationError(f"distance matrix must be square, got shape {d.shape}")
        if not np.isfinite(d).all():
            raise ValidationError("distance matrix has non-finite entries")
        if not np.allclose(d, d.T, rtol=0.0, atol=atol):
            raise ValidationError("distance matrix is not symmetric")
        if np.any(np.abs(np.diag(d)) > atol):
            raise ValidationError("distance matrix has a nonzero diagonal")
        if (d < -atol).any():
            raise ValidationError("distance matrix has negative entries")
        d = np.maximum(0.5 * (d + d.T), 0.0)
        np.fill_diagonal(d, 0.0)
        self.d = d

    @property
    def n(self):
        return self.d.shape[0]

    @classmethod
    def coerce(cls, d):
        return d if isinstance(d, cls) else cls(d)


@dataclass(frozen=True)
class PersistenceDiagram:
    """Birth/death pairs as rows ``(dim, birth, death)``; essential classes have death ``inf``."""

    pairs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pairs, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "pairs", p)

    @classmethod
    def from_bars(cls, bars):
        """Build from an iterable of ``(dim, birth, death)``."""
        return cls(np.array(list(bars), dtype=np.float64).reshape(-1, 3))

    @classmethod
    def empty(cls):
        return cls(np.empty((0, 3)))

    def finite(self, dim):
        """Finite ``(birth, death)`` pairs of one dimension, sorted."""
        p = self.pairs[(self.pairs[:, 0] == dim) & np.isfinite(self.pairs[:, 2])][:, 1:]
        return p[np.lexsort((p[:, 1], p[:, 0]))] if len(p) else p

    def essential(self, dim):
        """Number of classes of dimension ``dim`` that never die."""
        return int(np.sum((self.pairs[:, 0] == dim) & np.isinf(self.pairs[:, 2])))

    def essential_births(self, dim):
        p = self.pairs
        return np.sort(p[(p[:, 0] == dim) & np.isinf(p[:, 2]), 1])

    def restrict(self, dim):
        return PersistenceDiagram(self.pairs[self.pairs[:, 0] == dim])

    def __add__(self, other):
        return PersistenceDiagram(np.vstack([self.pairs, other.pairs]))

    def canonical(self):
        """Rows sorted by (dim, birth, death); equal multisets give equal arrays."""
        p = self.pairs
        return p[np.lexsort((p[:, 2], p[:, 1], p[:, 0]))]

    def same_as(self, other):
        a, b = self.canonical(), other.canonical()
        return a.shape == b.shape and bool(np.array_equal(a, b))

    def to_text(self):
        lines = ["# dim birth death"]
        for dim, b, d in self.canonical():
            lines.append(f"{int(dim)} {float(b)!r} {'inf' if math.isinf(d) else repr(float(d))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        bars = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValidationError(f"line {lineno}: expected 'dim birth death', got {line!r}")
            try:
                dim, birth, death = int(parts[0]), float(parts[1]), float(parts[2])
            except ValueError:
                raise ValidationError(f"line {lineno}: unparsable bar {line!r}") from None
            if dim not in (0, 1) or not death >= birth:
                raise ValidationError(f"line {lineno}: invalid bar {line!r}")
            bars.append((dim, birth, death))
        return cls.from_bars(bars)


# ---------------------------------------------------------------- filtration

def _sorted_edges(d, r_max):
    n = d.shape[0]
    iu, ju = np.triu_indices(n, 1)
    w = d[iu, ju]
    keep = w <= r_max
    iu, ju, w = iu[keep], ju[keep], w[keep]
    order = np.lexsort((ju, iu, w))
    return iu[order].astype(np.int64), ju[order].astype(np.int64), w[order]


def rips_h0(metric, r_max=math.inf):
    """Dimension-0 diagram: one bar ``(0, w)`` per single-linkage merge.

    Returns n-1 finite bars plus one essential class when every edge is
    present (``r_max`` at least the largest distance).
    """
    d = FiniteMetric.coerce(metric).d
    n = d.shape[0]
    eu, ev, w = _sorted_edges(d, r_max)
    merged = kernels.h0_merges(n, eu, ev)
    deaths = w[merged]
    pairs = np.zeros((n, 3))
    pairs[:len(deaths), 2] = deaths
    pairs[len(deaths):, 2] = math.inf
    return PersistenceDiagram(pairs)


def rips_h1(metric, r_max=math.inf):
    """Dimension-1 diagram of the Rips filtration truncated at 2-simplices.

    Zero-length bars are discarded. Loops still open at ``r_max`` are
    reported as essential.
    """
    d = FiniteMetric.coerce(metric).d
    n = d.shape[0]
    if n > MAX_H1_POINTS:
        raise CapacityError(f"rips_h1 supports at most {MAX_H1_POINTS} points, got {n}")
    if n < 3:
        return PersistenceDiagram.empty()
    eu, ev, w = _sorted_edges(d, r_max)
    m = len(w)
    edge_id = np.full((n, n), -1, dtype=np.int64)
    edge_id[eu, ev] = np.arange(m)
    edge_id[ev, eu] = np.arange(m)

    tri = np.array(list(itertools.combinations(range(n), 3)), dtype=np.int64)
    faces = np.stack([edge_id[tri[:, 0], tri[:, 1]], edge_id[tri[:, 0], tri[:, 2]],
                      edge_id[tri[:, 1], tri[:, 2]]], axis=1)
    present = (faces >= 0).all(axis=1)
    tri, faces = tri[present], faces[present]
    tval = w[faces].max(axis=1) if len(faces) else np.empty(0)
    order = np.lexsort((tri[:, 2], tri[:, 1], tri[:, 0], tval))
    faces = np.ascontiguousarray(faces[order])
    tval = tval[order]

    low = kernels.reduce_columns(m, faces)
    negative = kernels.h0_merges(n, eu, ev)
    killed = np.zeros(m, dtype=bool)
    bars = []
    for c in np.flatnonzero(low >= 0):
        e = low[c]
        killed[e] = True
        if tval[c] > w[e]:
            bars.append((1.0, w[e], tval[c]))
    for e in np.flatnonzero(~negative & ~killed):
        bars.append((1.0, w[e], math.inf))
    return PersistenceDiagram.from_bars(bars)


def rips_persistence(metric, max_dim=1, r_max=math.inf):
    """Dimension-0 and (optionally) dimension-1 diagrams combined."""
    metric = FiniteMetric.coerce(metric)
    dgm = rips_h0(metric, r_max)
    if max_dim >= 1:
        dgm = dgm + rips_h1(metric, r_max)
    return dgm


# -------------------------------------------------------------------- oracle

def brute_force_persistence(metric, max_dim=1, r_max=math.inf):
    """Persistence by dense reduction of the full boundary matrix.

    Every simplex up to dimension ``max_dim + 1`` is listed, the F2 boundary
    matrix is built densely and reduced column by column with no shortcuts.
    Intended only as an independent check of :func:`rips_persistence`.
    """
    d = FiniteMetric.coerce(metric).d
    n = d.shape[0]
    if n > MAX_BRUTE_POINTS:
        raise CapacityError(f"brute force supports at most {MAX_BRUTE_POINTS} points, got {n}")
    if max_dim not in (0, 1):
        raise ValidationError("max_dim must be 0 or 1")

    simplices = []
    for k in range(1, max_dim + 3):
        for s in itertools.combinations(range(n), k):
            val = max((d[a, b] for a, b in itertools.combinations(s, 2)), default=0.0)
            if val <= r_max:
                simplices.append((val, k - 1, s))
    simplices.sort()
    index = {s: i for i, (_, _, s) in enumerate(simplices)}
    N = len(simplices)
    R = np.zeros((N, N), dtype=np.uint8)
    for j, (_, dim, s) in enumerate(simplices):
        if dim > 0:
            for face in itertools.combinations(s, dim):
                R[index[face], j] = 1

    def low(j):
        nz = np.flatnonzero(R[:, j])
        return nz[-1] if len(nz) else -1

    lows = np.full(N, -1)
    for j in range(N):
        while True:
            lj = low(j)
            if lj < 0:
                break
            clash = [k for k in range(j) if lows[k] == lj]
            if not clash:
                break
            R[:, j] ^= R[:, clash[0]]
        lows[j] = low(j)

    paired = set()
    bars = []
    for j in range(N):
        i = lows[j]
        if i >= 0:
            paired.update((i, j))
            bi, dim_i = simplices[i][0], simplices[i][1]
            if dim_i <= max_dim and (dim_i == 0 or simplices[j][0] > bi):
                bars.append((dim_i, bi, simplices[j][0]))
    for i, (val, dim, _) in enumerate(simplices):
        if i not in paired and dim <= max_dim:
            bars.append((dim, val, math.inf))
    return PersistenceDiagram.from_bars(bars)
