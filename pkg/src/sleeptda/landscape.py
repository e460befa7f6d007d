"""Persistence landscapes sampled on a uniform grid.

A diagram point ``(b, d)`` contributes the tent ``max(0, min(t - b, d - t))``;
level ``k`` of the landscape is the k-th largest tent value at each ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import IncompatibleGridError, ValidationError

GRID_START = 0.0
GRID_SIZE = 256
GRID_STEP = 1.0 / (GRID_SIZE - 1)
N_LEVELS = 6


def make_grid(start=GRID_START, step=GRID_STEP, size=GRID_SIZE):
    if size < 1 or not step > 0:
        raise ValidationError("grid needs size >= 1 and a positive step")
    return start + step * np.arange(size)


@dataclass(frozen=True, eq=False)
class PersistenceLandscape:
    """Levels ``lambda_1 >= lambda_2 >= ...`` sampled at ``start + step * i``."""

    start: float
    step: float
    levels: np.ndarray  # (K, G)

    @property
    def grid(self):
        return make_grid(self.start, self.step, self.levels.shape[1])

    @property
    def n_levels(self):
        return self.levels.shape[0]

    @property
    def size(self):
        return self.levels.shape[1]

    def compatible(self, other):
        return (self.start == other.start and self.step == other.step
                and self.levels.shape == other.levels.shape)

    def __eq__(self, other):
        return (isinstance(other, PersistenceLandscape) and self.compatible(other)
                and bool(np.array_equal(self.levels, other.levels)))

    def to_text(self):
        K, G = self.levels.shape
        lines = [f"{self.start!r} {self.step!r} {G} {K}"]
        lines += [" ".join(repr(float(v)) for v in row) for row in self.levels]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows or len(rows[0]) != 4:
            raise ValidationError("landscape header must be 'start step G K'")
        start, step = float(rows[0][0]), float(rows[0][1])
        G, K = int(rows[0][2]), int(rows[0][3])
        levels = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, G) if G else None
        if levels is None or levels.shape != (K, G):
            raise ValidationError(f"landscape body does not hold {K} rows of {G} values")
        return cls(start, step, levels)


def _grid_params(grid):
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("grid must be a non-empty 1-D array")
    if grid.size == 1:
        return float(grid[0]), 1.0, grid
    steps = np.diff(grid)
    step = (grid[-1] - grid[0]) / (grid.size - 1)
    if not (steps > 0).all() or not np.allclose(steps, step, rtol=1e-9, atol=0):
        raise ValidationError("grid must be strictly increasing and uniform")
    return float(grid[0]), float(step), grid


def landscape_from_diagram(diagram, dim=0, grid=None, k=N_LEVELS, *, essential="drop",
                           r_max=None):
    """Sample the landscape of one homology dimension of a diagram.

    Parameters
    ----------
    diagram : PersistenceDiagram
    dim : int
    grid : array, optional
        Uniform, strictly increasing sample positions. Defaults to 256
        points on [0, 1].
    k : int
        Number of levels kept; levels beyond the number of points are zero.
    essential : {"drop", "cap"}
        Infinite bars have no tent. "drop" ignores them, "cap" replaces the
        death by ``r_max`` (default: the last grid position).
    """
    if k < 1:
        raise ValidationError("need at least one landscape level")
    if grid is None:
        grid = make_grid()
    start, step, grid = _grid_params(grid)
    pts = diagram.pairs[diagram.pairs[:, 0] == dim][:, 1:]
    inf = np.isinf(pts[:, 1])
    if essential == "cap":
        cap = float(grid[-1]) if r_max is None else float(r_max)
        pts = pts.copy()
        pts[inf, 1] = np.maximum(cap, pts[inf, 0])
    elif essential == "drop":
        pts = pts[~inf]
    else:
        raise ValidationError(f"essential must be 'drop' or 'cap', not {essential!r}")
    births = np.ascontiguousarray(pts[:, 0])
    deaths = np.ascontiguousarray(pts[:, 1])
    levels = kernels.landscape_levels(births, deaths, np.ascontiguousarray(grid), int(k))
    return PersistenceLandscape(start, step, levels)


def _check_compatible(landscapes):
    first = landscapes[0]
    for other in landscapes[1:]:
        if not first.compatible(other):
            raise IncompatibleGridError("landscapes differ in grid or number of levels")


def average_landscapes(landscapes):
    """Pointwise mean of each level."""
    landscapes = list(landscapes)
    if not landscapes:
        raise ValidationError("cannot average an empty set of landscapes")
    _check_compatible(landscapes)
    mean = shifted_mean(np.stack([l.levels for l in landscapes]))
    return PersistenceLandscape(landscapes[0].start, landscapes[0].step, mean)


def shifted_mean(X):
    """Mean over the first axis taken relative to the first item.

    Equal inputs give back that input exactly, which a plain mean does not.
    """
    return X[0] + (X[1:] - X[0]).sum(axis=0) / len(X)


def sup_difference(a, b, *, signed=False):
    """Largest absolute difference over all levels and grid points.

    With ``signed=True`` the largest value of ``a - b`` is returned instead.
    """
    _check_compatible([a, b])
    diff = a.levels - b.levels
    if signed:
        return float(diff.max())
    return float(np.abs(diff).max())


def zero_landscape(like):
    return PersistenceLandscape(like.start, like.step, np.zeros_like(like.levels))


def lipschitz_ok(landscape, tol=1e-12):
    """True when every level changes by at most one grid step between samples."""
    jumps = np.abs(np.diff(landscape.levels, axis=1))
    return bool((jumps <= landscape.step * (1 + 1e-9) + tol).all()) if jumps.size else True


def levels_ordered(landscape, tol=0.0):
    lv = landscape.levels
    return bool((lv >= -tol).all() and (lv[:-1] >= lv[1:] - tol).all())


def support_ok(landscape, diagram, dim=0):
    """True when the landscape vanishes outside [min birth, max death] of finite bars."""
    pts = diagram.finite(dim)
    t = landscape.grid
    if len(pts) == 0:
        return bool((landscape.levels == 0).all())
    outside = (t < pts[:, 0].min()) | (t > pts[:, 1].max())
    return bool((landscape.levels[:, outside] == 0).all())

