import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import tent_level
from sleeptda.errors import IncompatibleGridError, ValidationError
from sleeptda.landscape import (PersistenceLandscape, average_landscapes, landscape_from_diagram,
                                levels_ordered, lipschitz_ok, make_grid, sup_difference,
                                support_ok, zero_landscape)
from sleeptda.persistence import PersistenceDiagram

HALF = make_grid(0.0, 0.5, 9)  # 0, 0.5, ..., 4


def dgm(*bars, dim=0):
    return PersistenceDiagram.from_bars([(dim, b, d) for b, d in bars])


def at(land, level, t):
    i = int(np.flatnonzero(np.isclose(land.grid, t))[0])
    return land.levels[level - 1, i]


@st.composite
def diagrams(draw, max_pts=8):
    n = draw(st.integers(0, max_pts))
    births = draw(st.lists(st.floats(0, 0.8), min_size=n, max_size=n))
    lens = draw(st.lists(st.floats(0, 0.6), min_size=n, max_size=n))
    return [(b, b + l) for b, l in zip(births, lens)]


# ------------------------------------------------------------------ examples

def test_single_triangle():
    land = landscape_from_diagram(dgm((0, 2)), 0, HALF, k=2)
    assert at(land, 1, 1.0) == 1.0
    assert at(land, 1, 0.0) == 0.0 and at(land, 1, 2.0) == 0.0
    assert np.all(land.levels[1] == 0)


def test_single_triangle_default_grid_apex():
    grid = make_grid(0.0, 1.0 / 255, 256)
    land = landscape_from_diagram(dgm((0.0, 2 * 128 / 255)), 0, grid)
    assert land.levels[0].max() == pytest.approx(128 / 255, abs=1e-15)


def test_empty_diagram():
    land = landscape_from_diagram(PersistenceDiagram.empty(), 0, HALF, k=3)
    assert land.levels.shape == (3, 9) and np.all(land.levels == 0)


def test_two_triangles():
    grid = make_grid(0.0, 0.5, 7)
    land = landscape_from_diagram(dgm((0, 2), (1, 3)), 0, grid, k=2)
    assert at(land, 1, 1.0) == 1.0
    assert at(land, 1, 2.0) == 1.0
    assert at(land, 1, 1.5) == 0.5
    assert at(land, 2, 1.5) == 0.5
    assert at(land, 2, 1.0) == 0.0


def test_dimension_filter_and_essential():
    d = PersistenceDiagram.from_bars([(0, 0, 0.5), (0, 0, np.inf), (1, 0.2, 0.4)])
    grid = make_grid(0.0, 0.1, 11)
    drop = landscape_from_diagram(d, 0, grid, k=2)
    assert drop.levels[1].max() == 0
    cap = landscape_from_diagram(d, 0, grid, k=2, essential="cap")
    assert cap.levels[0].max() == pytest.approx(0.5)
    h1 = landscape_from_diagram(d, 1, grid, k=1)
    assert h1.levels.max() == pytest.approx(0.1)
    with pytest.raises(ValidationError):
        landscape_from_diagram(d, 0, grid, essential="keep")


@pytest.mark.parametrize("grid", [[], [0, 1, 1], [0, 0.1, 0.3], [1, 0]])
def test_bad_grid(grid):
    with pytest.raises(ValidationError):
        landscape_from_diagram(dgm((0, 1)), 0, grid)


# ---------------------------------------------------------------- operations

def test_average_examples():
    grid = make_grid(0.0, 0.25, 9)
    a = landscape_from_diagram(dgm((0, 2)), 0, grid, k=2)
    assert average_landscapes([a, a, a]) == a
    half = average_landscapes([a, zero_landscape(a)])
    assert np.allclose(half.levels, a.levels / 2)
    b = landscape_from_diagram(dgm((0, 1), (0.5, 1.5)), 0, grid, k=2)
    # peaks 1.0 (from (0,2)) and 0.5 (from (0,1) and (0.5,1.5)) at t=1 and t=0.5/1.0
    m = average_landscapes([a, b])
    assert at(m, 1, 1.0) == pytest.approx((1.0 + 0.5) / 2)


def test_sup_difference_examples():
    a = landscape_from_diagram(dgm((0, 2)), 0, HALF, k=2)
    b = landscape_from_diagram(PersistenceDiagram.empty(), 0, HALF, k=2)
    assert sup_difference(a, a) == 0
    assert sup_difference(a, b) == 1.0
    scaled = PersistenceLandscape(a.start, a.step, a.levels * 0.5)
    assert sup_difference(a, scaled) == 0.5
    assert sup_difference(b, a, signed=True) == 0.0
    assert sup_difference(a, b, signed=True) == 1.0


def test_incompatible_grids():
    a = landscape_from_diagram(dgm((0, 2)), 0, HALF, k=2)
    b = landscape_from_diagram(dgm((0, 2)), 0, HALF, k=3)
    c = landscape_from_diagram(dgm((0, 2)), 0, make_grid(0.0, 0.25, 9), k=2)
    for other in (b, c):
        with pytest.raises(IncompatibleGridError):
            average_landscapes([a, other])
        with pytest.raises(IncompatibleGridError):
            sup_difference(a, other)


# ----------------------------------------------------------------- axioms

GRID = make_grid(0.0, 1 / 63, 64)


@settings(max_examples=300, deadline=None)
@given(diagrams())
def test_axioms_random(bars):
    d = dgm(*bars)
    land = landscape_from_diagram(d, 0, GRID, k=4)
    assert levels_ordered(land)
    assert lipschitz_ok(land)
    assert support_ok(land, d)
    for k in (1, 2, 4):
        for j in (0, 17, 40, 63):
            assert land.levels[k - 1, j] == pytest.approx(tent_level(bars, GRID[j], k), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(diagrams(max_pts=6), st.floats(0, 0.8), st.floats(0, 0.6))
def test_monotone_under_inclusion(bars, b, l):
    small = landscape_from_diagram(dgm(*bars), 0, GRID, k=4)
    big = landscape_from_diagram(dgm(*bars, (b, b + l)), 0, GRID, k=4)
    assert np.all(big.levels >= small.levels)


@settings(max_examples=100, deadline=None)
@given(st.lists(diagrams(max_pts=5), min_size=1, max_size=6))
def test_axioms_after_averaging(many):
    lands = [landscape_from_diagram(dgm(*b), 0, GRID, k=3) for b in many]
    m = average_landscapes(lands)
    assert levels_ordered(m, tol=1e-15)
    assert lipschitz_ok(m)


@settings(max_examples=150, deadline=None)
@given(diagrams(), diagrams(), diagrams())
def test_sup_difference_pseudometric(x, y, z):
    a, b, c = (landscape_from_diagram(dgm(*p), 0, GRID, k=3) for p in (x, y, z))
    assert sup_difference(a, a) == 0
    assert sup_difference(a, b) == sup_difference(b, a)
    assert sup_difference(a, c) <= sup_difference(a, b) + sup_difference(b, c) + 1e-15


# ------------------------------------------------------------ text format

def test_text_roundtrip():
    land = landscape_from_diagram(dgm((0, 0.3), (0.1, 0.7), (0, 0.55)), 0, None, k=6)
    text = land.to_text()
    assert text.splitlines()[0] == f"0.0 {1 / 255!r} 256 6"
    back = PersistenceLandscape.from_text(text)
    assert back == land
    assert back.to_text() == text


@pytest.mark.parametrize("text", ["", "0 1 3\n", "0.0 0.5 3 2\n1 2 3\n"])
def test_text_rejects(text):
    with pytest.raises(ValidationError):
        PersistenceLandscape.from_text(text)
