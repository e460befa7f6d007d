"""Standalone SVG renderings of diagrams and landscapes."""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

WIDTH, HEIGHT, MARGIN = 420, 420, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _svg(title):
    root = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(WIDTH),
                      height=str(HEIGHT), viewBox=f"0 0 {WIDTH} {HEIGHT}")
    ET.SubElement(root, "title").text = title
    ET.SubElement(root, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    txt = ET.SubElement(root, "text", {"text-anchor": "middle"}, x=str(WIDTH / 2), y="20")
    txt.text = title
    return root


def _scale(lo, hi):
    span = hi - lo if hi > lo else 1.0
    inner = WIDTH - 2 * MARGIN

    def sx(v):
        return MARGIN + (v - lo) / span * inner

    def sy(v):
        return HEIGHT - MARGIN - (v - lo) / span * inner

    return sx, sy


def _axes(root, lo, hi, sx, sy, xlabel, ylabel, ylo=None, yhi=None):
    ylo = lo if ylo is None else ylo
    yhi = hi if yhi is None else yhi
    g = ET.SubElement(root, "g", {"class": "axes", "stroke": "black"})
    ET.SubElement(g, "line", x1=f"{sx(lo):.2f}", y1=f"{sy(ylo):.2f}", x2=f"{sx(hi):.2f}",
                  y2=f"{sy(ylo):.2f}")
    ET.SubElement(g, "line", x1=f"{sx(lo):.2f}", y1=f"{sy(ylo):.2f}", x2=f"{sx(lo):.2f}",
                  y2=f"{sy(yhi):.2f}")
    labels = ET.SubElement(root, "g", {"class": "labels", "font-size": "11"})
    for v in np.linspace(lo, hi, 5):
        ET.SubElement(labels, "text", x=f"{sx(v):.2f}", y=f"{sy(ylo) + 15:.2f}",
                      **{"text-anchor": "middle"}).text = f"{v:.2g}"
    for v in np.linspace(ylo, yhi, 5):
        ET.SubElement(labels, "text", x=f"{sx(lo) - 6:.2f}", y=f"{sy(v) + 4:.2f}",
                      **{"text-anchor": "end"}).text = f"{v:.2g}"
    ET.SubElement(labels, "text", x=str(WIDTH / 2), y=str(HEIGHT - 12),
                  **{"text-anchor": "middle"}).text = xlabel
    ET.SubElement(labels, "text", x="14", y=str(HEIGHT / 2),
                  transform=f"rotate(-90 14 {HEIGHT / 2})",
                  **{"text-anchor": "middle"}).text = ylabel


def _to_string(root):
    return ET.tostring(root, encoding="unicode") + "\n"


def diagram_svg(diagram, title="Persistence diagram"):
    """Birth-death scatter with the diagonal.

    Finite points are ``<circle>`` elements; essential classes are drawn as
    ``<path>`` triangles on a dashed line labelled "inf" above the data.
    """
    finite = diagram.pairs[np.isfinite(diagram.pairs[:, 2])]
    ess = diagram.pairs[np.isinf(diagram.pairs[:, 2])]
    vals = np.concatenate([finite[:, 1:].ravel(), ess[:, 1]])
    hi = float(vals.max()) if vals.size else 1.0
    hi = hi * 1.1 if hi > 0 else 1.0
    lo = min(0.0, float(vals.min())) if vals.size else 0.0
    sx, sy = _scale(lo, hi)
    root = _svg(title)
    _axes(root, lo, hi, sx, sy, "birth", "death")
    ET.SubElement(root, "line", {"class": "diagonal", "x1": f"{sx(lo):.2f}", "y1": f"{sy(lo):.2f}",
                                 "x2": f"{sx(hi):.2f}", "y2": f"{sy(hi):.2f}",
                                 "stroke": "gray", "stroke-dasharray": "4 3"})
    pts = ET.SubElement(root, "g", {"class": "points"})
    for dim, b, d in finite:
        ET.SubElement(pts, "circle", {"cx": f"{sx(b):.2f}", "cy": f"{sy(d):.2f}", "r": "4",
                                      "fill": COLORS[int(dim) % len(COLORS)],
                                      "data-dim": str(int(dim))})
    if len(ess):
        y = sy(hi) - 12
        ET.SubElement(root, "line", {"class": "infinity", "x1": f"{sx(lo):.2f}", "y1": f"{y:.2f}",
                                     "x2": f"{sx(hi):.2f}", "y2": f"{y:.2f}", "stroke": "gray",
                                     "stroke-dasharray": "2 2"})
        ET.SubElement(root, "text", x=f"{sx(lo) - 6:.2f}", y=f"{y + 4:.2f}",
                      **{"text-anchor": "end", "font-size": "11"}).text = "inf"
        for dim, b, _ in ess:
            x = sx(b)
            ET.SubElement(root, "path", {"class": "essential",
                                         "d": f"M{x - 4:.2f},{y + 4:.2f} L{x + 4:.2f},{y + 4:.2f} "
                                              f"L{x:.2f},{y - 4:.2f} Z",
                                         "fill": COLORS[int(dim) % len(COLORS)]})
    return _to_string(root)


def landscape_svg(landscape, title="Persistence landscape"):
    """One ``<polyline>`` per landscape level."""
    t = landscape.grid
    top = float(landscape.levels.max(initial=0.0))
    yhi = top * 1.1 if top > 0 else 1.0
    lo, hi = float(t[0]), float(t[-1]) if len(t) > 1 else float(t[0]) + 1.0
    inner = WIDTH - 2 * MARGIN

    def sx(v):
        return MARGIN + (v - lo) / (hi - lo) * inner

    def sy(v):
        return HEIGHT - MARGIN - v / yhi * inner

    root = _svg(title)
    _axes(root, lo, hi, sx, sy, "filtration value", "lambda_k(t)", 0.0, yhi)
    g = ET.SubElement(root, "g", {"class": "levels", "fill": "none"})
    for k, level in enumerate(landscape.levels):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(t, level))
        ET.SubElement(g, "polyline", {"points": pts, "stroke": COLORS[k % len(COLORS)],
                                      "stroke-width": "1.5", "data-level": str(k + 1)})
    return _to_string(root)

