"""Static SVG of the tiling, backbone and cycle (unit square -> 1000 x 1000, y up)."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Optional, Sequence

import numpy as np

from .grid import Backbone, GridState

SIZE = 1000.0
STYLE = {
    "sparse": "#d9d9d9",
    "dense": "#ffffff",
    "backbone": "#ffe08a",
    "grid": "#b0b0b0",
    "node": "#1f1f1f",
    "edge": "#2a6fdb",
    "bridge": "#d62728",
}


def _f(x: float) -> str:
    return f"{x:.3f}"


def _xy(p) -> tuple[str, str]:
    return _f((p[0] + 0.5) * SIZE), _f((0.5 - p[1]) * SIZE)


def render_svg(grid: GridState, backbone: Optional[Backbone] = None, order: Optional[Sequence[int]] = None,
               points: Optional[np.ndarray] = None, r_n: Optional[float] = None) -> str:
    """Layered SVG document: tiles, backbone, grid lines, cycle edges, nodes, legend.

    Edges of length >= ``r_n`` are drawn dashed in the bridge colour. Output
    is a pure function of the inputs.
    """
    K = grid.K
    cell = SIZE / K
    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "viewBox": f"0 0 {SIZE:g} {SIZE + 60:g}",
        "width": f"{SIZE:g}", "height": f"{SIZE + 60:g}",
    })
    tiles = ET.SubElement(svg, "g", {"id": "tiles", "stroke": "none"})
    for r in range(K):
        for c in range(K):
            fill = STYLE["dense"] if grid.dense[r, c] else STYLE["sparse"]
            ET.SubElement(tiles, "rect", {
                "x": _f(c * cell), "y": _f((K - 1 - r) * cell), "width": _f(cell), "height": _f(cell),
                "fill": fill, "class": "dense" if grid.dense[r, c] else "sparse"})
    bb = ET.SubElement(svg, "g", {"id": "backbone", "stroke": "none", "fill": STYLE["backbone"]})
    for r, c in sorted(backbone.cells) if backbone else ():
        ET.SubElement(bb, "rect", {"x": _f(c * cell), "y": _f((K - 1 - r) * cell),
                                   "width": _f(cell), "height": _f(cell), "class": "backbone"})
    lines = ET.SubElement(svg, "g", {"id": "grid", "stroke": STYLE["grid"], "stroke-width": "0.5"})
    for i in range(K + 1):
        v = _f(i * cell)
        ET.SubElement(lines, "line", {"x1": v, "y1": "0.000", "x2": v, "y2": _f(SIZE)})
        ET.SubElement(lines, "line", {"x1": "0.000", "y1": v, "x2": _f(SIZE), "y2": v})
    pts = np.zeros((0, 2)) if points is None else np.asarray(points, dtype=float)
    edges = ET.SubElement(svg, "g", {"id": "cycle", "stroke-width": "1.2", "fill": "none"})
    if order is not None and len(order) > 1:
        seq = [int(x) for x in order]
        for i, a in enumerate(seq):
            b = seq[(i + 1) % len(seq)]
            is_bridge = r_n is not None and float(np.hypot(*(pts[a] - pts[b]))) >= r_n
            (x1, y1), (x2, y2) = _xy(pts[a]), _xy(pts[b])
            attrs = {"x1": x1, "y1": y1, "x2": x2, "y2": y2,
                     "class": "bridge" if is_bridge else "edge",
                     "stroke": STYLE["bridge"] if is_bridge else STYLE["edge"]}
            if is_bridge:
                attrs["stroke-dasharray"] = "6 3"
                attrs["stroke-width"] = "2"
            ET.SubElement(edges, "line", attrs)
    nodes = ET.SubElement(svg, "g", {"id": "nodes", "fill": STYLE["node"]})
    for p in pts:
        x, y = _xy(p)
        ET.SubElement(nodes, "circle", {"cx": x, "cy": y, "r": "1.5", "class": "node"})
    legend = ET.SubElement(svg, "g", {"id": "legend", "font-family": "sans-serif", "font-size": "16"})
    items = [("sparse tile", STYLE["sparse"], None), ("backbone tile", STYLE["backbone"], None),
             ("cycle edge", None, STYLE["edge"]), ("bridge (length >= r_n)", None, STYLE["bridge"])]
    for k, (label, fill, stroke) in enumerate(items):
        x0 = 20 + 240 * k
        y0 = SIZE + 20
        if fill:
            ET.SubElement(legend, "rect", {"x": _f(x0), "y": _f(y0), "width": "20", "height": "20",
                                           "fill": fill, "stroke": "#808080"})
        else:
            attrs = {"x1": _f(x0), "y1": _f(y0 + 10), "x2": _f(x0 + 20), "y2": _f(y0 + 10),
                     "stroke": stroke, "stroke-width": "2"}
            if stroke == STYLE["bridge"]:
                attrs["stroke-dasharray"] = "6 3"
            ET.SubElement(legend, "line", attrs)
        text = ET.SubElement(legend, "text", {"x": _f(x0 + 28), "y": _f(y0 + 16)})
        text.text = label
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(svg, encoding="unicode") + "\n"


def cycle_record(order: Sequence[int], points: np.ndarray, r_n: float, stats: Optional[dict] = None) -> dict:
    """JSON-ready cycle export: node order, per-edge lengths and bridge flags."""
    pts = np.asarray(points, dtype=float)
    seq = [int(x) for x in order]
    edges = []
    for k, a in enumerate(seq):
        b = seq[(k + 1) % len(seq)]
        length = float(np.hypot(*(pts[a] - pts[b])))
        edges.append({"i": a, "j": b, "length": length, "is_bridge": length >= r_n})
    return {"order": seq, "edges": edges, "stats": stats}
