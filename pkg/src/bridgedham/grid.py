"""K x K tiling, dense/sparse squares, strip crossings and the backbone events.

Cells are ``(row, col)`` with row 0 at the bottom (y = -1/2) and col 0 at the
left (x = -1/2). "Top" of a strip therefore means its highest row.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import ndimage

from .params import TilingSpec
from .sampling import Instance

Cell = tuple[int, int]

STAR = tuple((dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0))
PLUS = ((-1, 0), (0, -1), (0, 1), (1, 0))


class InvariantError(RuntimeError):
    """An internal invariant that the construction relies on was violated."""


@dataclass(frozen=True, eq=False)
class GridState:
    K: int
    L: int
    counts: np.ndarray
    dense: np.ndarray
    component_id: np.ndarray
    cell_of: np.ndarray
    node_order: np.ndarray
    offsets: np.ndarray

    def cell_nodes(self, cell: Cell) -> np.ndarray:
        """Node indices in ``cell``, ascending."""
        k = cell[0] * self.K + cell[1]
        return self.node_order[self.offsets[k]:self.offsets[k + 1]]

    @property
    def n_components(self) -> int:
        return int(self.component_id.max()) + 1 if self.component_id.size else 0

    def neighbors(self, cell: Cell, mode: str = "star") -> list[Cell]:
        r, c = cell
        out = []
        for dr, dc in (STAR if mode == "star" else PLUS):
            rr, cc = r + dr, c + dc
            if 0 <= rr < self.K and 0 <= cc < self.K:
                out.append((rr, cc))
        return out


def cell_indices(points: np.ndarray, K: int) -> np.ndarray:
    """(row, col) per point; half-open tiles, the last row/col closed."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    idx = np.floor((pts + 0.5) * K).astype(np.int64)
    np.clip(idx, 0, K - 1, out=idx)
    return idx[:, ::-1]


def label_components(dense: np.ndarray) -> np.ndarray:
    """Star-connected labels of dense cells in raster order, -1 on sparse cells."""
    labels, _ = ndimage.label(dense, structure=np.ones((3, 3), dtype=int))
    return labels.astype(np.int64) - 1


def build_grid(inst: Instance | np.ndarray, spec: TilingSpec | int, L: int) -> GridState:
    K = spec if isinstance(spec, (int, np.integer)) else spec.K
    K = int(K)
    points = inst.points if isinstance(inst, Instance) else np.asarray(inst, dtype=float).reshape(-1, 2)
    rc = cell_indices(points, K)
    flat = rc[:, 0] * K + rc[:, 1]
    order = np.argsort(flat, kind="stable")
    counts_flat = np.bincount(flat, minlength=K * K)
    offsets = np.zeros(K * K + 1, dtype=np.int64)
    np.cumsum(counts_flat, out=offsets[1:])
    counts = counts_flat.reshape(K, K)
    dense = counts >= L
    for a in (counts, dense, flat, order, offsets):
        a.flags.writeable = False
    comp = label_components(dense)
    comp.flags.writeable = False
    return GridState(K, L, counts, dense, comp, flat, order, offsets)


def adjacent(a: Cell, b: Cell, mode: str = "star") -> bool:
    dr, dc = abs(a[0] - b[0]), abs(a[1] - b[1])
    if mode == "star":
        return max(dr, dc) == 1
    if mode == "plus":
        return dr + dc == 1
    raise ValueError(f"unknown adjacency mode {mode!r}")


# -- crossings on a local boolean array (rows bottom-to-top) -----------------

def _search(open_, starts, targets, moves):
    """BFS from ``starts``; return the canonical path to the lowest target or None.

    The canonical path ends at the reachable target with the smallest
    (row, col) and is extracted backwards, always stepping to the
    predecessor with the smallest (row, col) one BFS layer closer.
    """
    R = len(open_)
    C = len(open_[0]) if R else 0
    dist = [[-1] * C for _ in range(R)]
    q = deque()
    for r, c in starts:
        if open_[r][c] and dist[r][c] < 0:
            dist[r][c] = 0
            q.append((r, c))
    while q:
        r, c = q.popleft()
        d = dist[r][c] + 1
        for dr, dc in moves:
            rr, cc = r + dr, c + dc
            if 0 <= rr < R and 0 <= cc < C and open_[rr][cc] and dist[rr][cc] < 0:
                dist[rr][cc] = d
                q.append((rr, cc))
    end = next((t for t in sorted(targets) if dist[t[0]][t[1]] >= 0), None)
    if end is None:
        return None
    path = [end]
    r, c = end
    while dist[r][c] > 0:
        d = dist[r][c] - 1
        r, c = min((r + dr, c + dc) for dr, dc in moves
                   if 0 <= r + dr < R and 0 <= c + dc < C and dist[r + dr][c + dc] == d)
        path.append((r, c))
    path.reverse()
    return path


def lr_crossing(mask) -> Optional[list[Cell]]:
    """Lowermost star-connected left-right crossing of the True cells."""
    m = np.asarray(mask, dtype=bool)
    R, C = m.shape
    if R == 0 or C == 0:
        return None
    grid = m.tolist()
    return _search(grid, [(r, 0) for r in range(R)], [(r, C - 1) for r in range(R)], STAR)


def tb_plus_crossing(mask) -> Optional[list[Cell]]:
    """Plus-connected top-bottom crossing of the True cells, top first."""
    m = np.asarray(mask, dtype=bool)
    R, C = m.shape
    if R == 0 or C == 0:
        return None
    grid = m.tolist()
    return _search(grid, [(R - 1, c) for c in range(C)], [(0, c) for c in range(C)], PLUS)


# -- strips of the global grid ----------------------------------------------

@dataclass(frozen=True, order=True)
class Rect:
    """Horizontal ("H") strip of rows or vertical ("V") strip of columns."""

    orientation: str
    index: int
    width: int

    def span(self) -> range:
        return range(self.index * self.width, (self.index + 1) * self.width)

    def name(self) -> str:
        return f"{self.orientation}{self.index}"


@dataclass(frozen=True)
class Crossing:
    rect: Rect
    cells: tuple[Cell, ...]


def _vertical_view(block: np.ndarray) -> np.ndarray:
    # local row i <- column i, local col j <- row K-1-j (top side becomes left side)
    return block[::-1, :].T


def find_crossing(g: GridState, rect: Rect) -> Optional[Crossing]:
    """Canonical dense crossing: lowermost LR for "H" strips, leftmost TB for "V"."""
    s = rect.span()
    if rect.orientation == "H":
        path = lr_crossing(g.dense[s.start:s.stop, :])
        if path is None:
            return None
        return Crossing(rect, tuple((s.start + r, c) for r, c in path))
    path = lr_crossing(_vertical_view(g.dense[:, s.start:s.stop]))
    if path is None:
        return None
    return Crossing(rect, tuple((g.K - 1 - j, s.start + i) for i, j in path))


def sparse_dual_crossing(g: GridState, rect: Rect) -> Optional[list[Cell]]:
    """Sparse plus-connected path joining the long sides of ``rect``."""
    s = rect.span()
    if rect.orientation == "H":
        path = tb_plus_crossing(~g.dense[s.start:s.stop, :])
        return None if path is None else [(s.start + r, c) for r, c in path]
    path = tb_plus_crossing(~_vertical_view(g.dense[:, s.start:s.stop]))
    return None if path is None else [(g.K - 1 - j, s.start + i) for i, j in path]


def strips(K: int, M_eff: int) -> list[Rect]:
    if K % M_eff:
        raise ValueError(f"strip width {M_eff} does not divide K={K}")
    return [Rect(o, i, M_eff) for o in ("H", "V") for i in range(K // M_eff)]


def detect_F(g: GridState, M_eff: int) -> tuple[bool, dict[Rect, Optional[Crossing]]]:
    """F holds iff every horizontal and vertical strip has a dense crossing."""
    found = {rect: find_crossing(g, rect) for rect in strips(g.K, M_eff)}
    return all(v is not None for v in found.values()), found


@dataclass(frozen=True)
class Backbone:
    crossings: tuple[Crossing, ...]
    cells: frozenset
    component: int


def build_backbone(g: GridState, crossings: dict[Rect, Optional[Crossing]] | Iterable[Crossing]) -> Backbone:
    if isinstance(crossings, dict):
        if any(v is None for v in crossings.values()):
            raise ValueError("backbone needs a crossing in every strip")
        crossings = [crossings[k] for k in sorted(crossings)]
    crossings = tuple(crossings)
    cells = frozenset(c for x in crossings for c in x.cells)
    if not cells:
        raise ValueError("backbone needs at least one crossing")
    ids = {int(g.component_id[c]) for c in cells}
    if len(ids) != 1 or -1 in ids:
        raise InvariantError(f"backbone cells span components {sorted(ids)}")
    return Backbone(crossings, cells, ids.pop())


def detect_I(g: GridState, b: Optional[Backbone]) -> tuple[bool, list[int]]:
    """Dense components other than the backbone's; never true without a backbone."""
    if b is None:
        return False, []
    others = [k for k in range(g.n_components) if k != b.component]
    return bool(others), others


def dense_neighbor_counts(dense: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per cell: number of dense star-neighbours and number of star-neighbours in S."""
    kern = np.ones((3, 3), dtype=np.int64)
    kern[1, 1] = 0
    d = ndimage.convolve(dense.astype(np.int64), kern, mode="constant", cval=0)
    total = ndimage.convolve(np.ones(dense.shape, dtype=np.int64), kern, mode="constant", cval=0)
    return d, total


def detect_J(g: GridState) -> tuple[bool, list[Cell]]:
    """Some cell whose star-neighbours inside S are all sparse.

    A cell with no neighbours at all (only when K = 1) is not counted.
    """
    d, total = dense_neighbor_counts(g.dense)
    hit = (d == 0) & (total > 0)
    cells = [(int(r), int(c)) for r, c in zip(*np.nonzero(hit))]
    return bool(cells), cells


@dataclass(frozen=True)
class EventReport:
    F: bool
    I: bool
    J: bool
    H: bool
    witnesses: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"F": self.F, "I": self.I, "J": self.J, "H": self.H}


def detect_H(f, i, j) -> EventReport:
    """Combine the three sub-events; each argument is a bool or a (bool, witnesses) pair."""
    def split(x):
        return (bool(x[0]), x[1]) if isinstance(x, tuple) else (bool(x), None)

    (F, fw), (I, iw), (J, jw) = split(f), split(i), split(j)
    wit = {}
    if not F and fw is not None:
        wit["F"] = [r.name() for r, c in fw.items() if c is None] if isinstance(fw, dict) else fw
    if I and iw is not None:
        wit["I"] = list(iw)
    if J and jw is not None:
        wit["J"] = [list(c) for c in jw]
    return EventReport(F, I, J, F and not I and not J, wit)


def evaluate_events(g: GridState, M_eff: int) -> tuple[EventReport, Optional[Backbone]]:
    F, found = detect_F(g, M_eff)
    b = build_backbone(g, found) if F else None
    return detect_H((F, found), detect_I(g, b), detect_J(g)), b


def grid_snapshot(g: GridState, b: Optional[Backbone] = None) -> dict:
    return {
        "K": g.K,
        "L": g.L,
        "counts": g.counts.tolist(),
        "dense": g.dense.tolist(),
        "components": g.component_id.tolist(),
        "backbone_cells": sorted([list(c) for c in b.cells]) if b else [],
    }
