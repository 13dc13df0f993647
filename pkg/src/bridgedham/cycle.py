"""Small cycles in dense squares, merged into one bridged Hamiltonian cycle.

The working cycle lives in successor/predecessor arrays so that cutting an
edge and splicing in a path costs O(path length). Every dense square keeps a
ledger of its small-cycle edges that are still on the working cycle; each
merge or attachment consumes one of them.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .grid import Backbone, Cell, GridState, InvariantError, STAR, detect_I, detect_J, evaluate_events
from .sampling import Instance

Edge = tuple[int, int]
PAIRINGS = ("ua_vb", "ub_va")
MAX_REMOVED = 8


class PreconditionError(ValueError):
    """The construction was asked to run where its guarantee does not apply."""


def _edge(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


def small_cycle(nodes: Sequence[int]) -> list[int]:
    """All nodes of one tile in ascending index order, read cyclically."""
    out = sorted(int(x) for x in nodes)
    if len(out) < 3:
        raise ValueError(f"a cycle needs at least 3 nodes, got {len(out)}")
    return out


def cycle_edges(seq: Sequence[int]) -> list[Edge]:
    return [_edge(seq[i], seq[(i + 1) % len(seq)]) for i in range(len(seq))]


@dataclass
class CycleState:
    """One or more disjoint cycles over a subset of the nodes."""

    points: np.ndarray
    succ: list = field(default=None)
    pred: list = field(default=None)
    surviving: dict = field(default_factory=dict)
    removed_count: dict = field(default_factory=dict)
    added_edges: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.points)
        if self.succ is None:
            self.succ = [-1] * n
            self.pred = [-1] * n
        self._xy = [tuple(p) for p in np.asarray(self.points, dtype=float).tolist()]

    def dist(self, a: int, b: int) -> float:
        return math.dist(self._xy[a], self._xy[b])

    @property
    def covered(self) -> int:
        return sum(1 for s in self.succ if s >= 0)

    def has_edge(self, a: int, b: int) -> bool:
        return self.succ[a] == b or self.succ[b] == a

    def walk(self, start: int) -> list[int]:
        out = [start]
        x = self.succ[start]
        while x != start:
            if x < 0 or len(out) > len(self.succ):
                raise InvariantError(f"broken cycle through node {start}")
            out.append(x)
            x = self.succ[x]
        return out

    def cycles(self) -> list[list[int]]:
        seen = [False] * len(self.succ)
        out = []
        for v, s in enumerate(self.succ):
            if s >= 0 and not seen[v]:
                cyc = self.walk(v)
                for x in cyc:
                    seen[x] = True
                out.append(cyc)
        return out

    def order(self) -> list[int]:
        """The single working cycle, starting at its smallest node."""
        cyc = self.cycles()
        if len(cyc) != 1:
            raise InvariantError(f"expected one cycle, found {len(cyc)}")
        return cyc[0]

    # -- primitive surgery ---------------------------------------------------

    def add_cycle(self, seq: Sequence[int], cell: Optional[Cell] = None) -> None:
        for i, x in enumerate(seq):
            if self.succ[x] >= 0:
                raise InvariantError(f"node {x} already on a cycle")
            nxt = seq[(i + 1) % len(seq)]
            self.succ[x] = nxt
            self.pred[nxt] = x
        if cell is not None:
            self.surviving[cell] = set(cycle_edges(seq))
            self.removed_count[cell] = 0

    def splice(self, u: int, v: int, path: Sequence[int]) -> None:
        """Replace cycle edge (u, v) by u - path[0] ... path[-1] - v."""
        if self.succ[u] != v:
            if self.succ[v] != u:
                raise InvariantError(f"({u}, {v}) is not a cycle edge")
            u, v, path = v, u, path[::-1]
        prev = u
        for x in path:
            self.succ[prev] = x
            self.pred[x] = prev
            prev = x
        self.succ[prev] = v
        self.pred[v] = prev
        self.added_edges.append(_edge(u, path[0]))
        self.added_edges.append(_edge(path[-1], v))

    def _consume(self, anchor: Cell, edge: Edge) -> None:
        live = self.surviving.get(anchor)
        if not live or edge not in live:
            raise InvariantError(f"cell {anchor} has no surviving edge {edge}")
        live.discard(edge)
        self.removed_count[anchor] += 1
        if self.removed_count[anchor] > MAX_REMOVED:
            raise InvariantError(f"cell {anchor} lost more than {MAX_REMOVED} edges")

    def best_cut(self, anchor: Cell, a: int, b: int, edge: Optional[Edge] = None) -> tuple[Edge, str]:
        """Surviving anchor edge and pairing that minimise the longer cross edge."""
        live = self.surviving.get(anchor)
        if not live:
            raise InvariantError(f"cell {anchor} has no surviving edge")
        best = None
        for u, v in ([edge] if edge is not None else sorted(live)):
            for pairing in PAIRINGS:
                x, y = (a, b) if pairing == "ua_vb" else (b, a)
                cost = max(self.dist(u, x), self.dist(v, y))
                if best is None or cost < best[0]:
                    best = (cost, (u, v), pairing)
        return best[1], best[2]


def merge_cycles(tau: CycleState, eta: Sequence[int], anchor: Cell, eta_cell: Optional[Cell] = None,
                 *, edge: Optional[Edge] = None, cut: Optional[Edge] = None,
                 pairing: Optional[str] = None) -> CycleState:
    """Merge the small cycle ``eta`` into ``tau`` through a surviving edge of ``anchor``.

    One surviving edge (u, v) of the anchor and the edge ``cut`` = (a, b) of
    ``eta`` are removed, then either (u, a) + (v, b) or (u, b) + (v, a) is
    added. ``cut`` defaults to the edge joining eta's two smallest nodes;
    ``edge`` and ``pairing`` default to the choice with the shortest longer
    cross edge. Mutates and returns ``tau``.
    """
    eta = list(eta)
    if len(eta) < 3:
        raise ValueError("eta must be a cycle of at least 3 nodes")
    if cut is None:
        lo = sorted(eta)[:2]
        cut = (lo[0], lo[1])
    i, j = eta.index(cut[0]), eta.index(cut[1])
    m = len(eta)
    if (i + 1) % m == j:
        a, b = eta[i], eta[j]
    elif (j + 1) % m == i:
        a, b = eta[j], eta[i]
    else:
        raise ValueError(f"{cut} is not an edge of eta")
    # eta minus (a, b), read from b forward to a
    k = eta.index(b)
    path_ba = eta[k:] + eta[:k]
    for x in eta:
        if tau.succ[x] >= 0:
            raise InvariantError(f"node {x} already on the working cycle")
    if pairing is None:
        edge, pairing = tau.best_cut(anchor, a, b, edge)
    if pairing not in PAIRINGS or edge is None:
        raise ValueError(f"pairing must be one of {PAIRINGS} and needs an edge")
    u, v = edge
    tau._consume(anchor, _edge(u, v))
    # ua_vb: u - a ... b - v ; ub_va: u - b ... a - v
    tau.splice(u, v, path_ba[::-1] if pairing == "ua_vb" else path_ba)
    if eta_cell is not None:
        tau.surviving[eta_cell] = set(cycle_edges(eta)) - {_edge(a, b)}
        tau.removed_count[eta_cell] = 1
    return tau


def attach_path(tau: CycleState, path: Sequence[int], anchor: Cell, *, edge: Optional[Edge] = None,
                pairing: Optional[str] = None) -> CycleState:
    """Splice a sparse tile's path into ``tau`` at a surviving edge of ``anchor``."""
    path = [int(x) for x in path]
    if not path:
        raise ValueError("path must be nonempty")
    a, b = path[0], path[-1]
    for x in path:
        if tau.succ[x] >= 0:
            raise InvariantError(f"node {x} already on the working cycle")
    if pairing is None:
        edge, pairing = tau.best_cut(anchor, a, b, edge)
    if pairing not in PAIRINGS or edge is None:
        raise ValueError(f"pairing must be one of {PAIRINGS} and needs an edge")
    u, v = edge
    tau._consume(anchor, _edge(u, v))
    tau.splice(u, v, path if pairing == "ua_vb" else path[::-1])
    return tau


def merge_order(g: GridState, b: Backbone | int, root: Optional[Cell] = None) -> list[tuple[Cell, Cell]]:
    """BFS over one dense component: (cell, bfs_parent) for every cell after the root.

    The root defaults to the lowest (row, col) backbone cell; ``b`` may also
    be a bare component id, in which case the root is that component's
    lowest cell.
    """
    comp = b.component if isinstance(b, Backbone) else int(b)
    if root is None:
        if isinstance(b, Backbone):
            root = min(b.cells)
        else:
            rows, cols = np.nonzero(g.component_id == comp)
            root = (int(rows[0]), int(cols[0]))
    cid = g.component_id
    seen = {root}
    q = deque([root])
    out = []
    while q:
        cell = q.popleft()
        for nb in g.neighbors(cell):
            if nb not in seen and cid[nb] == comp:
                seen.add(nb)
                out.append((nb, cell))
                q.append(nb)
    return out


def _pick_anchor(tau: CycleState, candidates) -> Cell:
    return max(candidates, key=lambda c: (len(tau.surviving.get(c, ())), -c[0], -c[1]))


def _grow_component(tau: CycleState, g: GridState, root: Cell, pairs) -> list[Cell]:
    tau.add_cycle(small_cycle(g.cell_nodes(root)), root)
    merged = {root}
    for cell, _parent in pairs:
        anchors = [nb for nb in g.neighbors(cell) if nb in merged]
        merge_cycles(tau, small_cycle(g.cell_nodes(cell)), _pick_anchor(tau, anchors), cell)
        merged.add(cell)
    return sorted(merged)


def _attach_sparse(tau: CycleState, g: GridState) -> list[Cell]:
    """Attach every nonempty sparse tile that touches a merged dense tile; return the rest."""
    left = []
    for r, c in zip(*np.nonzero((~g.dense) & (g.counts > 0))):
        cell = (int(r), int(c))
        anchors = [nb for nb in g.neighbors(cell) if tau.surviving.get(nb)]
        if not anchors:
            left.append(cell)
            continue
        attach_path(tau, sorted(int(x) for x in g.cell_nodes(cell)), _pick_anchor(tau, anchors))
    return left


@dataclass(frozen=True)
class BridgeStats:
    n_br: int
    max_edge: float
    n_edges: int
    gamma_actual: float
    t_dense: int = 0
    removed_total: int = 0
    added_total: int = 0
    max_removed: int = 0
    min_surviving: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def classify_edges(order: Sequence[int], points: np.ndarray, r_n: float, **ledger) -> BridgeStats:
    """Count bridges (length >= r_n) along the cyclic sequence ``order``."""
    order = np.asarray(order, dtype=np.int64)
    if len(order) == 0:
        return BridgeStats(0, 0.0, 0, 0.0, **ledger)
    p = np.asarray(points, dtype=float)[order]
    d = np.hypot(*(p - np.roll(p, -1, axis=0)).T)
    n_br = int((d >= r_n).sum())
    return BridgeStats(n_br, float(d.max()), len(order), n_br / len(order), **ledger)


def _ledger(tau: CycleState) -> dict:
    return {
        "t_dense": len(tau.surviving),
        "removed_total": sum(tau.removed_count.values()),
        "added_total": len(tau.added_edges),
        "max_removed": max(tau.removed_count.values(), default=0),
        "min_surviving": min((len(s) for s in tau.surviving.values()), default=0),
    }


def construct_hamiltonian(inst: Instance, g: GridState, b: Backbone) -> tuple[CycleState, BridgeStats]:
    """Build the bridged Hamiltonian cycle under F, not I and not J.

    Dense tiles of the backbone component are merged in BFS order, each into
    a star-adjacent merged tile with the most surviving edges; then every
    nonempty sparse tile is spliced in as a path.
    """
    n = inst.n
    if n < 3:
        raise PreconditionError("need at least 3 nodes for a cycle")
    if g.L < 9:
        raise PreconditionError(f"L must be ≥ 9, got {g.L}")
    I, comps = detect_I(g, b)
    J, cells = detect_J(g)
    if I or J:
        raise PreconditionError(f"event H does not hold (I={I}, J={J})")
    tau = CycleState(inst.points)
    root = min(b.cells)
    _grow_component(tau, g, root, merge_order(g, b, root))
    left = _attach_sparse(tau, g)
    if left:
        raise InvariantError(f"sparse cells without a dense neighbour: {left[:5]}")
    led = _ledger(tau)
    if led["min_surviving"] < g.L - MAX_REMOVED:
        raise InvariantError("a dense cell dropped below L - 8 surviving edges")
    order = tau.order()
    if len(order) != n:
        raise InvariantError(f"cycle covers {len(order)} of {n} nodes")
    return tau, classify_edges(order, inst.points, inst.r_n, **led)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reasons: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def validate(order: Sequence[int], points: np.ndarray, w: float, gamma: float,
             stats: Optional[BridgeStats] = None, r_n: Optional[float] = None) -> Verdict:
    """Check the (w, gamma)-bridged Hamiltonian cycle conditions from scratch.

    Bridges are counted against ``r_n`` when given, else taken from ``stats``.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    seq = [int(x) for x in order]
    reasons = []
    if len(seq) != n or sorted(seq) != list(range(n)):
        reasons.append("not Hamiltonian")
    if n >= 1 and seq:
        lengths = [math.dist(pts[seq[i]], pts[seq[(i + 1) % len(seq)]]) for i in range(len(seq))]
        longest = max(lengths)
        if not longest < w:
            reasons.append(f"max edge {longest!r} is not below {w!r}")
        if r_n is not None:
            n_br = sum(1 for x in lengths if x >= r_n)
        elif stats is not None:
            n_br = stats.n_br
        else:
            n_br = 0
        if n and n_br / n > gamma:
            reasons.append(f"bridge fraction {n_br}/{n} exceeds {gamma!r}")
        if stats is not None and r_n is not None and stats.n_br != n_br:
            reasons.append(f"stats report {stats.n_br} bridges, recount gives {n_br}")
    return Verdict(not reasons, tuple(reasons))


# -- best effort ----------------------------------------------------------------

def _stitch(tau: CycleState, pieces: list[tuple[str, list[int]]]) -> list[int]:
    """Greedy chaining: repeatedly enter the piece nearest to the chain's tail."""
    pts = np.asarray(tau.points, dtype=float)
    kind, first = pieces[0]
    chain = list(first)
    cand_nodes, cand_piece = [], []
    for pid, (k, nodes) in enumerate(pieces[1:], start=1):
        entry = nodes if k == "cycle" else ([nodes[0], nodes[-1]] if len(nodes) > 1 else nodes)
        cand_nodes.extend(entry)
        cand_piece.extend([pid] * len(entry))
    cand_nodes = np.asarray(cand_nodes, dtype=np.int64)
    cand_piece = np.asarray(cand_piece, dtype=np.int64)
    alive = np.ones(len(cand_nodes), dtype=bool)
    while alive.any():
        tail = pts[chain[-1]]
        d = np.hypot(*(pts[cand_nodes] - tail).T)
        d[~alive] = np.inf
        j = int(np.argmin(d))
        x, pid = int(cand_nodes[j]), int(cand_piece[j])
        k, nodes = pieces[pid]
        if k == "path":
            seq = nodes if x == nodes[0] else nodes[::-1]
        else:
            # open the cycle at x, dropping the longer of x's two edges
            fwd = tau.walk(x)
            if tau.dist(tau.pred[x], x) >= tau.dist(x, tau.succ[x]):
                seq = fwd
            else:
                seq = [x] + fwd[1:][::-1]
        chain.extend(seq)
        alive[cand_piece == pid] = False
    return chain


def best_effort_completion(inst: Instance, g: GridState, M_eff: int = 1,
                           events=None, backbone: Optional[Backbone] = None) -> tuple[CycleState, BridgeStats]:
    """Hamiltonian cycle over all nodes whether or not H holds.

    When H holds this is :func:`construct_hamiltonian`. Otherwise each dense
    component is merged on its own, sparse tiles attach where they can, and
    the leftover cycles and paths are chained by nearest-endpoint bridges of
    unbounded length. Nothing is guaranteed in that case.
    """
    n = inst.n
    if n < 3:
        raise PreconditionError("need at least 3 nodes for a cycle")
    if events is None:
        events, backbone = evaluate_events(g, M_eff)
    if events.H:
        return construct_hamiltonian(inst, g, backbone)
    tau = CycleState(inst.points)
    for comp in range(g.n_components):
        rows, cols = np.nonzero(g.component_id == comp)
        root = (int(rows[0]), int(cols[0]))
        _grow_component(tau, g, root, merge_order(g, comp, root))
    left = _attach_sparse(tau, g)
    pieces = [("cycle", c) for c in tau.cycles()]
    pieces += [("path", sorted(int(x) for x in g.cell_nodes(c))) for c in left]
    led = _ledger(tau)
    if len(pieces) > 1 or pieces[0][0] == "path":
        chain = _stitch(tau, pieces)
        tau.succ = [-1] * n
        tau.pred = [-1] * n
        tau.add_cycle(chain)
    order = tau.order()
    if len(order) != n:
        raise InvariantError(f"cycle covers {len(order)} of {n} nodes")
    return tau, classify_edges(order, inst.points, inst.r_n, **led)
