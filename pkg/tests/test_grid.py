import dataclasses
import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bridgedham.grid import (Rect, adjacent, build_backbone, build_grid, cell_indices, detect_F, detect_H,
                             detect_I, detect_J, evaluate_events, find_crossing, grid_snapshot, lr_crossing,
                             sparse_dual_crossing, strips, tb_plus_crossing)
from bridgedham.params import ModelParams, tile_side
from bridgedham.sampling import Density, Instance, sample_nodes
from helpers import grid_from_mask, points_from_counts
from oracles import dfs_lr_star, dfs_tb_plus, flood_labels

STAR = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]


def canonical_oracle(mask):
    """Lowermost crossing recomputed with networkx shortest-path lengths."""
    m = np.asarray(mask, dtype=bool)
    R, C = m.shape
    G = nx.Graph()
    for r, c in zip(*np.nonzero(m)):
        G.add_node((int(r), int(c)))
        for dr, dc in STAR:
            rr, cc = r + dr, c + dc
            if 0 <= rr < R and 0 <= cc < C and m[rr, cc]:
                G.add_edge((int(r), int(c)), (int(rr), int(cc)))
    src = [(r, 0) for r in range(R) if m[r, 0]]
    if not src:
        return None
    dist = nx.multi_source_dijkstra_path_length(G, src)
    ends = sorted(t for t in dist if t[1] == C - 1)
    if not ends:
        return None
    path = [ends[0]]
    while dist[path[-1]] > 0:
        d = dist[path[-1]]
        path.append(min(nb for nb in G[path[-1]] if dist.get(nb) == d - 1))
    return path[::-1]


def check_lr_path(mask, path):
    m = np.asarray(mask, dtype=bool)
    assert len(set(path)) == len(path)
    assert all(m[c] for c in path)
    assert path[0][1] == 0 and path[-1][1] == m.shape[1] - 1
    assert all(adjacent(a, b, "star") for a, b in zip(path, path[1:]))


def check_tb_plus_path(mask, path):
    m = np.asarray(mask, dtype=bool)
    assert all(m[c] for c in path)
    assert path[0][0] == m.shape[0] - 1 and path[-1][0] == 0
    assert all(adjacent(a, b, "plus") for a, b in zip(path, path[1:]))


# -- build_grid -----------------------------------------------------------------

def test_empty_instance():
    g = build_grid(Instance(np.zeros((0, 2)), 0.1), 5, 9)
    assert g.counts.sum() == 0 and not g.dense.any()
    assert g.n_components == 0 and (g.component_id == -1).all()


def test_single_dense_cell():
    counts = np.zeros((2, 2), dtype=int)
    counts[0, 0] = 9
    g = build_grid(Instance(points_from_counts(counts), 1.0), 2, 9)
    assert g.dense.sum() == 1 and g.dense[0, 0]
    assert g.n_components == 1 and g.component_id[0, 0] == 0


def test_boundary_convention():
    pts = np.array([[-0.5, -0.5], [0.5, 0.5], [0.0, 0.0], [-0.25, 0.25], [0.5, -0.5]])
    rc = cell_indices(pts, 4)
    assert rc.tolist() == [[0, 0], [3, 3], [2, 2], [3, 1], [0, 3]]


def test_partition_and_cell_nodes():
    p = ModelParams(n=3000, alpha=20, omega=2)
    inst = sample_nodes(p, Density.uniform(), 11)
    g = build_grid(inst, tile_side(p), 9)
    assert g.counts.sum() == 3000
    seen = np.concatenate([g.cell_nodes((r, c)) for r in range(g.K) for c in range(g.K)])
    assert sorted(seen.tolist()) == list(range(3000))
    for r in range(g.K):
        for c in range(g.K):
            nodes = g.cell_nodes((r, c))
            assert list(nodes) == sorted(nodes)
            assert len(nodes) == g.counts[r, c]
            if len(nodes):
                assert (cell_indices(inst.points[nodes], g.K) == [r, c]).all()
    assert (g.dense == (g.counts >= 9)).all()


@pytest.mark.parametrize("seed", range(5))
def test_components_match_flood_fill(seed):
    p = ModelParams(n=2000, alpha=35, omega=5)
    g = build_grid(sample_nodes(p, Density.uniform(), seed), tile_side(p), 9)
    ours = set()
    for k in range(g.n_components):
        ours.add(frozenset(map(tuple, np.argwhere(g.component_id == k).tolist())))
    assert ours == flood_labels(g.dense)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 12).flatmap(lambda K: st.lists(st.booleans(), min_size=K * K, max_size=K * K)
                                  .map(lambda v: np.array(v).reshape(K, K))))
def test_components_property(mask):
    _, g = grid_from_mask(mask)
    parts = {frozenset(map(tuple, np.argwhere(g.component_id == k).tolist())) for k in range(g.n_components)}
    assert parts == flood_labels(mask)


# -- adjacency ------------------------------------------------------------------

def test_adjacent():
    assert adjacent((0, 0), (1, 1), "star") and not adjacent((0, 0), (1, 1), "plus")
    assert adjacent((0, 0), (0, 1), "star") and adjacent((0, 0), (0, 1), "plus")
    assert not adjacent((0, 0), (0, 2), "star") and not adjacent((0, 0), (0, 2), "plus")
    assert not adjacent((3, 3), (3, 3), "star")


# -- crossings ------------------------------------------------------------------

def test_all_dense_rectangle_gives_bottom_row():
    m = np.ones((4, 12), dtype=bool)
    assert lr_crossing(m) == [(0, c) for c in range(12)]
    assert tb_plus_crossing(~m) is None


def test_all_sparse_rectangle():
    m = np.zeros((4, 12), dtype=bool)
    assert lr_crossing(m) is None
    path = tb_plus_crossing(~m)
    assert path is not None
    check_tb_plus_path(~m, path)


def test_star_crossing_jumps_corners():
    # diagonal staircase: no plus path but a star path
    m = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=bool)
    assert lr_crossing(m) == [(0, 0), (1, 1), (2, 2), (3, 3)]
    assert tb_plus_crossing(~m) is None


def test_random_small_grids_against_dfs_oracle():
    rng = np.random.default_rng(123)
    for _ in range(3000):
        R, C = int(rng.integers(1, 7)), int(rng.integers(1, 21))
        m = rng.random((R, C)) < rng.uniform(0.2, 0.9)
        lr = lr_crossing(m)
        tb = tb_plus_crossing(~m)
        assert (lr is not None) == dfs_lr_star(m)
        assert (tb is not None) == dfs_tb_plus(~m)
        assert (lr is None) != (tb is None)
        if lr is not None:
            check_lr_path(m, lr)
            assert lr == canonical_oracle(m)
        if tb is not None:
            check_tb_plus_path(~m, tb)


def test_find_crossing_on_grid_orientations():
    mask = np.ones((6, 6), dtype=bool)
    _, g = grid_from_mask(mask)
    h = find_crossing(g, Rect("H", 1, 3))
    assert h.cells == tuple((3, c) for c in range(6))
    v = find_crossing(g, Rect("V", 1, 2))
    # leftmost column of the strip, top to bottom
    assert v.cells == tuple((r, 2) for r in range(5, -1, -1))


@pytest.mark.parametrize("seed", range(20))
def test_vertical_crossing_matches_transposed_oracle(seed):
    rng = np.random.default_rng(seed)
    mask = rng.random((8, 8)) < 0.6
    _, g = grid_from_mask(mask)
    for rect in strips(8, 4):
        x = find_crossing(g, rect)
        cols = rect.span()
        sub = mask[:, cols.start:cols.stop]
        if rect.orientation == "H":
            sub = mask[cols.start:cols.stop, :]
            ref = canonical_oracle(sub)
            assert (x is None) == (ref is None)
            if x is not None:
                assert list(x.cells) == [(cols.start + r, c) for r, c in ref]
        else:
            view = sub[::-1, :].T
            ref = canonical_oracle(view)
            assert (x is None) == (ref is None)
            if x is not None:
                assert list(x.cells) == [(7 - j, cols.start + i) for i, j in ref]
                assert x.cells[0][0] == 7 and x.cells[-1][0] == 0
            dual = sparse_dual_crossing(g, rect)
            assert (dual is None) == (x is not None)
            if dual is not None:
                assert all(not mask[c] for c in dual)
                assert {dual[0][1], dual[-1][1]} == {cols.start, cols.stop - 1} or len(cols) == 1


# -- events ---------------------------------------------------------------------

def test_detect_F_all_dense():
    _, g = grid_from_mask(np.ones((6, 6), dtype=bool))
    F, found = detect_F(g, 2)
    assert F and len(found) == 2 * 6 // 2
    b = build_backbone(g, found)
    expected = {(r, c) for r in (0, 2, 4) for c in range(6)} | {(r, c) for c in (0, 2, 4) for r in range(6)}
    assert b.cells == expected
    assert b.component == 0


def test_detect_F_blocked_strip():
    mask = np.ones((6, 6), dtype=bool)
    mask[2:4, :] = False
    _, g = grid_from_mask(mask)
    F, found = detect_F(g, 2)
    assert not F
    missing = [r.name() for r, c in found.items() if c is None]
    # the sparse band also cuts every vertical strip
    assert missing == ["H1", "V0", "V1", "V2"]
    rep = detect_H((F, found), (False, []), (False, []))
    assert "H1" in rep.witnesses["F"] and not rep.H


def test_detect_I_examples():
    mask = np.ones((8, 8), dtype=bool)
    _, g = grid_from_mask(mask)
    F, found = detect_F(g, 4)
    b = build_backbone(g, found)
    assert detect_I(g, b) == (False, [])
    mask[6:, 6:] = False
    mask[7, 7] = True
    _, g = grid_from_mask(mask)
    F, found = detect_F(g, 4)
    b = build_backbone(g, found)
    I, wit = detect_I(g, b)
    assert I and wit == [int(g.component_id[7, 7])]
    assert detect_I(g, None) == (False, [])


def brute_J(dense):
    K = dense.shape[0]
    out = []
    for r in range(K):
        for c in range(K):
            nbrs = [(r + dr, c + dc) for dr, dc in STAR if 0 <= r + dr < K and 0 <= c + dc < K]
            if nbrs and all(not dense[x] for x in nbrs):
                out.append((r, c))
    return out


def test_detect_J_examples():
    _, g = grid_from_mask(np.ones((4, 4), dtype=bool))
    assert detect_J(g) == (False, [])
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True
    _, g = grid_from_mask(mask)
    J, cells = detect_J(g)
    # every cell next to the centre sees it; only the centre has all-sparse neighbours
    assert J and cells == [(1, 1)]


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10).flatmap(lambda K: st.lists(st.booleans(), min_size=K * K, max_size=K * K)
                                  .map(lambda v: np.array(v).reshape(K, K))))
def test_detect_J_brute_force(mask):
    _, g = grid_from_mask(mask)
    J, cells = detect_J(g)
    assert cells == brute_J(mask) and J == bool(cells)


@pytest.mark.parametrize("F,I,J,H", [(True, False, False, True), (True, True, False, False),
                                     (True, False, True, False), (False, False, False, False),
                                     (False, True, True, False)])
def test_detect_H_table(F, I, J, H):
    assert detect_H(F, I, J).H is H


@pytest.mark.parametrize("seed", range(30))
def test_seeded_events_against_oracles(seed, mixed):
    spec = tile_side(mixed)
    g = build_grid(sample_nodes(mixed, Density.uniform(), seed), spec, mixed.L)
    M_eff = 7
    rep, b = evaluate_events(g, M_eff)
    # F: every strip crossed per the DFS oracle
    F_ref = True
    for rect in strips(g.K, M_eff):
        s = rect.span()
        sub = g.dense[s.start:s.stop, :] if rect.orientation == "H" else g.dense[:, s.start:s.stop][::-1, :].T
        F_ref &= dfs_lr_star(sub)
    assert rep.F == F_ref
    n_comp = len(flood_labels(g.dense))
    assert rep.I == (rep.F and n_comp > 1)
    assert rep.J == bool(brute_J(g.dense))
    assert rep.H == (rep.F and not rep.I and not rep.J)
    if b is not None:
        assert len({int(g.component_id[c]) for c in b.cells}) == 1
        ref_cells = set()
        for rect in strips(g.K, M_eff):
            s = rect.span()
            if rect.orientation == "H":
                ref_cells |= {(s.start + r, c) for r, c in canonical_oracle(g.dense[s.start:s.stop, :])}
            else:
                ref = canonical_oracle(g.dense[:, s.start:s.stop][::-1, :].T)
                ref_cells |= {(g.K - 1 - j, s.start + i) for i, j in ref}
        assert b.cells == ref_cells


def test_events_invariant_under_relabeling(mixed):
    spec = tile_side(mixed)
    for seed in range(10):
        g = build_grid(sample_nodes(mixed, Density.uniform(), seed), spec, mixed.L)
        rep, b = evaluate_events(g, 7)
        if b is None or g.n_components < 2:
            continue
        perm = np.random.default_rng(seed).permutation(g.n_components)
        relabeled = np.where(g.component_id >= 0, perm[np.maximum(g.component_id, 0)], -1)
        g2 = dataclasses.replace(g, component_id=relabeled)
        b2 = build_backbone(g2, detect_F(g2, 7)[1])
        assert detect_I(g2, b2)[0] == rep.I
        assert detect_J(g2)[0] == rep.J


def test_grid_snapshot_json():
    mask = np.ones((4, 4), dtype=bool)
    _, g = grid_from_mask(mask)
    rep, b = evaluate_events(g, 2)
    snap = json.loads(json.dumps(grid_snapshot(g, b)))
    assert set(snap) == {"K", "L", "counts", "dense", "components", "backbone_cells"}
    assert snap["K"] == 4 and len(snap["counts"]) == 4 and [0, 0] in snap["backbone_cells"]
