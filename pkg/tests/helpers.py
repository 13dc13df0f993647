import numpy as np

from bridgedham.grid import build_grid
from bridgedham.sampling import Instance


def points_from_counts(counts, seed=0):
    """Points with exactly counts[r, c] nodes strictly inside tile (r, c)."""
    counts = np.asarray(counts, dtype=int)
    K = counts.shape[0]
    rng = np.random.default_rng(seed)
    pts = []
    for r in range(K):
        for c in range(K):
            k = counts[r, c]
            if k:
                u = rng.uniform(0.05, 0.95, size=(k, 2))
                x = (c + u[:, 0]) / K - 0.5
                y = (r + u[:, 1]) / K - 0.5
                pts.append(np.column_stack([x, y]))
    return np.concatenate(pts) if pts else np.zeros((0, 2))


def grid_from_mask(mask, L=9, extra=0, seed=0, r_n=None):
    """Grid whose dense tiles are exactly ``mask`` (L + extra nodes each, sparse tiles empty)."""
    mask = np.asarray(mask, dtype=bool)
    K = mask.shape[0]
    pts = points_from_counts(mask * (L + extra), seed)
    inst = Instance(pts, r_n if r_n is not None else 1.5 / K)
    return inst, build_grid(inst, K, L)
