"""Node positions in S = [-1/2, 1/2]^2 under bounded piecewise-constant densities."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .params import ModelParams, ParameterError, radius

HALF = 0.5


@dataclass(frozen=True)
class Patch:
    """Axis-aligned rectangle [x0, x1) x [y0, y1) carrying a constant weight."""

    x0: float
    y0: float
    x1: float
    y1: float
    weight: float

    def area(self) -> Fraction:
        return (Fraction(self.x1) - Fraction(self.x0)) * (Fraction(self.y1) - Fraction(self.y0))


@dataclass(frozen=True)
class Density:
    kind: str = "uniform"
    patches: tuple[Patch, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind == "uniform":
            if self.patches:
                raise ParameterError("uniform density takes no patches")
            return
        if self.kind != "step":
            raise ParameterError(f"unknown density kind {self.kind!r}")
        if not self.patches:
            raise ParameterError("step density needs at least one patch")
        lo, hi = Fraction(-1, 2), Fraction(1, 2)
        for p in self.patches:
            if not (lo <= Fraction(p.x0) < Fraction(p.x1) <= hi and lo <= Fraction(p.y0) < Fraction(p.y1) <= hi):
                raise ParameterError(f"patch {p} is empty or leaves the unit square")
            if not (p.weight > 0 and np.isfinite(p.weight)):
                raise ParameterError(f"patch weight must be positive and finite, got {p.weight}")
        for i, a in enumerate(self.patches):
            for b in self.patches[i + 1:]:
                if a.x0 < b.x1 and b.x0 < a.x1 and a.y0 < b.y1 and b.y0 < a.y1:
                    raise ParameterError(f"patches {a} and {b} overlap")
        if sum(p.area() for p in self.patches) != 1:
            raise ParameterError("patches must cover the unit square exactly")
        mass = sum(p.area() * Fraction(p.weight) for p in self.patches)
        if abs(float(mass) - 1.0) > 1e-12:
            raise ParameterError(f"density integrates to {float(mass)!r}, not 1")

    @classmethod
    def uniform(cls) -> "Density":
        return cls("uniform")

    @classmethod
    def halves(cls, left: float, right: float) -> "Density":
        """Left half x < 0 at weight ``left``, right half at ``right``."""
        return cls("step", (Patch(-HALF, -HALF, 0.0, HALF, left), Patch(0.0, -HALF, HALF, HALF, right)))

    def __call__(self, xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        if self.kind == "uniform":
            return np.ones(len(xy))
        out = np.zeros(len(xy))
        x, y = xy[:, 0], xy[:, 1]
        for p in self.patches:
            # closed on the right/top edge of S so the boundary is covered
            inx = (x >= p.x0) & ((x < p.x1) | ((p.x1 == HALF) & (x == HALF)))
            iny = (y >= p.y0) & ((y < p.y1) | ((p.y1 == HALF) & (y == HALF)))
            out[inx & iny] = p.weight
        return out

    def to_dict(self) -> dict:
        return {"kind": self.kind, "patches": [[p.x0, p.y0, p.x1, p.y1, p.weight] for p in self.patches]}

    @classmethod
    def from_dict(cls, d: dict) -> "Density":
        return cls(d.get("kind", "uniform"), tuple(Patch(*map(float, q)) for q in d.get("patches", ())))


def density_bounds(d: Density) -> tuple[float, float]:
    if d.kind == "uniform":
        return 1.0, 1.0
    w = [p.weight for p in d.patches]
    return min(w), max(w)


@dataclass(frozen=True, eq=False)
class Instance:
    points: np.ndarray
    r_n: float
    seed: int | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        if pts.size and (np.abs(pts) > HALF).any():
            raise ParameterError("points must lie in [-1/2, 1/2]^2")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def sample_nodes(p: ModelParams, d: Density, seed: int) -> Instance:
    """Draw ``p.n`` i.i.d. points from ``d``.

    Step densities use rejection against the uniform proposal with
    acceptance probability ``f(x) / max f``. The generator is PCG64 seeded
    through ``SeedSequence(seed)``, so a trial is reproducible from its own
    seed alone.
    """
    lo, hi = density_bounds(d)
    if lo < p.eps1 or hi > p.eps2:
        raise ParameterError(
            f"density range [{lo}, {hi}] is not inside [eps1, eps2] = [{p.eps1}, {p.eps2}]")
    rng = _rng(seed)
    if d.kind == "uniform":
        pts = rng.random((p.n, 2)) - HALF
    else:
        chunks, have = [], 0
        while have < p.n:
            m = int((p.n - have) * hi * 1.1) + 16
            cand = rng.random((m, 2)) - HALF
            keep = cand[rng.random(m) * hi < d(cand)]
            chunks.append(keep)
            have += len(keep)
        pts = np.concatenate(chunks)[: p.n]
    return Instance(pts, radius(p), seed)


def write_points_csv(path: str | Path, points: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        for x, y in np.asarray(points, dtype=float):
            w.writerow([f"{x:.17g}", f"{y:.17g}"])


def read_points_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and not {"x", "y"} <= rows[0].keys():
        raise ParameterError(f"{path}: expected header 'x,y'")
    return np.array([[float(r["x"]), float(r["y"])] for r in rows], dtype=float).reshape(-1, 2)
