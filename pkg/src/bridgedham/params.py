"""Scalar parameters: adjacency radius, tiling order and bridge budget."""

from __future__ import annotations

import math
from dataclasses import dataclass


class ParameterError(ValueError):
    """Raised for parameter combinations outside the model's domain."""


@dataclass(frozen=True)
class ModelParams:
    n: int
    alpha: float = 0.0
    omega: float = 0.0
    eps1: float = 1.0
    eps2: float = 1.0
    L: int = 9
    M: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"n must be an integer >= 2, got {self.n}")
        for name in ("alpha", "omega", "eps1", "eps2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v}")
        if self.alpha < 0:
            raise ParameterError(f"alpha must be >= 0, got {self.alpha}")
        if self.omega < 0:
            raise ParameterError(f"omega must be >= 0, got {self.omega}")
        if not 0 < self.eps1 <= 1:
            raise ParameterError(f"eps1 must lie in (0, 1], got {self.eps1}")
        if self.eps2 < self.eps1:
            raise ParameterError(f"eps2 must be >= eps1, got eps1={self.eps1}, eps2={self.eps2}")
        if int(self.L) != self.L or self.L < 9:
            raise ParameterError(f"L must be ≥ 9, got {self.L}")
        if int(self.M) != self.M or self.M < 1:
            raise ParameterError(f"M must be a positive integer, got {self.M}")
        if self.alpha > 0 and self.n <= math.e:
            raise ParameterError("alpha > 0 needs n > e so that log log n > 0")

    @property
    def theta(self) -> float:
        """(log n + alpha log log n + omega) / eps1."""
        n = self.n
        loglog = math.log(math.log(n)) if self.alpha > 0 else 0.0
        return (math.log(n) + self.alpha * loglog + self.omega) / self.eps1


@dataclass(frozen=True)
class TilingSpec:
    """Exact K x K tiling of the unit square, side ``t_n = 1/K``."""

    K: int
    theta_n: float
    gamma_n: float
    r_n: float

    @property
    def t_n(self) -> float:
        return 1.0 / self.K

    @property
    def gamma_flagged(self) -> bool:
        # gamma_n in (0, 1) is only promised asymptotically
        return not 0.0 <= self.gamma_n < 1.0


def radius(p: ModelParams) -> float:
    """Adjacency radius ``r_n = sqrt(theta / (4 n))``."""
    return math.sqrt(p.theta / (4.0 * p.n))


def tile_side(p: ModelParams) -> TilingSpec:
    """Smallest grid order K with ``8 n / K^2 < theta``.

    ``gamma_n = theta - 8 n / K^2`` is returned as slack; values >= 1 are
    legal at finite n and only flagged.
    """
    theta = p.theta
    K = max(1, math.isqrt(int(8 * p.n / theta)))
    while 8 * p.n >= theta * K * K:
        K += 1
    while K > 1 and 8 * p.n < theta * (K - 1) ** 2:
        K -= 1
    return TilingSpec(K=K, theta_n=theta, gamma_n=theta - 8 * p.n / K**2, r_n=radius(p))


def bridge_budget(L: int) -> tuple[float, float]:
    """Raw bridge fraction ``16/(L-8)`` and its clamp to 1."""
    if L <= 8:
        raise ParameterError(f"L must be ≥ 9, got {L}")
    raw = 16.0 / (L - 8)
    return raw, min(1.0, raw)


def rect_width(M: int, K: int) -> int:
    """Smallest divisor of K that is at least M, so the strips tile the grid."""
    if M < 1:
        raise ParameterError(f"M must be >= 1, got {M}")
    if M > K:
        raise ParameterError(f"M={M} exceeds the grid order K={K}")
    for m in range(M, K + 1):
        if K % m == 0:
            return m
    return K


def params_record(p: ModelParams) -> dict:
    spec = tile_side(p)
    raw, eff = bridge_budget(p.L)
    return {
        "n": p.n,
        "alpha": p.alpha,
        "omega": p.omega,
        "eps1": p.eps1,
        "L": p.L,
        "M_eff": rect_width(min(p.M, spec.K), spec.K),
        "r_n": spec.r_n,
        "K": spec.K,
        "t_n": spec.t_n,
        "gamma_n": spec.gamma_n,
        "theta_n": spec.theta_n,
        "budget_raw": raw,
        "budget_effective": eff,
    }
