"""Seeded trials, Monte Carlo batches and the sparse-square diagnostics."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .cycle import (BridgeStats, CycleState, PreconditionError, best_effort_completion,
                    construct_hamiltonian, validate)
from .grid import Backbone, EventReport, GridState, InvariantError, build_grid, evaluate_events
from .params import ModelParams, TilingSpec, bridge_budget, rect_width, tile_side
from .sampling import Density, Instance, sample_nodes

MODES = ("strict", "best_effort")

CSV_COLUMNS = ("seed", "n", "L", "alpha", "omega", "eps1", "M_eff", "r_n", "K", "t_n", "gamma_n",
               "F", "I", "J", "H", "success", "t_dense", "n_br", "max_edge", "gamma_actual", "runtime_ms")


def fmt_real(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class TrialReport:
    seed: Optional[int]
    params: dict
    events: dict
    success: bool
    mode: str = "strict"
    stats: Optional[BridgeStats] = None
    within_guarantee: bool = False
    failure_reason: Optional[str] = None
    runtime_ms: float = 0.0

    def as_dict(self, runtime: bool = True) -> dict:
        d = {
            "seed": self.seed,
            "mode": self.mode,
            "params": self.params,
            "events": self.events,
            "success": self.success,
            "within_guarantee": self.within_guarantee,
            "stats": self.stats.as_dict() if self.stats else None,
            "failure_reason": self.failure_reason,
        }
        if runtime:
            d["runtime_ms"] = self.runtime_ms
        return d

    def csv_row(self) -> list[str]:
        p, e, s = self.params, self.events, self.stats

        def b(x):
            return "1" if x else "0"

        return [
            str(self.seed), str(p["n"]), str(p["L"]), fmt_real(p["alpha"]), fmt_real(p["omega"]),
            fmt_real(p["eps1"]), str(p["M_eff"]), fmt_real(p["r_n"]), str(p["K"]), fmt_real(p["t_n"]),
            fmt_real(p["gamma_n"]), b(e["F"]), b(e["I"]), b(e["J"]), b(e["H"]), b(self.success),
            str(s.t_dense) if s else "", str(s.n_br) if s else "",
            fmt_real(s.max_edge) if s else "", fmt_real(s.gamma_actual) if s else "",
            fmt_real(self.runtime_ms),
        ]


@dataclass
class Trial:
    """Everything a trial produced, for rendering and exports."""

    report: TrialReport
    instance: Instance
    spec: TilingSpec
    grid: GridState
    events: EventReport
    backbone: Optional[Backbone] = None
    cycle: Optional[CycleState] = None
    order: Optional[list] = None


def effective_width(p: ModelParams, K: int) -> int:
    # strips cannot be wider than the grid
    return rect_width(min(p.M, K), K)


def params_echo(p: ModelParams, spec: TilingSpec, M_eff: int) -> dict:
    return {"n": p.n, "L": p.L, "alpha": p.alpha, "omega": p.omega, "eps1": p.eps1, "M_eff": M_eff,
            "r_n": spec.r_n, "K": spec.K, "t_n": spec.t_n, "gamma_n": spec.gamma_n}


def execute_trial(p: ModelParams, d: Density, seed: Optional[int], mode: str = "strict",
                  points: Optional[np.ndarray] = None) -> Trial:
    """Sample, tile, test events, build and validate; see :func:`run_trial`."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    t0 = time.perf_counter()
    spec = tile_side(p)
    M_eff = effective_width(p, spec.K)
    if points is None:
        inst = sample_nodes(p, d, seed)
    else:
        inst = Instance(points, spec.r_n, seed)
        if inst.n != p.n:
            raise ValueError(f"point set has {inst.n} nodes but n={p.n}")
    g = build_grid(inst, spec, p.L)
    events, backbone = evaluate_events(g, M_eff)
    _, budget = bridge_budget(p.L)
    w = 2.0 * spec.r_n
    tau = stats = order = None
    success = within = False
    reason = None
    if not events.H:
        reason = f"H failed (F={events.F}, I={events.I}, J={events.J})"
        if events.witnesses:
            reason += f"; witnesses: {_short(events.witnesses)}"
    try:
        if events.H:
            tau, stats = construct_hamiltonian(inst, g, backbone)
        elif mode == "best_effort" and p.n >= 3:
            tau, stats = best_effort_completion(inst, g, M_eff, events, backbone)
        if tau is not None:
            order = tau.order()
            within = validate(order, inst.points, w, budget, stats, spec.r_n).ok
            if mode == "strict":
                success = within
                if not within:
                    reason = "; ".join(validate(order, inst.points, w, budget, stats, spec.r_n).reasons)
            else:
                success = validate(order, inst.points, math.inf, 1.0).ok
                if reason is not None:
                    reason += "; best-effort cycle is outside the guarantee"
    except (InvariantError, PreconditionError) as exc:
        reason = f"internal: {exc}"
        success = within = False
    report = TrialReport(
        seed=seed, params=params_echo(p, spec, M_eff), events=events.as_dict(), success=success,
        mode=mode, stats=stats, within_guarantee=within, failure_reason=reason,
        runtime_ms=(time.perf_counter() - t0) * 1e3)
    return Trial(report, inst, spec, g, events, backbone, tau, order)


def _short(witnesses: dict, k: int = 3) -> str:
    parts = []
    for key, val in witnesses.items():
        more = f" (+{len(val) - k})" if len(val) > k else ""
        parts.append(f"{key}={val[:k]}{more}")
    return ", ".join(parts)


def run_trial(p: ModelParams, d: Density, seed: Optional[int], mode: str = "strict",
              points: Optional[np.ndarray] = None) -> TrialReport:
    """One deterministic trial: sample, grid, events, construct, classify, validate.

    Strict mode builds only when H holds; ``success`` then means the cycle is
    a (2 r_n, min(1, 16/(L-8)))-bridged Hamiltonian cycle. Best-effort mode
    always returns a Hamiltonian cycle and reports whether it happens to meet
    the same bounds in ``within_guarantee``.
    """
    return execute_trial(p, d, seed, mode, points).report


@dataclass
class BatchSummary:
    trials: int
    mode: str
    base_seed: int
    rates: dict
    aggregates: dict
    rows: list = field(default_factory=list)

    def as_dict(self, rows: bool = False, runtime: bool = True) -> dict:
        d = {"trials": self.trials, "mode": self.mode, "base_seed": self.base_seed,
             "rates": self.rates, "aggregates": self.aggregates}
        if rows:
            d["rows"] = [r.as_dict(runtime=runtime) for r in self.rows]
        return d


def summarize(reports: Iterable[TrialReport], mode: str, base_seed: int) -> BatchSummary:
    """Fold trial reports into rates and aggregates; input order does not matter."""
    rows = sorted(reports, key=lambda r: (r.seed is None, r.seed))
    m = len(rows)
    if m == 0:
        raise ValueError("no trials to summarise")
    rates = {k: sum(r.events[k] for r in rows) / m for k in ("F", "I", "J", "H")}
    rates["success"] = sum(r.success for r in rows) / m
    done = [r for r in rows if r.success and r.stats is not None]
    agg = {"successes": len(done)}
    if done:
        gam = [r.stats.gamma_actual for r in done]
        ratio = [r.stats.max_edge / r.params["r_n"] for r in done]
        td = [r.stats.t_dense for r in done]
        agg.update({
            "gamma_actual_mean": math.fsum(gam) / len(done), "gamma_actual_max": max(gam),
            "max_edge_ratio_mean": math.fsum(ratio) / len(done), "max_edge_ratio_max": max(ratio),
            "t_dense_mean": math.fsum(td) / len(done), "t_dense_max": max(td),
        })
    return BatchSummary(m, mode, base_seed, rates, agg, rows)


def _trial_job(args):
    p, d, seed, mode = args
    return run_trial(p, d, seed, mode)


def default_jobs() -> int:
    return os.cpu_count() or 1


def run_batch(p: ModelParams, d: Density, trials: int, base_seed: int = 0, mode: str = "strict",
              jobs: int = 1) -> BatchSummary:
    """Trials with seeds ``base_seed + i``; parallel when ``jobs > 1``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    work = [(p, d, base_seed + i, mode) for i in range(trials)]
    if jobs <= 1:
        reports = [_trial_job(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_trial_job, work, chunksize=max(1, trials // (4 * jobs))))
    return summarize(reports, mode, base_seed)


def write_batch_csv(path, summary: BatchSummary) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in summary.rows:
            w.writerow(r.csv_row())


# -- sparse-square diagnostics ---------------------------------------------------

def sparse_probability_bound(q: int, p: ModelParams, spec: TilingSpec, C: float = 1.0) -> float:
    """``C (log n)^(L q) exp(-eps1 q n t_n^2)``: shape of the joint sparse-square bound."""
    if q < 1 or C <= 0:
        raise ValueError("need q >= 1 and C > 0")
    log_val = math.log(C) + p.L * q * math.log(math.log(p.n)) - p.eps1 * q * p.n * spec.t_n ** 2
    return math.exp(log_val)


def empirical_sparse_rate(grids: Iterable[GridState], cell) -> float:
    """Fraction of grids in which ``cell`` holds fewer than L nodes."""
    hits = total = 0
    K = None
    for g in grids:
        if K is None:
            K = g.K
        elif g.K != K:
            raise ValueError("grids must share K")
        hits += int(not g.dense[cell])
        total += 1
    if total == 0:
        raise ValueError("no grids")
    return hits / total


def sample_grids(p: ModelParams, d: Density, trials: int, base_seed: int = 0):
    spec = tile_side(p)
    for i in range(trials):
        yield build_grid(sample_nodes(p, d, base_seed + i), spec, p.L)


def binomial_sparse_tail(n: int, area: float, L: int) -> float:
    """P(Bin(n, area) < L)."""
    from scipy.stats import binom

    return float(binom.cdf(L - 1, n, area))
