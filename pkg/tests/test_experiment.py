import math
import random

import numpy as np
import pytest

from bridgedham.experiment import (CSV_COLUMNS, binomial_sparse_tail, empirical_sparse_rate, run_batch,
                                   run_trial, sample_grids, sparse_probability_bound, summarize,
                                   write_batch_csv)
from bridgedham.grid import build_grid
from bridgedham.params import ModelParams, tile_side
from bridgedham.sampling import Density, sample_nodes
from oracles import binom_tail_exact


def test_trial_determinism(practical):
    a = run_trial(practical, Density.uniform(), 5)
    b = run_trial(practical, Density.uniform(), 5)
    assert a.as_dict(runtime=False) == b.as_dict(runtime=False)
    assert a.csv_row()[:-1] == b.csv_row()[:-1]


def test_calibrated_trial_seed_1(calibrated):
    r = run_trial(calibrated, Density.uniform(), 1)
    assert r.events["H"] and r.success and r.within_guarantee
    assert r.stats.gamma_actual <= 0.5
    assert r.stats.max_edge < 2 * r.params["r_n"]
    assert r.params["K"] == 11 and r.params["M_eff"] == 11


def test_tiny_n_fails_in_strict_mode():
    r = run_trial(ModelParams(n=10, L=9, M=4), Density.uniform(), 1)
    assert not r.events["H"] and not r.success
    assert r.failure_reason.startswith("H failed")
    be = run_trial(ModelParams(n=10, L=9, M=4), Density.uniform(), 1, "best_effort")
    assert be.success and not be.within_guarantee and be.stats.n_edges == 10


def test_strict_success_implies_H_and_validity(mixed):
    s = run_batch(mixed, Density.uniform(), 30, 100)
    assert 0 < s.rates["H"] < 1
    for r in s.rows:
        if r.success:
            assert r.events["H"] and r.within_guarantee
            assert r.stats.max_edge < 2 * r.params["r_n"] and r.stats.gamma_actual <= 1.0
        assert r.events["H"] == (r.events["F"] and not r.events["I"] and not r.events["J"])
    assert s.rates["success"] <= s.rates["H"]
    assert all(0 <= v <= 1 for v in s.rates.values())


def test_batch_of_one_matches_trial(practical):
    s = run_batch(practical, Density.uniform(), 1, 9)
    r = run_trial(practical, Density.uniform(), 9)
    assert s.rates["H"] == float(r.events["H"]) and s.rates["success"] == float(r.success)
    assert s.rows[0].as_dict(runtime=False) == r.as_dict(runtime=False)


def test_batch_determinism_and_order_independence(mixed):
    a = run_batch(mixed, Density.uniform(), 12, 3)
    b = run_batch(mixed, Density.uniform(), 12, 3)
    assert a.as_dict(rows=True, runtime=False) == b.as_dict(rows=True, runtime=False)
    rows = list(a.rows)
    random.Random(0).shuffle(rows)
    c = summarize(rows, a.mode, a.base_seed)
    assert c.as_dict(rows=True, runtime=False) == a.as_dict(rows=True, runtime=False)


def test_batch_parallel_equals_serial(practical):
    a = run_batch(practical, Density.uniform(), 6, 0, jobs=1)
    b = run_batch(practical, Density.uniform(), 6, 0, jobs=2)
    assert a.as_dict(rows=True, runtime=False) == b.as_dict(rows=True, runtime=False)


def test_step_density_trial():
    p = ModelParams(n=3000, alpha=40, omega=5, eps1=0.5, eps2=1.5, L=9, M=4)
    r = run_trial(p, Density.halves(1.5, 0.5), 2, "best_effort")
    assert r.success and r.stats.n_edges == 3000


def test_csv_output(tmp_path, practical):
    s = run_batch(practical, Density.uniform(), 3, 0)
    path = tmp_path / "b.csv"
    write_batch_csv(path, s)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 4
    row = dict(zip(CSV_COLUMNS, lines[1].split(",")))
    assert row["H"] in ("0", "1") and row["seed"] == "0"
    assert float(row["r_n"]) == s.rows[0].params["r_n"]


def test_sparse_bound_example():
    p = ModelParams(n=10**5, omega=1, L=9)
    spec = tile_side(p)
    assert spec.K == 253
    val = sparse_probability_bound(1, p, spec, 1.0)
    # direct evaluation of (log 1e5)^9 * exp(-1e5 / 253^2)
    assert val == pytest.approx(745043314.4136437, rel=1e-10)
    assert val == pytest.approx(math.log(1e5) ** 9 * math.exp(-1e5 / 253**2), rel=1e-12)


def test_sparse_bound_identities():
    p = ModelParams(n=10**5, omega=1, L=9)
    spec = tile_side(p)
    C = 3.7
    b1 = sparse_probability_bound(1, p, spec, C)
    b2 = sparse_probability_bound(2, p, spec, C)
    assert b2 == pytest.approx(b1**2 / C, rel=1e-12)
    vals = []
    for omega in (0.0, 5.0, 20.0, 80.0):
        q = ModelParams(n=10**5, omega=omega, L=9)
        vals.append(sparse_probability_bound(1, q, tile_side(q), 1.0))
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_empirical_sparse_rate_extremes():
    p = ModelParams(n=4000, alpha=0, omega=0)
    spec = tile_side(p)
    inst = [sample_nodes(p, Density.uniform(), s) for s in range(20)]
    cell = (spec.K // 2, spec.K // 2)
    # L = 1 on 4 tiles: essentially always occupied
    assert empirical_sparse_rate([build_grid(i, 2, 1) for i in inst], (0, 0)) == 0.0
    assert empirical_sparse_rate([build_grid(i, spec, p.n + 1) for i in inst], cell) == 1.0
    with pytest.raises(ValueError):
        empirical_sparse_rate([build_grid(inst[0], 2, 1), build_grid(inst[1], 3, 1)], (0, 0))


def test_binomial_tail_helper():
    assert binomial_sparse_tail(1000, 0.01, 9) == pytest.approx(binom_tail_exact(1000, 0.01, 9), rel=1e-10)


def test_sparse_rate_matches_binomial_small():
    p = ModelParams(n=1000, alpha=30, omega=1, L=9)
    spec = tile_side(p)
    T = 2000
    cell = (spec.K // 2, spec.K // 2)
    rate = empirical_sparse_rate(sample_grids(p, Density.uniform(), T, 0), cell)
    ref = binom_tail_exact(p.n, 1 / spec.K**2, p.L)
    assert abs(rate - ref) < 4 * math.sqrt(ref * (1 - ref) / T)


def test_mode_validation(practical):
    with pytest.raises(ValueError):
        run_trial(practical, Density.uniform(), 0, "lenient")
