"""Command-line entry point: ``bridgedham {params,run,montecarlo,render}``.

JSON goes to stdout, diagnostics to stderr. Exit codes: 0 success,
1 construction failure in strict mode, 2 usage or parameter error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .params import ModelParams, ParameterError, params_record, tile_side
from .sampling import Density, density_bounds, read_points_csv

log = logging.getLogger("bridgedham")

DEFAULTS = {
    "n": None, "alpha": 0.0, "omega": 0.0, "eps1": None, "eps2": None, "L": 9, "M": 1,
    "density": "uniform", "points": None, "seed": 0, "mode": "strict",
    "trials": 100, "base_seed": 0, "jobs": None,
}


class UsageError(Exception):
    pass


def parse_density(spec) -> Density:
    if isinstance(spec, dict):
        return Density.from_dict(spec)
    spec = str(spec)
    if spec == "uniform":
        return Density.uniform()
    if spec.startswith("halves:"):
        try:
            left, right = (float(v) for v in spec.split(":", 1)[1].split(","))
        except ValueError:
            raise UsageError(f"bad density {spec!r}; expected halves:LEFT,RIGHT") from None
        return Density.halves(left, right)
    path = Path(spec)
    if path.is_file():
        return Density.from_dict(json.loads(path.read_text()))
    raise UsageError(f"unknown density {spec!r}; use uniform, halves:LEFT,RIGHT or a JSON file")


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--n", type=int, help="number of nodes (taken from --points when omitted)")
    g.add_argument("--alpha", type=float, help="log log n coefficient (default 0)")
    g.add_argument("--omega", help="divergent term as a number, or 'loglog' for log log n (default 0)")
    g.add_argument("--eps1", type=float, help="density lower bound (default: min of the density)")
    g.add_argument("--eps2", type=float, help="density upper bound (default: max of the density)")
    g.add_argument("--L", type=int, help="dense threshold, at least 9 (default 9)")
    g.add_argument("--M", type=int, help="requested strip width in tiles (default 1)")
    g.add_argument("--density", help="uniform | halves:LEFT,RIGHT | density JSON file")
    g.add_argument("--points", help="CSV with header x,y replacing the sampled nodes")
    g.add_argument("--config", help="JSON file with any of these flags; flags win")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bridgedham", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("params", help="print derived parameters as JSON")
    _common(p)

    for name, helptext in (("run", "run one seeded trial"), ("render", "run one trial and write an SVG")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--seed", type=int)
        p.add_argument("--mode", choices=["strict", "best-effort"])
        p.add_argument("--svg" if name == "run" else "--out", required=(name == "render"),
                       help="SVG output path")
        p.add_argument("--cycle-json", help="write the cycle (order, edges, stats) as JSON")
        p.add_argument("--grid-json", help="write the grid snapshot as JSON")

    p = sub.add_parser("montecarlo", help="run a seeded batch")
    _common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--base-seed", type=int)
    p.add_argument("--mode", choices=["strict", "best-effort"])
    p.add_argument("--jobs", type=int, help="worker processes (default: available CPUs)")
    p.add_argument("--csv", help="per-trial CSV output path")
    p.add_argument("--summary", help="summary JSON output path")
    p.add_argument("--figures", help="directory for matplotlib figures")
    p.add_argument("--rows", action="store_true", help="include per-trial rows in the JSON")
    p.add_argument("--diagnostics", action="store_true",
                   help="add sparse-tile diagnostics (extra sampling pass)")
    return ap


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional --config file and explicit flags."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    out = dict(DEFAULTS)
    out.update({k: v for k, v in cfg.items() if k in DEFAULTS or k in vars(args)})
    out.update({k: v for k, v in vars(args).items() if v is not None})
    return out


def model_from(cfg: dict):
    density = parse_density(cfg["density"])
    points = None
    if cfg.get("points"):
        try:
            points = read_points_csv(cfg["points"])
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read points {cfg['points']}: {exc}") from None
        if cfg.get("n") is None:
            cfg["n"] = len(points)
    if cfg.get("n") is None:
        raise UsageError("--n is required (or --points)")
    n = int(cfg["n"])
    lo, hi = density_bounds(density)
    omega = cfg["omega"]
    if omega == "loglog":
        if n <= math.e:
            raise UsageError("omega=loglog needs n > e")
        omega = math.log(math.log(n))
    try:
        omega = float(omega)
    except ValueError:
        raise UsageError(f"--omega must be a number or 'loglog', got {omega!r}") from None
    eps1 = lo if cfg["eps1"] is None else float(cfg["eps1"])
    eps2 = max(hi, eps1) if cfg["eps2"] is None else float(cfg["eps2"])
    p = ModelParams(n=n, alpha=float(cfg["alpha"]), omega=omega, eps1=eps1, eps2=eps2,
                    L=int(cfg["L"]), M=int(cfg["M"]))
    if points is not None and len(points) != n:
        raise UsageError(f"--points has {len(points)} rows but --n is {n}")
    return p, density, points


def _mode(cfg) -> str:
    return str(cfg["mode"]).replace("-", "_")


def _dump(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if path:
        Path(path).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def cmd_params(cfg) -> int:
    p, _, _ = model_from(cfg)
    rec = params_record(p)
    if tile_side(p).gamma_flagged:
        log.warning("gamma_n = %.4g is outside (0, 1) at this n", rec["gamma_n"])
    _dump(rec)
    return 0


def cmd_run(cfg, svg_path=None) -> int:
    from .experiment import execute_trial
    from .grid import grid_snapshot
    from .render import cycle_record, render_svg

    p, density, points = model_from(cfg)
    trial = execute_trial(p, density, int(cfg["seed"]), _mode(cfg), points)
    rep = trial.report
    _dump(rep.as_dict())
    if svg_path:
        Path(svg_path).write_text(render_svg(trial.grid, trial.backbone, trial.order,
                                             trial.instance.points, trial.spec.r_n))
        log.info("wrote %s", svg_path)
    if cfg.get("grid_json"):
        _dump(grid_snapshot(trial.grid, trial.backbone), cfg["grid_json"])
    if cfg.get("cycle_json") and trial.order is not None:
        _dump(cycle_record(trial.order, trial.instance.points, trial.spec.r_n,
                           rep.stats.as_dict() if rep.stats else None), cfg["cycle_json"])
    if rep.failure_reason and not rep.success:
        print(f"trial failed: {rep.failure_reason}", file=sys.stderr)
    return 0 if rep.success else 1


def cmd_montecarlo(cfg) -> int:
    from .experiment import (binomial_sparse_tail, default_jobs, empirical_sparse_rate, run_batch,
                             sample_grids, sparse_probability_bound, write_batch_csv)

    p, density, points = model_from(cfg)
    if points is not None:
        raise UsageError("--points cannot be combined with montecarlo")
    trials = int(cfg["trials"])
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    jobs = int(cfg["jobs"]) if cfg.get("jobs") else default_jobs()
    summary = run_batch(p, density, trials, int(cfg["base_seed"]), _mode(cfg), jobs)
    out = summary.as_dict(rows=bool(cfg.get("rows")))
    spec = tile_side(p)
    out["params"] = params_record(p)
    if cfg.get("diagnostics"):
        cell = (spec.K // 2, spec.K // 2)
        rate = empirical_sparse_rate(sample_grids(p, density, trials, int(cfg["base_seed"])), cell)
        out["diagnostics"] = {
            "cell": list(cell),
            "empirical_sparse_rate": rate,
            "sparse_rate_stderr": math.sqrt(max(rate * (1 - rate), 1.0 / trials) / trials),
            "bound_shape_C1": sparse_probability_bound(1, p, spec, 1.0),
        }
        if density.kind == "uniform":
            out["diagnostics"]["binomial_tail"] = binomial_sparse_tail(p.n, spec.t_n ** 2, p.L)
    if cfg.get("csv"):
        write_batch_csv(cfg["csv"], summary)
        log.info("wrote %s", cfg["csv"])
    if cfg.get("figures"):
        from .figures import write_batch_figures

        for path in write_batch_figures(summary, cfg["figures"]):
            log.info("wrote %s", path)
    _dump(out, cfg.get("summary"))
    if cfg.get("summary"):
        _dump(out)
    return 0


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve(args)
        if args.subcommand == "params":
            return cmd_params(cfg)
        if args.subcommand == "run":
            return cmd_run(cfg, cfg.get("svg"))
        if args.subcommand == "render":
            cmd_run(cfg, cfg["out"])
            return 0
        return cmd_montecarlo(cfg)
    except (UsageError, ParameterError) as exc:
        ap.print_usage(sys.stderr)
        print(f"{ap.prog}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
