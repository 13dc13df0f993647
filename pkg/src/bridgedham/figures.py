"""Matplotlib figures for Monte Carlo batches, written next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiment import BatchSummary  # noqa: E402
from .params import bridge_budget  # noqa: E402

plt.rcParams.update({
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
})


def event_rates(summary: BatchSummary, ax=None):
    ax = ax or plt.gca()
    keys = ["F", "I", "J", "H", "success"]
    vals = [summary.rates[k] for k in keys]
    ax.bar(keys, vals, color=["#4c72b0", "#dd8452", "#dd8452", "#55a868", "#55a868"])
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("empirical rate")
    ax.set_title(f"events over {summary.trials} trials")
    for k, v in zip(keys, vals):
        ax.annotate(f"{v:.3f}", (k, v), ha="center", va="bottom", fontsize=8)
    return ax


def bridge_fraction_hist(summary: BatchSummary, ax=None):
    ax = ax or plt.gca()
    rows = [r for r in summary.rows if r.stats is not None]
    ax.hist([r.stats.gamma_actual for r in rows], bins=30, color="#4c72b0")
    if rows:
        _, eff = bridge_budget(rows[0].params["L"])
        ax.axvline(eff, color="#c44e52", ls="--", label=f"budget {eff:g}")
        ax.legend(frameon=False)
    ax.set_xlabel("bridge fraction n_br / n")
    ax.set_ylabel("trials")
    return ax


def edge_ratio_hist(summary: BatchSummary, ax=None):
    ax = ax or plt.gca()
    rows = [r for r in summary.rows if r.stats is not None]
    ax.hist([r.stats.max_edge / r.params["r_n"] for r in rows], bins=30, color="#55a868")
    ax.axvline(2.0, color="#c44e52", ls="--", label="2 r_n")
    ax.axvline(1.0, color="#8c8c8c", ls=":", label="r_n")
    ax.legend(frameon=False)
    ax.set_xlabel("longest cycle edge / r_n")
    ax.set_ylabel("trials")
    return ax


def write_batch_figures(summary: BatchSummary, outdir, fmt: str = "png") -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, draw in (("event_rates", event_rates), ("bridge_fraction", bridge_fraction_hist),
                       ("max_edge_ratio", edge_ratio_hist)):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        draw(summary, ax)
        path = outdir / f"{name}.{fmt}"
        fig.savefig(path, metadata={"Software": None} if fmt == "png" else None)
        plt.close(fig)
        written.append(path)
    return written
