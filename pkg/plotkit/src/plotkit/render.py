"""Renderers: one static image per validated figure job.

Images are written through a temporary file and an atomic replace, so a
failing job never leaves a partial output.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .jobs import (
    NEG_INF,
    FigureJob,
    FrontierData,
    LedgerData,
    PipData,
    load_frontier,
    load_ledger,
    load_pip,
)


def _finish(fig, job: FigureJob) -> Path:
    tmp = job.output_path.with_name(job.output_path.name + ".tmp")
    fmt = job.output_path.suffix.lstrip(".").lower() or "png"
    job.output_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(tmp, dpi=150, bbox_inches="tight", format=fmt)
        os.replace(tmp, job.output_path)
    finally:
        plt.close(fig)
        if tmp.exists():
            tmp.unlink()
    return job.output_path


def _render_frontier(data: FrontierData, job: FigureJob) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for overlap in data.overlaps:
        lams, dists = data.curve(overlap)
        ax.plot(lams, dists, marker="o", label=f"overlap {overlap:g}")
    all_lams = [lam for c in data.overlaps for lam in data.curve(c)[0]]
    if max(all_lams, default=0.0) > 10.0:
        ax.set_xscale("symlog", linthresh=1.0)
    ax.set_xlabel(job.xlabel or "repeatability penalty weight")
    ax.set_ylabel(job.ylabel or "record distinguishability (trace distance)")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend()
    ax.set_title(job.title or "information-disturbance frontier")
    return _finish(fig, job)


def _render_pip(data: PipData, job: FigureJob) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.fill_between(data.sizes, data.mins, data.maxs, alpha=0.25, label="min/max over fragments")
    ax.plot(data.sizes, data.means, marker="o", label="mean")
    ax.set_xlabel(job.xlabel or "fragment size (environment subsystems)")
    ax.set_ylabel(job.ylabel or "mutual information (bits)")
    ax.set_xticks(list(data.sizes))
    ax.grid(True, alpha=0.3)
    ax.legend()
    ax.set_title(job.title or "partial-information plateau")
    return _finish(fig, job)


def _render_ledger(data: LedgerData, job: FigureJob) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    labels = [label for label, _ in data.terms]
    values = [term for _, term in data.terms]
    finite = [v for v in values if v != NEG_INF and not math.isnan(v)]
    floor = min(finite + [data.budget if data.budget != NEG_INF else 0.0, -1.0]) * 1.3 - 0.5
    xs = np.arange(len(labels))
    for x, value in zip(xs, values):
        if value == NEG_INF:
            # off-scale marker for a perfectly distinguishing record
            ax.plot([x], [floor], marker="v", markersize=10, color="tab:red", clip_on=False)
            ax.annotate("-inf", (x, floor), textcoords="offset points", xytext=(0, -14),
                        ha="center", color="tab:red")
        elif not math.isnan(value):
            ax.bar([x], [value], width=0.6, color="tab:blue")
    if data.budget == NEG_INF:
        ax.axhline(floor, linestyle="--", color="tab:red", alpha=0.6)
        ax.annotate("budget: -inf", (len(labels) - 0.5, floor),
                    textcoords="offset points", xytext=(0, 6), ha="right", color="tab:red")
    else:
        ax.axhline(data.budget, linestyle="--", color="tab:green")
        ax.annotate(f"budget {data.budget:.3g}", (len(labels) - 0.5, data.budget),
                    textcoords="offset points", xytext=(0, 6), ha="right", color="tab:green")
    ax.set_xticks(xs)
    ax.set_xticklabels(labels)
    ax.set_ylim(floor - 1.0, max(0.5, max(finite, default=0.0) + 0.5))
    ax.set_xlabel(job.xlabel or "subsystem")
    ax.set_ylabel(job.ylabel or "log2 |overlap|^2 (bits)")
    ax.grid(True, axis="y", alpha=0.3)
    ax.set_title(job.title or "record quality ledger")
    return _finish(fig, job)


def render(job: FigureJob) -> Path:
    """Validate the input for the job's kind and write the image."""
    if job.kind == "frontier":
        return _render_frontier(load_frontier(job.input_path), job)
    if job.kind == "pip":
        return _render_pip(load_pip(job.input_path), job)
    return _render_ledger(load_ledger(job.input_path), job)
