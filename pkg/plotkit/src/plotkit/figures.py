"""The four figure families, rendered to deterministic SVG.

Determinism is part of the contract: fixed style, a pinned svg.hashsalt
so glyph/clip ids do not depend on process state, and no Date metadata.
Non-finite cells arrive as NaN from the readers and render as gaps.
"""

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tables import SchemaError, read_grid, read_scores, read_sweep

FIGURE_KINDS = ("surface3d", "line_scan", "sorted_scores", "paucity_boxgrid")

matplotlib.rcParams.update({
    "svg.hashsalt": "plotkit",
    "font.family": "DejaVu Sans",
    "figure.dpi": 100,
    "axes.prop_cycle": plt.cycler(
        color=["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]
    ),
})


@dataclass
class FigureSpec:
    kind: str
    inputs: list[str]
    output: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    labels: list[str] = field(default_factory=list)

    def validate(self) -> "FigureSpec":
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(
                f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}"
            )
        if not self.inputs:
            raise SchemaError(f"{self.kind} needs at least one input table")
        if self.kind != "line_scan" and len(self.inputs) != 1:
            raise SchemaError(f"{self.kind} takes exactly one input table")
        if not self.output:
            raise SchemaError("output path is required")
        return self


def _save(fig, output):
    parent = os.path.dirname(os.fspath(output))
    if parent:
        os.makedirs(parent, exist_ok=True)
    fig.savefig(output, format="svg", metadata={"Date": None})
    plt.close(fig)
    return os.fspath(output)


def _input_label(spec, i):
    if i < len(spec.labels):
        return spec.labels[i]
    stem = os.path.splitext(os.path.basename(spec.inputs[i]))[0]
    return stem


def render_surface3d(spec: FigureSpec) -> str:
    grid = read_grid(spec.inputs[0])
    if grid["betas"] is None:
        raise SchemaError(f"{spec.inputs[0]}: surface3d needs a 2D grid "
                          "(no beta column found)")
    fig = plt.figure(figsize=(6.0, 5.0))
    ax = fig.add_subplot(projection="3d")
    a, b = np.meshgrid(grid["alphas"], grid["betas"], indexing="ij")
    # NaN cells drop their quads, leaving gaps along any divergent rim
    ax.plot_surface(a, b, grid["losses"], cmap="viridis",
                    linewidth=0.2, edgecolor="k", antialiased=False)
    ax.set_xlabel(spec.xlabel or "alpha")
    ax.set_ylabel(spec.ylabel or "beta")
    ax.set_zlabel("loss")
    if spec.title:
        ax.set_title(spec.title)
    return _save(fig, spec.output)


def render_line_scan(spec: FigureSpec) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i, path in enumerate(spec.inputs):
        grid = read_grid(path)
        if grid["betas"] is not None:
            raise SchemaError(f"{path}: line_scan needs 1D grids "
                              "(found a beta column)")
        ax.plot(grid["alphas"], grid["losses"], marker=".",
                label=_input_label(spec, i))
    ax.set_xlabel(spec.xlabel or "alpha")
    ax.set_ylabel(spec.ylabel or "loss")
    if len(spec.inputs) > 1 or spec.labels:
        ax.legend()
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    return _save(fig, spec.output)


def render_sorted_scores(spec: FigureSpec) -> str:
    scores = read_scores(spec.inputs[0])
    scores = scores[np.isfinite(scores)]
    if scores.size == 0:
        raise SchemaError(f"{spec.inputs[0]}: no finite scores to plot")
    order = np.sort(scores)[::-1]
    rank = np.arange(1, order.size + 1) / order.size
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    positive = order > 0
    ax.semilogy(rank[positive], order[positive])
    ax.set_xlabel(spec.xlabel or "coordinate rank fraction")
    ax.set_ylabel(spec.ylabel or "normalized score")
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3, which="both")
    return _save(fig, spec.output)


def render_paucity_boxgrid(spec: FigureSpec) -> str:
    table = read_sweep(spec.inputs[0])
    if not table:
        raise SchemaError(f"{spec.inputs[0]}: no headline rows to plot")
    fractions = sorted({f for _, f in table}, reverse=True)
    plans = sorted({p for p, _ in table})
    fig, axes = plt.subplots(
        1, len(fractions), figsize=(2.6 * len(fractions), 3.4),
        sharey=True, squeeze=False,
    )
    for ax, fraction in zip(axes[0], fractions):
        data = [table.get((plan, fraction), []) for plan in plans]
        ax.boxplot(data, tick_labels=plans)
        ax.set_title(f"fraction {fraction:g}")
        ax.tick_params(axis="x", rotation=45)
        ax.grid(True, axis="y", alpha=0.3)
    axes[0][0].set_ylabel(spec.ylabel or "dev metric")
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    return _save(fig, spec.output)


_RENDERERS = {
    "surface3d": render_surface3d,
    "line_scan": render_line_scan,
    "sorted_scores": render_sorted_scores,
    "paucity_boxgrid": render_paucity_boxgrid,
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path written."""
    spec.validate()
    return _RENDERERS[spec.kind](spec)
