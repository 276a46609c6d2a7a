"""Renderers for the five figure kinds.

SVG output is byte-stable: the hash salt is pinned, the date metadata is
dropped, and no renderer consumes randomness.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from scipy.stats import gaussian_kde

from .spec import FigureSpec, SchemaError, read_table

# Fixed palette, matching the captions' colour words.
TEAL = "#008080"  # variable-domain method
CORAL = "#f88379"  # binned baseline
COMPONENT_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")

plt.rcParams["svg.hashsalt"] = "figkit"
plt.rcParams["figure.dpi"] = 100


def render(spec: FigureSpec) -> str:
    """Draw the requested figure and return the output path."""
    fig = _RENDERERS[spec.kind](spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format=spec.image_format, metadata=_metadata(spec.image_format))
    plt.close(fig)
    return str(out)


def _metadata(image_format):
    return {"Date": None} if image_format == "svg" else None


def _float(row, col):
    try:
        return float(row[col])
    except ValueError as exc:
        raise SchemaError(f"column {col!r}: {exc}") from None


def _violin(spec: FigureSpec):
    rows = read_table(
        spec.inputs[0],
        ["n", "domain_dist", "sigma", "n_bins", "replicate", "method", "metric", "variable", "component", "value"],
    )
    metric = spec.options.get("metric", "armse_x")
    variable = spec.options.get("variable", "X1")
    component = str(spec.options.get("component", ""))
    rows = [
        r
        for r in rows
        if r["metric"] == metric and r["variable"] == variable and r["component"] == component
    ]
    if not rows:
        raise SchemaError(f"no rows for metric={metric!r} variable={variable!r}")

    sigmas = sorted({float(r["sigma"]) for r in rows})
    dists = [d for d in ("uniform", "nbinom") if any(r["domain_dist"] == d for r in rows)]
    methods = sorted(
        {(r["method"], r["n_bins"]) for r in rows}, key=lambda mk: (mk[0] != "VD-MFPCA", mk[1])
    )

    fig, axes = plt.subplots(
        len(dists),
        len(sigmas),
        figsize=(3.2 * len(sigmas), 2.6 * len(dists)),
        squeeze=False,
    )
    for i, dist in enumerate(dists):
        for j, sigma in enumerate(sigmas):
            ax = axes[i][j]
            ax.set_title(f"sigma={sigma:g} | {dist}", fontsize=9)
            groups, labels, colors = [], [], []
            for method, bins in methods:
                vals = [
                    _float(r, "value")
                    for r in rows
                    if r["method"] == method
                    and r["n_bins"] == bins
                    and float(r["sigma"]) == sigma
                    and r["domain_dist"] == dist
                ]
                if vals:
                    groups.append(vals)
                    labels.append(method if not bins else f"{method}{bins}")
                    colors.append(TEAL if method == "VD-MFPCA" else CORAL)
            if not groups:
                ax.annotate("no data", (0.5, 0.5), xycoords="axes fraction", ha="center")
                ax.set_xticks([])
                continue
            parts = ax.violinplot(groups, showmedians=True)
            for body, color in zip(parts["bodies"], colors):
                body.set_facecolor(color)
                body.set_alpha(0.7)
            ax.set_xticks(range(1, len(labels) + 1))
            ax.set_xticklabels(labels, fontsize=7, rotation=20)
            if j == 0:
                ax.set_ylabel(metric)
    fig.tight_layout()
    return fig


def _heatmap(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ["variable", "T", "t", "value"])
    variable = spec.options.get("variable") or rows[0]["variable"]
    rows = [r for r in rows if r["variable"] == variable]
    if not rows:
        raise SchemaError(f"no rows for variable {variable!r}")
    lengths = sorted({_float(r, "T") for r in rows})
    times = sorted({_float(r, "t") for r in rows})
    t_index = {t: k for k, t in enumerate(times)}
    l_index = {length: k for k, length in enumerate(lengths)}
    field = np.full((len(lengths), len(times)), np.nan)
    for r in rows:
        field[l_index[_float(r, "T")], t_index[_float(r, "t")]] = _float(r, "value")

    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    mesh = ax.pcolormesh(
        times, lengths, np.ma.masked_invalid(field), shading="nearest", cmap="viridis"
    )
    fig.colorbar(mesh, ax=ax, label=f"mean {variable}")
    ax.set_xlim(min(times), max(times))
    ax.set_ylim(min(lengths), max(lengths))
    ax.set_xlabel("time")
    ax.set_ylabel("domain length")
    ax.set_title(f"Mean surface: {variable}", fontsize=10)
    fig.tight_layout()
    return fig


def _variance_curves(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ["T", "component", "eigenvalue", "share"])
    by_length: dict = {}
    for r in rows:
        by_length.setdefault(_float(r, "T"), []).append((int(r["component"]), _float(r, "share")))
    for length, entries in by_length.items():
        total = sum(s for _, s in entries)
        if total > 1.0 + 1e-9:
            raise SchemaError(f"shares at T={length} sum to {total}, above 1")

    components = sorted({int(r["component"]) for r in rows})
    lengths = sorted(by_length)
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for m in components:
        ys = [dict(by_length[length]).get(m, np.nan) for length in lengths]
        color = COMPONENT_COLORS[(m - 1) % len(COMPONENT_COLORS)]
        ax.plot(lengths, ys, label=f"PC{m}", color=color)
    ax.set_xlabel("domain length")
    ax.set_ylabel("variance share")
    ax.set_ylim(0.0, 1.0)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def _scores_with_domains(spec: FigureSpec):
    scores = read_table(spec.inputs[0], ["subject_id", "component", "value"])
    if len(spec.inputs) < 2:
        raise SchemaError("score plots need the scores CSV and the subjects CSV")
    subjects = read_table(spec.inputs[1], ["subject_id", "domain_length"])
    domains = {r["subject_id"]: _float(r, "domain_length") for r in subjects}
    table: dict = {}
    for r in scores:
        table.setdefault(r["subject_id"], {})[int(r["component"])] = _float(r, "value")
    return table, domains


def _score_scatter(spec: FigureSpec):
    table, domains = _scores_with_domains(spec)
    ids = [sid for sid in table if 1 in table[sid] and 2 in table[sid] and sid in domains]
    if not ids:
        raise SchemaError("no subjects with both PC1 and PC2 scores")
    x = np.array([table[sid][1] for sid in ids])
    y = np.array([table[sid][2] for sid in ids])
    c = np.array([domains[sid] for sid in ids])

    fig, ax = plt.subplots(figsize=(4.8, 4.0))
    pts = ax.scatter(x, y, c=c, cmap="viridis", s=18)
    fig.colorbar(pts, ax=ax, label="domain length")
    ax.set_xlabel("PC1 score")
    ax.set_ylabel("PC2 score")
    ax.set_title("Scores coloured by domain length", fontsize=10)
    fig.tight_layout()
    return fig


def _score_density(spec: FigureSpec):
    table, domains = _scores_with_domains(spec)
    component = int(spec.options.get("component", 1))
    ids = [sid for sid in table if component in table[sid] and sid in domains]
    if len(ids) < 3:
        raise SchemaError("density plot needs at least 3 subjects")
    values = np.array([table[sid][component] for sid in ids])
    lengths = np.array([domains[sid] for sid in ids])

    edges = np.quantile(lengths, [1.0 / 3.0, 2.0 / 3.0])
    groups = {
        "short domains": values[lengths <= edges[0]],
        "medium domains": values[(lengths > edges[0]) & (lengths <= edges[1])],
        "long domains": values[lengths > edges[1]],
    }
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    grid = np.linspace(values.min() - 1e-9, values.max() + 1e-9, 200)
    for (label, members), color in zip(groups.items(), COMPONENT_COLORS):
        if members.size < 2 or np.allclose(members, members[0]):
            ax.annotate(f"{label}: no data", (0.02, 0.95), xycoords="axes fraction", fontsize=7)
            continue
        density = gaussian_kde(members)(grid)
        ax.plot(grid, density, label=label, color=color)
        ax.axvline(members.mean(), color=color, linestyle="--", linewidth=0.8)
    ax.set_xlabel(f"PC{component} score")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


_RENDERERS = {
    "violin": _violin,
    "heatmap": _heatmap,
    "variance_curves": _variance_curves,
    "score_scatter": _score_scatter,
    "score_density": _score_density,
}
