"""Iteration reports: delimited summaries plus rendered figures.

Writes records.csv and matrix.csv next to PNG figures: the feasibility
grid, the cost/lead-time trade space, mid-plane density slices of every
design, and the decision tree when one has been fitted.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .explain import tree_from_document
from .orchestrator.persist import IterationStore, read_density_grid

METHOD_LABELS = {"additive": "Additive", "mill3axis": "3-axis milling",
                 "cut2axis": "2-axis cutting"}


def write_report(store: IterationStore, iteration_id: int,
                 out_dir: Path | str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    produced = []
    records = store.read_records(iteration_id)
    produced.append(_records_csv(records, out / "records.csv"))
    if store.has_matrix(iteration_id):
        matrix = store.read_matrix(iteration_id)
        produced.append(_matrix_csv(matrix, out / "matrix.csv"))
        produced.append(_matrix_figure(matrix, out / "feasibility_matrix.png"))
    quoted = [r for r in records
              if not r.get("failed") and r.get("quoted_cost_cents") is not None]
    if quoted:
        produced.append(_tradeoff_figure(quoted, out / "cost_vs_leadtime.png"))
        fig_path = _density_figure(store, quoted, out / "density_slices.png")
        if fig_path is not None:
            produced.append(fig_path)
    tree_path = store.iteration_dir(iteration_id) / "trees" / "tree-cost.json"
    if tree_path.exists():
        doc = store.read_tree(iteration_id, "cost")
        produced.append(_tree_figure(doc, out / "tree_cost.png"))
    return [p for p in produced if p is not None]


def _records_csv(records: list[dict], path: Path) -> Path:
    fields = ["record_id", "method", "material", "supplier_id", "compliance",
              "mass_kg", "nominal_cost_cents", "nominal_time_hours",
              "quoted_cost_cents", "quoted_lead_hours", "feasible", "failed"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for rec in records:
            writer.writerow({**{"failed": False}, **rec})
    return path


def _matrix_csv(matrix: dict, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "material", "feasible", "suppliers_ok",
                         "reasons"])
        for combo in matrix["combinations"]:
            ok = [s for s, d in combo["per_supplier"].items() if d["feasible"]]
            reasons = {s: d["reason"] for s, d in combo["per_supplier"].items()
                       if not d["feasible"]}
            writer.writerow([combo["method"], combo["material"],
                             combo["feasible"], ";".join(sorted(ok)),
                             ";".join(f"{s}:{r}" for s, r in
                                      sorted(reasons.items()))])
    return path


def _matrix_figure(matrix: dict, path: Path) -> Path:
    combos = matrix["combinations"]
    methods = sorted({c["method"] for c in combos})
    materials = sorted({c["material"] for c in combos})
    grid = np.zeros((len(materials), len(methods)))
    for c in combos:
        i = materials.index(c["material"])
        j = methods.index(c["method"])
        grid[i, j] = 1.0 if c["feasible"] else 0.0
    fig, ax = plt.subplots(figsize=(1.8 * len(methods) + 2,
                                    0.8 * len(materials) + 1.5))
    ax.imshow(grid, cmap="RdYlGn", vmin=0, vmax=1, aspect="auto")
    ax.set_xticks(range(len(methods)),
                  [METHOD_LABELS.get(m, m) for m in methods])
    ax.set_yticks(range(len(materials)), materials)
    for c in combos:
        i = materials.index(c["material"])
        j = methods.index(c["method"])
        ax.text(j, i, "ok" if c["feasible"] else "infeasible",
                ha="center", va="center", fontsize=9)
    ax.set_title("Feasibility by method and material")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _tradeoff_figure(records: list[dict], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    colors = {"additive": "tab:blue", "mill3axis": "tab:orange",
              "cut2axis": "tab:green"}
    for rec in records:
        ax.scatter(rec["quoted_lead_hours"] / 24.0,
                   rec["quoted_cost_cents"] / 100.0,
                   color=colors.get(rec["method"], "gray"), s=60,
                   label=METHOD_LABELS.get(rec["method"], rec["method"]))
        ax.annotate(f'{rec["material"]}/{rec.get("supplier_id", "?")}',
                    (rec["quoted_lead_hours"] / 24.0,
                     rec["quoted_cost_cents"] / 100.0),
                    textcoords="offset points", xytext=(4, 4), fontsize=7)
    handles, labels = ax.get_legend_handles_labels()
    unique = dict(zip(labels, handles))
    ax.legend(unique.values(), unique.keys(), fontsize=8)
    ax.set_xlabel("quoted lead time [days]")
    ax.set_ylabel("quoted cost [$]")
    ax.set_title("Design trade space")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _density_figure(store: IterationStore, records: list[dict],
                    path: Path) -> Path | None:
    with_grids = [r for r in records if r.get("grid_ref")]
    if not with_grids:
        return None
    cols = min(len(with_grids), 4)
    rows = (len(with_grids) + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(3 * cols, 2.6 * rows),
                             squeeze=False)
    for ax in axes.ravel():
        ax.axis("off")
    for ax, rec in zip(axes.ravel(), with_grids):
        rho, _ = read_density_grid(store.resolve(rec["grid_ref"]))
        mid = rho[:, :, rho.shape[2] // 2]
        ax.imshow(mid.T, origin="lower", cmap="gray_r", vmin=0, vmax=1)
        ax.set_title(f'{rec["method"]} {rec["material"]}\n'
                     f'{rec.get("supplier_id", "")}', fontsize=8)
        ax.axis("on")
        ax.set_xticks([])
        ax.set_yticks([])
    fig.suptitle("Mid-plane density slices")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _tree_figure(doc: dict, path: Path) -> Path:
    tree = tree_from_document(doc)
    positions = {}

    def layout(node, depth, x0, x1):
        positions[id(node)] = ((x0 + x1) / 2, -depth)
        if not node.is_leaf:
            mid = (x0 + x1) / 2
            layout(node.left, depth + 1, x0, mid)
            layout(node.right, depth + 1, mid, x1)

    layout(tree.root, 0, 0.0, 1.0)
    fig, ax = plt.subplots(figsize=(10, 6))
    ax.axis("off")

    def draw(node):
        x, y = positions[id(node)]
        color = "#b6e3b6" if node.contains_current else "#e8e8e8"
        pct = "" if node.percent is None else f"\n{node.percent:.2f}%"
        label = f"n={node.count}\nmean={node.mean:,.0f}{pct}"
        if not node.is_leaf:
            feat = tree.features[node.feature]
            left_label, _ = feat.describe_split(node.threshold)
            label = left_label + "\n" + label
            for child in (node.left, node.right):
                cx, cy = positions[id(child)]
                ax.plot([x, cx], [y - 0.08, cy + 0.08], "k-", lw=0.8)
            draw(node.left)
            draw(node.right)
        ax.text(x, y, label, ha="center", va="center", fontsize=8,
                bbox=dict(boxstyle="round,pad=0.35", fc=color, ec="gray"))

    draw(tree.root)
    ax.set_title(f"How {tree.target_name} partitions the design space "
                 f"(current iteration in green)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
