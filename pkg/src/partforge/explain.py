"""Regression decision trees over accumulated designs.

Greedy variance-reduction (CART) splits explain how one design quality, cost
by default, is partitioned by the others.  Categorical columns arrive
one-hot so a split reads as a boolean test; annotation adds per-node dataset
percentages and flags subtrees that contain designs from the newest
iteration, which the interfaces highlight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Array = np.ndarray

NUMERIC = "numeric"
DURATION_DAYS = "duration_days"
ONE_HOT = "onehot"


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str = NUMERIC            # numeric | duration_days | onehot

    def describe_split(self, threshold: float) -> tuple[str, str]:
        """Human-readable branch labels (left: test true, right: false)."""
        if self.kind == ONE_HOT:
            return (f"{self.name}: no", f"{self.name}: yes")
        shown = format_duration_days(threshold) if self.kind == DURATION_DAYS \
            else f"{threshold:g}"
        return (f"{self.name} <= {shown}", f"{self.name} > {shown}")


@dataclass
class DesignDataset:
    """Feature matrix, target vector, and the iteration id of every row."""

    features: list[Feature]
    x: Array                        # (rows, features)
    y: Array                        # (rows,)
    iteration_ids: Array            # (rows,) int
    target_name: str = "cost"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.iteration_ids = np.asarray(self.iteration_ids, dtype=np.int64)
        if self.x.ndim != 2 or self.x.shape[1] != len(self.features):
            raise ValueError("feature matrix width must match feature list")
        if len(self.y) != len(self.x) or len(self.iteration_ids) != len(self.x):
            raise ValueError("rows, targets and iteration ids must align")
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.y)):
            raise ValueError("dataset must not contain missing numeric values")

    def __len__(self) -> int:
        return len(self.y)


@dataclass
class TreeNode:
    count: int
    mean: float
    rows: Array                       # dataset row indices covered
    feature: int | None = None        # split feature index; None at leaves
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    percent: float | None = None      # filled by annotate
    contains_current: bool = False

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class ExplainTree:
    root: TreeNode
    features: list[Feature]
    target_name: str
    total_rows: int


def _sse(y: Array) -> float:
    if len(y) == 0:
        return 0.0
    return float(((y - y.mean()) ** 2).sum())


def best_split(x: Array, y: Array, min_leaf: int = 1):
    """Exhaustive (feature, threshold) scan minimizing child SSE.

    Thresholds are midpoints of consecutive distinct values; ties keep the
    lowest feature index, then the lowest threshold, which makes refits
    reproducible.
    """
    best = None
    base = _sse(y)
    for f in range(x.shape[1]):
        values = np.unique(x[:, f])
        if len(values) < 2:
            continue
        for lo, hi in zip(values, values[1:]):
            threshold = 0.5 * (lo + hi)
            mask = x[:, f] <= threshold
            n_left = int(mask.sum())
            if n_left < min_leaf or len(y) - n_left < min_leaf:
                continue
            sse = _sse(y[mask]) + _sse(y[~mask])
            if base - sse <= 1e-12:
                continue
            if best is None or sse < best[0] - 1e-12:
                best = (sse, f, threshold)
    return best


def fit_tree(dataset: DesignDataset, max_depth: int = 4,
             min_leaf: int = 1) -> ExplainTree:
    """Greedy CART regression tree over the dataset."""
    if len(dataset) < 1:
        raise ValueError("dataset must contain at least one row")

    def build(rows: Array, depth: int) -> TreeNode:
        y = dataset.y[rows]
        node = TreeNode(count=len(rows), mean=float(y.mean()), rows=rows)
        if depth >= max_depth or len(rows) < 2 or np.all(y == y[0]):
            return node
        split = best_split(dataset.x[rows], y, min_leaf)
        if split is None:
            return node
        _, f, threshold = split
        mask = dataset.x[rows, f] <= threshold
        node.feature = f
        node.threshold = float(threshold)
        node.left = build(rows[mask], depth + 1)
        node.right = build(rows[~mask], depth + 1)
        return node

    root = build(np.arange(len(dataset)), 0)
    return ExplainTree(root=root, features=dataset.features,
                       target_name=dataset.target_name,
                       total_rows=len(dataset))


def annotate(tree: ExplainTree, dataset: DesignDataset,
             current_iteration: int) -> ExplainTree:
    """Fill per-node dataset percentages and current-iteration flags."""
    total = tree.total_rows
    current_rows = set(np.flatnonzero(dataset.iteration_ids == current_iteration))

    def visit(node: TreeNode) -> None:
        node.percent = 100.0 * node.count / total
        node.contains_current = bool(current_rows.intersection(node.rows))
        if not node.is_leaf:
            visit(node.left)
            visit(node.right)

    visit(tree.root)
    return tree


def format_duration_days(days: float) -> str:
    """Compact week/day rendering, e.g. 15 days -> '2w, 1d'."""
    if days < 0:
        return f"-{format_duration_days(-days)}"
    weeks = int(days // 7)
    rest = days - 7 * weeks
    rest_str = f"{rest:.2f}".rstrip("0").rstrip(".")
    if weeks == 0:
        return f"{rest_str}d"
    if rest_str == "0":
        return f"{weeks}w"
    return f"{weeks}w, {rest_str}d"


def render(tree: ExplainTree) -> dict:
    """Serialize an annotated tree to the document the interfaces consume."""
    def node_doc(node: TreeNode) -> dict:
        doc = {
            "count": node.count,
            "mean": node.mean,
            "percent": None if node.percent is None else round(node.percent, 2),
            "contains_current": node.contains_current,
        }
        if not node.is_leaf:
            feature = tree.features[node.feature]
            left_label, right_label = feature.describe_split(node.threshold)
            doc.update({
                "feature": feature.name,
                "kind": feature.kind,
                "threshold": node.threshold,
                "left_label": left_label,
                "right_label": right_label,
                "left": node_doc(node.left),
                "right": node_doc(node.right),
            })
        return doc

    return {
        "schema_version": 1,
        "target": tree.target_name,
        "total_rows": tree.total_rows,
        "features": [{"name": f.name, "kind": f.kind} for f in tree.features],
        "root": node_doc(tree.root),
    }


def tree_from_document(doc: dict) -> ExplainTree:
    """Inverse of render(); row index sets are not recoverable and stay empty."""
    features = [Feature(f["name"], f["kind"]) for f in doc["features"]]
    names = [f.name for f in features]

    def parse(node_doc: dict) -> TreeNode:
        node = TreeNode(count=node_doc["count"], mean=node_doc["mean"],
                        rows=np.array([], dtype=np.int64),
                        percent=node_doc.get("percent"),
                        contains_current=node_doc.get("contains_current", False))
        if "feature" in node_doc:
            node.feature = names.index(node_doc["feature"])
            node.threshold = node_doc["threshold"]
            node.left = parse(node_doc["left"])
            node.right = parse(node_doc["right"])
        return node

    return ExplainTree(root=parse(doc["root"]), features=features,
                       target_name=doc["target"], total_rows=doc["total_rows"])


def render_text(tree: ExplainTree) -> str:
    """Indented text outline of an annotated tree for the CLI."""
    lines: list[str] = []

    def visit(node: TreeNode, label: str, depth: int) -> None:
        mark = " *" if node.contains_current else ""
        pct = "" if node.percent is None else f" [{node.percent:.2f}%]"
        stats = f"n={node.count}, mean {tree.target_name}={node.mean:,.2f}"
        lines.append("  " * depth + f"{label}({stats}){pct}{mark}")
        if not node.is_leaf:
            feature = tree.features[node.feature]
            left_label, right_label = feature.describe_split(node.threshold)
            visit(node.left, f"{left_label} -> ", depth + 1)
            visit(node.right, f"{right_label} -> ", depth + 1)

    visit(tree.root, "", 0)
    return "\n".join(lines)
