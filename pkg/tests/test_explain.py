import numpy as np
import pytest

from partforge import explain
from partforge.explain import (DesignDataset, Feature, annotate, fit_tree,
                               format_duration_days, render, render_text,
                               tree_from_document)


def make_dataset(x, y, iteration_ids=None, kinds=None):
    x = np.asarray(x, dtype=float)
    kinds = kinds or [explain.NUMERIC] * x.shape[1]
    features = [Feature(f"f{i}", kind) for i, kind in enumerate(kinds)]
    if iteration_ids is None:
        iteration_ids = np.zeros(len(x), dtype=int)
    return DesignDataset(features, x, np.asarray(y, dtype=float),
                         iteration_ids)


class TestFit:
    def test_single_row_single_leaf(self):
        tree = fit_tree(make_dataset([[1.0]], [5.0]))
        assert tree.root.is_leaf
        assert tree.root.count == 1
        assert tree.root.mean == 5.0

    def test_perfect_boolean_split(self):
        data = make_dataset([[0], [0], [1], [1]], [10.0, 10.0, 20.0, 20.0],
                            kinds=[explain.ONE_HOT])
        tree = fit_tree(data)
        root = tree.root
        assert not root.is_leaf
        assert root.left.is_leaf and root.right.is_leaf
        assert root.left.mean == 10.0 and root.right.mean == 20.0

    def test_constant_target_yields_leaf(self):
        data = make_dataset([[0], [1], [2]], [3.0, 3.0, 3.0])
        assert fit_tree(data).root.is_leaf

    def test_first_split_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(10, 3))
        y = rng.normal(size=10)
        tree = fit_tree(make_dataset(x, y), max_depth=1)
        best = None
        for f in range(3):
            vals = np.unique(x[:, f])
            for lo, hi in zip(vals, vals[1:]):
                t = 0.5 * (lo + hi)
                mask = x[:, f] <= t
                sse = (((y[mask] - y[mask].mean()) ** 2).sum()
                       + ((y[~mask] - y[~mask].mean()) ** 2).sum())
                if best is None or sse < best[0] - 1e-12:
                    best = (sse, f, t)
        assert tree.root.feature == best[1]
        assert tree.root.threshold == pytest.approx(best[2])

    def test_leaf_counts_partition_dataset(self):
        rng = np.random.default_rng(7)
        data = make_dataset(rng.normal(size=(40, 4)), rng.normal(size=40))
        tree = fit_tree(data, max_depth=3)
        leaves = []

        def collect(node):
            if node.is_leaf:
                leaves.append(node.count)
            else:
                collect(node.left)
                collect(node.right)

        collect(tree.root)
        assert sum(leaves) == 40

    def test_refit_deterministic(self):
        rng = np.random.default_rng(8)
        data = make_dataset(rng.normal(size=(30, 3)), rng.normal(size=30))
        t1 = render(annotate(fit_tree(data), data, 0))
        t2 = render(annotate(fit_tree(data), data, 0))
        assert t1 == t2

    def test_every_split_strictly_reduces_variance(self):
        rng = np.random.default_rng(9)
        data = make_dataset(rng.normal(size=(50, 3)), rng.normal(size=50))
        tree = fit_tree(data, max_depth=4)

        def sse(rows):
            y = data.y[rows]
            return ((y - y.mean()) ** 2).sum()

        def check(node):
            if node.is_leaf:
                return
            assert sse(node.left.rows) + sse(node.right.rows) \
                < sse(node.rows) - 1e-12
            check(node.left)
            check(node.right)

        check(tree.root)


class TestAnnotate:
    def test_root_is_hundred_percent(self):
        data = make_dataset([[0], [1]], [1.0, 2.0])
        tree = annotate(fit_tree(data), data, 0)
        assert tree.root.percent == pytest.approx(100.0)

    def test_four_of_fifteen_renders_expected_percent(self):
        x = [[float(i)] for i in range(15)]
        y = [0.0] * 4 + [10.0] * 11      # split isolates 4 rows
        data = make_dataset(x, y)
        tree = annotate(fit_tree(data, max_depth=1), data, 0)
        doc = render(tree)
        assert doc["root"]["left"]["count"] == 4
        assert doc["root"]["left"]["percent"] == 26.67

    def test_unknown_iteration_flags_nothing(self):
        data = make_dataset([[0], [1], [2], [3]], [1.0, 2.0, 3.0, 4.0],
                            iteration_ids=[1, 1, 2, 2])
        tree = annotate(fit_tree(data), data, 99)

        def assert_unflagged(node):
            assert not node.contains_current
            if not node.is_leaf:
                assert_unflagged(node.left)
                assert_unflagged(node.right)

        assert_unflagged(tree.root)

    def test_current_iteration_flag_propagates_to_ancestors(self):
        data = make_dataset([[0], [1], [2], [3]], [1.0, 1.0, 5.0, 9.0],
                            iteration_ids=[1, 1, 1, 2])
        tree = annotate(fit_tree(data, max_depth=2), data, 2)
        assert tree.root.contains_current
        flagged_leaves = []

        def walk(node):
            if node.is_leaf:
                if node.contains_current:
                    flagged_leaves.extend(node.rows.tolist())
            else:
                walk(node.left)
                walk(node.right)

        walk(tree.root)
        assert flagged_leaves == [3]


class TestRender:
    def test_depth_one_tree_has_three_nodes(self):
        data = make_dataset([[0], [0], [1], [1]], [1.0, 1.0, 2.0, 2.0])
        doc = render(annotate(fit_tree(data, max_depth=1), data, 0))
        nodes = [doc["root"], doc["root"]["left"], doc["root"]["right"]]
        assert all(n["count"] > 0 for n in nodes)
        assert "left" not in doc["root"]["left"]

    def test_fifteen_day_threshold_renders_compact_weeks(self):
        assert format_duration_days(15) == "2w, 1d"
        assert format_duration_days(14) == "2w"
        assert format_duration_days(5) == "5d"
        assert format_duration_days(15.5) == "2w, 1.5d"
        feature = Feature("lead_time", explain.DURATION_DAYS)
        left, _ = feature.describe_split(15.0)
        assert left == "lead_time <= 2w, 1d"

    def test_round_trip_document_identity(self):
        rng = np.random.default_rng(3)
        data = make_dataset(rng.normal(size=(20, 2)), rng.normal(size=20),
                            iteration_ids=rng.integers(0, 3, 20))
        doc = render(annotate(fit_tree(data), data, 2))
        assert render(tree_from_document(doc)) == doc

    def test_text_outline_contains_percentages(self):
        data = make_dataset([[0], [0], [1], [1]], [1.0, 1.0, 2.0, 2.0])
        text = render_text(annotate(fit_tree(data, max_depth=1), data, 0))
        assert "[100.00%]" in text
        assert "[50.00%]" in text
