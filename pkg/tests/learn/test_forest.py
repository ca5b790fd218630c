"""
Tests for the CART random forest.
"""

import numpy as np
import pytest

from event_kiwi.core.types import Task
from event_kiwi.errors import CorruptModelFile, EmptyNode, LengthMismatch, TooFewSamples
from event_kiwi.learn.forest import (
    ForestParams,
    Leaf,
    Split,
    best_split,
    fit_forest,
    gini,
    grow_tree,
    node_from_dict,
    node_to_dict,
    predict,
    predict_batch,
    predict_tree,
    tree_depth,
)


def _gini_of(y):
    pos = float(np.sum(y))
    return gini(pos, len(y) - pos)


def _variance_of(y):
    return float(np.mean((y - np.mean(y)) ** 2))


def exhaustive_split(X, y, impurity="gini"):
    """Scan every (feature, midpoint) and recompute child impurities from scratch."""
    measure = _gini_of if impurity == "gini" else _variance_of
    n = len(y)
    parent = measure(y)
    candidates = []
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for lower, upper in zip(values[:-1], values[1:]):
            t = (lower + upper) / 2.0
            if not t < upper:
                t = lower
            left = X[:, f] <= t
            right = ~left
            gain = parent - left.sum() / n * measure(y[left]) - right.sum() / n * measure(y[right])
            candidates.append((gain, f, t))
    if not candidates:
        return None
    top = max(c[0] for c in candidates)
    if top <= 1e-12:
        return None
    ties = [c for c in candidates if c[0] >= top - 1e-9]
    gain, f, t = min(ties, key=lambda c: (c[1], c[2]))
    return f, t, gain


class TestGini:
    """Tests for gini"""

    def test_values(self):
        assert gini(1, 1) == 0.5
        assert gini(3, 0) == 0.0

    def test_empty(self):
        with pytest.raises(EmptyNode):
            gini(0, 0)


class TestBestSplit:
    """Tests for best_split"""

    def test_matches_exhaustive_scan_gini(self):
        """Test 200 random datasets (<= 20 x 5) against the exhaustive scan"""
        rng = np.random.default_rng(123)
        for _ in range(200):
            n = int(rng.integers(2, 21))
            d = int(rng.integers(1, 6))
            X = rng.integers(0, 5, size=(n, d)).astype(float)
            y = rng.integers(0, 2, size=n).astype(float)

            got = best_split(X, y)
            expected = exhaustive_split(X, y)

            if expected is None:
                assert got is None
            else:
                assert got is not None
                assert got[:2] == expected[:2]
                assert got[2] == pytest.approx(expected[2], abs=1e-12)

    def test_matches_exhaustive_scan_variance(self):
        """Test the regression criterion against the same scan"""
        rng = np.random.default_rng(321)
        for _ in range(200):
            n = int(rng.integers(2, 21))
            d = int(rng.integers(1, 6))
            X = rng.standard_normal((n, d)).round(1)
            y = rng.integers(0, 5, size=n) / 4.0

            got = best_split(X, y, impurity="variance")
            expected = exhaustive_split(X, y, impurity="variance")

            if expected is None:
                assert got is None
            else:
                assert got[:2] == expected[:2]

    def test_ties_go_to_lowest_feature(self):
        """Test identical columns split on the first one"""
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        assert best_split(X, y) == (0, 1.5, 0.5)

    def test_feature_subset(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        assert best_split(X, y, feature_subset=[1])[0] == 1

    def test_no_gain(self):
        """Test constant features or pure labels give no split"""
        assert best_split(np.ones((4, 2)), np.array([0.0, 1.0, 0.0, 1.0])) is None
        assert best_split(np.arange(4.0)[:, None], np.ones(4)) is None

    def test_feature_is_python_int(self):
        X, y = np.array([[0.0], [1.0]]), np.array([0.0, 1.0])
        split = best_split(X, y, feature_subset=np.array([0]))
        assert type(split[0]) is int


class TestGrowTree:
    """Tests for grow_tree"""

    def test_zero_training_error(self):
        """Test an unbounded tree fits consistent labels exactly"""
        rng = np.random.default_rng(9)
        X = rng.standard_normal((40, 3))
        y = (X[:, 0] * X[:, 1] > 0).astype(float)
        params = ForestParams(n_trees=1, max_depth=None, features_per_split="all")

        tree = grow_tree(X, y, params, np.random.default_rng(0))

        assert np.array_equal(predict_tree(tree, X), y)

    def test_max_depth(self):
        rng = np.random.default_rng(10)
        X = rng.standard_normal((60, 3))
        y = rng.integers(0, 2, size=60).astype(float)
        params = ForestParams(n_trees=1, max_depth=2, features_per_split="all")
        assert tree_depth(grow_tree(X, y, params, np.random.default_rng(0))) <= 2

    def test_leaf_is_mean(self):
        """Test a depth-limited leaf predicts the mean target"""
        params = ForestParams(n_trees=1, max_depth=1)
        y = np.array([0.0, 1.0, 1.0, 1.0])
        tree = grow_tree(np.zeros((4, 1)), y, params, np.random.default_rng(0))
        assert tree == Leaf(0.75)

    def test_split_found_outside_the_drawn_subset(self):
        """Test a node only stops when no feature at all has a gaining split"""
        X = np.zeros((20, 9))
        X[:, 8] = np.arange(20)
        y = (X[:, 8] >= 10).astype(float)
        params = ForestParams(n_trees=1, max_depth=1, features_per_split="sqrt")

        for seed in range(10):
            tree = grow_tree(X, y, params, np.random.default_rng(seed))
            assert tree == Split(8, 9.5, Leaf(0.0), Leaf(1.0))


class TestForest:
    """Tests for fit_forest and prediction"""

    @pytest.fixture
    def data(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((80, 6))
        y = (X[:, 0] + 0.5 * X[:, 2] > 0).astype(float)
        return X, y

    def test_prediction_is_mean_of_trees(self, data):
        """Test the forest score is exactly the mean of per-tree scores"""
        X, y = data
        forest = fit_forest(X, y, ForestParams(n_trees=12, max_depth=4, seed=1))

        total = np.zeros(len(X))
        for tree in forest.trees:
            total += predict_tree(tree, X)
        assert np.array_equal(predict_batch(forest, X), total / 12)
        per_tree = np.mean([predict_tree(t, X) for t in forest.trees], axis=0)
        assert np.allclose(predict_batch(forest, X), per_tree)

    def test_row_score_independent_of_batch(self, data):
        X, y = data
        forest = fit_forest(X, y, ForestParams(n_trees=8, seed=2))
        batch = predict_batch(forest, X)
        assert [predict(forest, x) for x in X] == batch.tolist()

    def test_scores_in_unit_interval(self, data):
        X, y = data
        scores = predict_batch(fit_forest(X, y, ForestParams(n_trees=5)), X)
        assert np.all((scores >= 0.0) & (scores <= 1.0))

    def test_seeded_and_parallel_invariant(self, data):
        """Test the same seed gives the same forest with 1 or 2 jobs"""
        X, y = data
        a = fit_forest(X, y, ForestParams(n_trees=6, seed=4))
        b = fit_forest(X, y, ForestParams(n_trees=6, seed=4, n_jobs=2))
        c = fit_forest(X, y, ForestParams(n_trees=6, seed=5))
        assert [node_to_dict(t) for t in a.trees] == [node_to_dict(t) for t in b.trees]
        assert [node_to_dict(t) for t in a.trees] != [node_to_dict(t) for t in c.trees]

    def test_tree_streams_are_seed_plus_index(self, data):
        """Test tree t of seed s is tree 0 of seed s + t"""
        X, y = data
        a = fit_forest(X, y, ForestParams(n_trees=3, seed=4))
        b = fit_forest(X, y, ForestParams(n_trees=1, seed=6))
        assert node_to_dict(a.trees[2]) == node_to_dict(b.trees[0])

    def test_learns_separable_data(self, data):
        X, y = data
        forest = fit_forest(X, y, ForestParams(n_trees=25, seed=0))
        accuracy = np.mean((predict_batch(forest, X) >= 0.5) == (y == 1))
        assert accuracy > 0.95

    def test_regression(self):
        """Test regression trees predict means of [0,1] targets"""
        X = np.arange(20, dtype=float)[:, None]
        y = np.clip(X[:, 0] / 19.0, 0.0, 1.0)
        forest = fit_forest(X, y, ForestParams(n_trees=10, task=Task.REGRESS))
        assert np.abs(predict_batch(forest, X) - y).mean() < 0.1

    def test_single_row(self):
        forest = fit_forest(np.array([[1.0, 2.0]]), np.array([1.0]), ForestParams(n_trees=3))
        assert predict(forest, np.array([0.0, 0.0])) == 1.0

    def test_errors(self):
        with pytest.raises(TooFewSamples):
            fit_forest(np.zeros((0, 2)), np.zeros(0), ForestParams())
        with pytest.raises(LengthMismatch):
            fit_forest(np.zeros((3, 2)), np.zeros(2), ForestParams())
        forest = fit_forest(np.eye(3), np.array([0.0, 1.0, 0.0]), ForestParams(n_trees=2))
        with pytest.raises(LengthMismatch):
            predict_batch(forest, np.zeros((1, 4)))

    def test_candidate_features(self):
        """Test sqrt for classification and a third for regression by default"""
        assert ForestParams().n_candidate_features(45) == 7
        assert ForestParams(task=Task.REGRESS).n_candidate_features(45) == 15
        assert ForestParams(features_per_split="all").n_candidate_features(45) == 45


class TestTreeSerialization:
    """Tests for node_to_dict / node_from_dict"""

    def test_round_trip(self):
        tree = Split(1, 0.5, Leaf(0.0), Split(0, -1.25, Leaf(0.25), Leaf(1.0)))
        assert node_from_dict(node_to_dict(tree)) == tree

    @pytest.mark.parametrize(
        "data",
        [
            {"leaf": 1.5},
            {"f": 0, "t": 0.5, "l": {"leaf": 0.0}},
            {"f": -1, "t": 0.5, "l": {"leaf": 0.0}, "r": {"leaf": 1.0}},
            {"f": 0, "t": "x", "l": {"leaf": 0.0}, "r": {"leaf": 1.0}},
            [1, 2],
        ],
    )
    def test_corrupt(self, data):
        with pytest.raises(CorruptModelFile) as exc:
            node_from_dict(data)
        assert exc.value.field == "trees"
