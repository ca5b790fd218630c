"""
CART random forest for per-event binary classification and [0,1] regression.

Trees are grown on bootstrap resamples; tree t draws everything (bootstrap
and per-node feature subsets) from its own PCG64 stream seeded with seed + t,
so training order and parallelism never change the fitted forest.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from ..core.types import Task
from ..data.ingestion import FeatureMask
from ..errors import CorruptModelFile, EmptyNode, LengthMismatch, TooFewSamples
from .features import Normalizer

logger = logging.getLogger(__name__)

# gains closer than this count as ties; gains at or below it count as no gain
GAIN_TOL = 1e-12

Impurity = Literal["gini", "variance"]


class ForestParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_trees: int = Field(default=175, ge=1)
    max_depth: Optional[int] = Field(default=10, ge=1)
    min_leaf: int = Field(default=1, ge=1)
    features_per_split: Optional[Literal["sqrt", "third", "all"]] = None
    task: Task = Task.CLASSIFY
    seed: int = 0
    n_jobs: int = 1

    def n_candidate_features(self, n_features: int) -> int:
        rule = self.features_per_split or ("sqrt" if self.task == Task.CLASSIFY else "third")
        if rule == "all":
            return n_features
        if rule == "sqrt":
            return max(1, min(n_features, math.ceil(math.sqrt(n_features))))
        return max(1, min(n_features, math.ceil(n_features / 3)))

    @property
    def impurity(self) -> Impurity:
        return "gini" if self.task == Task.CLASSIFY else "variance"


@dataclass(frozen=True)
class Leaf:
    prediction: float


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True, eq=False)
class ForestModel:
    params: ForestParams
    trees: Tuple[TreeNode, ...]
    n_features: int
    normalizer: Optional[Normalizer] = None
    feature_mask: Optional[FeatureMask] = None


def gini(pos: int, neg: int) -> float:
    n = pos + neg
    if n < 1:
        raise EmptyNode("Gini impurity of an empty node")
    p, q = pos / n, neg / n
    return 1.0 - p * p - q * q


def _split_gains(xs: np.ndarray, ys: np.ndarray, impurity: Impurity, min_leaf: int):
    """Gains of every valid cut of presorted (xs, ys); cut i puts the first i rows left."""
    n = len(xs)
    cuts = np.arange(1, n)
    valid = (xs[1:] > xs[:-1]) & (cuts >= min_leaf) & (n - cuts >= min_leaf)
    cuts = cuts[valid]
    if cuts.size == 0:
        return cuts, np.zeros(0)

    n_left = cuts.astype(np.float64)
    n_right = n - n_left
    csum = np.cumsum(ys)
    s_left = csum[cuts - 1]
    s_right = csum[-1] - s_left
    if impurity == "gini":
        p_left, p_right = s_left / n_left, s_right / n_right
        imp_left = 1.0 - p_left**2 - (1.0 - p_left) ** 2
        imp_right = 1.0 - p_right**2 - (1.0 - p_right) ** 2
        parent = gini(csum[-1], n - csum[-1])
    else:
        csq = np.cumsum(ys * ys)
        q_left = csq[cuts - 1]
        q_right = csq[-1] - q_left
        imp_left = np.maximum(q_left / n_left - (s_left / n_left) ** 2, 0.0)
        imp_right = np.maximum(q_right / n_right - (s_right / n_right) ** 2, 0.0)
        parent = max(csq[-1] / n - (csum[-1] / n) ** 2, 0.0)
    gains = parent - (n_left / n) * imp_left - (n_right / n) * imp_right
    return cuts, gains


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    feature_subset: Optional[Sequence[int]] = None,
    impurity: Impurity = "gini",
    min_leaf: int = 1,
) -> Optional[Tuple[int, float, float]]:
    """
    Best (feature, threshold, gain) over midpoints of consecutive distinct values.

    Ties within GAIN_TOL go to the lower feature, then the lower threshold.
    Returns None when no split has positive gain.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) < 2:
        return None
    if feature_subset is None:
        features = range(X.shape[1])
    else:
        features = sorted(int(f) for f in feature_subset)

    candidates: List[Tuple[float, int, float]] = []
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        cuts, gains = _split_gains(xs, ys, impurity, min_leaf)
        if cuts.size == 0:
            continue
        lower, upper = xs[cuts - 1], xs[cuts]
        thresholds = (lower + upper) / 2.0
        thresholds = np.where(thresholds < upper, thresholds, lower)
        candidates.extend(zip(gains.tolist(), [f] * len(cuts), thresholds.tolist()))

    if not candidates:
        return None
    top = max(gain for gain, _, _ in candidates)
    if top <= GAIN_TOL:
        return None
    gain, feature, threshold = min(
        ((g, f, t) for g, f, t in candidates if g >= top - GAIN_TOL), key=lambda c: (c[1], c[2])
    )
    return feature, threshold, gain


def grow_tree(
    X: np.ndarray, y: np.ndarray, params: ForestParams, rng: np.random.Generator, depth: int = 0
) -> TreeNode:
    """
    Grow one CART tree depth first.

    A node becomes a leaf at max_depth, below 2 * min_leaf rows, or when its
    targets are all equal. Otherwise it searches a random subset of
    n_candidate_features features; if that subset has no split with positive
    gain, the remaining features are searched too, so a node only stops early
    when no feature splits it.
    """
    n, n_features = X.shape
    prediction = float(y.mean())
    if (
        (params.max_depth is not None and depth >= params.max_depth)
        or n < 2 * params.min_leaf
        or np.all(y == y[0])
    ):
        return Leaf(prediction)

    k = params.n_candidate_features(n_features)
    subset = rng.choice(n_features, size=k, replace=False)
    split = best_split(X, y, subset, params.impurity, params.min_leaf)
    if split is None and k < n_features:
        rest = np.setdiff1d(np.arange(n_features), subset)
        split = best_split(X, y, rest, params.impurity, params.min_leaf)
    if split is None:
        return Leaf(prediction)

    feature, threshold, _ = split
    goes_left = X[:, feature] <= threshold
    return Split(
        feature=feature,
        threshold=threshold,
        left=grow_tree(X[goes_left], y[goes_left], params, rng, depth + 1),
        right=grow_tree(X[~goes_left], y[~goes_left], params, rng, depth + 1),
    )


def _fit_tree(X: np.ndarray, y: np.ndarray, params: ForestParams, t: int) -> TreeNode:
    rng = np.random.Generator(np.random.PCG64(params.seed + t))
    idx = rng.integers(0, len(y), size=len(y))
    return grow_tree(X[idx], y[idx], params, rng)


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams,
    normalizer: Optional[Normalizer] = None,
    feature_mask: Optional[FeatureMask] = None,
) -> ForestModel:
    """
    Fit a forest on already-normalized features.

    Args:
        X: Training matrix, one row per window (n x d).
        y: Targets: 0/1 labels for classification, probabilities in [0, 1]
            for regression.
        params: Tree count, depth, leaf size, feature rule, task and seed.
            Tree t uses the PCG64 stream seeded with params.seed + t.
        normalizer: Statistics X was normalized with, carried for inference.
        feature_mask: Channel selection the windows were built with.

    Returns:
        ForestModel whose trees are in index order whatever params.n_jobs is.

    Raises:
        TooFewSamples: X has no rows.
        LengthMismatch: X and y differ in length.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise TooFewSamples("fit_forest needs at least one training row", {"n": int(len(X))})
    if len(y) != len(X):
        raise LengthMismatch(f"{len(X)} rows but {len(y)} targets")

    trees = Parallel(n_jobs=params.n_jobs)(
        delayed(_fit_tree)(X, y, params, t) for t in range(params.n_trees)
    )
    logger.info(
        f"Fitted forest: {params.n_trees} trees, max_depth={params.max_depth}, "
        f"task={params.task.value}, n={len(y)}"
    )
    return ForestModel(
        params=params,
        trees=tuple(trees),
        n_features=X.shape[1],
        normalizer=normalizer,
        feature_mask=feature_mask,
    )


def _predict_node(node: TreeNode, X: np.ndarray, rows: np.ndarray, out: np.ndarray) -> None:
    if isinstance(node, Leaf):
        out[rows] = node.prediction
        return
    goes_left = X[rows, node.feature] <= node.threshold
    _predict_node(node.left, X, rows[goes_left], out)
    _predict_node(node.right, X, rows[~goes_left], out)


def predict_tree(tree: TreeNode, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = np.empty(len(X))
    _predict_node(tree, X, np.arange(len(X)), out)
    return out


def predict_batch(forest: ForestModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != forest.n_features:
        raise LengthMismatch(
            f"Forest expects {forest.n_features} features, got {X.shape[1]}",
            {"got": int(X.shape[1]), "expected": forest.n_features},
        )
    # summed tree by tree so a row's score never depends on the batch it is in
    total = np.zeros(len(X))
    for tree in forest.trees:
        total += predict_tree(tree, X)
    return total / len(forest.trees)


def predict(forest: ForestModel, x: np.ndarray) -> float:
    """Score in [0,1] for one normalized feature vector."""
    return float(predict_batch(forest, np.asarray(x, dtype=np.float64)[None, :])[0])


def tree_depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


def node_to_dict(node: TreeNode) -> Dict[str, Any]:
    if isinstance(node, Leaf):
        return {"leaf": node.prediction}
    return {
        "f": node.feature,
        "t": node.threshold,
        "l": node_to_dict(node.left),
        "r": node_to_dict(node.right),
    }


def node_from_dict(data: Any) -> TreeNode:
    if not isinstance(data, dict):
        raise CorruptModelFile("trees")
    if "leaf" in data:
        prediction = data["leaf"]
        if not isinstance(prediction, (int, float)) or not 0.0 <= prediction <= 1.0:
            raise CorruptModelFile("trees", f"Leaf prediction out of range: {prediction!r}")
        return Leaf(float(prediction))
    try:
        feature, threshold = data["f"], data["t"]
        left, right = data["l"], data["r"]
    except KeyError as e:
        raise CorruptModelFile("trees", f"Split node missing key {e}") from None
    if not isinstance(feature, int) or feature < 0 or not isinstance(threshold, (int, float)):
        raise CorruptModelFile("trees", f"Bad split node f={feature!r} t={threshold!r}")
    return Split(int(feature), float(threshold), node_from_dict(left), node_from_dict(right))
