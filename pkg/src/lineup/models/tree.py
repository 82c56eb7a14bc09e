"""CART trees: Gini classification and squared-error regression.

One split-search routine serves the standalone decision tree, the forest
(which adds per-split feature subsampling), and the boosting stage (which fits
regression trees to gradients). Split thresholds are stored as the largest
value routed left, so partitions are exact with a `<=` test.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GINI = "gini"
MSE = "mse"


@dataclass
class TreeNode:
    value: float  # leaf prediction: positive-class frequency (gini) or mean (mse)
    n_samples: int
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value, "n": self.n_samples}
        return {
            "value": self.value,
            "n": self.n_samples,
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "feature" not in d:
            return cls(value=d["value"], n_samples=d["n"])
        return cls(
            value=d["value"],
            n_samples=d["n"],
            feature=d["feature"],
            threshold=d["threshold"],
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


def _split_scores_gini(
    sorted_y: np.ndarray, n: int
) -> tuple[np.ndarray, float]:
    """Count-weighted Gini sums for every left-size i in 1..n-1, plus the node's."""
    pos_total = sorted_y.sum()
    i = np.arange(1, n)
    pos_left = np.cumsum(sorted_y)[:-1]
    pos_right = pos_total - pos_left
    left = 2.0 * pos_left * (i - pos_left) / i
    right = 2.0 * pos_right * ((n - i) - pos_right) / (n - i)
    node = 2.0 * pos_total * (n - pos_total) / n
    return node - (left + right), node


def _split_scores_mse(sorted_y: np.ndarray, n: int) -> tuple[np.ndarray, float]:
    """Sum-of-squared-error reductions for every left-size i in 1..n-1."""
    total = sorted_y.sum()
    total_sq = (sorted_y**2).sum()
    i = np.arange(1, n)
    sum_left = np.cumsum(sorted_y)[:-1]
    sumsq_left = np.cumsum(sorted_y**2)[:-1]
    sse_left = sumsq_left - sum_left**2 / i
    sse_right = (total_sq - sumsq_left) - (total - sum_left) ** 2 / (n - i)
    sse_node = total_sq - total**2 / n
    return sse_node - (sse_left + sse_right), sse_node


class Tree:
    """A fitted CART tree plus per-feature impurity-decrease importances."""

    def __init__(self, root: TreeNode, importances: np.ndarray, task: str):
        self.root = root
        self.importances = importances
        self.task = task

    def predict(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        out = np.empty(rows.shape[0])
        stack = [(self.root, np.arange(rows.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            if node.is_leaf:
                out[idx] = node.value
                continue
            go_left = rows[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[go_left]))
            stack.append((node.right, idx[~go_left]))
        return out

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "root": self.root.to_dict(),
            "importances": self.importances.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            root=TreeNode.from_dict(d["root"]),
            importances=np.asarray(d["importances"], dtype=float),
            task=d["task"],
        )


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    *,
    task: str = GINI,
    max_depth: int,
    min_samples_leaf: int = 1,
    feature_fraction: float = 1.0,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Grow a CART tree greedily; ties go to the lowest feature index.

    `feature_fraction` < 1 samples ceil(fraction * m) candidate features at
    every split from `rng` (required in that case).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = X.shape
    if feature_fraction < 1.0 and rng is None:
        raise ValueError("feature subsampling requires an rng")
    n_candidates = max(1, int(np.ceil(feature_fraction * m)))
    score_fn = _split_scores_gini if task == GINI else _split_scores_mse
    importances = np.zeros(m)

    def leaf(idx: np.ndarray) -> TreeNode:
        return TreeNode(value=float(y[idx].mean()), n_samples=idx.size)

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        n_node = idx.size
        y_node = y[idx]
        if (
            depth >= max_depth
            or n_node < 2 * min_samples_leaf
            or np.all(y_node == y_node[0])
        ):
            return leaf(idx)
        if n_candidates < m:
            features = np.sort(rng.choice(m, size=n_candidates, replace=False))
        else:
            features = np.arange(m)
        best = None  # (decrease, feature, threshold, left_sorted_idx, right_sorted_idx)
        for j in features:
            order = np.argsort(X[idx, j], kind="mergesort")
            sorted_idx = idx[order]
            sorted_v = X[sorted_idx, j]
            decreases, _ = score_fn(y[sorted_idx], n_node)
            sizes = np.arange(1, n_node)
            valid = (
                (sorted_v[:-1] < sorted_v[1:])
                & (sizes >= min_samples_leaf)
                & (n_node - sizes >= min_samples_leaf)
            )
            if not valid.any():
                continue
            decreases = np.where(valid, decreases, -np.inf)
            k = int(np.argmax(decreases))
            if best is None or decreases[k] > best[0]:
                best = (
                    float(decreases[k]),
                    int(j),
                    float(sorted_v[k]),
                    sorted_idx[: k + 1],
                    sorted_idx[k + 1 :],
                )
        if best is None:
            return leaf(idx)
        # Zero-gain splits are kept (deeper splits may still separate, XOR-style);
        # tiny negative float noise is clamped out of the importances.
        decrease, j, threshold, left_idx, right_idx = best
        importances[j] += max(decrease, 0.0)
        node = leaf(idx)
        node.feature = j
        node.threshold = threshold
        node.left = build(left_idx, depth + 1)
        node.right = build(right_idx, depth + 1)
        return node

    root = build(np.arange(n), 0)
    return Tree(root=root, importances=importances, task=task)
