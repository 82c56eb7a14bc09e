"""Tree ensembles: bagged forest and logistic-loss gradient boosting."""
from __future__ import annotations

import numpy as np

from .logistic import sigmoid
from .tree import GINI, MSE, Tree, fit_tree


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    *,
    n_trees: int,
    max_depth: int,
    min_samples_leaf: int,
    feature_subsample_fraction: float,
    seed: int,
) -> dict:
    """Seeded bootstrap bagging with per-split feature subsampling."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    trees: list[Tree] = []
    for _ in range(int(n_trees)):
        boot = rng.integers(0, n, size=n)
        trees.append(
            fit_tree(
                X[boot],
                y[boot],
                task=GINI,
                max_depth=int(max_depth),
                min_samples_leaf=int(min_samples_leaf),
                feature_fraction=feature_subsample_fraction,
                rng=rng,
            )
        )
    return {"trees": trees}


def predict_forest(params: dict, rows: np.ndarray) -> np.ndarray:
    """Mean of per-tree leaf class frequencies."""
    preds = np.stack([tree.predict(rows) for tree in params["trees"]])
    return preds.mean(axis=0)


def forest_importances(params: dict) -> np.ndarray:
    return np.sum([tree.importances for tree in params["trees"]], axis=0)


def fit_boosting(
    X: np.ndarray,
    y: np.ndarray,
    *,
    n_rounds: int,
    max_depth: int,
    learning_rate: float,
) -> dict:
    """Boost depth-limited regression trees on logistic-loss gradients.

    Each round fits a squared-error tree to the residual y - sigmoid(F) and
    steps the raw score F by learning_rate times the tree output.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    base_rate = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    f0 = float(np.log(base_rate / (1 - base_rate)))
    scores = np.full(X.shape[0], f0)
    trees: list[Tree] = []
    for _ in range(int(n_rounds)):
        residual = y - sigmoid(scores)
        tree = fit_tree(X, residual, task=MSE, max_depth=int(max_depth))
        scores += learning_rate * tree.predict(X)
        trees.append(tree)
    return {"trees": trees, "f0": f0, "learning_rate": learning_rate}


def predict_boosting(params: dict, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    scores = np.full(rows.shape[0], params["f0"])
    for tree in params["trees"]:
        scores += params["learning_rate"] * tree.predict(rows)
    return sigmoid(scores)


def boosting_importances(params: dict) -> np.ndarray:
    return np.sum([tree.importances for tree in params["trees"]], axis=0)
