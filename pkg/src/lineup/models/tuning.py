"""Seeded random-search hyperparameter tuning against validation ROC AUC."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset
from ..metrics import roc_auc
from . import AlgorithmKind, default_hyperparameters, predict_proba, train_model


@dataclass(frozen=True)
class SearchDim:
    low: float
    high: float
    integer: bool = False
    log_scale: bool = False

    def sample(self, rng: np.random.Generator) -> float:
        if self.log_scale:
            value = float(np.exp(rng.uniform(np.log(self.low), np.log(self.high))))
        else:
            value = float(rng.uniform(self.low, self.high))
        return float(int(round(value))) if self.integer else value


SEARCH_SPACES: dict[AlgorithmKind, dict[str, SearchDim]] = {
    AlgorithmKind.LOGISTIC_REGRESSION: {
        "learning_rate": SearchDim(0.01, 1.0, log_scale=True),
        "l2_penalty": SearchDim(1e-4, 1.0, log_scale=True),
        "epochs": SearchDim(100, 500, integer=True),
    },
    AlgorithmKind.DECISION_TREE: {
        "max_depth": SearchDim(2, 12, integer=True),
        "min_samples_leaf": SearchDim(1, 20, integer=True),
    },
    AlgorithmKind.RANDOM_FOREST: {
        "n_trees": SearchDim(10, 60, integer=True),
        "max_depth": SearchDim(3, 12, integer=True),
        "min_samples_leaf": SearchDim(1, 10, integer=True),
        "feature_subsample_fraction": SearchDim(0.3, 1.0),
    },
    AlgorithmKind.GRADIENT_BOOSTING: {
        "n_rounds": SearchDim(30, 150, integer=True),
        "max_depth": SearchDim(2, 5, integer=True),
        "learning_rate": SearchDim(0.03, 0.3, log_scale=True),
    },
}


def sample_candidates(
    algorithm: AlgorithmKind, budget: int, seed: int
) -> list[dict[str, float]]:
    """Defaults first, then budget-1 random draws from the search space."""
    rng = np.random.default_rng(seed)
    candidates = [default_hyperparameters(algorithm)]
    space = SEARCH_SPACES[algorithm]
    for _ in range(budget - 1):
        candidates.append({name: dim.sample(rng) for name, dim in space.items()})
    return candidates


def tune_hyperparameters(
    algorithm: AlgorithmKind,
    dataset: Dataset,
    train_indices,
    val_indices,
    budget: int,
    seed: int,
) -> dict[str, float]:
    """Return the candidate with the best validation AUC (earliest wins ties)."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    val_indices = np.asarray(val_indices, dtype=int)
    val_rows = dataset.rows[val_indices]
    val_labels = dataset.labels[val_indices]
    best_hp: dict[str, float] | None = None
    best_auc = -np.inf
    for hp in sample_candidates(algorithm, budget, seed):
        model = train_model(algorithm, hp, dataset, train_indices, seed)
        auc = roc_auc(val_labels, predict_proba(model, val_rows))
        if auc > best_auc:
            best_auc = auc
            best_hp = hp
    return best_hp
