"""Model zoo: four algorithms, variant transforms, training, and importance."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..data import Dataset
from . import ensemble, logistic
from .transforms import TransformRecord
from .tree import GINI, Tree, fit_tree


class ModelError(ValueError):
    pass


class AlgorithmKind(str, Enum):
    LOGISTIC_REGRESSION = "LogisticRegression"
    DECISION_TREE = "DecisionTree"
    RANDOM_FOREST = "RandomForest"
    GRADIENT_BOOSTING = "GradientBoosting"


SHORT_NAMES = {
    AlgorithmKind.LOGISTIC_REGRESSION: "LogisticRegression",
    AlgorithmKind.DECISION_TREE: "DecisionTree",
    AlgorithmKind.RANDOM_FOREST: "RandomForest",
    AlgorithmKind.GRADIENT_BOOSTING: "GBT",
}


@dataclass(frozen=True)
class HyperRange:
    low: float
    high: float
    default: float
    integer: bool = False
    low_exclusive: bool = False


HP_SPECS: dict[AlgorithmKind, dict[str, HyperRange]] = {
    AlgorithmKind.LOGISTIC_REGRESSION: {
        "learning_rate": HyperRange(0.0, 1.0, 0.1, low_exclusive=True),
        "l2_penalty": HyperRange(0.0, 10.0, 0.01),
        "epochs": HyperRange(1, 2000, 300, integer=True),
    },
    AlgorithmKind.DECISION_TREE: {
        "max_depth": HyperRange(1, 16, 6, integer=True),
        "min_samples_leaf": HyperRange(1, 100, 5, integer=True),
    },
    AlgorithmKind.RANDOM_FOREST: {
        "n_trees": HyperRange(1, 200, 30, integer=True),
        "max_depth": HyperRange(1, 16, 8, integer=True),
        "min_samples_leaf": HyperRange(1, 100, 3, integer=True),
        "feature_subsample_fraction": HyperRange(0.0, 1.0, 0.6, low_exclusive=True),
    },
    AlgorithmKind.GRADIENT_BOOSTING: {
        "n_rounds": HyperRange(1, 500, 80, integer=True),
        "max_depth": HyperRange(1, 16, 3, integer=True),
        "learning_rate": HyperRange(0.0, 1.0, 0.1, low_exclusive=True),
    },
}


def default_hyperparameters(algorithm: AlgorithmKind) -> dict[str, float]:
    return {name: spec.default for name, spec in HP_SPECS[algorithm].items()}


def validate_hyperparameters(algorithm: AlgorithmKind, hp: dict) -> dict[str, float]:
    spec = HP_SPECS[algorithm]
    unknown = set(hp) - set(spec)
    missing = set(spec) - set(hp)
    if unknown:
        raise ModelError(f"unknown hyperparameters for {algorithm.value}: {sorted(unknown)}")
    if missing:
        raise ModelError(f"missing hyperparameters for {algorithm.value}: {sorted(missing)}")
    out: dict[str, float] = {}
    for name, rng in spec.items():
        value = float(hp[name])
        below = value <= rng.low if rng.low_exclusive else value < rng.low
        if below or value > rng.high:
            raise ModelError(
                f"{algorithm.value}.{name}={value} outside "
                f"{'(' if rng.low_exclusive else '['}{rng.low}, {rng.high}]"
            )
        if rng.integer and value != int(value):
            raise ModelError(f"{algorithm.value}.{name} must be an integer")
        out[name] = int(value) if rng.integer else value
    return out


@dataclass(frozen=True)
class TrainedModel:
    """One candidate of the grid: algorithm, variant, and learned parameters."""

    id: str
    algorithm: AlgorithmKind
    variant_id: int
    variant_name: str
    hyperparameters: dict[str, float]
    params: dict
    feature_names: tuple[str, ...]
    transform_record: TransformRecord
    seed: int

    def predict_from_raw(self, rows: np.ndarray) -> np.ndarray:
        """Apply this model's fitted transform, then predict."""
        return predict_proba(self, self.transform_record.apply(rows))

    def to_dict(self) -> dict:
        params = dict(self.params)
        if self.algorithm == AlgorithmKind.LOGISTIC_REGRESSION:
            params = {
                "weights": params["weights"].tolist(),
                "bias": params["bias"],
                "mean": params["mean"].tolist(),
                "std": params["std"].tolist(),
            }
        elif self.algorithm == AlgorithmKind.DECISION_TREE:
            params = {"tree": params["tree"].to_dict()}
        else:
            params = {
                **{k: v for k, v in params.items() if k != "trees"},
                "trees": [t.to_dict() for t in params["trees"]],
            }
        return {
            "id": self.id,
            "algorithm": self.algorithm.value,
            "variant_id": self.variant_id,
            "variant_name": self.variant_name,
            "hyperparameters": self.hyperparameters,
            "parameters": params,
            "feature_names": list(self.feature_names),
            "transform_record": self.transform_record.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        algorithm = AlgorithmKind(d["algorithm"])
        raw = d["parameters"]
        if algorithm == AlgorithmKind.LOGISTIC_REGRESSION:
            params = {
                "weights": np.asarray(raw["weights"], dtype=float),
                "bias": float(raw["bias"]),
                "mean": np.asarray(raw["mean"], dtype=float),
                "std": np.asarray(raw["std"], dtype=float),
            }
        elif algorithm == AlgorithmKind.DECISION_TREE:
            params = {"tree": Tree.from_dict(raw["tree"])}
        else:
            params = {
                **{k: v for k, v in raw.items() if k != "trees"},
                "trees": [Tree.from_dict(t) for t in raw["trees"]],
            }
        return cls(
            id=d["id"],
            algorithm=algorithm,
            variant_id=d["variant_id"],
            variant_name=d["variant_name"],
            hyperparameters=d["hyperparameters"],
            params=params,
            feature_names=tuple(d["feature_names"]),
            transform_record=TransformRecord.from_dict(d["transform_record"]),
            seed=d["seed"],
        )


def train_model(
    algorithm: AlgorithmKind,
    hp: dict,
    dataset: Dataset,
    train_indices,
    seed: int,
    *,
    model_id: str | None = None,
    variant_id: int = 1,
    variant_name: str = "Default",
    transform_record: TransformRecord | None = None,
) -> TrainedModel:
    """Train one candidate on the (already variant-transformed) dataset."""
    hp = validate_hyperparameters(algorithm, hp)
    train_indices = np.asarray(train_indices, dtype=int)
    X = dataset.rows[train_indices]
    y = dataset.labels[train_indices].astype(float)
    if len(np.unique(y)) < 2:
        raise ModelError("training split contains a single class")

    if algorithm == AlgorithmKind.LOGISTIC_REGRESSION:
        params = logistic.fit_logistic(
            X,
            y,
            learning_rate=hp["learning_rate"],
            l2_penalty=hp["l2_penalty"],
            epochs=hp["epochs"],
        )
    elif algorithm == AlgorithmKind.DECISION_TREE:
        params = {
            "tree": fit_tree(
                X,
                y,
                task=GINI,
                max_depth=hp["max_depth"],
                min_samples_leaf=hp["min_samples_leaf"],
            )
        }
    elif algorithm == AlgorithmKind.RANDOM_FOREST:
        params = ensemble.fit_forest(
            X,
            y,
            n_trees=hp["n_trees"],
            max_depth=hp["max_depth"],
            min_samples_leaf=hp["min_samples_leaf"],
            feature_subsample_fraction=hp["feature_subsample_fraction"],
            seed=seed,
        )
    else:
        params = ensemble.fit_boosting(
            X,
            y,
            n_rounds=hp["n_rounds"],
            max_depth=hp["max_depth"],
            learning_rate=hp["learning_rate"],
        )

    if model_id is None:
        model_id = f"{SHORT_NAMES[algorithm]}_{variant_id}"
    return TrainedModel(
        id=model_id,
        algorithm=algorithm,
        variant_id=variant_id,
        variant_name=variant_name,
        hyperparameters=hp,
        params=params,
        feature_names=tuple(dataset.schema.names),
        transform_record=transform_record or TransformRecord(),
        seed=seed,
    )


def predict_proba(model: TrainedModel, rows: np.ndarray) -> np.ndarray:
    """Positive-class probability for rows already in the model's feature space."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.shape[1] != len(model.feature_names):
        raise ModelError(
            f"expected {len(model.feature_names)} features, got {rows.shape[1]}"
        )
    if model.algorithm == AlgorithmKind.LOGISTIC_REGRESSION:
        return logistic.predict_logistic(model.params, rows)
    if model.algorithm == AlgorithmKind.DECISION_TREE:
        return model.params["tree"].predict(rows)
    if model.algorithm == AlgorithmKind.RANDOM_FOREST:
        return ensemble.predict_forest(model.params, rows)
    return ensemble.predict_boosting(model.params, rows)


def raw_global_importance(model: TrainedModel) -> np.ndarray:
    """Unnormalized nonnegative importance per feature.

    Logistic: |weight| on the standardized scale. Trees and ensembles: total
    impurity decrease attributed to each feature over all splits.
    """
    if model.algorithm == AlgorithmKind.LOGISTIC_REGRESSION:
        return np.abs(model.params["weights"])
    if model.algorithm == AlgorithmKind.DECISION_TREE:
        return model.params["tree"].importances.copy()
    if model.algorithm == AlgorithmKind.RANDOM_FOREST:
        return ensemble.forest_importances(model.params)
    return ensemble.boosting_importances(model.params)
