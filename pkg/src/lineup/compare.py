"""Cross-model comparison geometry: normalized importance, panel ordering,
pairwise probability scatter panels with quadrant semantics, brushing,
and marginal probability histograms.

Quadrants run counterclockwise from the upper right: 1 = both models predict
positive, 2 = only the y-axis model does, 3 = neither, 4 = only the x-axis
model. A probability exactly at the threshold counts as positive.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_THRESHOLD = 0.5


class CompareError(ValueError):
    pass


@dataclass(frozen=True)
class ImportanceVector:
    model_id: str
    values: dict[str, float]
    normalized: bool
    degenerate: bool = False  # raw vector summed to zero; left as zeros


@dataclass(frozen=True)
class ScatterPoint:
    instance_id: int
    p_x: float
    p_y: float
    true_label: int
    quadrant: int
    outcome_x: str
    outcome_y: str


@dataclass(frozen=True)
class ScatterPanel:
    x_model_id: str
    y_model_id: str
    points: tuple[ScatterPoint, ...]
    quadrant_counts: dict[int, int]


@dataclass(frozen=True)
class RectSelection:
    x_model_id: str
    y_model_id: str
    x_range: tuple[float, float]
    y_range: tuple[float, float]

    def __post_init__(self):
        for lo, hi in (self.x_range, self.y_range):
            if hi < lo:
                raise CompareError(f"empty interval ({lo}, {hi})")


def normalize_importance(model_id: str, raw: dict[str, float]) -> ImportanceVector:
    """Scale nonnegative raw importances to sum to 1; zero vectors are flagged
    degenerate and left untouched."""
    negatives = {k: v for k, v in raw.items() if v < 0}
    if negatives:
        raise CompareError(f"negative importance entries: {sorted(negatives)}")
    total = sum(raw.values())
    if total == 0:
        return ImportanceVector(
            model_id=model_id, values=dict(raw), normalized=True, degenerate=True
        )
    return ImportanceVector(
        model_id=model_id,
        values={k: v / total for k, v in raw.items()},
        normalized=True,
    )


def feature_universe(importances: list[ImportanceVector]) -> list[str]:
    """Union of feature names across models, sorted for a stable column order."""
    names: set[str] = set()
    for vec in importances:
        names.update(vec.values)
    return sorted(names)


def order_feature_panels(importances: list[ImportanceVector]) -> list[str]:
    """Features by mean importance across models, descending; ties alphabetical.

    Features missing from a model count as 0 for that model.
    """
    universe = feature_universe(importances)
    means = {
        name: sum(vec.values.get(name, 0.0) for vec in importances) / len(importances)
        for name in universe
    }
    return sorted(universe, key=lambda name: (-means[name], name))


def classify_quadrant(
    p_x: float, p_y: float, threshold: float = DEFAULT_THRESHOLD
) -> int:
    x_pos = p_x >= threshold
    y_pos = p_y >= threshold
    if x_pos and y_pos:
        return 1
    if not x_pos and y_pos:
        return 2
    if not x_pos and not y_pos:
        return 3
    return 4


def prediction_outcome(
    prob: float, label: int, threshold: float = DEFAULT_THRESHOLD
) -> str:
    predicted_positive = prob >= threshold
    if predicted_positive:
        return "TP" if label == 1 else "FP"
    return "FN" if label == 1 else "TN"


def build_scatter_panel(
    preds_x,
    preds_y,
    labels,
    *,
    x_model_id: str = "x",
    y_model_id: str = "y",
    instance_ids=None,
    threshold: float = DEFAULT_THRESHOLD,
) -> ScatterPanel:
    """Per-instance pair probabilities with quadrant and per-model outcomes."""
    preds_x = np.asarray(preds_x, dtype=float)
    preds_y = np.asarray(preds_y, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if not (preds_x.shape == preds_y.shape == labels.shape):
        raise CompareError("preds_x, preds_y, labels must have equal length")
    if instance_ids is None:
        instance_ids = np.arange(labels.size)
    instance_ids = np.asarray(instance_ids, dtype=int)
    if instance_ids.shape != labels.shape:
        raise CompareError("instance_ids length mismatch")

    points = []
    counts = {1: 0, 2: 0, 3: 0, 4: 0}
    for idx, px, py, label in zip(instance_ids, preds_x, preds_y, labels):
        quadrant = classify_quadrant(px, py, threshold)
        counts[quadrant] += 1
        points.append(
            ScatterPoint(
                instance_id=int(idx),
                p_x=float(px),
                p_y=float(py),
                true_label=int(label),
                quadrant=quadrant,
                outcome_x=prediction_outcome(px, label, threshold),
                outcome_y=prediction_outcome(py, label, threshold),
            )
        )
    return ScatterPanel(
        x_model_id=x_model_id,
        y_model_id=y_model_id,
        points=tuple(points),
        quadrant_counts=counts,
    )


def select_in_rect(panel: ScatterPanel, rect: RectSelection) -> list[int]:
    """Instance ids inside the closed rectangle, sorted; may be empty."""
    if (rect.x_model_id, rect.y_model_id) != (panel.x_model_id, panel.y_model_id):
        raise CompareError("selection rectangle targets a different panel")
    (x_lo, x_hi), (y_lo, y_hi) = rect.x_range, rect.y_range
    return sorted(
        p.instance_id
        for p in panel.points
        if x_lo <= p.p_x <= x_hi and y_lo <= p.p_y <= y_hi
    )


def probability_histogram(preds, bins: int) -> list[int]:
    """Equal-width bin counts over [0, 1]; the last bin is right-closed."""
    if bins < 2:
        raise CompareError("need at least 2 bins")
    preds = np.asarray(preds, dtype=float)
    counts, _ = np.histogram(preds, bins=bins, range=(0.0, 1.0))
    return [int(c) for c in counts]
