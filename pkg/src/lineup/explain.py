"""Shapley-value local explanations of positive-class probability.

Two routes to the same quantity: a coalition-sampling weighted-least-squares
estimator (exhaustive below a budget threshold, sampled above it) and a direct
enumeration oracle. Both simulate absent features by substituting background
rows and averaging the prediction.
"""
from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .models import predict_proba as _predict_proba

_PREDICT_CHUNK = 64  # coalitions per batched predict call


class ExplainError(ValueError):
    pass


@dataclass(frozen=True)
class BackgroundSet:
    """Reference rows standing in for 'absent' feature values."""

    rows: np.ndarray  # (k, m)
    seed: int

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ExplainError("background needs at least one row")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)


@dataclass(frozen=True)
class ShapValues:
    model_id: str
    instance_id: int
    phi: np.ndarray
    base_value: float
    degenerate: bool = False


@dataclass(frozen=True)
class SelectionSummary:
    """Per-model mean attributions plus raw-scale mean feature values."""

    instance_ids: tuple[int, ...]
    mean_phi: dict[str, dict[str, float]]  # model_id -> feature name -> mean phi
    base_values: dict[str, float]  # model_id -> base value
    mean_feature_values: dict[str, float]  # raw feature name -> mean over selection


def sample_background(
    dataset: Dataset, train_indices, size: int = 100, seed: int = 0
) -> BackgroundSet:
    """Seeded uniform sample of training rows (without replacement when possible)."""
    train_indices = np.asarray(train_indices, dtype=int)
    rng = np.random.default_rng(seed)
    k = min(size, train_indices.size)
    chosen = rng.choice(train_indices, size=k, replace=False)
    return BackgroundSet(rows=dataset.rows[np.sort(chosen)], seed=seed)


def default_coalition_budget(m: int) -> int:
    return min(2**m - 2, 2 * m + 2048)


def shapley_kernel_weight(m: int, size: int) -> float:
    return (m - 1) / (math.comb(m, size) * size * (m - size))


def _coalition_values(
    predict, coalitions: np.ndarray, instance: np.ndarray, background: np.ndarray
) -> np.ndarray:
    """v(S): mean prediction with off-coalition features replaced per background row."""
    k = background.shape[0]
    values = np.empty(coalitions.shape[0])
    for start in range(0, coalitions.shape[0], _PREDICT_CHUNK):
        chunk = coalitions[start : start + _PREDICT_CHUNK]
        masked = np.where(chunk[:, None, :].astype(bool), instance, background)
        preds = np.asarray(predict(masked.reshape(-1, instance.size)), dtype=float)
        values[start : start + chunk.shape[0]] = preds.reshape(chunk.shape[0], k).mean(
            axis=1
        )
    return values


def _all_coalitions(m: int) -> np.ndarray:
    """All proper nonempty subsets as 0/1 rows, ordered by size then bit pattern."""
    masks = np.arange(1, 2**m - 1)
    bits = ((masks[:, None] >> np.arange(m)) & 1).astype(float)
    order = np.argsort(bits.sum(axis=1), kind="mergesort")
    return bits[order]


def _sampled_coalitions(
    m: int, n_coalitions: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Coalitions and weights for the sampled regime.

    Size pairs (s, m-s) are fully enumerated from the outside in while the
    budget allows, receiving exact kernel weights; the rest of the budget is
    spent on random subsets of the remaining sizes, weighted by draw counts
    scaled to the leftover kernel mass.
    """
    size_mass = {s: (m - 1) / (s * (m - s)) for s in range(1, m)}
    rows: list[np.ndarray] = []
    weights: list[float] = []
    remaining = n_coalitions
    enumerated: set[int] = set()
    for s in range(1, m // 2 + 1):
        pair = sorted({s, m - s})
        count = sum(math.comb(m, p) for p in pair)
        if count > remaining:
            break
        for p in pair:
            w = shapley_kernel_weight(m, p)
            for combo in _combinations_bits(m, p):
                rows.append(combo)
                weights.append(w)
        enumerated.update(pair)
        remaining -= count

    leftover = [s for s in range(1, m) if s not in enumerated]
    if leftover and remaining > 0:
        probs = np.array([size_mass[s] for s in leftover])
        probs /= probs.sum()
        counts: dict[tuple[int, ...], int] = {}
        sizes = rng.choice(len(leftover), size=remaining, p=probs)
        for si in sizes:
            s = leftover[si]
            members = tuple(np.sort(rng.choice(m, size=s, replace=False)))
            counts[members] = counts.get(members, 0) + 1
        leftover_mass = sum(size_mass[s] for s in leftover)
        scale = leftover_mass / remaining
        for members, count in sorted(counts.items()):
            row = np.zeros(m)
            row[list(members)] = 1.0
            rows.append(row)
            weights.append(count * scale)
    return np.array(rows), np.array(weights)


def _combinations_bits(m: int, size: int) -> list[np.ndarray]:
    from itertools import combinations

    out = []
    for members in combinations(range(m), size):
        row = np.zeros(m)
        row[list(members)] = 1.0
        out.append(row)
    return out


def kernel_shap(
    predict,
    instance: np.ndarray,
    background: BackgroundSet,
    n_coalitions: int | None = None,
    seed: int = 0,
    model_id: str = "",
    instance_id: int = -1,
) -> ShapValues:
    """Shapley attributions via kernel-weighted least squares on coalitions.

    `predict` maps an (r, m) array to r probabilities. The efficiency
    constraint (attributions sum to f(x) - base) is enforced exactly by
    substituting out the last unknown. With budget >= 2^m - 2 all proper
    nonempty coalitions are enumerated and the result equals the exact
    Shapley value.
    """
    instance = np.asarray(instance, dtype=float).reshape(-1)
    m = instance.size
    if m < 1:
        raise ExplainError("instance must have at least one feature")
    if background.rows.shape[1] != m:
        raise ExplainError("background width does not match instance")
    if n_coalitions is None:
        n_coalitions = default_coalition_budget(m)
    base_value = float(np.asarray(predict(background.rows), dtype=float).mean())
    fx = float(np.asarray(predict(instance[None, :]), dtype=float)[0])

    if m == 1:
        return ShapValues(
            model_id=model_id,
            instance_id=instance_id,
            phi=np.array([fx - base_value]),
            base_value=base_value,
        )
    if n_coalitions < 2:
        raise ExplainError("n_coalitions must be at least 2")

    if 2**m - 2 <= n_coalitions:
        coalitions = _all_coalitions(m)
        sizes = coalitions.sum(axis=1).astype(int)
        weights = np.array([shapley_kernel_weight(m, s) for s in sizes])
    else:
        rng = np.random.default_rng(seed)
        coalitions, weights = _sampled_coalitions(m, n_coalitions, rng)

    values = _coalition_values(predict, coalitions, instance, background.rows)
    if np.ptp(values) < 1e-12 and abs(fx - base_value) < 1e-12:
        return ShapValues(
            model_id=model_id,
            instance_id=instance_id,
            phi=np.zeros(m),
            base_value=base_value,
            degenerate=True,
        )

    # Eliminate phi_{m-1} via the efficiency constraint, then solve the
    # kernel-weighted least squares for the remaining coefficients.
    target_sum = fx - base_value
    sqrt_w = np.sqrt(weights)[:, None]
    design = (coalitions[:, :-1] - coalitions[:, -1:]) * sqrt_w
    response = (values - base_value - coalitions[:, -1] * target_sum) * sqrt_w[:, 0]
    head, *_ = np.linalg.lstsq(design, response, rcond=None)
    phi = np.append(head, target_sum - head.sum())
    return ShapValues(
        model_id=model_id, instance_id=instance_id, phi=phi, base_value=base_value
    )


def exact_shapley(
    predict,
    instance: np.ndarray,
    background: BackgroundSet,
    model_id: str = "",
    instance_id: int = -1,
) -> ShapValues:
    """Direct Shapley sum over all 2^m coalitions (oracle; m <= 12)."""
    instance = np.asarray(instance, dtype=float).reshape(-1)
    m = instance.size
    if m > 12:
        raise ExplainError(f"exact enumeration limited to m <= 12, got {m}")
    if background.rows.shape[1] != m:
        raise ExplainError("background width does not match instance")

    masks = np.arange(2**m)
    bits = ((masks[:, None] >> np.arange(m)) & 1).astype(float)
    values = _coalition_values(predict, bits, instance, background.rows)
    sizes = bits.sum(axis=1).astype(int)
    # weight for adding player j to a coalition of size s (j excluded)
    add_weight = np.array(
        [math.factorial(s) * math.factorial(m - s - 1) / math.factorial(m) for s in range(m)]
    )
    phi = np.zeros(m)
    for j in range(m):
        without_j = (masks >> j) & 1 == 0
        s = sizes[without_j]
        gain = values[masks[without_j] | (1 << j)] - values[without_j]
        phi[j] = float((add_weight[s] * gain).sum())
    return ShapValues(
        model_id=model_id,
        instance_id=instance_id,
        phi=phi,
        base_value=float(values[0]),
    )


class ShapCache:
    """Thread-safe memo of ShapValues; first write per key wins."""

    def __init__(self):
        self._store: dict[tuple, ShapValues] = {}
        self._lock = threading.Lock()

    def get(self, key: tuple) -> ShapValues | None:
        with self._lock:
            return self._store.get(key)

    def put(self, key: tuple, value: ShapValues) -> ShapValues:
        with self._lock:
            return self._store.setdefault(key, value)

    def __len__(self) -> int:
        with self._lock:
            return len(self._store)


def derive_seed(seed: int, *parts) -> int:
    """Stable sub-seed from a root seed and identifying strings."""
    digest = hashlib.sha256(
        ":".join([str(seed), *map(str, parts)]).encode()
    ).digest()
    return int.from_bytes(digest[:8], "big")


def shap_for_selection(
    models,
    instance_ids,
    dataset: Dataset,
    background: BackgroundSet,
    budget: int | None = None,
    seed: int = 0,
    cache: ShapCache | None = None,
) -> SelectionSummary:
    """Mean per-feature attribution over a selection, per model.

    Attributions are computed in each model's own (variant-transformed)
    feature space; mean feature values are reported on the raw pre-transform
    columns. Results memoize per (model, instance, budget).
    """
    ids = sorted(set(int(i) for i in instance_ids))
    if not ids:
        raise ExplainError("empty selection")
    if min(ids) < 0 or max(ids) >= dataset.n:
        raise ExplainError("selection contains out-of-range instance ids")
    cache = cache if cache is not None else ShapCache()

    mean_phi: dict[str, dict[str, float]] = {}
    base_values: dict[str, float] = {}
    for model in models:
        transformed_bg = BackgroundSet(
            rows=model.transform_record.apply(background.rows), seed=background.seed
        )
        rows = model.transform_record.apply(dataset.rows[ids])
        predict = lambda r, _model=model: _predict_proba(_model, r)
        phis = []
        for instance_id, row in zip(ids, rows):
            key = (model.id, instance_id, budget)
            hit = cache.get(key)
            if hit is None:
                hit = cache.put(
                    key,
                    kernel_shap(
                        predict,
                        row,
                        transformed_bg,
                        n_coalitions=budget,
                        seed=derive_seed(seed, model.id, instance_id),
                        model_id=model.id,
                        instance_id=instance_id,
                    ),
                )
            phis.append(hit.phi)
        mean = np.mean(phis, axis=0)
        mean_phi[model.id] = {
            name: float(v) for name, v in zip(model.feature_names, mean)
        }
        base_values[model.id] = float(
            np.asarray(predict(transformed_bg.rows), dtype=float).mean()
        )

    raw_means = dataset.rows[ids].mean(axis=0)
    mean_feature_values = {
        name: float(v) for name, v in zip(dataset.schema.names, raw_means)
    }
    return SelectionSummary(
        instance_ids=tuple(ids),
        mean_phi=mean_phi,
        base_values=base_values,
        mean_feature_values=mean_feature_values,
    )
