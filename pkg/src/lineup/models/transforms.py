"""Variant feature engineering: log of skewed nonnegative features, z-scoring.

Statistics are always fitted on the training rows only and baked into a
TransformRecord so the identical transform applies to unseen rows. One-hot
indicator columns are never touched.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import NUMERIC, Dataset, FeatureColumn, FeatureSchema

LOG_SKEWED = "log_skewed"
STANDARDIZE = "standardize"
SKEWNESS_THRESHOLD = 1.0
LOG_PREFIX = "log_"


@dataclass(frozen=True)
class VariantTransform:
    variant_id: int
    operations: tuple[str, ...]

    def __post_init__(self):
        if not 1 <= self.variant_id <= 4:
            raise ValueError(f"variant_id must be 1..4, got {self.variant_id}")
        for op in self.operations:
            if op not in (LOG_SKEWED, STANDARDIZE):
                raise ValueError(f"unknown transform operation {op!r}")


# variant id -> (name, operations); 2 and 4 additionally trigger tuning upstream.
VARIANTS: dict[int, tuple[str, tuple[str, ...]]] = {
    1: ("Default", ()),
    2: ("Hyperparameter Optimization", ()),
    3: ("Feature Engineering", (LOG_SKEWED, STANDARDIZE)),
    4: ("Feature Engineering + Hyperparameter Optimization", (LOG_SKEWED, STANDARDIZE)),
}


def variant_transform(variant_id: int) -> VariantTransform:
    return VariantTransform(variant_id, VARIANTS[variant_id][1])


def variant_name(variant_id: int) -> str:
    return VARIANTS[variant_id][0]


@dataclass
class TransformRecord:
    """Replayable column transforms: log1p columns, then per-column z-scores."""

    log_columns: tuple[int, ...] = ()
    standardize: tuple[tuple[int, float, float], ...] = ()  # (col, mean, std)

    def apply(self, rows: np.ndarray) -> np.ndarray:
        out = np.array(rows, dtype=float, copy=True)
        if out.ndim == 1:
            out = out[None, :]
        for j in self.log_columns:
            out[:, j] = np.log1p(out[:, j])
        for j, mean, std in self.standardize:
            out[:, j] = (out[:, j] - mean) / std
        return out

    def rename(self, names: list[str]) -> list[str]:
        renamed = list(names)
        for j in self.log_columns:
            renamed[j] = LOG_PREFIX + renamed[j]
        return renamed

    @property
    def is_identity(self) -> bool:
        return not self.log_columns and not self.standardize

    def to_dict(self) -> dict:
        return {
            "log_columns": list(self.log_columns),
            "standardize": [[j, m, s] for j, m, s in self.standardize],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransformRecord":
        return cls(
            log_columns=tuple(d["log_columns"]),
            standardize=tuple((j, m, s) for j, m, s in d["standardize"]),
        )


def sample_skewness(values: np.ndarray) -> float:
    """Moment-based skewness m3 / m2^1.5; zero for constant samples."""
    values = np.asarray(values, dtype=float)
    centered = values - values.mean()
    m2 = np.mean(centered**2)
    if m2 == 0:
        return 0.0
    m3 = np.mean(centered**3)
    return float(m3 / m2**1.5)


def apply_variant_transform(
    dataset: Dataset, transform: VariantTransform, fit_indices
) -> tuple[Dataset, TransformRecord]:
    """Fit the variant's operations on `fit_indices` and apply them everywhere.

    log_skewed rewrites numeric columns that are nonnegative and skewed
    (> 1) on the fit rows as log(1+x) and prefixes their names with "log_";
    standardize z-scores numeric columns with fit-row statistics.
    """
    fit_indices = np.asarray(fit_indices, dtype=int)
    if fit_indices.size == 0:
        raise ValueError("fit_indices must be nonempty")
    numeric_cols = [
        j for j, col in enumerate(dataset.schema.entries) if col.kind == NUMERIC
    ]
    rows = np.array(dataset.rows, copy=True)
    log_columns: list[int] = []
    standardize: list[tuple[int, float, float]] = []

    for op in transform.operations:
        if op == LOG_SKEWED:
            for j in numeric_cols:
                fit_vals = rows[fit_indices, j]
                if fit_vals.min() >= 0 and sample_skewness(fit_vals) > SKEWNESS_THRESHOLD:
                    rows[:, j] = np.log1p(rows[:, j])
                    log_columns.append(j)
        elif op == STANDARDIZE:
            for j in numeric_cols:
                fit_vals = rows[fit_indices, j]
                mean = float(fit_vals.mean())
                std = float(fit_vals.std())
                if std < 1e-12:
                    std = 1.0
                rows[:, j] = (rows[:, j] - mean) / std
                standardize.append((j, mean, std))

    record = TransformRecord(
        log_columns=tuple(log_columns), standardize=tuple(standardize)
    )
    if record.is_identity:
        return dataset, record

    entries = list(dataset.schema.entries)
    for j in log_columns:
        old = entries[j]
        entries[j] = FeatureColumn(
            name=LOG_PREFIX + old.name, kind=old.kind, transform_tag=LOG_PREFIX
        )
    transformed = Dataset(
        name=dataset.name,
        schema=FeatureSchema(tuple(entries)),
        rows=rows,
        labels=dataset.labels,
        positive_class_name=dataset.positive_class_name,
    )
    return transformed, record
