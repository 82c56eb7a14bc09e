"""Tabular dataset ingestion, deterministic splits, and synthetic fixtures.

Categorical columns are one-hot encoded at load time so that every downstream
consumer (training, importance, SHAP) works on a purely numeric matrix.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"


class DataError(ValueError):
    """Raised for malformed input tables or invalid split requests."""


@dataclass(frozen=True)
class FeatureColumn:
    """One column of the encoded feature matrix."""

    name: str
    kind: str  # NUMERIC or CATEGORICAL (one-hot indicator)
    transform_tag: str | None = None  # e.g. "log_" once a transform renamed it

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise DataError(f"unknown column kind {self.kind!r}")
        if self.transform_tag and not self.name.startswith(self.transform_tag):
            raise DataError(
                f"transform tag {self.transform_tag!r} not a prefix of {self.name!r}"
            )


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature columns; the order is shared by every matrix column index."""

    entries: tuple[FeatureColumn, ...]

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise DataError("duplicate feature names in schema")

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Dataset:
    """Encoded feature matrix with binary labels (1 = positive class)."""

    name: str
    schema: FeatureSchema
    rows: np.ndarray  # (n, m) float64
    labels: np.ndarray  # (n,) int, values in {0, 1}
    positive_class_name: str

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise DataError("rows must be a nonempty 2-d table")
        if labels.shape != (rows.shape[0],):
            raise DataError("labels length must equal the number of rows")
        if not np.isin(labels, (0, 1)).all():
            raise DataError("labels must be 0 or 1")
        if rows.shape[1] != len(self.schema):
            raise DataError("schema width does not match the row width")
        rows.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def m(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint train/validation/test row indices covering the whole dataset."""

    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]
    seed: int

    def __post_init__(self):
        parts = (set(self.train), set(self.validation), set(self.test))
        total = len(self.train) + len(self.validation) + len(self.test)
        if len(parts[0] | parts[1] | parts[2]) != total:
            raise DataError("split indices overlap or repeat")


def _parses_as_number(value: str) -> bool:
    try:
        float(value)
    except ValueError:
        return False
    return True


def _median(values: list[float]) -> float:
    return float(np.median(np.asarray(values, dtype=float)))


def _mode(values: list[str]) -> str:
    # Deterministic tie-break: lexicographically smallest among the most frequent.
    counts: dict[str, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def load_csv(path: str | Path, label_column: str, positive_label: str) -> Dataset:
    """Load a headered CSV into an encoded Dataset.

    Columns whose non-missing values all parse as numbers become numeric
    features (missing values imputed with the column median); every other
    column is one-hot encoded into "{col}={value}" indicator columns (missing
    values imputed with the column mode). The label column must carry exactly
    two distinct values; rows labeled `positive_label` get label 1.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty CSV: missing header row") from None
        records = [row for row in reader if row]
    if not records:
        raise DataError("empty table: no data rows")
    if label_column not in header:
        raise DataError(f"label column {label_column!r} not found")
    width = len(header)
    for i, row in enumerate(records):
        if len(row) != width:
            raise DataError(f"row {i + 1} has {len(row)} fields, expected {width}")

    label_idx = header.index(label_column)
    label_values = [row[label_idx] for row in records]
    if any(v == "" for v in label_values):
        raise DataError("missing label value")
    distinct = sorted(set(label_values))
    if len(distinct) == 1:
        raise DataError(f"constant label column {label_column!r}")
    if len(distinct) > 2:
        raise DataError(
            f"non-binary label: {label_column!r} has {len(distinct)} distinct values"
        )
    if positive_label not in distinct:
        raise DataError(f"positive label {positive_label!r} not present in {distinct}")
    labels = np.array([1 if v == positive_label else 0 for v in label_values])

    columns: list[FeatureColumn] = []
    matrix_cols: list[np.ndarray] = []
    for j, col_name in enumerate(header):
        if j == label_idx:
            continue
        raw = [row[j] for row in records]
        present = [v for v in raw if v != ""]
        if not present:
            raise DataError(f"column {col_name!r} has no values")
        if all(_parses_as_number(v) for v in present):
            fill = _median([float(v) for v in present])
            values = np.array([float(v) if v != "" else fill for v in raw])
            columns.append(FeatureColumn(col_name, NUMERIC))
            matrix_cols.append(values)
        else:
            fill = _mode(present)
            filled = [v if v != "" else fill for v in raw]
            for category in sorted(set(filled)):
                indicator = np.array([1.0 if v == category else 0.0 for v in filled])
                columns.append(FeatureColumn(f"{col_name}={category}", CATEGORICAL))
                matrix_cols.append(indicator)

    return Dataset(
        name=path.stem,
        schema=FeatureSchema(tuple(columns)),
        rows=np.column_stack(matrix_cols),
        labels=labels,
        positive_class_name=positive_label,
    )


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def make_splits(
    dataset: Dataset, ratios: tuple[float, float, float], seed: int
) -> SplitIndices:
    """Deterministic label-stratified train/validation/test split.

    Split sizes are the rounded fractions of n with the remainder going to
    train; within each class the same rounding rule keeps every split's
    positive rate within one instance of the overall rate.
    """
    r_train, r_val, r_test = ratios
    if min(ratios) <= 0:
        raise DataError("split ratios must be positive")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError("split ratios must sum to 1")
    n = dataset.n
    n_val = _round_half_up(n * r_val)
    n_test = _round_half_up(n * r_test)
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise DataError(f"n={n} too small for ratios {ratios}")

    rng = np.random.default_rng(seed)
    pos = np.flatnonzero(dataset.labels == 1)
    neg = np.flatnonzero(dataset.labels == 0)
    rng.shuffle(pos)
    rng.shuffle(neg)

    # Allocate positives proportionally to realized split sizes: rounding
    # against n_val/n_test (not the raw ratios) keeps each split's positive
    # rate within one instance of the overall rate.
    p_val = min(_round_half_up(len(pos) * n_val / n), n_val)
    p_test = min(_round_half_up(len(pos) * n_test / n), n_test)
    splits: dict[str, list[int]] = {"train": [], "validation": [], "test": []}
    pos_take = {"validation": p_val, "test": p_test, "train": len(pos) - p_val - p_test}
    neg_take = {
        "validation": n_val - p_val,
        "test": n_test - p_test,
        "train": n_train - pos_take["train"],
    }
    if min(pos_take.values()) < 0 or min(neg_take.values()) < 0:
        raise DataError("class counts too small to stratify these ratios")
    p_cursor = 0
    n_cursor = 0
    for part in ("train", "validation", "test"):
        take_p, take_n = pos_take[part], neg_take[part]
        splits[part] = sorted(
            int(i)
            for i in np.concatenate(
                [pos[p_cursor : p_cursor + take_p], neg[n_cursor : n_cursor + take_n]]
            )
        )
        p_cursor += take_p
        n_cursor += take_n

    return SplitIndices(
        train=tuple(splits["train"]),
        validation=tuple(splits["validation"]),
        test=tuple(splits["test"]),
        seed=seed,
    )


def synth_dataset(n: int, m: int, seed: int) -> tuple[Dataset, np.ndarray]:
    """Generate a linearly separable dataset with a known weight vector.

    Features are standard normal; the label is 1 exactly when the returned
    weight vector gives the row a positive score. Reseeds with an offset until
    the positive rate lands in [0.3, 0.7].
    """
    if n < 4 or m < 1:
        raise DataError("synth_dataset needs n >= 4 and m >= 1")
    for offset in range(1000):
        rng = np.random.default_rng(seed + offset)
        weights = rng.standard_normal(m)
        rows = rng.standard_normal((n, m))
        labels = (rows @ weights > 0).astype(int)
        rate = labels.mean()
        if 0.3 <= rate <= 0.7:
            break
    else:  # pragma: no cover - standard normals essentially cannot get here
        raise DataError("could not balance synthetic labels")
    schema = FeatureSchema(
        tuple(FeatureColumn(f"f{j}", NUMERIC) for j in range(m))
    )
    dataset = Dataset(
        name=f"synth_n{n}_m{m}_s{seed}",
        schema=schema,
        rows=rows,
        labels=labels,
        positive_class_name="1",
    )
    weights.flags.writeable = False
    return dataset, weights


def write_csv(dataset: Dataset, path: str | Path, label_column: str = "label") -> None:
    """Write a dataset back to CSV (features then the label column)."""
    path = Path(path)
    negative_name = "0" if dataset.positive_class_name != "0" else "1"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.schema.names + [label_column])
        for row, label in zip(dataset.rows, dataset.labels):
            text = [f"{v:.17g}" for v in row]
            text.append(dataset.positive_class_name if label == 1 else negative_name)
            writer.writerow(text)
