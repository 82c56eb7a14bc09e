"""Run the full candidate grid and persist an immutable experiment artifact.

The artifact directory is self-contained: manifest (config, split indices,
schema, per-file hashes), per-model JSON, per-model test predictions CSV,
metrics, and global importance; optionally a copy of the encoded dataset,
which serving needs for raw-row inspection and local explanations.
"""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .compare import ImportanceVector, normalize_importance, order_feature_panels
from .data import Dataset, FeatureColumn, FeatureSchema, SplitIndices, load_csv, make_splits, synth_dataset
from .explain import derive_seed
from .metrics import MetricsRow, RankedMetricsTable, compute_metrics, rank_metric_columns
from .models import (
    AlgorithmKind,
    SHORT_NAMES,
    TrainedModel,
    default_hyperparameters,
    predict_proba,
    raw_global_importance,
    train_model,
)
from .models.transforms import apply_variant_transform, variant_name, variant_transform
from .models.tuning import tune_hyperparameters

SCHEMA_VERSION = 1
ALL_ALGORITHMS = tuple(AlgorithmKind)
ALL_VARIANTS = (1, 2, 3, 4)
TUNED_VARIANTS = (2, 4)


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    source_kind: str  # "csv" or "synth"
    csv_path: str | None = None
    label_column: str | None = None
    positive_label: str | None = None
    synth_n: int | None = None
    synth_m: int | None = None
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0
    hpo_budget: int = 6
    algorithms: tuple[AlgorithmKind, ...] = ALL_ALGORITHMS
    variants: tuple[int, ...] = ALL_VARIANTS

    def __post_init__(self):
        if self.source_kind not in ("csv", "synth"):
            raise ExperimentError(f"unknown dataset source {self.source_kind!r}")
        if self.source_kind == "csv" and not (
            self.csv_path and self.label_column and self.positive_label is not None
        ):
            raise ExperimentError("csv source needs path, label column, positive label")
        if self.source_kind == "synth" and not (self.synth_n and self.synth_m):
            raise ExperimentError("synth source needs n and m")
        if not self.algorithms or not self.variants:
            raise ExperimentError("need at least one algorithm and one variant")
        object.__setattr__(
            self, "algorithms", tuple(AlgorithmKind(a) for a in self.algorithms)
        )
        object.__setattr__(self, "variants", tuple(int(v) for v in self.variants))
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))

    def to_dict(self) -> dict:
        return {
            "source_kind": self.source_kind,
            "csv_path": self.csv_path,
            "label_column": self.label_column,
            "positive_label": self.positive_label,
            "synth_n": self.synth_n,
            "synth_m": self.synth_m,
            "ratios": list(self.ratios),
            "seed": self.seed,
            "hpo_budget": self.hpo_budget,
            "algorithms": [a.value for a in self.algorithms],
            "variants": list(self.variants),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            source_kind=d["source_kind"],
            csv_path=d.get("csv_path"),
            label_column=d.get("label_column"),
            positive_label=d.get("positive_label"),
            synth_n=d.get("synth_n"),
            synth_m=d.get("synth_m"),
            ratios=tuple(d["ratios"]),
            seed=d["seed"],
            hpo_budget=d["hpo_budget"],
            algorithms=tuple(AlgorithmKind(a) for a in d["algorithms"]),
            variants=tuple(d["variants"]),
        )


@dataclass(frozen=True)
class ExperimentArtifact:
    id: str
    config: ExperimentConfig
    dataset_fingerprint: str
    dataset: Dataset
    splits: SplitIndices
    models: tuple[TrainedModel, ...]
    predictions: dict[str, np.ndarray]  # model id -> probabilities over the test split
    metrics_table: RankedMetricsTable
    global_importance: tuple[ImportanceVector, ...]
    created_at: str  # metadata only; excluded from determinism guarantees

    def model_by_id(self, model_id: str) -> TrainedModel | None:
        for model in self.models:
            if model.id == model_id:
                return model
        return None


def model_display_name(algorithm: AlgorithmKind, variant_id: int, variant_name: str) -> str:
    if not 1 <= variant_id <= 4:
        raise ExperimentError(f"variant_id must be 1..4, got {variant_id}")
    return f"{SHORT_NAMES[AlgorithmKind(algorithm)]}_{variant_id}: {variant_name}"


def dataset_fingerprint(dataset: Dataset) -> str:
    h = hashlib.sha256()
    h.update("|".join(dataset.schema.names).encode())
    h.update(dataset.positive_class_name.encode())
    h.update(np.ascontiguousarray(dataset.rows).tobytes())
    h.update(np.ascontiguousarray(dataset.labels).tobytes())
    return h.hexdigest()


def _load_source(config: ExperimentConfig) -> Dataset:
    if config.source_kind == "csv":
        return load_csv(config.csv_path, config.label_column, config.positive_label)
    dataset, _ = synth_dataset(config.synth_n, config.synth_m, config.seed)
    return dataset


def run_experiment(config: ExperimentConfig) -> ExperimentArtifact:
    """Train the (algorithm x variant) grid and assemble the artifact.

    Variants 3 and 4 run the feature-engineering transform (fitted on train);
    variants 2 and 4 tune hyperparameters by random search on validation AUC.
    Every stage is seeded from the config seed, so the artifact is a pure
    function of its config.
    """
    dataset = _load_source(config)
    splits = make_splits(dataset, config.ratios, config.seed)
    test_indices = np.asarray(splits.test, dtype=int)

    transformed_cache: dict[tuple, tuple[Dataset, object]] = {}
    models: list[TrainedModel] = []
    rows: list[MetricsRow] = []
    predictions: dict[str, np.ndarray] = {}
    importance: list[ImportanceVector] = []

    for algorithm in config.algorithms:
        for variant in config.variants:
            try:
                transform = variant_transform(variant)
                if transform.operations not in transformed_cache:
                    transformed_cache[transform.operations] = apply_variant_transform(
                        dataset, transform, splits.train
                    )
                ds_v, record = transformed_cache[transform.operations]
                model_seed = derive_seed(config.seed, algorithm.value, variant)
                if variant in TUNED_VARIANTS:
                    hp = tune_hyperparameters(
                        algorithm,
                        ds_v,
                        splits.train,
                        splits.validation,
                        config.hpo_budget,
                        model_seed,
                    )
                else:
                    hp = default_hyperparameters(algorithm)
                model = train_model(
                    algorithm,
                    hp,
                    ds_v,
                    splits.train,
                    model_seed,
                    model_id=f"{SHORT_NAMES[algorithm]}_{variant}",
                    variant_id=variant,
                    variant_name=variant_name(variant),
                    transform_record=record,
                )
                probs = predict_proba(model, ds_v.rows[test_indices])
                row = replace(
                    compute_metrics(dataset.labels[test_indices], probs),
                    model_id=model.id,
                )
                raw_fi = {
                    name: float(v)
                    for name, v in zip(model.feature_names, raw_global_importance(model))
                }
                models.append(model)
                predictions[model.id] = probs
                rows.append(row)
                importance.append(normalize_importance(model.id, raw_fi))
            except Exception as exc:  # noqa: BLE001 - identify the failing cell
                raise ExperimentError(
                    f"{algorithm.value} variant {variant}: {exc}"
                ) from exc

    fingerprint = dataset_fingerprint(dataset)
    config_digest = hashlib.sha256(
        json.dumps(config.to_dict(), sort_keys=True).encode()
    ).hexdigest()
    return ExperimentArtifact(
        id=f"exp_{config_digest[:12]}",
        config=config,
        dataset_fingerprint=fingerprint,
        dataset=dataset,
        splits=splits,
        models=tuple(models),
        predictions=predictions,
        metrics_table=rank_metric_columns(rows),
        global_importance=tuple(importance),
        created_at=datetime.now(timezone.utc).isoformat(),
    )

def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _metrics_payload(table: RankedMetricsTable) -> dict:
    return {
        "rows": [
            {
                "model_id": r.model_id,
                "accuracy": r.accuracy,
                "precision": r.precision,
                "recall": r.recall,
                "f1": r.f1,
                "roc_auc": r.roc_auc,
                "log_loss": r.log_loss,
                "tp": r.tp,
                "fp": r.fp,
                "tn": r.tn,
                "fn": r.fn,
            }
            for r in table.rows
        ],
        "ranks": [dict(r) for r in table.ranks],
    }


def _metrics_from_payload(payload: dict) -> RankedMetricsTable:
    rows = tuple(
        MetricsRow(
            model_id=r["model_id"],
            accuracy=r["accuracy"],
            precision=r["precision"],
            recall=r["recall"],
            f1=r["f1"],
            roc_auc=r["roc_auc"],
            log_loss=r["log_loss"],
            tp=r["tp"],
            fp=r["fp"],
            tn=r["tn"],
            fn=r["fn"],
        )
        for r in payload["rows"]
    )
    return RankedMetricsTable(rows=rows, ranks=tuple(payload["ranks"]))


def save_artifact(
    artifact: ExperimentArtifact, directory: str | Path, include_dataset: bool = True
) -> Path:
    """Write the artifact directory; returns the manifest path.

    Every data file is hashed into the manifest so load_artifact can detect
    tampering. Timestamps live only in the manifest metadata block.
    """
    root = Path(directory)
    (root / "models").mkdir(parents=True, exist_ok=True)
    (root / "predictions").mkdir(parents=True, exist_ok=True)

    file_hashes: dict[str, str] = {}
    for model in artifact.models:
        rel = f"models/{model.id}.json"
        _write_json(root / rel, model.to_dict())
        file_hashes[rel] = _sha256_file(root / rel)
    for model in artifact.models:
        rel = f"predictions/{model.id}.csv"
        with (root / rel).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance_id", "probability"])
            for idx, prob in zip(artifact.splits.test, artifact.predictions[model.id]):
                writer.writerow([idx, f"{prob:.17g}"])
        file_hashes[rel] = _sha256_file(root / rel)

    _write_json(root / "metrics.json", _metrics_payload(artifact.metrics_table))
    file_hashes["metrics.json"] = _sha256_file(root / "metrics.json")

    fi_payload = {
        "vectors": {
            vec.model_id: {"values": vec.values, "degenerate": vec.degenerate}
            for vec in artifact.global_importance
        },
        "panel_order": order_feature_panels(list(artifact.global_importance)),
    }
    _write_json(root / "global_fi.json", fi_payload)
    file_hashes["global_fi.json"] = _sha256_file(root / "global_fi.json")

    if include_dataset:
        from .data import write_csv

        write_csv(artifact.dataset, root / "dataset.csv")
        file_hashes["dataset.csv"] = _sha256_file(root / "dataset.csv")

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "id": artifact.id,
        "config": artifact.config.to_dict(),
        "dataset_fingerprint": artifact.dataset_fingerprint,
        "dataset_name": artifact.dataset.name,
        "positive_class_name": artifact.dataset.positive_class_name,
        "schema": [
            {"name": c.name, "kind": c.kind, "transform_tag": c.transform_tag}
            for c in artifact.dataset.schema.entries
        ],
        "splits": {
            "train": list(artifact.splits.train),
            "validation": list(artifact.splits.validation),
            "test": list(artifact.splits.test),
            "seed": artifact.splits.seed,
        },
        "models": [
            {
                "id": m.id,
                "algorithm": m.algorithm.value,
                "variant_id": m.variant_id,
                "variant_name": m.variant_name,
                "display_name": model_display_name(m.algorithm, m.variant_id, m.variant_name),
            }
            for m in artifact.models
        ],
        "file_hashes": file_hashes,
        "metadata": {"created_at": artifact.created_at},
    }
    manifest_path = root / "manifest.json"
    _write_json(manifest_path, manifest)
    return manifest_path


def _read_dataset_csv(path: Path, schema: FeatureSchema, positive: str, name: str) -> Dataset:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        records = [row for row in reader if row]
    if header[:-1] != schema.names:
        raise ExperimentError("dataset.csv columns do not match the manifest schema")
    rows = np.array([[float(v) for v in row[:-1]] for row in records])
    labels = np.array([1 if row[-1] == positive else 0 for row in records])
    return Dataset(
        name=name, schema=schema, rows=rows, labels=labels, positive_class_name=positive
    )


def load_artifact(directory: str | Path) -> ExperimentArtifact:
    """Load and integrity-check a saved artifact directory."""
    root = Path(directory)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise ExperimentError(f"no manifest in {root}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ExperimentError(
            f"artifact schema version {manifest.get('schema_version')} unsupported"
        )
    for rel, expected in manifest["file_hashes"].items():
        path = root / rel
        if not path.exists():
            raise ExperimentError(f"artifact file missing: {rel}")
        if _sha256_file(path) != expected:
            raise ExperimentError(f"hash mismatch for {rel}")

    config = ExperimentConfig.from_dict(manifest["config"])
    schema = FeatureSchema(
        tuple(
            FeatureColumn(c["name"], c["kind"], c.get("transform_tag"))
            for c in manifest["schema"]
        )
    )
    models = tuple(
        TrainedModel.from_dict(
            json.loads((root / f"models/{m['id']}.json").read_text(encoding="utf-8"))
        )
        for m in manifest["models"]
    )
    predictions: dict[str, np.ndarray] = {}
    test_ids = list(manifest["splits"]["test"])
    for m in manifest["models"]:
        with (root / f"predictions/{m['id']}.csv").open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader)
            pairs = [(int(r[0]), float(r[1])) for r in reader]
        if [p[0] for p in pairs] != test_ids:
            raise ExperimentError(f"prediction ids for {m['id']} do not match the test split")
        predictions[m["id"]] = np.array([p[1] for p in pairs])

    metrics_table = _metrics_from_payload(
        json.loads((root / "metrics.json").read_text(encoding="utf-8"))
    )
    fi_payload = json.loads((root / "global_fi.json").read_text(encoding="utf-8"))
    importance = tuple(
        ImportanceVector(
            model_id=m["id"],
            values=fi_payload["vectors"][m["id"]]["values"],
            normalized=True,
            degenerate=fi_payload["vectors"][m["id"]]["degenerate"],
        )
        for m in manifest["models"]
    )

    dataset_path = root / "dataset.csv"
    if dataset_path.exists():
        dataset = _read_dataset_csv(
            dataset_path,
            schema,
            manifest["positive_class_name"],
            manifest["dataset_name"],
        )
        if dataset_fingerprint(dataset) != manifest["dataset_fingerprint"]:
            raise ExperimentError("dataset fingerprint mismatch")
    else:
        dataset = _load_source(config)
        if dataset_fingerprint(dataset) != manifest["dataset_fingerprint"]:
            raise ExperimentError("regenerated dataset does not match the manifest fingerprint")

    splits = SplitIndices(
        train=tuple(manifest["splits"]["train"]),
        validation=tuple(manifest["splits"]["validation"]),
        test=tuple(manifest["splits"]["test"]),
        seed=manifest["splits"]["seed"],
    )
    return ExperimentArtifact(
        id=manifest["id"],
        config=config,
        dataset_fingerprint=manifest["dataset_fingerprint"],
        dataset=dataset,
        splits=splits,
        models=models,
        predictions=predictions,
        metrics_table=metrics_table,
        global_importance=importance,
        created_at=manifest["metadata"]["created_at"],
    )
