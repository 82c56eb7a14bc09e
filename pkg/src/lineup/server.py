"""Read-only HTTP/JSON API over loaded experiment artifacts.

Everything is a pure read of the immutable artifact except the local-FI
memoization cache; identical requests return identical bodies.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .compare import (
    CompareError,
    RectSelection,
    ScatterPanel,
    build_scatter_panel,
    order_feature_panels,
    probability_histogram,
    select_in_rect,
)
from .explain import ExplainError, ShapCache, derive_seed, sample_background, shap_for_selection
from .experiment import ExperimentArtifact, model_display_name

HISTOGRAM_BINS = 20
DEFAULT_BACKGROUND_SIZE = 100
MAX_SHAP_BUDGET = 8192


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _not_found(code: str, message: str) -> ApiError:
    return ApiError(404, code, message)


def _bad_request(code: str, message: str) -> ApiError:
    return ApiError(400, code, message)


@dataclass
class ExperimentState:
    """One served artifact plus its derived explanation machinery."""

    artifact: ExperimentArtifact
    cache: ShapCache = field(default_factory=ShapCache)

    def __post_init__(self):
        art = self.artifact
        self.background = sample_background(
            art.dataset,
            np.asarray(art.splits.train, dtype=int),
            size=DEFAULT_BACKGROUND_SIZE,
            seed=derive_seed(art.config.seed, "background"),
        )
        self.test_ids = list(art.splits.test)

    def model(self, model_id: str):
        model = self.artifact.model_by_id(model_id)
        if model is None:
            raise _not_found("unknown_model", f"no model {model_id!r}")
        return model

    def panel(self, x_model: str, y_model: str) -> ScatterPanel:
        self.model(x_model)
        self.model(y_model)
        art = self.artifact
        labels = art.dataset.labels[np.asarray(self.test_ids, dtype=int)]
        return build_scatter_panel(
            art.predictions[x_model],
            art.predictions[y_model],
            labels,
            x_model_id=x_model,
            y_model_id=y_model,
            instance_ids=self.test_ids,
        )


def _panel_payload(state: ExperimentState, panel: ScatterPanel) -> dict:
    return {
        "x_model_id": panel.x_model_id,
        "y_model_id": panel.y_model_id,
        "points": [
            {
                "instance_id": p.instance_id,
                "p_x": p.p_x,
                "p_y": p.p_y,
                "true_label": p.true_label,
                "quadrant": p.quadrant,
                "outcome_x": p.outcome_x,
                "outcome_y": p.outcome_y,
            }
            for p in panel.points
        ],
        "quadrant_counts": {str(q): n for q, n in sorted(panel.quadrant_counts.items())},
        "histograms": {
            "bins": HISTOGRAM_BINS,
            "x": probability_histogram(
                state.artifact.predictions[panel.x_model_id], HISTOGRAM_BINS
            ),
            "y": probability_histogram(
                state.artifact.predictions[panel.y_model_id], HISTOGRAM_BINS
            ),
        },
    }


def create_app(artifacts: dict[str, ExperimentArtifact]) -> FastAPI:
    app = FastAPI(title="lineup", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    states = {exp_id: ExperimentState(artifact) for exp_id, artifact in artifacts.items()}

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    def get_state(experiment_id: str) -> ExperimentState:
        if experiment_id not in states:
            raise _not_found("unknown_experiment", f"no experiment {experiment_id!r}")
        return states[experiment_id]

    @app.get("/api/experiments")
    def list_experiments():
        return [
            {
                "id": exp_id,
                "dataset": state.artifact.dataset.name,
                "n_models": len(state.artifact.models),
                "n_test": len(state.test_ids),
                "positive_class": state.artifact.dataset.positive_class_name,
            }
            for exp_id, state in sorted(states.items())
        ]

    @app.get("/api/experiments/{experiment_id}/models")
    def list_models(experiment_id: str):
        state = get_state(experiment_id)
        return [
            {
                "id": m.id,
                "display_name": model_display_name(m.algorithm, m.variant_id, m.variant_name),
                "algorithm": m.algorithm.value,
                "variant_id": m.variant_id,
                "variant_name": m.variant_name,
                "hyperparameters": m.hyperparameters,
                "feature_names": list(m.feature_names),
            }
            for m in state.artifact.models
        ]

    @app.get("/api/experiments/{experiment_id}/metrics")
    def get_metrics(experiment_id: str):
        state = get_state(experiment_id)
        table = state.artifact.metrics_table
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

    @app.get("/api/experiments/{experiment_id}/global-fi")
    def get_global_fi(experiment_id: str, models: str | None = None):
        state = get_state(experiment_id)
        vectors = {v.model_id: v for v in state.artifact.global_importance}
        if models:
            ids = [m for m in models.split(",") if m]
        else:
            ids = [m.id for m in state.artifact.models]
        for model_id in ids:
            if model_id not in vectors:
                raise _not_found("unknown_model", f"no model {model_id!r}")
        chosen = [vectors[model_id] for model_id in ids]
        return {
            "vectors": {
                v.model_id: {"values": v.values, "degenerate": v.degenerate}
                for v in chosen
            },
            "panel_order": order_feature_panels(chosen),
        }

    @app.get("/api/experiments/{experiment_id}/scatter")
    def get_scatter(experiment_id: str, x: str, y: str):
        state = get_state(experiment_id)
        return _panel_payload(state, state.panel(x, y))

    @app.post("/api/experiments/{experiment_id}/selection/local-fi")
    async def post_selection_fi(experiment_id: str, request: Request):
        state = get_state(experiment_id)
        body = await request.json()
        if not isinstance(body, dict):
            raise _bad_request("invalid_body", "expected a JSON object")
        model_ids = body.get("model_ids")
        if not model_ids:
            raise _bad_request("missing_models", "model_ids is required")
        models = [state.model(mid) for mid in model_ids]

        if body.get("instance_ids") is not None:
            ids = [int(i) for i in body["instance_ids"]]
        elif body.get("rect") is not None:
            rect_body = body["rect"]
            try:
                rect = RectSelection(
                    x_model_id=rect_body["x_model"],
                    y_model_id=rect_body["y_model"],
                    x_range=tuple(rect_body["x_range"]),
                    y_range=tuple(rect_body["y_range"]),
                )
            except (KeyError, TypeError, CompareError) as exc:
                raise _bad_request("invalid_rect", f"bad rectangle: {exc}") from exc
            panel = state.panel(rect.x_model_id, rect.y_model_id)
            ids = select_in_rect(panel, rect)
        else:
            raise _bad_request("missing_selection", "need instance_ids or rect")

        if not ids:
            raise _bad_request("empty_selection", "selection resolved to no instances")
        test_set = set(state.test_ids)
        invalid = [i for i in ids if i not in test_set]
        if invalid:
            raise _bad_request(
                "invalid_selection", f"ids outside the test split: {invalid[:5]}"
            )

        budget = body.get("budget")
        if budget is not None:
            budget = max(2, min(int(budget), MAX_SHAP_BUDGET))
        try:
            summary = shap_for_selection(
                models,
                ids,
                state.artifact.dataset,
                state.background,
                budget=budget,
                seed=derive_seed(state.artifact.config.seed, "shap"),
                cache=state.cache,
            )
        except ExplainError as exc:
            raise _bad_request("invalid_selection", str(exc)) from exc
        return {
            "selection_size": len(summary.instance_ids),
            "instance_ids": list(summary.instance_ids),
            "models": {
                model_id: {
                    "phi": summary.mean_phi[model_id],
                    "base_value": summary.base_values[model_id],
                }
                for model_id in model_ids
            },
            "mean_feature_values": summary.mean_feature_values,
        }

    @app.get("/api/experiments/{experiment_id}/instances/{index}")
    def get_instance(experiment_id: str, index: int):
        state = get_state(experiment_id)
        if index not in set(state.test_ids):
            raise _not_found("unknown_instance", f"{index} is not a test instance")
        art = state.artifact
        position = state.test_ids.index(index)
        return {
            "instance_id": index,
            "values": {
                name: float(v)
                for name, v in zip(art.dataset.schema.names, art.dataset.rows[index])
            },
            "true_label": int(art.dataset.labels[index]),
            "positive_class": art.dataset.positive_class_name,
            "probabilities": {
                m.id: float(art.predictions[m.id][position]) for m in art.models
            },
        }

    return app
