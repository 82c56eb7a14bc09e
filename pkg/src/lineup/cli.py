"""Command-line entry point: run experiments, serve artifacts, make fixtures,
export static CSV reports."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

log = logging.getLogger("lineup")


def _configure_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("LINEUP_LOG", "info").lower(), logging.INFO
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lineup")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train the candidate grid and save an artifact")
    run.add_argument("--data", required=True, help="input CSV path")
    run.add_argument("--label", required=True, help="label column name")
    run.add_argument("--positive", required=True, help="positive class value")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="artifact output directory")
    run.add_argument("--hpo-budget", type=int, default=6)
    run.add_argument(
        "--ratios",
        type=float,
        nargs=3,
        default=(0.6, 0.2, 0.2),
        metavar=("TRAIN", "VAL", "TEST"),
    )
    run.add_argument(
        "--no-dataset-copy",
        action="store_true",
        help="skip copying the encoded dataset into the artifact",
    )

    serve = sub.add_parser("serve", help="serve a saved artifact over HTTP")
    serve.add_argument("--artifact", required=True, help="artifact directory")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--ui", help="optional static UI directory to mount at /")

    synth = sub.add_parser("synth", help="write a synthetic CSV fixture")
    synth.add_argument("--n", type=int, required=True)
    synth.add_argument("--m", type=int, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="output CSV path")

    report = sub.add_parser("report", help="export metrics/quadrant/FI CSV reports")
    report.add_argument("--artifact", required=True, help="artifact directory")
    report.add_argument("--out", required=True, help="report output directory")
    return parser


def _cmd_run(args) -> int:
    from .experiment import ExperimentConfig, run_experiment, save_artifact

    config = ExperimentConfig(
        source_kind="csv",
        csv_path=args.data,
        label_column=args.label,
        positive_label=args.positive,
        ratios=tuple(args.ratios),
        seed=args.seed,
        hpo_budget=args.hpo_budget,
    )
    log.info("running %d-model grid on %s", len(config.algorithms) * len(config.variants), args.data)
    artifact = run_experiment(config)
    manifest = save_artifact(artifact, args.out, include_dataset=not args.no_dataset_copy)
    log.info("artifact %s written to %s", artifact.id, manifest.parent)
    print(manifest)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .experiment import load_artifact
    from .server import create_app

    artifact = load_artifact(args.artifact)
    app = create_app({artifact.id: artifact})
    if args.ui:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=args.ui, html=True), name="ui")
    log.info("serving experiment %s on %s:%d", artifact.id, args.host, args.port)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_synth(args) -> int:
    from .data import synth_dataset, write_csv

    dataset, _ = synth_dataset(args.n, args.m, args.seed)
    write_csv(dataset, args.out)
    log.info("wrote %d x %d synthetic CSV to %s", args.n, args.m, args.out)
    return 0


def _cmd_report(args) -> int:
    import numpy as np

    from .compare import build_scatter_panel
    from .experiment import load_artifact

    artifact = load_artifact(args.artifact)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with (out / "metrics.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["model_id", "accuracy", "precision", "recall", "f1", "roc_auc", "log_loss",
             "tp", "fp", "tn", "fn"]
        )
        for r in artifact.metrics_table.rows:
            writer.writerow(
                [r.model_id, f"{r.accuracy:.17g}", f"{r.precision:.17g}",
                 f"{r.recall:.17g}", f"{r.f1:.17g}",
                 "" if r.roc_auc is None else f"{r.roc_auc:.17g}",
                 f"{r.log_loss:.17g}", r.tp, r.fp, r.tn, r.fn]
            )

    labels = artifact.dataset.labels[np.asarray(artifact.splits.test, dtype=int)]
    with (out / "quadrant_counts.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_model", "y_model", "q1", "q2", "q3", "q4"])
        for x_model in artifact.models:
            for y_model in artifact.models:
                panel = build_scatter_panel(
                    artifact.predictions[x_model.id],
                    artifact.predictions[y_model.id],
                    labels,
                    x_model_id=x_model.id,
                    y_model_id=y_model.id,
                    instance_ids=list(artifact.splits.test),
                )
                counts = panel.quadrant_counts
                writer.writerow(
                    [x_model.id, y_model.id, counts[1], counts[2], counts[3], counts[4]]
                )

    with (out / "global_fi.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_id", "feature", "importance"])
        for vec in artifact.global_importance:
            for name in sorted(vec.values):
                writer.writerow([vec.model_id, name, f"{vec.values[name]:.17g}"])

    log.info("reports written to %s", out)
    return 0


def run_cli(argv: list[str]) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "run": _cmd_run,
        "serve": _cmd_serve,
        "synth": _cmd_synth,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
