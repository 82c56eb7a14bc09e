import csv
import json

import pytest

from lineup.cli import run_cli


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """synth -> run -> report, shared across the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "d.csv"
    artifact = root / "artifact"
    reports = root / "reports"
    assert run_cli(["synth", "--n", "90", "--m", "3", "--seed", "1", "--out", str(data)]) == 0
    assert (
        run_cli(
            [
                "run",
                "--data", str(data),
                "--label", "label",
                "--positive", "1",
                "--seed", "2",
                "--hpo-budget", "2",
                "--out", str(artifact),
            ]
        )
        == 0
    )
    assert run_cli(["report", "--artifact", str(artifact), "--out", str(reports)]) == 0
    return root


class TestPipeline:
    def test_artifact_has_manifest(self, pipeline_dir):
        manifest = pipeline_dir / "artifact" / "manifest.json"
        assert manifest.exists()
        payload = json.loads(manifest.read_text())
        assert len(payload["models"]) == 16

    def test_report_files_exist(self, pipeline_dir):
        for name in ("metrics.csv", "quadrant_counts.csv", "global_fi.csv"):
            assert (pipeline_dir / "reports" / name).exists()

    def test_report_metrics_match_server_table(self, pipeline_dir):
        from fastapi.testclient import TestClient

        from lineup.experiment import load_artifact
        from lineup.server import create_app

        artifact = load_artifact(pipeline_dir / "artifact")
        with TestClient(create_app({artifact.id: artifact})) as client:
            served = client.get(f"/api/experiments/{artifact.id}/metrics").json()
        with (pipeline_dir / "reports" / "metrics.csv").open(newline="") as fh:
            report_rows = list(csv.DictReader(fh))
        assert len(report_rows) == len(served["rows"])
        for csv_row, api_row in zip(report_rows, served["rows"]):
            assert csv_row["model_id"] == api_row["model_id"]
            assert float(csv_row["accuracy"]) == api_row["accuracy"]
            assert float(csv_row["log_loss"]) == api_row["log_loss"]
            assert float(csv_row["roc_auc"]) == api_row["roc_auc"]

    def test_quadrant_counts_cover_all_pairs(self, pipeline_dir):
        with (pipeline_dir / "reports" / "quadrant_counts.csv").open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 16 * 16
        n_test = len(
            json.loads((pipeline_dir / "artifact" / "manifest.json").read_text())[
                "splits"
            ]["test"]
        )
        for row in rows:
            total = sum(int(row[f"q{k}"]) for k in range(1, 5))
            assert total == n_test


class TestUsageErrors:
    def test_run_without_data_exits_2(self, capsys):
        assert run_cli(["run", "--label", "y", "--positive", "1", "--out", "x"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_unknown_subcommand_exits_2(self):
        assert run_cli(["frobnicate"]) == 2

    def test_unknown_flag_exits_2(self):
        assert run_cli(["synth", "--n", "10", "--m", "2", "--out", "x", "--bogus"]) == 2

    def test_runtime_error_exits_1(self, tmp_path):
        assert (
            run_cli(
                [
                    "run",
                    "--data", str(tmp_path / "missing.csv"),
                    "--label", "y",
                    "--positive", "1",
                    "--out", str(tmp_path / "a"),
                ]
            )
            == 1
        )

    def test_synth_determinism(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(["synth", "--n", "30", "--m", "2", "--seed", "5", "--out", str(a)])
        run_cli(["synth", "--n", "30", "--m", "2", "--seed", "5", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()
