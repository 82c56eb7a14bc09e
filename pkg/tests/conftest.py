import csv

import numpy as np
import pytest

from lineup.experiment import ExperimentConfig, run_experiment


@pytest.fixture(scope="session")
def loan_csv(tmp_path_factory):
    """Loan-style fixture: a skewed nonnegative column (log-transform bait),
    a symmetric numeric column, a categorical column, and a binary grade."""
    rng = np.random.default_rng(99)
    n = 80
    installment = np.round(np.exp(rng.normal(5.0, 0.8, size=n)), 2)
    income = np.round(rng.normal(60, 12, size=n), 1)
    term = rng.choice(["36mo", "60mo"], size=n)
    score = 0.004 * installment - 0.05 * income + (term == "60mo") * 1.2
    grade = np.where(score + rng.normal(0, 0.8, size=n) < np.median(score), "high", "low")
    path = tmp_path_factory.mktemp("data") / "loans.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["installment", "income", "term", "grade"])
        for row in zip(installment, income, term, grade):
            writer.writerow(row)
    return path


@pytest.fixture(scope="session")
def loan_artifact(loan_csv):
    """Small four-model artifact over the loan fixture (2 algorithms x 2 variants)."""
    from lineup.models import AlgorithmKind

    config = ExperimentConfig(
        source_kind="csv",
        csv_path=str(loan_csv),
        label_column="grade",
        positive_label="high",
        seed=7,
        hpo_budget=2,
        algorithms=(AlgorithmKind.LOGISTIC_REGRESSION, AlgorithmKind.GRADIENT_BOOSTING),
        variants=(1, 3),
    )
    return run_experiment(config)


@pytest.fixture(scope="session")
def synth_artifact():
    """Synthetic artifact with all four algorithms, two variants, for API tests."""
    config = ExperimentConfig(
        source_kind="synth", synth_n=200, synth_m=4, seed=11, hpo_budget=2, variants=(1, 2)
    )
    return run_experiment(config)
