import numpy as np
import pytest

from lineup.data import synth_dataset
from lineup.explain import (
    BackgroundSet,
    ExplainError,
    ShapCache,
    default_coalition_budget,
    exact_shapley,
    kernel_shap,
    sample_background,
    shap_for_selection,
    shapley_kernel_weight,
)
from lineup.models import AlgorithmKind, predict_proba, train_model
from lineup.models.tree import GINI, fit_tree


def linear_predict(w, b=0.0):
    return lambda rows: np.asarray(rows) @ w + b


def make_background(rng, k, m):
    return BackgroundSet(rows=rng.standard_normal((k, m)), seed=0)


class TestExactShapley:
    def test_single_feature_gets_full_gap(self):
        rng = np.random.default_rng(1)
        bg = make_background(rng, 10, 1)
        predict = linear_predict(np.array([2.0]), b=1.0)
        sv = exact_shapley(predict, np.array([1.5]), bg)
        fx = predict(np.array([[1.5]]))[0]
        assert sv.phi[0] == pytest.approx(fx - sv.base_value, abs=1e-12)

    def test_symmetric_features_get_equal_phi(self):
        # model x0 + x1, identical marginals in instance and background
        bg = BackgroundSet(rows=np.array([[0.2, 0.2], [0.7, 0.7]]), seed=0)
        predict = lambda rows: rows[:, 0] + rows[:, 1]
        sv = exact_shapley(predict, np.array([0.5, 0.5]), bg)
        assert sv.phi[0] == pytest.approx(sv.phi[1], abs=1e-12)

    def test_dummy_feature_zero(self):
        rng = np.random.default_rng(2)
        bg = make_background(rng, 8, 3)
        predict = lambda rows: np.tanh(rows[:, 0] * 2 - rows[:, 2])  # ignores col 1
        sv = exact_shapley(predict, rng.standard_normal(3), bg)
        assert abs(sv.phi[1]) <= 1e-12

    def test_m_too_large(self):
        rng = np.random.default_rng(3)
        bg = make_background(rng, 3, 13)
        with pytest.raises(ExplainError, match="m <= 12"):
            exact_shapley(lambda r: r[:, 0], rng.standard_normal(13), bg)


class TestKernelShap:
    def test_linear_closed_form_exhaustive(self):
        # phi_j = w_j (x_j - mean background_j) for linear models
        for m in (2, 3, 5):
            rng = np.random.default_rng(10 + m)
            w = rng.standard_normal(m)
            bg = make_background(rng, 12, m)
            x = rng.standard_normal(m)
            sv = kernel_shap(linear_predict(w, 0.4), x, bg, n_coalitions=2**m - 2)
            expected = w * (x - bg.rows.mean(axis=0))
            assert np.abs(sv.phi - expected).max() <= 1e-9

    def test_dummy_axiom_exhaustive(self):
        rng = np.random.default_rng(4)
        bg = make_background(rng, 6, 4)
        predict = lambda rows: rows[:, 0] ** 2 + rows[:, 3]  # ignores 1 and 2
        sv = kernel_shap(predict, rng.standard_normal(4), bg, n_coalitions=2**4 - 2)
        assert abs(sv.phi[1]) <= 1e-9 and abs(sv.phi[2]) <= 1e-9

    def test_constant_model_flags_degenerate(self):
        rng = np.random.default_rng(5)
        bg = make_background(rng, 5, 3)
        sv = kernel_shap(lambda rows: np.full(len(rows), 0.42), rng.standard_normal(3), bg)
        assert sv.degenerate
        assert np.array_equal(sv.phi, np.zeros(3))
        assert sv.base_value == pytest.approx(0.42)

    def test_matches_exact_on_random_trees(self):
        rng = np.random.default_rng(6)
        for trial in range(5):
            m = int(rng.integers(2, 7))
            X = rng.standard_normal((60, m))
            y = (X @ rng.standard_normal(m) > 0).astype(float)
            tree = fit_tree(X, y, task=GINI, max_depth=3)
            bg = BackgroundSet(rows=X[:8], seed=0)
            x = X[20 + trial]
            kv = kernel_shap(tree.predict, x, bg, n_coalitions=2**m - 2)
            ev = exact_shapley(tree.predict, x, bg)
            assert np.abs(kv.phi - ev.phi).max() <= 1e-6
            assert kv.base_value == pytest.approx(ev.base_value, abs=1e-12)

    def test_efficiency_exact_in_sampled_mode(self):
        rng = np.random.default_rng(7)
        m = 9
        w = rng.standard_normal(m)
        bg = make_background(rng, 10, m)
        x = rng.standard_normal(m)
        predict = lambda rows: 1 / (1 + np.exp(-(rows @ w)))
        sv = kernel_shap(predict, x, bg, n_coalitions=64, seed=3)
        assert abs(sv.phi.sum() + sv.base_value - predict(x[None])[0]) <= 1e-9

    def test_sampled_error_shrinks_with_budget(self):
        rng = np.random.default_rng(8)
        m = 8
        w = rng.standard_normal(m)
        predict = lambda rows: np.tanh(rows @ w)
        bg = make_background(rng, 8, m)
        instances = rng.standard_normal((4, m))
        exact = [exact_shapley(predict, x, bg) for x in instances]

        def mean_error(budget):
            errs = []
            for x, ev in zip(instances, exact):
                kv = kernel_shap(predict, x, bg, n_coalitions=budget, seed=11)
                errs.append(np.abs(kv.phi - ev.phi).mean())
            return float(np.mean(errs))

        errors = [mean_error(b) for b in (32, 64, 128, 254)]
        for small, big in zip(errors, errors[1:]):
            assert big <= small + 0.01  # monotone within noise
        assert errors[-1] <= 1e-6  # budget 254 = exhaustive for m=8

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(9)
        m = 10
        predict = linear_predict(rng.standard_normal(m))
        bg = make_background(rng, 6, m)
        x = rng.standard_normal(m)
        a = kernel_shap(predict, x, bg, n_coalitions=100, seed=5)
        b = kernel_shap(predict, x, bg, n_coalitions=100, seed=5)
        assert np.array_equal(a.phi, b.phi)

    def test_default_budget(self):
        assert default_coalition_budget(3) == 6
        assert default_coalition_budget(20) == 2 * 20 + 2048

    def test_kernel_weights_symmetric(self):
        assert shapley_kernel_weight(6, 2) == pytest.approx(shapley_kernel_weight(6, 4))


@pytest.fixture(scope="module")
def setup():
    ds, _ = synth_dataset(60, 3, seed=15)
    train = list(range(40))
    model = train_model(
        AlgorithmKind.DECISION_TREE,
        {"max_depth": 3, "min_samples_leaf": 2},
        ds,
        train,
        seed=1,
    )
    background = sample_background(ds, train, size=12, seed=2)
    return ds, model, background


class TestSelectionAggregation:
    def test_singleton_equals_instance_shap(self, setup):
        ds, model, background = setup
        summary = shap_for_selection([model], [45], ds, background, seed=0)
        sv = kernel_shap(
            lambda rows: predict_proba(model, rows),
            ds.rows[45],
            background,
            model_id=model.id,
            instance_id=45,
        )
        for name, value in summary.mean_phi[model.id].items():
            j = model.feature_names.index(name)
            assert value == pytest.approx(sv.phi[j], abs=1e-12)

    def test_pair_mean_is_elementwise_average(self, setup):
        ds, model, background = setup
        a = shap_for_selection([model], [41], ds, background, seed=0)
        b = shap_for_selection([model], [42], ds, background, seed=0)
        both = shap_for_selection([model], [41, 42], ds, background, seed=0)
        for name in both.mean_phi[model.id]:
            expected = (a.mean_phi[model.id][name] + b.mean_phi[model.id][name]) / 2
            assert both.mean_phi[model.id][name] == pytest.approx(expected, abs=1e-12)

    def test_mean_feature_values_from_raw_columns(self, setup):
        ds, model, background = setup
        ids = [50, 51, 55]
        summary = shap_for_selection([model], ids, ds, background, seed=0)
        for j, name in enumerate(ds.schema.names):
            assert summary.mean_feature_values[name] == pytest.approx(
                ds.rows[ids, j].mean()
            )

    def test_memoization_hits_cache(self, setup):
        ds, model, background = setup
        cache = ShapCache()
        shap_for_selection([model], [44, 45], ds, background, seed=0, cache=cache)
        assert len(cache) == 2
        before = len(cache)
        shap_for_selection([model], [44, 45], ds, background, seed=0, cache=cache)
        assert len(cache) == before

    def test_invalid_ids(self, setup):
        ds, model, background = setup
        with pytest.raises(ExplainError):
            shap_for_selection([model], [], ds, background, seed=0)
        with pytest.raises(ExplainError):
            shap_for_selection([model], [999], ds, background, seed=0)

    def test_efficiency_against_model_prediction(self, setup):
        ds, model, background = setup
        summary = shap_for_selection([model], [47], ds, background, seed=0)
        total = sum(summary.mean_phi[model.id].values()) + summary.base_values[model.id]
        prob = model.predict_from_raw(ds.rows[[47]])[0]
        assert total == pytest.approx(prob, abs=1e-6)


class TestLoanStyleSelection:
    def test_mean_installment_recomputed_from_source(self, loan_csv, loan_artifact):
        # Independent oracle: re-read the CSV column and average the selected rows.
        import csv as csv_mod

        art = loan_artifact
        with open(loan_csv, newline="") as fh:
            reader = csv_mod.DictReader(fh)
            column = [float(row["installment"]) for row in reader]
        ids = list(art.splits.test)[:4]
        background = sample_background(art.dataset, art.splits.train, size=20, seed=3)
        summary = shap_for_selection(
            list(art.models[:1]), ids, art.dataset, background, seed=0
        )
        expected = np.mean([column[i] for i in ids])
        assert summary.mean_feature_values["installment"] == pytest.approx(expected)
