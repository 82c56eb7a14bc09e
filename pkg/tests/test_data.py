import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lineup.data import (
    DataError,
    load_csv,
    make_splits,
    synth_dataset,
    write_csv,
)


def write(tmp_path, text, name="t.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_numeric_and_binary_label(self, tmp_path):
        path = write(tmp_path, "income,grade\n100,A\n50,C\n70,A\n")
        ds = load_csv(path, "grade", "A")
        assert ds.n == 3 and ds.m == 1
        assert ds.schema.names == ["income"]
        assert list(ds.labels) == [1, 0, 1]
        assert list(ds.rows[:, 0]) == [100.0, 50.0, 70.0]

    def test_one_hot_encoding(self, tmp_path):
        path = write(tmp_path, "term,grade\n36mo,A\n60mo,C\n36mo,A\n")
        ds = load_csv(path, "grade", "A")
        assert ds.schema.names == ["term=36mo", "term=60mo"]
        assert np.all(ds.rows.sum(axis=1) == 1.0)

    def test_non_binary_label_rejected(self, tmp_path):
        path = write(tmp_path, "x,grade\n1,A\n2,B\n3,C\n")
        with pytest.raises(DataError, match="non-binary label"):
            load_csv(path, "grade", "A")

    def test_constant_label_rejected(self, tmp_path):
        path = write(tmp_path, "x,grade\n1,A\n2,A\n")
        with pytest.raises(DataError, match="constant label"):
            load_csv(path, "grade", "A")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "nope.csv", "grade", "A")

    def test_missing_label_column(self, tmp_path):
        path = write(tmp_path, "x,y\n1,2\n")
        with pytest.raises(DataError, match="not found"):
            load_csv(path, "grade", "A")

    def test_empty_table(self, tmp_path):
        path = write(tmp_path, "x,grade\n")
        with pytest.raises(DataError, match="no data rows"):
            load_csv(path, "grade", "A")

    def test_median_imputation(self, tmp_path):
        path = write(tmp_path, "x,grade\n1,A\n,C\n3,A\n9,C\n")
        ds = load_csv(path, "grade", "A")
        assert ds.rows[1, 0] == 3.0  # median of 1, 3, 9

    def test_mode_imputation_keeps_one_hot_identity(self, tmp_path):
        path = write(tmp_path, "term,grade\na,A\n,C\na,A\nb,C\n")
        ds = load_csv(path, "grade", "A")
        assert np.all(ds.rows.sum(axis=1) == 1.0)
        assert ds.rows[1, ds.schema.names.index("term=a")] == 1.0

    def test_round_trip_through_write_csv(self, tmp_path):
        ds, _ = synth_dataset(30, 3, seed=5)
        out = tmp_path / "round.csv"
        write_csv(ds, out)
        back = load_csv(out, "label", "1")
        assert np.array_equal(back.rows, ds.rows)
        assert np.array_equal(back.labels, ds.labels)


class TestMakeSplits:
    def test_rounded_sizes(self):
        ds, _ = synth_dataset(10, 2, seed=1)
        s = make_splits(ds, (0.6, 0.2, 0.2), seed=1)
        assert (len(s.train), len(s.validation), len(s.test)) == (6, 2, 2)

    def test_deterministic(self):
        ds, _ = synth_dataset(50, 3, seed=2)
        a = make_splits(ds, (0.6, 0.2, 0.2), seed=9)
        b = make_splits(ds, (0.6, 0.2, 0.2), seed=9)
        assert a == b

    def test_stratified_test_positive_count(self):
        # 10 rows, 5 positive: the 2-element test split must hold exactly 1.
        from lineup.data import Dataset, FeatureColumn, FeatureSchema

        ds = Dataset(
            name="tiny",
            schema=FeatureSchema((FeatureColumn("x", "numeric"),)),
            rows=np.arange(10, dtype=float).reshape(-1, 1),
            labels=np.array([1, 0] * 5),
            positive_class_name="1",
        )
        s = make_splits(ds, (0.6, 0.2, 0.2), seed=4)
        assert sum(ds.labels[i] for i in s.test) == 1

    def test_partition_covers_everything(self):
        ds, _ = synth_dataset(37, 2, seed=3)
        s = make_splits(ds, (0.5, 0.25, 0.25), seed=0)
        union = sorted(s.train + s.validation + s.test)
        assert union == list(range(37))

    def test_too_small_errors(self):
        ds, _ = synth_dataset(4, 2, seed=1)
        with pytest.raises(DataError, match="too small"):
            make_splits(ds, (0.98, 0.01, 0.01), seed=1)

    def test_bad_ratios(self):
        ds, _ = synth_dataset(10, 2, seed=1)
        with pytest.raises(DataError, match="sum to 1"):
            make_splits(ds, (0.5, 0.2, 0.2), seed=1)

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(20, 200),
        seed=st.integers(0, 10_000),
        ratio_seed=st.integers(0, 3),
    )
    def test_stratification_within_one_instance(self, n, seed, ratio_seed):
        ratios = [(0.6, 0.2, 0.2), (0.5, 0.25, 0.25), (0.7, 0.15, 0.15), (0.4, 0.3, 0.3)][
            ratio_seed
        ]
        ds, _ = synth_dataset(n, 3, seed=seed % 50)
        s = make_splits(ds, ratios, seed=seed)
        overall = ds.labels.mean()
        for part in (s.train, s.validation, s.test):
            rate = np.mean([ds.labels[i] for i in part])
            assert abs(rate - overall) <= 1.0 / len(part) + 1e-12


class TestSynthDataset:
    def test_deterministic(self):
        a, wa = synth_dataset(100, 2, seed=7)
        b, wb = synth_dataset(100, 2, seed=7)
        assert np.array_equal(a.rows, b.rows)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(wa, wb)

    def test_label_rule_matches_weights(self):
        ds, w = synth_dataset(500, 4, seed=13)
        assert np.array_equal(ds.labels, (ds.rows @ w > 0).astype(int))

    def test_single_positive_weight_thresholds_on_sign(self):
        for seed in range(10):
            ds, w = synth_dataset(50, 1, seed=seed)
            if w[0] > 0:
                assert np.array_equal(ds.labels, (ds.rows[:, 0] > 0).astype(int))
                return
        pytest.fail("no positive single weight drawn in 10 seeds")

    def test_balance_bounds(self):
        ds, _ = synth_dataset(2000, 12, seed=3)
        assert 0.3 <= ds.labels.mean() <= 0.7

    def test_preconditions(self):
        with pytest.raises(DataError):
            synth_dataset(3, 2, seed=0)
        with pytest.raises(DataError):
            synth_dataset(10, 0, seed=0)
