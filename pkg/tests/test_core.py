"""Containers, seeding, and fold logic."""

import numpy as np
import pytest

from vimsel.core import (
    Dataset,
    DataError,
    FoldAssignment,
    ImportanceReport,
    RngStream,
    TestResult,
    ValidationError,
    config_digest,
    make_folds,
    selection_from_results,
)


class TestRngStream:
    def test_same_handle_same_draws(self):
        a = RngStream(42).generator().normal(size=16)
        b = RngStream(42).generator().normal(size=16)
        assert np.array_equal(a, b)

    def test_generator_restarts(self):
        stream = RngStream(7, 3)
        first = stream.generator().normal(size=4)
        second = stream.generator().normal(size=4)
        assert np.array_equal(first, second)

    def test_distinct_streams_distinct_draws(self):
        a = RngStream(42, 0).generator().normal(size=16)
        b = RngStream(42, 1).generator().normal(size=16)
        assert not np.array_equal(a, b)

    def test_child_deterministic(self):
        assert RngStream(5).child(2) == RngStream(5).child(2)

    def test_children_do_not_collide(self):
        # 200 tags from two parents; all derived stream ids distinct
        seen = set()
        for parent in (RngStream(1, 0), RngStream(1, 9)):
            for tag in range(100):
                seen.add(parent.child(tag).stream_id)
        assert len(seen) == 200

    def test_child_keeps_seed(self):
        child = RngStream(11, 4).child(9)
        assert child.seed == 11
        assert child.stream_id != 4

    def test_rejects_negative_seed(self):
        with pytest.raises(ValidationError):
            RngStream(-1)

    def test_rejects_negative_stream(self):
        with pytest.raises(ValidationError):
            RngStream(0, -2)

    def test_rejects_negative_tag(self):
        with pytest.raises(ValidationError):
            RngStream(0).child(-1)


class TestDataset:
    def test_basic_shape(self):
        d = Dataset(np.ones((3, 2)), np.zeros(3))
        assert d.n == 3
        assert d.p == 2
        assert d.feature_names == ("X1", "X2")

    def test_casts_to_float64(self):
        d = Dataset(np.ones((2, 1), dtype=np.int32), [1, 2])
        assert d.x.dtype == np.float64
        assert d.y.dtype == np.float64

    def test_rejects_nan(self):
        x = np.ones((3, 2))
        x[1, 0] = np.nan
        with pytest.raises(DataError):
            Dataset(x, np.zeros(3))

    def test_rejects_inf_response(self):
        with pytest.raises(DataError):
            Dataset(np.ones((3, 1)), [0.0, np.inf, 0.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValidationError):
            Dataset(np.ones((3, 1)), np.zeros(4))

    def test_rejects_single_row(self):
        with pytest.raises(ValidationError):
            Dataset(np.ones((1, 2)), np.zeros(1))

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValidationError):
            Dataset(np.ones((3, 2)), np.zeros(3), ("a", "a"))

    def test_drop_column(self):
        x = np.arange(6.0).reshape(3, 2)
        d = Dataset(x, np.zeros(3))
        kept = d.drop_column(0)
        assert kept.shape == (3, 1)
        assert np.array_equal(kept[:, 0], x[:, 1])

    def test_drop_column_range_check(self):
        d = Dataset(np.ones((3, 2)), np.zeros(3))
        with pytest.raises(ValidationError):
            d.drop_column(2)


class TestMakeFolds:
    def test_four_rows_two_folds(self):
        folds = make_folds(4, 2, RngStream(0))
        counts = np.bincount(folds.assignment, minlength=2)
        assert folds.k == 2
        assert counts.tolist() == [2, 2]

    def test_five_rows_one_fold(self):
        folds = make_folds(5, 1, RngStream(0))
        assert folds.k == 1
        assert np.array_equal(folds.assignment, np.zeros(5, dtype=np.int64))

    def test_more_folds_than_rows_rejected(self):
        with pytest.raises(ValidationError):
            make_folds(3, 5, RngStream(0))

    def test_deterministic(self):
        a = make_folds(40, 4, RngStream(3, 1)).assignment
        b = make_folds(40, 4, RngStream(3, 1)).assignment
        assert np.array_equal(a, b)

    def test_balance_property(self):
        # sizes differ by at most one for many (n, k, seed) draws
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(2, 60))
            k = int(rng.integers(1, n + 1))
            folds = make_folds(n, k, RngStream(int(rng.integers(1000))))
            counts = np.bincount(folds.assignment, minlength=k)
            assert counts.sum() == n
            assert counts.max() - counts.min() <= 1

    def test_holdout_train_partition(self):
        folds = make_folds(11, 3, RngStream(8))
        for fold in range(3):
            hold = set(folds.holdout_rows(fold).tolist())
            train = set(folds.train_rows(fold).tolist())
            assert hold.isdisjoint(train)
            assert hold | train == set(range(11))

    def test_bad_labels_rejected(self):
        with pytest.raises(ValidationError):
            FoldAssignment(np.array([0, 1, 3]), 3)


class TestTestResult:
    def test_round_trip_fields(self):
        r = TestResult(0, "gcm", 1.0, 0.5, 2.0, 0.0455, 100)
        assert r.method == "gcm"
        assert not r.degenerate

    def test_unknown_method_rejected(self):
        with pytest.raises(ValidationError):
            TestResult(0, "anova", 0.0, 1.0, 0.0, 0.5, 10)

    def test_p_value_bounds(self):
        with pytest.raises(ValidationError):
            TestResult(0, "gcm", 0.0, 1.0, 0.0, 1.5, 10)
        with pytest.raises(ValidationError):
            TestResult(0, "gcm", 0.0, 1.0, 0.0, -0.1, 10)

    def test_negative_std_error_rejected(self):
        with pytest.raises(ValidationError):
            TestResult(0, "gcm", 0.0, -1.0, 0.0, 0.5, 10)


class TestSelection:
    def test_strict_threshold(self):
        results = [
            TestResult(0, "gcm", 0.0, 1.0, 0.0, 0.04, 50),
            TestResult(1, "gcm", 0.0, 1.0, 0.0, 0.05, 50),
            TestResult(0, "loco", 0.0, 1.0, 0.0, 0.2, 50),
        ]
        picked = selection_from_results(results, 0.05)
        assert picked["gcm"] == frozenset({0})
        assert picked["loco"] == frozenset()

    def test_alpha_one_excludes_degenerate_p(self):
        results = [
            TestResult(0, "loco", 0.0, 0.0, 0.0, 1.0, 50, degenerate=True),
            TestResult(1, "loco", 0.0, 1.0, 0.0, 0.999, 50),
        ]
        picked = selection_from_results(results, 1.0)
        assert picked["loco"] == frozenset({1})


class TestImportanceReport:
    def _report(self, alpha=0.05):
        results = (TestResult(0, "gcm", 0.0, 1.0, 0.0, 0.5, 10),)
        return ImportanceReport(
            alpha=alpha,
            feature_names=("X1",),
            results=results,
            selected=selection_from_results(results, alpha),
            wall_time_seconds={"gcm": 0.0},
            config_digest="d" * 64,
        )

    def test_alpha_bounds(self):
        self._report(alpha=1.0)
        with pytest.raises(ValidationError):
            self._report(alpha=0.0)
        with pytest.raises(ValidationError):
            self._report(alpha=1.5)

    def test_index_out_of_range(self):
        results = (TestResult(3, "gcm", 0.0, 1.0, 0.0, 0.5, 10),)
        with pytest.raises(ValidationError):
            ImportanceReport(0.05, ("X1",), results, {}, {}, "d" * 64)

    def test_methods_in_first_seen_order(self):
        results = (
            TestResult(0, "loco", 0.0, 1.0, 0.0, 0.5, 10),
            TestResult(0, "gcm", 0.0, 1.0, 0.0, 0.5, 10),
            TestResult(1, "loco", 0.0, 1.0, 0.0, 0.5, 10),
        )
        rep = ImportanceReport(0.05, ("X1", "X2"), results, {}, {}, "d" * 64)
        assert rep.methods() == ("loco", "gcm")
        assert rep.p_values("loco") == {0: 0.5, 1: 0.5}


class TestConfigDigest:
    def test_order_free(self):
        a = config_digest({"b": 2, "a": 1})
        b = config_digest({"a": 1, "b": 2})
        assert a == b
        assert len(a) == 64

    def test_value_sensitivity(self):
        assert config_digest({"a": 1}) != config_digest({"a": 2})

    def test_type_sensitivity(self):
        # repr-based hashing distinguishes 1 from "1"
        assert config_digest({"a": 1}) != config_digest({"a": "1"})
