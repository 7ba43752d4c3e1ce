"""CSV loading and report serialization."""

import csv
import json

import numpy as np
import pytest

from vimsel.core import DataError, ImportanceReport, RngStream, TestResult, ValidationError, selection_from_results
from vimsel.io import CSV_HEADER, load_csv, read_report, report_to_dict, write_csv, write_report


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_two_row_example(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "a,b,y\n1,2,3\n4,5,6\n")
        d = load_csv(path)
        assert d.n == 2
        assert d.p == 2
        assert d.feature_names == ("a", "b")
        assert np.array_equal(d.y, [3.0, 6.0])
        assert np.array_equal(d.x, [[1.0, 2.0], [4.0, 5.0]])

    def test_target_column_anywhere(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "y,a\n1,2\n3,4\n")
        d = load_csv(path)
        assert np.array_equal(d.y, [1.0, 3.0])
        assert d.feature_names == ("a",)

    def test_custom_target_name(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "a,resp\n1,2\n3,4\n")
        d = load_csv(path, target="resp")
        assert np.array_equal(d.y, [2.0, 4.0])

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "a,b,y\n1,abc,3\n4,5,6\n")
        with pytest.raises(DataError) as err:
            load_csv(path)
        msg = str(err.value)
        assert "row 1" in msg
        assert "'b'" in msg
        assert "abc" in msg

    def test_missing_cell_diagnostic(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "a,y\n1,2\n,4\n")
        with pytest.raises(DataError) as err:
            load_csv(path)
        assert "row 2" in str(err.value)

    def test_header_only_rejected(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "a,b,y\n")
        with pytest.raises(DataError):
            load_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "")
        with pytest.raises(DataError):
            load_csv(path)

    def test_missing_target_rejected(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "a,b\n1,2\n")
        with pytest.raises(DataError):
            load_csv(path)

    def test_ragged_row_rejected(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "a,y\n1,2\n3\n")
        with pytest.raises(DataError):
            load_csv(path)

    def test_duplicate_header_rejected(self, tmp_path):
        path = write_text(tmp_path / "d.csv", "a,a,y\n1,2,3\n4,5,6\n")
        with pytest.raises(DataError):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(tmp_path / "nope.csv")


class TestWriteCsv:
    def test_round_trip_full_precision(self, tmp_path):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(20, 4))
        y = rng.normal(size=20)
        path = tmp_path / "d.csv"
        write_csv(path, x, y, ("a", "b", "c", "d"))
        back = load_csv(path)
        # repr round-trips float64 exactly
        assert np.array_equal(back.x, x)
        assert np.array_equal(back.y, y)

    def test_layout_matches_loader(self, tmp_path):
        path = tmp_path / "d.csv"
        write_csv(path, np.ones((2, 1)), np.zeros(2), ("f",))
        rows = list(csv.reader(open(path, newline="")))
        assert rows[0] == ["f", "y"]
        assert len(rows) == 3


def small_report(alpha=0.05):
    results = (
        TestResult(0, "gcm", 0.125, 0.25, 0.5, 0.6170750774519738, 100),
        TestResult(1, "gcm", -1.5, 0.5, -3.0, 0.0026997960632601866, 100),
        TestResult(0, "loco", 0.0, 0.0, 0.0, 1.0, 100, degenerate=True),
        TestResult(1, "loco", 2.0, 0.125, 16.0, 1e-57, 100),
    )
    return ImportanceReport(
        alpha=alpha,
        feature_names=("age", "dose"),
        results=results,
        selected=selection_from_results(results, alpha),
        wall_time_seconds={"gcm": 0.51, "loco": 1.25},
        config_digest="c" * 64,
    )


class TestReportSerialization:
    def test_json_round_trip_exact(self, tmp_path):
        rep = small_report()
        path = tmp_path / "r.json"
        write_report(rep, path)
        back = read_report(path)
        assert back.alpha == rep.alpha
        assert back.feature_names == rep.feature_names
        assert back.config_digest == rep.config_digest
        assert back.selected == rep.selected
        for a, b in zip(back.results, rep.results):
            assert a == b

    def test_round_trip_float_tolerance(self, tmp_path):
        # 1e-12 is the documented floor; repr actually gives exact equality
        rng = np.random.default_rng(11)
        results = []
        for j in range(30):
            est = float(rng.normal())
            se = float(abs(rng.normal()) + 0.1)
            results.append(TestResult(j, "dropout", est, se, est / se, 0.5, 64))
        rep = ImportanceReport(
            0.1,
            tuple(f"X{j + 1}" for j in range(30)),
            tuple(results),
            selection_from_results(results, 0.1),
            {"dropout": 0.1},
            "e" * 64,
        )
        path = tmp_path / "r.json"
        write_report(rep, path)
        back = read_report(path)
        for a, b in zip(back.results, rep.results):
            assert abs(a.estimate - b.estimate) < 1e-12
            assert abs(a.std_error - b.std_error) < 1e-12

    def test_dict_schema(self):
        payload = report_to_dict(small_report())
        assert set(payload) == {"alpha", "results", "wall_time_seconds", "config_digest"}
        entry = payload["results"][0]
        for key in ("feature", "index", "method", "estimate", "std_error", "statistic", "p_value"):
            assert key in entry

    def test_csv_header(self, tmp_path):
        path = tmp_path / "r.csv"
        write_report(small_report(), path, fmt="csv")
        rows = list(csv.reader(open(path, newline="")))
        assert tuple(rows[0]) == CSV_HEADER
        assert len(rows) == 5

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            write_report(small_report(), tmp_path / "r.bin", fmt="bin")

    def test_read_rejects_bad_json(self, tmp_path):
        path = write_text(tmp_path / "r.json", "{not json")
        with pytest.raises(DataError):
            read_report(path)

    def test_read_rejects_missing_fields(self, tmp_path):
        path = write_text(tmp_path / "r.json", json.dumps({"alpha": 0.05}))
        with pytest.raises(DataError):
            read_report(path)

    def test_read_rejects_empty_results(self, tmp_path):
        payload = report_to_dict(small_report())
        payload["results"] = []
        path = write_text(tmp_path / "r.json", json.dumps(payload))
        with pytest.raises(DataError):
            read_report(path)
