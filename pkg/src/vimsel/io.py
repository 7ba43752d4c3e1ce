"""CSV loading and report serialization.

CSV files are comma separated with a header row and '.' decimal points;
missing or non-numeric cells are rejected with the offending row and column
named.  Reports round-trip through JSON without loss (floats are written
with full repr precision).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    DataError,
    Dataset,
    ImportanceReport,
    TestResult,
    ValidationError,
    selection_from_results,
)

CSV_HEADER = ("feature", "index", "method", "estimate", "std_error", "statistic", "p_value")


def load_csv(path: str | Path, target: str | None = None) -> Dataset:
    """Read a dataset; the response column is named by ``target`` ('y' by default)."""
    path = Path(path)
    target_name = target if target is not None else "y"
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    header = [name.strip() for name in rows[0]]
    if len(set(header)) != len(header):
        raise DataError(f"{path} has duplicate column names")
    if target_name not in header:
        raise DataError(f"{path} has no column named {target_name!r}")
    y_col = header.index(target_name)
    feature_cols = [c for c in range(len(header)) if c != y_col]
    if not feature_cols:
        raise DataError(f"{path} has no feature columns besides {target_name!r}")

    n = len(rows) - 1
    if n < 1:
        raise DataError(f"{path} has a header but no data rows")
    values = np.empty((n, len(header)), dtype=np.float64)
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        for c, cell in enumerate(row):
            text = cell.strip()
            if not text:
                raise DataError(f"{path}: missing value at row {i}, column {header[c]!r}")
            try:
                values[i - 1, c] = float(text)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {cell!r} at row {i}, column {header[c]!r}"
                ) from None
    return Dataset(
        x=values[:, feature_cols],
        y=values[:, y_col],
        feature_names=tuple(header[c] for c in feature_cols),
    )


def write_csv(path: str | Path, x: np.ndarray, y: np.ndarray, feature_names: Sequence[str]) -> None:
    """Write a dataset in the same layout load_csv expects (features plus 'y')."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(feature_names) + ["y"])
        for i in range(x.shape[0]):
            writer.writerow([repr(float(v)) for v in x[i]] + [repr(float(y[i]))])


def report_to_dict(report: ImportanceReport) -> dict:
    """JSON-ready mapping for an ImportanceReport."""
    results = []
    for res in report.results:
        results.append(
            {
                "feature": report.feature_names[res.feature_index],
                "index": res.feature_index,
                "method": res.method,
                "estimate": res.estimate,
                "std_error": res.std_error,
                "statistic": res.statistic,
                "p_value": res.p_value,
                "n_used": res.n_used,
                "degenerate": res.degenerate,
            }
        )
    return {
        "alpha": report.alpha,
        "results": results,
        "wall_time_seconds": dict(report.wall_time_seconds),
        "config_digest": report.config_digest,
    }


def write_report(report: ImportanceReport, path: str | Path, fmt: str = "json") -> None:
    """Serialize a report as JSON (lossless) or CSV (results table only)."""
    path = Path(path)
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report_to_dict(report), fh, indent=2)
            fh.write("\n")
    elif fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for res in report.results:
                writer.writerow(
                    [
                        report.feature_names[res.feature_index],
                        res.feature_index,
                        res.method,
                        repr(res.estimate),
                        repr(res.std_error),
                        repr(res.statistic),
                        repr(res.p_value),
                    ]
                )
    else:
        raise ValidationError(f"unknown report format {fmt!r} (expected 'json' or 'csv')")


def read_report(path: str | Path) -> ImportanceReport:
    """Rebuild an ImportanceReport from its JSON serialization."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from exc
    try:
        alpha = float(payload["alpha"])
        raw_results = payload["results"]
        wall = {str(k): float(v) for k, v in payload["wall_time_seconds"].items()}
        digest = str(payload["config_digest"])
    except (KeyError, TypeError, AttributeError) as exc:
        raise DataError(f"{path} is missing required report fields: {exc}") from exc

    names: dict[int, str] = {}
    results = []
    for entry in raw_results:
        try:
            idx = int(entry["index"])
            names[idx] = str(entry["feature"])
            results.append(
                TestResult(
                    feature_index=idx,
                    method=str(entry["method"]),
                    estimate=float(entry["estimate"]),
                    std_error=float(entry["std_error"]),
                    statistic=float(entry["statistic"]),
                    p_value=float(entry["p_value"]),
                    n_used=int(entry.get("n_used", 1)),
                    degenerate=bool(entry.get("degenerate", False)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path} has a malformed result entry: {exc}") from exc
    if not results:
        raise DataError(f"{path} contains no results")
    p = max(names) + 1
    feature_names = tuple(names.get(j, f"X{j + 1}") for j in range(p))
    return ImportanceReport(
        alpha=alpha,
        feature_names=feature_names,
        results=tuple(results),
        selected=selection_from_results(results, alpha),
        wall_time_seconds=wall,
        config_digest=digest,
    )
