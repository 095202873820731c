"""Aggregation of similarity reports: per-patient tables, method
comparison summaries, and boxplot data export.

Frozen conventions: population standard deviation (divisor n) and
quantiles by inclusive linear interpolation between order statistics.
Undefined bias values (NaN, from slices with no true positives) are
dropped from every aggregate and the drop is counted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import SimilarityReport

INDEX_NAMES = ("dci", "ti", "em", "bpn")
SUMMARY_ROWS = ("mean", "std", "min", "q25", "q50", "q75", "max")


@dataclass(frozen=True)
class StatsSummary:
    n: int
    mean: float
    std: float
    min: float
    q25: float
    q50: float
    q75: float
    max: float

    def row(self, name: str) -> float:
        return getattr(self, name)


def summarize(values) -> StatsSummary:
    """Distribution summary of a non-empty, finite sample."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot summarize an empty sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("summarize requires finite values; drop sentinels upstream")
    q25, q50, q75 = np.percentile(arr, [25, 50, 75])
    return StatsSummary(
        n=int(arr.size),
        mean=float(arr.mean()),
        std=float(arr.std()),
        min=float(arr.min()),
        q25=float(q25),
        q50=float(q50),
        q75=float(q75),
        max=float(arr.max()),
    )


def _index_values(reports: list[SimilarityReport], index: str) -> tuple[list[float], int]:
    """Finite values of one index over a report list, plus dropped count."""
    vals = [getattr(r, index) for r in reports]
    kept = [v for v in vals if math.isfinite(v)]
    return kept, len(vals) - len(kept)


def per_patient_table(records: list[tuple[str, SimilarityReport]]) -> list[dict]:
    """Grouped means/stds of the four indices per patient plus a total row.

    Each row carries the slice count and the number of undefined bias
    values that were dropped from that group's aggregates.
    """
    if not records:
        raise ValueError("no records to aggregate")
    by_patient: dict[str, list[SimilarityReport]] = {}
    for patient, rep in records:
        by_patient.setdefault(patient, []).append(rep)
    rows = []
    for patient in sorted(by_patient) + ["total"]:
        reports = (
            [r for _, r in records] if patient == "total" else by_patient[patient]
        )
        row: dict = {"patient": patient, "n": len(reports)}
        for index in INDEX_NAMES:
            vals, dropped = _index_values(reports, index)
            if vals:
                s = summarize(vals)
                row[f"{index}_mean"], row[f"{index}_std"] = s.mean, s.std
            else:
                row[f"{index}_mean"], row[f"{index}_std"] = math.nan, math.nan
            if index == "bpn":
                row["bpn_dropped"] = dropped
        rows.append(row)
    return rows


def compare_methods(
    a: list[SimilarityReport], b: list[SimilarityReport]
) -> dict[tuple[str, str], StatsSummary]:
    """Full distribution summaries per index for two methods.

    Keys are (index, method) with methods labelled "a" and "b"."""
    if not a or not b:
        raise ValueError("both report lists must be non-empty")
    table = {}
    for method, reports in (("a", a), ("b", b)):
        for index in INDEX_NAMES:
            vals, _ = _index_values(reports, index)
            if not vals:
                raise ValueError(f"no defined {index} values for method {method}")
            table[(index, method)] = summarize(vals)
    return table


def boxplot_rows(records: list[tuple[str, str, str, float]]) -> list[dict]:
    """Boxplot export rows from (patient, method, slice, value) records.

    Every record becomes one row annotated with its group's quartiles and
    an outlier flag under the 1.5*IQR rule."""
    groups: dict[tuple[str, str], list[tuple[str, float]]] = {}
    for patient, method, slice_id, value in records:
        groups.setdefault((patient, method), []).append((slice_id, value))
    rows = []
    for (patient, method) in sorted(groups):
        entries = sorted(groups[(patient, method)])
        vals = np.asarray([v for _, v in entries], dtype=np.float64)
        q25, q50, q75 = np.percentile(vals, [25, 50, 75])
        iqr = q75 - q25
        lo, hi = q25 - 1.5 * iqr, q75 + 1.5 * iqr
        for slice_id, value in entries:
            rows.append(
                {
                    "patient": patient,
                    "method": method,
                    "slice": slice_id,
                    "value": value,
                    "q25": float(q25),
                    "q50": float(q50),
                    "q75": float(q75),
                    "outlier": bool(value < lo or value > hi),
                }
            )
    return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def write_per_patient_csv(path, rows: list[dict]) -> None:
    cols = ["patient", "n"]
    for index in INDEX_NAMES:
        cols += [f"{index}_mean", f"{index}_std"]
    cols.append("bpn_dropped")
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(cols)
        for row in rows:
            out.writerow(
                [row["patient"], row["n"]]
                + [_fmt(row[c]) for c in cols[2:-1]]
                + [row["bpn_dropped"]]
            )


def write_comparison_csv(path, table: dict[tuple[str, str], StatsSummary]) -> None:
    """Comparison table: one row per statistic, one column per
    index/method pair."""
    cols = [f"{index}_{method}" for index in INDEX_NAMES for method in ("a", "b")]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["stat"] + cols)
        out.writerow(["n"] + [table[(i, m)].n for i in INDEX_NAMES for m in ("a", "b")])
        for stat in SUMMARY_ROWS:
            out.writerow(
                [stat]
                + [_fmt(table[(i, m)].row(stat)) for i in INDEX_NAMES for m in ("a", "b")]
            )


def write_boxplot_csv(path, rows: list[dict]) -> None:
    cols = ["patient", "method", "slice", "value", "q25", "q50", "q75", "outlier"]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(cols)
        for row in rows:
            out.writerow(
                [row["patient"], row["method"], row["slice"], _fmt(row["value"]),
                 _fmt(row["q25"]), _fmt(row["q50"]), _fmt(row["q75"]),
                 "1" if row["outlier"] else "0"]
            )


def read_boxplot_csv(path) -> list[dict]:
    rows = []
    with open(Path(path), newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                {
                    "patient": rec["patient"],
                    "method": rec["method"],
                    "slice": rec["slice"],
                    "value": float(rec["value"]),
                    "q25": float(rec["q25"]),
                    "q50": float(rec["q50"]),
                    "q75": float(rec["q75"]),
                    "outlier": rec["outlier"] == "1",
                }
            )
    return rows
