"""Complexity table: measured per-detection counts next to asymptotic orders."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .sweep import BerRecord

COMPLEXITY_HEADER = ["detector", "snr_db", "nodes_mean", "metric_evals_mean", "sort_cmps_mean",
                     "asymptotic_order", "check"]
COMPLEXITY_SCHEMA = 1


def asymptotic_order(detector: str) -> str:
    if detector == "ml":
        return "O(Q^Nt)"
    if detector in ("zf", "mmse"):
        return "O(Nt^3)"
    if detector in ("adaptive", "neural"):
        return "O(K*Nt^3)"
    return "O(K*2^Nt)"


@dataclass(frozen=True)
class ComplexityRow:
    detector: str
    snr_db: float
    nodes_mean: float
    metric_evals_mean: float
    sort_cmps_mean: float
    order: str
    check: str  # "ok", "MISMATCH" (ML leaf count differs from Q^Nt) or ""


def report_complexity(records: list[BerRecord], nt: int, q: int) -> list[ComplexityRow]:
    """One row per record; ML rows are checked against exactly ``Q**Nt`` leaves."""
    rows = []
    for r in records:
        check = ""
        if r.detector == "ml":
            leaves = q**nt
            ok = r.nodes_mean == leaves and r.metric_evals_mean == leaves
            check = "ok" if ok else "MISMATCH"
        rows.append(ComplexityRow(r.detector, r.snr_db, r.nodes_mean, r.metric_evals_mean,
                                  r.sort_cmps_mean, asymptotic_order(r.detector), check))
    return rows


def complexity_csv_text(rows: list[ComplexityRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# metakbest complexity schema {COMPLEXITY_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPLEXITY_HEADER)
    for r in rows:
        w.writerow([r.detector, repr(r.snr_db), repr(r.nodes_mean), repr(r.metric_evals_mean),
                    repr(r.sort_cmps_mean), r.order, r.check])
    return buf.getvalue()


def write_complexity_csv(rows: list[ComplexityRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(complexity_csv_text(rows))
    return path


def format_table(rows: list[ComplexityRow]) -> str:
    head = f"{'detector':<22}{'snr_db':>8}{'children':>12}{'evals':>12}{'cmps':>12}  order"
    lines = [head]
    for r in rows:
        flag = f"  [{r.check}]" if r.check else ""
        lines.append(f"{r.detector:<22}{r.snr_db:>8.2f}{r.nodes_mean:>12.1f}{r.metric_evals_mean:>12.1f}"
                     f"{r.sort_cmps_mean:>12.1f}  {r.order}{flag}")
    return "\n".join(lines)
