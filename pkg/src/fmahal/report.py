"""CSV export and "mean (sd)" text tables for experiment results."""

from __future__ import annotations

import csv
import math

from .harness import ExperimentResult, SummaryRow

ROW_ORDER = [
    ("knn", "kNN"),
    ("centroid", "Centroid"),
    ("flbcr", "FLBCR"),
    ("fqbcr", "FQBCR"),
    ("lbcr_coef", "LBCR Coef."),
    ("qbcr_coef", "QBCR Coef."),
]
COLUMNS = ["L1", "L2", "Linf", "FPC_C", "FPC_D", "FM_C", "FM_D", "DH", "-"]

SUMMARY_FIELDS = ["method", "n_ok", "acc_mean", "acc_sd", "trunc_mean", "trunc_sd", "k_mean", "k_sd"]


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def write_summary_csv(result: ExperimentResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_FIELDS)
        for r in result.summary():
            w.writerow([r.method, r.n_ok] + [_fmt(getattr(r, f)) for f in SUMMARY_FIELDS[2:]])


def write_replications_csv(result: ExperimentResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replication", "attempts", "method", "accuracy", "truncation", "k_neighbors", "error"])
        for rec in result.records:
            if not rec.ok:
                w.writerow([rec.replication, rec.attempts, "", "", "", "", rec.error])
                continue
            for m in result.methods:
                o = rec.outcomes[m]
                w.writerow([
                    rec.replication, rec.attempts, m, repr(o.accuracy),
                    "" if o.truncation is None else o.truncation,
                    "" if o.k_neighbors is None else o.k_neighbors, "",
                ])


def read_summary_csv(path) -> list[SummaryRow]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            vals = {f: float(rec[f]) if rec[f] else math.nan for f in SUMMARY_FIELDS[2:]}
            rows.append(SummaryRow(rec["method"], int(rec["n_ok"]), **vals))
    return rows


def format_cell(mean: float, sd: float, digits: int = 4) -> str:
    if math.isnan(mean):
        return "-"
    return f"{mean:.{digits}f} ({sd:.{digits}f})"


def render_table(rows: list[SummaryRow], quantity: str = "accuracy", title: str = "") -> str:
    """Methods down the side, distances across, ``mean (sd)`` in each cell.

    ``quantity`` is ``"accuracy"`` or ``"truncation"`` (chosen number of
    components).
    """
    mean_f, sd_f, digits = (
        ("acc_mean", "acc_sd", 4) if quantity == "accuracy" else ("trunc_mean", "trunc_sd", 2)
    )
    cells = {}
    for r in rows:
        method, _, kind = r.method.partition(":")
        cells[(method, kind or "-")] = format_cell(getattr(r, mean_f), getattr(r, sd_f), digits)
    used_rows = [(m, name) for m, name in ROW_ORDER if any(k[0] == m for k in cells)]
    used_cols = [c for c in COLUMNS if any(k[1] == c for k in cells)]
    grid = [["Method"] + used_cols]
    for m, name in used_rows:
        grid.append([name] + [cells.get((m, c), "-") for c in used_cols])
    widths = [max(len(row[j]) for row in grid) for j in range(len(grid[0]))]
    lines = [title] if title else []
    for i, row in enumerate(grid):
        lines.append("  ".join(cell.rjust(w) if j else cell.ljust(w) for j, (cell, w) in enumerate(zip(row, widths))))
        if i == 0:
            lines.append("-" * len(lines[-1]))
    return "\n".join(lines) + "\n"
