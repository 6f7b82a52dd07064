"""Log-log convergence plots with least-squares slope fits."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

ERROR_COLUMNS = ("l2", "h1", "dg")
COLUMN_LABELS = {"l2": "L2 error", "h1": "broken H1 error", "dg": "DG-norm error"}


@dataclass
class ErrorTable:
    name: str
    h: np.ndarray
    errors: dict  # column -> values

    def fitted_slope(self, column: str) -> float:
        """Least-squares slope of log(err) against log(h)."""
        y = self.errors[column]
        if len(self.h) < 2:
            raise ValueError("slope fit needs at least two rows")
        if np.all(y == y[0]):
            return 0.0
        coeffs = np.polyfit(np.log(self.h), np.log(y), 1)
        return float(coeffs[0])


def read_error_table(path) -> ErrorTable:
    path = Path(path)
    with open(path) as fh:
        reader = csv.DictReader(fh)
        required = {"h", *ERROR_COLUMNS}
        if not required <= set(reader.fieldnames or ()):
            raise ValueError(f"{path} does not carry the error-table columns")
        rows = list(reader)
    h = np.array([float(r["h"]) for r in rows])
    errors = {c: np.array([float(r[c]) for r in rows]) for c in ERROR_COLUMNS}
    return ErrorTable(path.stem, h, errors)


def plot_convergence(tables, out_path, expected_slopes=None):
    """Render log-log error curves; returns {table: {column: fitted slope}}.

    `expected_slopes`, when given as {column: value}, draws reference slope
    triangles and annotates the mismatch.
    """
    if not tables:
        raise ValueError("no error tables given")
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=130)
    slopes = {}
    markers = ["o", "s", "^", "d", "v"]
    for ti, table in enumerate(tables):
        slopes[table.name] = {}
        for ci, col in enumerate(ERROR_COLUMNS):
            if np.all(table.errors[col] == 0):
                continue
            slope = table.fitted_slope(col)
            slopes[table.name][col] = slope
            ax.loglog(
                table.h,
                table.errors[col],
                marker=markers[(ti + ci) % len(markers)],
                label=f"{table.name} {COLUMN_LABELS[col]} (slope {slope:.2f})",
            )
    if expected_slopes:
        h = tables[0].h
        for col, p in expected_slopes.items():
            ref = tables[0].errors[col][0] * (h / h[0]) ** p
            ax.loglog(h, ref, "k--", linewidth=0.8)
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.grid(True, which="both", linewidth=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return slopes
