"""Slice-overlay figures and discrepancy tables."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


@dataclass
class SliceCurve:
    name: str
    s: np.ndarray
    side: list
    value: np.ndarray

    def arclength_ordered(self):
        """Points ordered along the slice; duplicated interface samples kept
        ('-' rows before '+' rows) so jumps render as vertical segments."""
        rank = {"-": 0, ".": 1, "+": 2}
        order = np.lexsort((np.array([rank[s] for s in self.side]), self.s))
        return self.s[order], self.value[order]

    def jump_at(self, s0: float, tol: float = 1e-9) -> float:
        """Jump (plus-side minus minus-side value) at a double-valued sample."""
        near = np.abs(self.s - s0) < tol
        sides = {sd: v for sd, v in zip(np.array(self.side)[near], self.value[near])}
        if "-" not in sides or "+" not in sides:
            raise ValueError(f"no two-sided sample at s={s0}")
        return float(sides["+"] - sides["-"])


def read_slice(path) -> SliceCurve:
    path = Path(path)
    with open(path) as fh:
        reader = csv.DictReader(fh)
        required = {"s", "x", "y", "side", "value"}
        if not required <= set(reader.fieldnames or ()):
            raise ValueError(f"{path} does not carry the slice columns")
        rows = list(reader)
    return SliceCurve(
        path.stem,
        np.array([float(r["s"]) for r in rows]),
        [r["side"] for r in rows],
        np.array([float(r["value"]) for r in rows]),
    )


def overlay_discrepancy(curve: SliceCurve, reference: SliceCurve) -> dict:
    """Max/mean absolute difference on the common parameter grid.

    Double-valued interface samples compare side-to-side where both tables
    carry them; otherwise against the other table's single value (or the mean
    of its sides).
    """

    def index(curve):
        d = {}
        for s, side, v in zip(curve.s, curve.side, curve.value):
            d.setdefault(round(float(s), 12), {})[side] = float(v)
        return d

    ia, ib = index(curve), index(reference)
    common = sorted(set(ia) & set(ib))
    if not common:
        raise ValueError("slices share no parameter values")
    diffs = []
    for s in common:
        va, vb = ia[s], ib[s]
        for side, val in va.items():
            other = vb.get(side)
            if other is None:
                other = vb.get(".")
            if other is None:
                other = float(np.mean(list(vb.values())))
            diffs.append(abs(val - other))
    return {
        "n_samples": len(diffs),
        "max_abs": float(np.max(diffs)),
        "mean_abs": float(np.mean(diffs)),
    }


def plot_slice_overlay(curve: SliceCurve, reference: SliceCurve, out_path) -> dict:
    """Overlay figure plus the discrepancy table for the pair."""
    rep = overlay_discrepancy(curve, reference)
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=130)
    s, v = curve.arclength_ordered()
    rs, rv = reference.arclength_ordered()
    ax.plot(rs, rv, "-", color="0.45", linewidth=2.2, label=f"reference ({reference.name})")
    ax.plot(s, v, "-", color="C3", linewidth=1.1, label=curve.name)
    ax.set_xlabel("slice parameter")
    ax.set_ylabel("value")
    ax.grid(True, linewidth=0.3)
    ax.legend(fontsize=8)
    ax.set_title(
        f"max |diff| = {rep['max_abs']:.3e}, mean |diff| = {rep['mean_abs']:.3e}",
        fontsize=9,
    )
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return rep
