#!/usr/bin/env python3
"""Benchmark geometry definitions shared by the offline asset tools."""

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from fracdg.mesh import FractureSegmentSpec  # noqa: E402


def breaks(knots, counts):
    xs = []
    for (a, b), n in zip(zip(knots[:-1], knots[1:]), counts):
        xs.extend(np.linspace(a, b, n + 1)[:-1])
    xs.append(knots[-1])
    return np.array(xs)


def tensor_cells(xs, ys, pattern="/"):
    nx, ny = len(xs) - 1, len(ys) - 1
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel()], axis=-1)

    def vid(i, j):
        return i * (ny + 1) + j

    cells = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            if pattern == "/":
                cells.append([v00, v10, v11])
                cells.append([v00, v11, v01])
            else:
                cells.append([v00, v10, v01])
                cells.append([v10, v11, v01])
    return verts.tolist(), cells


def single_vertical_geom():
    xs = breaks([0.0, 0.5, 1.0], [8, 7])
    ys = breaks([0.0, 0.5, 1.0], [8, 7])
    verts, cells = tensor_cells(xs, ys, "/")
    segs = [FractureSegmentSpec(0.5, 0.5, 0.5, 1.0, "conductive", 1e-3, 1e8)]
    return verts, cells, segs, (0.0, 0.0), (1.0, 1.0), 450


def single_slanted_geom():
    xs = np.linspace(0.0, 1.0, 13)
    verts, cells = tensor_cells(xs, xs, "\\")
    segs = [FractureSegmentSpec(0.25, 0.75, 0.75, 0.25, "conductive", 1e-3, 1e8)]
    return verts, cells, segs, (0.0, 0.0), (1.0, 1.0), 404


def regular_network_geom():
    xs = breaks([0.0, 0.5, 0.625, 0.75, 1.0], [6, 2, 2, 3])
    ys = breaks([0.0, 0.5, 0.625, 0.75, 1.0], [7, 2, 2, 3])
    verts, cells = tensor_cells(xs, ys, "/")
    coords = [
        (0.0, 0.5, 1.0, 0.5),
        (0.5, 0.0, 0.5, 1.0),
        (0.5, 0.75, 1.0, 0.75),
        (0.75, 0.5, 0.75, 1.0),
        (0.5, 0.625, 0.75, 0.625),
        (0.625, 0.5, 0.625, 0.75),
    ]
    segs = [FractureSegmentSpec(*c, "conductive", 1e-4, 1e4) for c in coords]
    return verts, cells, segs, (0.0, 0.0), (1.0, 1.0), 366


def complex_network_geom():
    g = 1.0 / 32.0
    xs = np.linspace(0.0, 1.0, 33)
    verts, cells = tensor_cells(xs, xs, "/")
    cond = [
        (4, 6, 28, 6),
        (6, 2, 6, 20),
        (16, 4, 16, 26),
        (10, 2, 24, 16),
        (2, 24, 26, 24),
        (24, 10, 24, 30),
        (20, 2, 30, 12),
        (4, 28, 28, 28),
    ]
    block = [
        (12, 10, 12, 28),
        (4, 16, 26, 16),
    ]
    segs = [
        FractureSegmentSpec(a * g, b * g, c * g, d * g, "conductive", 1e-4, 1e4)
        for (a, b, c, d) in cond
    ] + [
        FractureSegmentSpec(a * g, b * g, c * g, d * g, "blocking", 1e-4, 1e-4)
        for (a, b, c, d) in block
    ]
    return verts, cells, segs, (0.0, 0.0), (1.0, 1.0), 2680


def realistic_network_geom():
    rng = np.random.default_rng(42)
    g = 25.0
    nx, ny = 28, 24
    xs = np.arange(nx + 1) * g
    ys = np.arange(ny + 1) * g
    verts, cells = tensor_cells(xs, ys, "/")
    segs = []
    taken = []

    def overlaps(kind, level, lo, hi):
        for k2, l2, a2, b2 in taken:
            if k2 == kind and l2 == level and not (hi <= a2 or lo >= b2):
                return True
        return False

    while len(segs) < 64:
        kind = rng.choice(["h", "v", "d"], p=[0.4, 0.4, 0.2])
        if kind == "h":
            j = int(rng.integers(1, ny))
            i0 = int(rng.integers(0, nx - 3))
            ln = int(rng.integers(3, min(10, nx - i0) + 1))
            if overlaps("h", j, i0, i0 + ln):
                continue
            taken.append(("h", j, i0, i0 + ln))
            segs.append((i0 * g, j * g, (i0 + ln) * g, j * g))
        elif kind == "v":
            i = int(rng.integers(1, nx))
            j0 = int(rng.integers(0, ny - 3))
            ln = int(rng.integers(3, min(10, ny - j0) + 1))
            if overlaps("v", i, j0, j0 + ln):
                continue
            taken.append(("v", i, j0, j0 + ln))
            segs.append((i * g, j0 * g, i * g, (j0 + ln) * g))
        else:
            i0 = int(rng.integers(0, nx - 4))
            j0 = int(rng.integers(0, ny - 4))
            ln = int(rng.integers(3, min(8, nx - i0, ny - j0) + 1))
            level = j0 - i0
            if overlaps("d", level, i0, i0 + ln):
                continue
            taken.append(("d", level, i0, i0 + ln))
            segs.append((i0 * g, j0 * g, (i0 + ln) * g, (j0 + ln) * g))
    frac_segs = [FractureSegmentSpec(*s, "conductive", 1e-2, 1e-8) for s in segs]
    return verts, cells, frac_segs, (0.0, 0.0), (700.0, 600.0), 3611


def _areas(verts, cells):
    v = np.asarray(verts)
    c = np.asarray(cells)
    p0, p1, p2 = v[c[:, 0]], v[c[:, 1]], v[c[:, 2]]
    return 0.5 * np.abs(
        (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
        - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
    )


def _edge_map(cells):
    emap = {}
    for ci, cell in enumerate(cells):
        for k in range(3):
            a, b = cell[k], cell[(k + 1) % 3]
            emap.setdefault((min(a, b), max(a, b)), []).append(ci)
    return emap


def _split_cell(cell, a, b, m):
    c = [v for v in cell if v != a and v != b][0]
    return [a, m, c], [m, b, c]


def refine_to_count(verts, cells, target):
    """Conforming bisections until len(cells) == target.

    Interior-edge splits add two cells, boundary-edge splits one; always
    bisect the largest cell across its longest edge (or a boundary edge when
    exactly one cell is still missing).
    """
    verts = [list(v) for v in verts]
    cells = [list(c) for c in cells]
    if len(cells) > target:
        raise ValueError(f"base mesh already has {len(cells)} > {target} cells")
    while len(cells) < target:
        remaining = target - len(cells)
        areas = _areas(verts, cells)
        emap = _edge_map(cells)
        order = np.argsort(-areas, kind="stable")
        edge = None
        if remaining == 1:
            for ci in order:
                cell = cells[ci]
                cands = []
                for k in range(3):
                    a, b = cell[k], cell[(k + 1) % 3]
                    key = (min(a, b), max(a, b))
                    if len(emap[key]) == 1:
                        cands.append(key)
                if cands:
                    va = np.asarray(verts)
                    edge = max(cands, key=lambda e: np.linalg.norm(va[e[0]] - va[e[1]]))
                    break
            if edge is None:
                raise ValueError("no boundary edge available for a +1 split")
        else:
            ci = order[0]
            cell = cells[ci]
            va = np.asarray(verts)
            edge = max(
                (
                    (min(cell[k], cell[(k + 1) % 3]), max(cell[k], cell[(k + 1) % 3]))
                    for k in range(3)
                ),
                key=lambda e: np.linalg.norm(va[e[0]] - va[e[1]]),
            )
        a, b = edge
        m = len(verts)
        verts.append(
            [0.5 * (verts[a][0] + verts[b][0]), 0.5 * (verts[a][1] + verts[b][1])]
        )
        for ci in sorted(emap[edge], reverse=True):
            c1, c2 = _split_cell(cells[ci], a, b, m)
            cells[ci] = c1
            cells.append(c2)
    return verts, cells


GEOMETRIES = {
    "single_vertical": single_vertical_geom,
    "single_slanted": single_slanted_geom,
    "regular_network": regular_network_geom,
    "complex_network": complex_network_geom,
    "realistic_network": realistic_network_geom,
}
