"""Error tables, slice extraction and output writers."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .assemble import build_system, dg_norm
from .basis import DGField, ReferenceElement, l2_norms
from .manufactured import get_case
from .mesh import Mesh, generate_structured
from .sparse import SolverConfig, solve

ERROR_CSV_HEADER = "h,l2,l2_order,h1,h1_order,dg,dg_order"
SLICE_CSV_HEADER = "s,x,y,side,value"


@dataclass
class ErrorRow:
    h: float
    l2: float
    l2_order: Optional[float]
    h1: float
    h1_order: Optional[float]
    dg: float
    dg_order: Optional[float]


@dataclass
class ErrorReport:
    case: str
    degree: int
    rows: list[ErrorRow] = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(ERROR_CSV_HEADER + "\n")
        for r in self.rows:
            def fmt(v):
                return "" if v is None else f"{v:.6e}" if abs(v) < 1e-2 or abs(v) > 1e3 else f"{v:.6f}"
            out.write(
                f"{r.h:.10g},{r.l2:.6e},{fmt(r.l2_order)},{r.h1:.6e},"
                f"{fmt(r.h1_order)},{r.dg:.6e},{fmt(r.dg_order)}\n"
            )
        return out.getvalue()


def _order(prev: Optional[float], cur: float, ratio: float) -> Optional[float]:
    if prev is None or ratio <= 0:
        return None
    return float(np.log(prev / cur) / np.log(ratio))


def convergence_table(
    case_name: str,
    degree: int,
    levels: Sequence[int],
    sigma: int = -1,
    alpha0: float = 10.0,
    alpha_tilde0: float = 10.0,
    solver: Optional[SolverConfig] = None,
) -> ErrorReport:
    """Solve the manufactured case on a sequence of structured grids.

    `levels` are cells-per-side counts; orders are reported only between
    exact halvings of h (other ratios leave the order column empty).
    """
    case = get_case(case_name, sigma=sigma, alpha0=alpha0, alpha_tilde0=alpha_tilde0)
    report = ErrorReport(case_name, degree)
    prev = None
    prev_n = None
    for n in levels:
        mesh = generate_structured(n, case.spec.segments)
        ref = ReferenceElement(degree)
        system = build_system(case.spec, mesh, ref)
        x, _ = solve(system, solver)
        fld = DGField(mesh, degree, x.reshape(mesh.n_cells, ref.n_modes))
        l2, h1 = l2_norms(fld, ref, case.p, case.grad_p)
        dg = dg_norm(mesh, ref, case.spec, fld, case.p, case.grad_p)
        if prev is not None and prev_n is not None and n == 2 * prev_n:
            orders = [_order(prev[i], cur, 2.0) for i, cur in enumerate((l2, h1, dg))]
        else:
            orders = [None, None, None]
        report.rows.append(
            ErrorRow(1.0 / n, l2, orders[0], h1, orders[1], dg, orders[2])
        )
        prev, prev_n = (l2, h1, dg), n
    return report


# ---------------------------------------------------------------------------
# slices


@dataclass
class SliceRequest:
    start: tuple[float, float]
    end: tuple[float, float]
    samples: int = 200


def extract_slice(field: DGField, req: SliceRequest) -> list[tuple]:
    """Sample a field along a segment; rows are (s, x, y, side, value).

    Samples falling on a cell interface are reported once per side ('-' for
    the cell behind the sample along the slice direction, '+' ahead), so
    pressure jumps across barriers stay visible.  Interior samples carry
    side '.'.
    """
    mesh = field.mesh
    a = np.asarray(req.start, dtype=float)
    b = np.asarray(req.end, dtype=float)
    ts = np.linspace(0.0, 1.0, req.samples + 1)
    pts = a[None, :] + ts[:, None] * (b - a)[None, :]
    direction = (b - a) / max(np.linalg.norm(b - a), 1e-300)
    locator = _CellLocator(mesh)
    rows = []
    for t, pt in zip(ts, pts):
        cells = locator.cells_containing(pt)
        if not cells:
            raise ValueError(f"slice sample {pt} lies outside every cell")
        if len(cells) == 1:
            val = float(field.eval(np.array([cells[0]]), pt[None, :])[0])
            rows.append((float(t), float(pt[0]), float(pt[1]), ".", val))
            continue
        proj = [float((mesh.geom.centroid[c] - pt) @ direction) for c in cells]
        order = np.argsort(proj)
        back, front = cells[order[0]], cells[order[-1]]
        for c, side in ((back, "-"), (front, "+")):
            val = float(field.eval(np.array([c]), pt[None, :])[0])
            rows.append((float(t), float(pt[0]), float(pt[1]), side, val))
    return rows


def slice_to_csv(rows: list[tuple]) -> str:
    out = io.StringIO()
    out.write(SLICE_CSV_HEADER + "\n")
    for s, x, y, side, v in rows:
        out.write(f"{s:.10g},{x:.10g},{y:.10g},{side},{v:.12e}\n")
    return out.getvalue()


class _CellLocator:
    """Bin-grid accelerated point location with closure tolerance."""

    def __init__(self, mesh: Mesh, tol: float = 1e-10):
        self.mesh = mesh
        self.tol = tol * mesh.diameter
        nbins = max(1, int(np.sqrt(mesh.n_cells / 2)))
        self.nbins = nbins
        lo = mesh.vertices.min(axis=0)
        hi = mesh.vertices.max(axis=0)
        self.lo, self.hi = lo, hi
        self.extent = np.maximum(hi - lo, 1e-300)
        self.bins: dict[tuple[int, int], list[int]] = {}
        verts = mesh.vertices[mesh.cells]  # (nc, 3, 2)
        cl = np.floor((verts.min(axis=1) - lo) / self.extent * nbins).astype(int)
        ch = np.floor((verts.max(axis=1) - lo) / self.extent * nbins).astype(int)
        cl = np.clip(cl, 0, nbins - 1)
        ch = np.clip(ch, 0, nbins - 1)
        for c in range(mesh.n_cells):
            for i in range(cl[c, 0], ch[c, 0] + 1):
                for j in range(cl[c, 1], ch[c, 1] + 1):
                    self.bins.setdefault((i, j), []).append(c)

    def cells_containing(self, pt: np.ndarray) -> list[int]:
        ij = np.clip(
            np.floor((pt - self.lo) / self.extent * self.nbins).astype(int),
            0,
            self.nbins - 1,
        )
        cand = self.bins.get((int(ij[0]), int(ij[1])), [])
        out = []
        for c in cand:
            ref = self.mesh.geom.to_reference(np.array([c]), pt[None, :])[0]
            lam1 = 0.5 * (ref[0] + 1.0)
            lam2 = 0.5 * (ref[1] + 1.0)
            scale = self.tol / max(self.mesh.cell_diameter[c], 1e-300)
            if lam1 >= -scale and lam2 >= -scale and lam1 + lam2 <= 1.0 + scale:
                out.append(c)
        return out


# ---------------------------------------------------------------------------
# VTK legacy writer


def write_vtk(
    path,
    mesh: Mesh,
    cell_fields: Optional[dict] = None,
    point_fields: Optional[dict] = None,
) -> None:
    """Legacy ASCII VTK (version 3.0) unstructured grid.

    DGField entries in `point_fields` are written with duplicated per-corner
    points so discontinuities survive; their cell means go to CELL_DATA.
    Plain per-cell arrays in `cell_fields` go to CELL_DATA directly.
    """
    cell_fields = dict(cell_fields or {})
    point_fields = dict(point_fields or {})
    nc = mesh.n_cells
    corners = mesh.vertices[mesh.cells]  # (nc, 3, 2)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("fracdg output\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {3 * nc} double\n")
        for c in range(nc):
            for v in range(3):
                fh.write(f"{corners[c, v, 0]:.12g} {corners[c, v, 1]:.12g} 0\n")
        fh.write(f"CELLS {nc} {4 * nc}\n")
        for c in range(nc):
            fh.write(f"3 {3 * c} {3 * c + 1} {3 * c + 2}\n")
        fh.write(f"CELL_TYPES {nc}\n")
        fh.write("\n".join(["5"] * nc) + "\n")

        for name, fld in point_fields.items():
            cell_fields.setdefault(name + "_mean", fld.cell_means())
        if cell_fields:
            fh.write(f"CELL_DATA {nc}\n")
            for name, arr in cell_fields.items():
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                fh.write("\n".join(f"{float(v):.12g}" for v in arr) + "\n")
        if point_fields:
            fh.write(f"POINT_DATA {3 * nc}\n")
            for name, fld in point_fields.items():
                vals = np.empty((nc, 3))
                for v in range(3):
                    vals[:, v] = np.einsum(
                        "cm,cm->c",
                        fld.coeffs,
                        _corner_basis(mesh, fld.degree, v),
                    )
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                fh.write("\n".join(f"{float(x):.12g}" for x in vals.ravel()) + "\n")


_CORNER_REF = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])


def _corner_basis(mesh: Mesh, degree: int, corner: int) -> np.ndarray:
    from .basis import eval_modes

    vals = eval_modes(degree, _CORNER_REF[corner])  # (nm,)
    return np.broadcast_to(vals, (mesh.n_cells, len(vals)))


def slice_discrepancy(rows_a: list[tuple], rows_b: list[tuple]) -> dict:
    """Compare two slice tables on their common parameter grid.

    Double-valued points (interface samples) are compared side-by-side when
    both tables carry them, and against the matching one-sided value
    otherwise.  Returns max and mean absolute differences.
    """

    def index(rows):
        d = {}
        for s, x, y, side, v in rows:
            d.setdefault(round(s, 12), {})[side] = v
        return d

    ia, ib = index(rows_a), index(rows_b)
    common = sorted(set(ia) & set(ib))
    diffs = []
    for s in common:
        va, vb = ia[s], ib[s]
        for side in va:
            other = vb.get(side)
            if other is None:
                other = vb.get(".")
            if other is None:
                other = float(np.mean(list(vb.values())))
            diffs.append(abs(va[side] - other))
    if not diffs:
        raise ValueError("no common samples between slices")
    return {
        "n_samples": len(diffs),
        "max_abs": float(np.max(diffs)),
        "mean_abs": float(np.mean(diffs)),
    }
