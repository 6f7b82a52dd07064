#!/usr/bin/env python3
"""Generate reference slice curves on refined versions of the benchmark grids.

References are computed with this solver on grids with four times the shipped
cell counts and are used only for discrepancy reports, never as hard gates.
"""

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tools"))

from geometries import GEOMETRIES, refine_to_count  # noqa: E402

from fracdg.assemble import build_system  # noqa: E402
from fracdg.basis import DGField, ReferenceElement  # noqa: E402
from fracdg.mesh import FractureSegmentSpec, Mesh, _side_classifier  # noqa: E402
from fracdg.postproc import SliceRequest, extract_slice, slice_to_csv  # noqa: E402
from fracdg.problem import ProblemSpec  # noqa: E402
from fracdg.sparse import solve  # noqa: E402

ASSETS = ROOT / "src" / "fracdg" / "assets"
OUT = ASSETS / "references"
OUT.mkdir(parents=True, exist_ok=True)


def by_side(lo, hi, values):
    def fn(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        tol = 1e-9 * max(hi[0] - lo[0], hi[1] - lo[1])
        masks = {
            "left": np.abs(x - lo[0]) < tol,
            "right": np.abs(x - hi[0]) < tol,
            "bottom": np.abs(y - lo[1]) < tol,
            "top": np.abs(y - hi[1]) < tol,
        }
        for name, mask in masks.items():
            out = np.where(mask, values.get(name, 0.0), out)
        return out

    return fn


CASES = [
    # (geometry, tag, blocking_perm, side_map, g_d, g_n, km, alpha0, alpha_t0, slices)
    ("single_vertical", "a", None,
     {"top": "dirichlet", "bottom": "dirichlet", "left": "neumann", "right": "neumann"},
     {"top": 1.0, "bottom": 0.0}, {}, 1.0, 5.0, 5.0e5,
     [("y075", (0.0, 0.75), (1.0, 0.75))]),
    ("single_vertical", "b", 1e-8,
     {"left": "dirichlet", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
     {"left": 0.0, "right": 1.0}, {}, 1.0, 10.0, 10.0,
     [("y075", (0.0, 0.75), (1.0, 0.75))]),
    ("single_slanted", "a", None,
     {"top": "dirichlet", "bottom": "dirichlet", "left": "neumann", "right": "neumann"},
     {"top": 1.0, "bottom": 0.0}, {}, 1.0, 5.0, 5.0e5,
     [("y05", (0.0, 0.5), (1.0, 0.5))]),
    ("single_slanted", "b", 1e-8,
     {"left": "dirichlet", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
     {"left": 0.0, "right": 1.0}, {}, 1.0, 10.0, 10.0,
     [("y05", (0.0, 0.5), (1.0, 0.5))]),
    ("regular_network", "a", None,
     {"left": "neumann", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
     {"right": 1.0}, {"left": 1.0}, 1.0, 1e4, 10.0,
     [("y07", (0.0, 0.7), (1.0, 0.7)), ("x05", (0.5, 0.0), (0.5, 1.0))]),
    ("regular_network", "b", 1e-4,
     {"left": "neumann", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
     {"right": 1.0}, {"left": 1.0}, 1.0, 10.0, 10.0,
     [("diag", (0.0, 0.1), (0.9, 1.0))]),
    ("complex_network", "a", None,
     {"top": "dirichlet", "bottom": "dirichlet", "left": "neumann", "right": "neumann"},
     {"top": 4.0, "bottom": 1.0}, {}, 1.0, 10.0, 10.0,
     [("diag", (0.0, 0.5), (1.0, 0.9))]),
    ("complex_network", "b", None,
     {"left": "dirichlet", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
     {"left": 4.0, "right": 1.0}, {}, 1.0, 10.0, 10.0,
     [("diag", (0.0, 0.5), (1.0, 0.9))]),
    ("realistic_network", "a", None,
     {"left": "dirichlet", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
     {"left": 1013250.0, "right": 0.0}, {}, 1e-14, 1e-5, 1e-5,
     [("y500", (0.0, 500.0), (700.0, 500.0)), ("x625", (625.0, 0.0), (625.0, 600.0))]),
    ("realistic_network", "b", 1e-18,
     {"left": "dirichlet", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
     {"left": 1013250.0, "right": 0.0}, {}, 1e-14, 1e-4, 1e-4,
     [("y500", (0.0, 500.0), (700.0, 500.0)), ("x625", (625.0, 0.0), (625.0, 600.0))]),
]


def main():
    meshes = {}
    for name, fn in GEOMETRIES.items():
        verts, cells, segs, lo, hi, target = fn()
        verts, cells = refine_to_count(verts, cells, 4 * target)
        meshes[name] = (np.asarray(verts), np.asarray(cells), segs, lo, hi)
        print(f"{name}: refined to {len(cells)} cells")

    ref = ReferenceElement(1)
    for (name, tag, kb, side_map, gd, gn, km, a0, at0, slices) in CASES:
        verts, cells, segs, lo, hi = meshes[name]
        if kb is not None:
            segs = [
                FractureSegmentSpec(s.x1, s.y1, s.x2, s.y2, "blocking", s.aperture, kb)
                for s in segs
            ]
        mesh = Mesh(
            verts, cells, segments=segs,
            boundary_class=_side_classifier(side_map, lo=lo, hi=hi),
        )
        spec = ProblemSpec(
            km=km, segments=segs,
            g_d=by_side(lo, hi, gd), g_n=by_side(lo, hi, gn),
            sigma=-1, alpha0=a0, alpha_tilde0=at0,
        )
        system = build_system(spec, mesh, ref)
        x, rep = solve(system)
        field = DGField(mesh, 1, x.reshape(mesh.n_cells, ref.n_modes))
        for sname, start, end in slices:
            rows = extract_slice(field, SliceRequest(start, end, 200))
            path = OUT / f"{name}_{tag}_{sname}.csv"
            path.write_text(slice_to_csv(rows))
            vals = [r[4] for r in rows]
            print(f"  {path.name}: range [{min(vals):.4g}, {max(vals):.4g}]")


if __name__ == "__main__":
    main()
