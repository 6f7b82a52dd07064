#!/usr/bin/env python3
"""Generate the shipped benchmark mesh/fracture assets.

Each benchmark geometry starts from a tensor-product diagonal-split grid
whose lines contain every declared segment, then conforming longest-edge
bisections of the largest cells bring the triangle count to the published
target.  Assets are written under src/fracdg/assets/.
"""

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tools"))

from geometries import GEOMETRIES, refine_to_count  # noqa: E402

from fracdg.gmsh_io import export_gmsh, write_fracture_csv  # noqa: E402
from fracdg.mesh import FractureSegmentSpec, Mesh, _side_classifier  # noqa: E402

ASSETS = ROOT / "src" / "fracdg" / "assets"

SIDE_MAPS = {
    "single_vertical": {"top": "dirichlet", "bottom": "dirichlet", "left": "neumann", "right": "neumann"},
    "single_slanted": {"top": "dirichlet", "bottom": "dirichlet", "left": "neumann", "right": "neumann"},
    "regular_network": {"left": "neumann", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
    "complex_network": {"top": "dirichlet", "bottom": "dirichlet", "left": "neumann", "right": "neumann"},
    "realistic_network": {"left": "dirichlet", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
}

BLOCKING_VARIANTS = {
    "single_vertical": 1e-8,
    "single_slanted": 1e-8,
    "regular_network": 1e-4,
    "realistic_network": 1e-18,
}


def build_asset(name):
    verts, cells, segments, lo, hi, target = GEOMETRIES[name]()
    verts, cells = refine_to_count(verts, cells, target)
    mesh = Mesh(
        np.asarray(verts),
        np.asarray(cells),
        segments=segments,
        boundary_class=_side_classifier(SIDE_MAPS[name], lo=lo, hi=hi),
    )
    assert mesh.n_cells == target, (name, mesh.n_cells, target)
    (ASSETS / "meshes").mkdir(parents=True, exist_ok=True)
    (ASSETS / "fractures").mkdir(parents=True, exist_ok=True)
    (ASSETS / "meshes" / f"{name}.msh").write_text(export_gmsh(mesh))
    (ASSETS / "fractures" / f"{name}.csv").write_text(write_fracture_csv(segments))
    kb = BLOCKING_VARIANTS.get(name)
    if kb is not None:
        flipped = [
            FractureSegmentSpec(s.x1, s.y1, s.x2, s.y2, "blocking", s.aperture, kb)
            for s in segments
        ]
        (ASSETS / "fractures" / f"{name}_blocking.csv").write_text(
            write_fracture_csv(flipped)
        )
    kinds = [v.kind for v in mesh.fracture_vertices]
    print(
        f"{name}: {mesh.n_cells} cells, {mesh.n_vertices} vertices, "
        f"{np.count_nonzero(mesh.edge_class == 4)} fracture edges, "
        f"{np.count_nonzero(mesh.edge_class == 3)} barrier edges, "
        f"vertices: {kinds.count('interior')}i/{kinds.count('dirichlet')}d/"
        f"{kinds.count('neumann')}n/{kinds.count('tip')}t"
    )


if __name__ == "__main__":
    for name in GEOMETRIES:
        build_asset(name)
