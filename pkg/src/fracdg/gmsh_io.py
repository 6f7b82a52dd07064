"""ASCII mesh import/export (format version 2.2) and fracture CSV files.

Physical tag convention (overridable through `tag_map`):
  201      Dirichlet boundary lines
  202      Neumann boundary lines
  101 + i  barrier i
  301 + j  fracture j
Triangles carry physical tag 1.  Unclassified boundary edges default to
Dirichlet on import.
"""

from __future__ import annotations

import csv
import io
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .mesh import (
    BLOCKING,
    CONDUCTIVE,
    DUP_TOL,
    EdgeClass,
    FractureSegmentSpec,
    Mesh,
    MeshError,
)

DIRICHLET_TAG = 201
NEUMANN_TAG = 202
BARRIER_TAG_BASE = 101
FRACTURE_TAG_BASE = 301
TRIANGLE_TAG = 1


def default_tag_map(max_ids: int = 100) -> dict:
    tag_map = {DIRICHLET_TAG: (EdgeClass.DIRICHLET, -1), NEUMANN_TAG: (EdgeClass.NEUMANN, -1)}
    for i in range(max_ids):
        tag_map[BARRIER_TAG_BASE + i] = (EdgeClass.BARRIER, i)
        tag_map[FRACTURE_TAG_BASE + i] = (EdgeClass.FRACTURE, i)
    return tag_map


def import_gmsh(
    text: str,
    tag_map: Optional[dict] = None,
    segments: Sequence[FractureSegmentSpec] = (),
) -> Mesh:
    """Parse a version 2.2 ASCII mesh into a classified Mesh.

    `segments`, when given, provide the tangent orientation and fitted-cover
    check for tagged thin features; ids refer to positions in the list.
    """
    tag_map = tag_map if tag_map is not None else default_tag_map()
    sections = _split_sections(text)
    fmt = sections.get("MeshFormat", "").split()
    if not fmt or not fmt[0].startswith("2.2"):
        raise MeshError(f"unsupported mesh format {fmt[:1]}; expected 2.2 ASCII")

    node_lines = sections["Nodes"].strip().splitlines()
    n_nodes = int(node_lines[0])
    ids = np.empty(n_nodes, dtype=np.int64)
    coords = np.empty((n_nodes, 2))
    for r, line in enumerate(node_lines[1 : 1 + n_nodes]):
        parts = line.split()
        ids[r] = int(parts[0])
        coords[r] = (float(parts[1]), float(parts[2]))
    id_to_row = {int(i): r for r, i in enumerate(ids)}

    lo, hi = coords.min(axis=0), coords.max(axis=0)
    diameter = float(np.linalg.norm(hi - lo))
    tree = cKDTree(coords)
    pairs = tree.query_pairs(DUP_TOL * diameter)
    if pairs:
        a, b = sorted(pairs)[0]
        raise MeshError(f"duplicate vertices {ids[a]} and {ids[b]} within tolerance")

    elem_lines = sections["Elements"].strip().splitlines()
    n_elems = int(elem_lines[0])
    cells = []
    edge_tags: dict[tuple[int, int], tuple[EdgeClass, int]] = {}
    for line in elem_lines[1 : 1 + n_elems]:
        parts = [int(p) for p in line.split()]
        etype, ntags = parts[1], parts[2]
        tags = parts[3 : 3 + ntags]
        nodes = [id_to_row[p] for p in parts[3 + ntags :]]
        if etype == 2:
            cells.append(nodes)
        elif etype == 1:
            phys = tags[0] if tags else 0
            if phys in tag_map:
                a, b = sorted(nodes)
                edge_tags[(a, b)] = tag_map[phys]
        # other element types (points, ...) are ignored

    if not cells:
        raise MeshError("mesh contains no triangles")
    mesh = Mesh(coords, np.array(cells, dtype=np.int64), segments=list(segments), edge_tags=edge_tags)
    if segments:
        # re-derive tangents/fitted checks against the declared geometry
        _verify_tags_match_segments(mesh)
    return mesh


def _verify_tags_match_segments(mesh: Mesh):
    for i, seg in enumerate(mesh.segments):
        want = EdgeClass.FRACTURE if seg.kind == CONDUCTIVE else EdgeClass.BARRIER
        on = mesh.edge_frac == i
        if not np.any(on):
            raise MeshError(
                f"declared segment {i} has no chain of mesh edges covering it"
            )
        if np.any(mesh.edge_class[on] != want):
            raise MeshError(f"segment {i} tagged with the wrong class")
        covered = float(mesh.edge_length[on].sum())
        if abs(covered - seg.length) > 1e-8 * mesh.diameter:
            raise MeshError(
                f"declared segment {i} is not fitted: tagged edges cover "
                f"{covered:.6g} of {seg.length:.6g}"
            )


def _split_sections(text: str) -> dict:
    sections = {}
    name = None
    buf: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("$End"):
            sections[name] = "\n".join(buf)
            name, buf = None, []
        elif stripped.startswith("$"):
            name = stripped[1:]
        elif name is not None:
            buf.append(line)
    return sections


def export_gmsh(mesh: Mesh) -> str:
    """Serialize to version 2.2 ASCII; inverse of import_gmsh."""
    out = io.StringIO()
    out.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
    out.write(f"$Nodes\n{mesh.n_vertices}\n")
    for i, (x, y) in enumerate(mesh.vertices, start=1):
        out.write(f"{i} {float(x)!r} {float(y)!r} 0\n")
    out.write("$EndNodes\n")

    lines = []
    for e in range(mesh.n_edges):
        cls = EdgeClass(mesh.edge_class[e])
        if cls == EdgeClass.INTERIOR:
            continue
        if cls == EdgeClass.DIRICHLET:
            phys = DIRICHLET_TAG
        elif cls == EdgeClass.NEUMANN:
            phys = NEUMANN_TAG
        elif cls == EdgeClass.BARRIER:
            phys = BARRIER_TAG_BASE + int(mesh.edge_frac[e])
        else:
            phys = FRACTURE_TAG_BASE + int(mesh.edge_frac[e])
        lines.append((phys, mesh.edges[e, 0] + 1, mesh.edges[e, 1] + 1))

    n_elem = len(lines) + mesh.n_cells
    out.write(f"$Elements\n{n_elem}\n")
    eid = 1
    for phys, a, b in lines:
        out.write(f"{eid} 1 2 {phys} {phys} {a} {b}\n")
        eid += 1
    for c in mesh.cells:
        out.write(f"{eid} 2 2 {TRIANGLE_TAG} {TRIANGLE_TAG} {c[0]+1} {c[1]+1} {c[2]+1}\n")
        eid += 1
    out.write("$EndElements\n")
    return out.getvalue()


def read_fracture_csv(text: str) -> list[FractureSegmentSpec]:
    """Parse `x1,y1,x2,y2,kind,aperture,permeability` rows (header optional)."""
    segments = []
    reader = csv.reader(io.StringIO(text))
    for row in reader:
        if not row or row[0].strip().startswith("#"):
            continue
        if row[0].strip().lower() in ("x1", "x"):
            continue  # header
        x1, y1, x2, y2 = (float(v) for v in row[:4])
        kind = row[4].strip().lower()
        if kind not in (CONDUCTIVE, BLOCKING):
            raise ValueError(f"unknown fracture kind {kind!r}")
        segments.append(
            FractureSegmentSpec(
                x1, y1, x2, y2, kind, float(row[5]), float(row[6])
            )
        )
    return segments


def write_fracture_csv(segments: Sequence[FractureSegmentSpec]) -> str:
    out = io.StringIO()
    out.write("x1,y1,x2,y2,kind,aperture,permeability\n")
    for s in segments:
        out.write(
            f"{s.x1!r},{s.y1!r},{s.x2!r},{s.y2!r},{s.kind},{s.aperture!r},{s.permeability!r}\n"
        )
    return out.getvalue()
