"""Fitted triangular meshes with classified edges and fracture vertices.

Meshes are immutable after construction.  Every thin feature (conductive
fracture or blocking barrier) must be covered by a chain of mesh edges;
construction fails otherwise.  Edge classes partition the edge set into
interior, Dirichlet, Neumann, barrier and fracture edges.  Fracture edges
additionally carry a consistent tangent direction and minus/plus side labels
for the two incident cells, and the vertices along each fracture are
classified into interior, boundary (Dirichlet/Neumann) and tip records.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Optional, Sequence

import numpy as np

from .basis import CellGeometry


class MeshError(Exception):
    """Invalid mesh topology or geometry."""


class EdgeClass(IntEnum):
    INTERIOR = 0
    DIRICHLET = 1
    NEUMANN = 2
    BARRIER = 3    # gamma_1, blocking
    FRACTURE = 4   # gamma_2, conductive


CONDUCTIVE = "conductive"
BLOCKING = "blocking"

#: relative tolerance for "edge lies on segment" tests
GEOM_TOL = 1e-10
#: relative tolerance for duplicate-vertex detection on import
DUP_TOL = 1e-12


@dataclass(frozen=True)
class FractureSegmentSpec:
    """One straight thin feature: geometry plus physical properties."""

    x1: float
    y1: float
    x2: float
    y2: float
    kind: str  # "conductive" or "blocking"
    aperture: float
    permeability: float

    def __post_init__(self):
        if self.kind not in (CONDUCTIVE, BLOCKING):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if not self.aperture > 0:
            raise ValueError("aperture must be positive")
        if not self.permeability > 0:
            raise ValueError("permeability must be positive")

    @property
    def p1(self) -> np.ndarray:
        return np.array([self.x1, self.y1])

    @property
    def p2(self) -> np.ndarray:
        return np.array([self.x2, self.y2])

    @property
    def length(self) -> float:
        return float(np.hypot(self.x2 - self.x1, self.y2 - self.y1))

    @property
    def tangent(self) -> np.ndarray:
        return (self.p2 - self.p1) / self.length


@dataclass
class FractureVertex:
    """One vertex on a fracture polyline.

    Interior vertices couple the four surrounding cells; boundary vertices
    couple the two cells of the single incident fracture edge.  Tip records
    deliberately carry no coupling data so assembly cannot emit tip terms.
    """

    vertex: int
    frac: int
    kind: str  # "interior" | "dirichlet" | "neumann" | "tip"
    edges: tuple[int, ...] = ()
    cells_minus: tuple[int, ...] = ()
    cells_plus: tuple[int, ...] = ()
    tangents: tuple = ()          # nu_2 per entry of `edges`
    h_star: float = 0.0
    sign: int = 0                 # sign(nu_2 . n) at Dirichlet vertices


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from points p (..., 2) to segment [a, b]."""
    ab = b - a
    denom = float(ab @ ab)
    t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.linalg.norm(p - proj, axis=-1)


def _rot90(v: np.ndarray) -> np.ndarray:
    """Rotate 2-vectors by +90 degrees."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


class Mesh:
    """Triangulation with classified edges and fracture-vertex records."""

    def __init__(
        self,
        vertices: np.ndarray,
        cells: np.ndarray,
        segments: Sequence[FractureSegmentSpec] = (),
        boundary_class: Optional[Callable] = None,
        edge_tags: Optional[dict] = None,
        max_aspect_ratio: float = 50.0,
        check_fitted: bool = True,
    ):
        """Build the mesh and classify its edges.

        Either classify geometrically against `segments` (with boundary edges
        classified by `boundary_class(midx, midy) -> EdgeClass`), or accept
        explicit `edge_tags` mapping a sorted vertex pair to
        (EdgeClass, frac_id), as produced by the importer.  Unclassified
        boundary edges default to Dirichlet.
        """
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.asarray(cells, dtype=np.int64)
        # enforce counter-clockwise orientation
        p0, p1, p2 = (self.vertices[cells[:, i]] for i in range(3))
        twice_area = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (
            p1[:, 1] - p0[:, 1]
        ) * (p2[:, 0] - p0[:, 0])
        if np.any(np.abs(twice_area) < 1e-30):
            raise MeshError("degenerate cell with zero area")
        flip = twice_area < 0
        cells = cells.copy()
        cells[flip, 1], cells[flip, 2] = cells[flip, 2], cells[flip, 1]
        self.cells = cells
        self.n_cells = len(cells)
        self.n_vertices = len(self.vertices)
        self.segments = list(segments)

        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        self.diameter = float(np.linalg.norm(hi - lo))
        self.geom = CellGeometry(self.vertices, self.cells)
        self._check_quality(max_aspect_ratio)
        self._build_edges()
        if edge_tags is not None:
            self._classify_from_tags(edge_tags)
        else:
            self._classify_geometric(boundary_class)
        if check_fitted:
            self._check_fitted()
        self._orient_fracture_edges()
        self.fracture_vertices: list[FractureVertex] = []
        classify_fracture_vertices(self)

    # -- construction helpers -------------------------------------------------

    def _check_quality(self, max_aspect: float):
        p0, p1, p2 = (self.vertices[self.cells[:, i]] for i in range(3))
        a = np.linalg.norm(p1 - p0, axis=1)
        b = np.linalg.norm(p2 - p1, axis=1)
        c = np.linalg.norm(p0 - p2, axis=1)
        s = 0.5 * (a + b + c)
        area = self.geom.area
        inradius = area / s
        aspect = np.maximum(a, np.maximum(b, c)) / inradius
        self.cell_diameter = np.maximum(a, np.maximum(b, c))
        if np.any(aspect > max_aspect):
            bad = int(np.argmax(aspect))
            raise MeshError(
                f"cell {bad} violates aspect-ratio bound "
                f"({aspect[bad]:.1f} > {max_aspect})"
            )

    def _build_edges(self):
        c = self.cells
        raw = np.concatenate([c[:, [0, 1]], c[:, [1, 2]], c[:, [2, 0]]])
        owner = np.tile(np.arange(self.n_cells), 3)
        key = np.sort(raw, axis=1)
        uniq, inv, counts = np.unique(
            key, axis=0, return_inverse=True, return_counts=True
        )
        if np.any(counts > 2):
            raise MeshError("edge shared by more than two cells")
        self.edges = uniq
        self.n_edges = len(uniq)
        edge_cells = np.full((self.n_edges, 2), -1, dtype=np.int64)
        # deterministic adjacency: lower cell index first
        order = np.argsort(owner, kind="stable")
        for idx in order:
            e = inv[idx]
            if edge_cells[e, 0] < 0:
                edge_cells[e, 0] = owner[idx]
            else:
                edge_cells[e, 1] = owner[idx]
        self.edge_cells = edge_cells
        v0 = self.vertices[self.edges[:, 0]]
        v1 = self.vertices[self.edges[:, 1]]
        tvec = v1 - v0
        self.edge_length = np.linalg.norm(tvec, axis=1)
        tang = tvec / self.edge_length[:, None]
        normal = np.stack([tang[:, 1], -tang[:, 0]], axis=-1)
        # orient normals out of the first incident cell
        mid = 0.5 * (v0 + v1)
        toward = mid - self.geom.centroid[edge_cells[:, 0]]
        flip = np.einsum("ea,ea->e", normal, toward) < 0
        normal[flip] *= -1.0
        self.edge_normal = normal
        self.edge_midpoint = mid
        self.edge_class = np.full(self.n_edges, EdgeClass.INTERIOR, dtype=np.int8)
        self.edge_frac = np.full(self.n_edges, -1, dtype=np.int64)
        self.edge_tangent = tang  # overwritten with nu_2 on fracture edges

    def _classify_geometric(self, boundary_class):
        tol = GEOM_TOL * self.diameter
        boundary = self.edge_cells[:, 1] < 0
        v0 = self.vertices[self.edges[:, 0]]
        v1 = self.vertices[self.edges[:, 1]]
        for i, seg in enumerate(self.segments):
            a, b = seg.p1, seg.p2
            on = (_point_segment_distance(v0, a, b) < tol) & (
                _point_segment_distance(v1, a, b) < tol
            )
            on &= ~boundary
            taken = on & (self.edge_class != EdgeClass.INTERIOR)
            if np.any(taken):
                raise MeshError(
                    f"edge lies on two declared segments (segment {i} overlaps)"
                )
            cls = EdgeClass.FRACTURE if seg.kind == CONDUCTIVE else EdgeClass.BARRIER
            self.edge_class[on] = cls
            self.edge_frac[on] = i
        if boundary_class is None:
            self.edge_class[boundary] = EdgeClass.DIRICHLET
        else:
            for e in np.nonzero(boundary)[0]:
                self.edge_class[e] = boundary_class(
                    self.edge_midpoint[e, 0], self.edge_midpoint[e, 1]
                )

    def _classify_from_tags(self, edge_tags: dict):
        lookup = {}
        for e in range(self.n_edges):
            lookup[(int(self.edges[e, 0]), int(self.edges[e, 1]))] = e
        for (a, b), (cls, frac) in edge_tags.items():
            key = (a, b) if a < b else (b, a)
            e = lookup.get(key)
            if e is None:
                raise MeshError(f"tagged line {key} is not a mesh edge")
            self.edge_class[e] = cls
            self.edge_frac[e] = frac
        boundary = self.edge_cells[:, 1] < 0
        untagged = boundary & (self.edge_class == EdgeClass.INTERIOR)
        self.edge_class[untagged] = EdgeClass.DIRICHLET
        interior_like = self.edge_class >= EdgeClass.BARRIER
        if np.any(interior_like & boundary):
            e = int(np.nonzero(interior_like & boundary)[0][0])
            raise MeshError(f"fracture/barrier edge {e} lies on the domain boundary")

    def _check_fitted(self):
        for i, seg in enumerate(self.segments):
            on = self.edge_frac == i
            covered = self.edge_length[on].sum()
            if abs(covered - seg.length) > GEOM_TOL * self.diameter * max(
                1, np.count_nonzero(on)
            ):
                raise MeshError(
                    f"segment {i} (({seg.x1},{seg.y1})-({seg.x2},{seg.y2})) is not "
                    f"fitted: mesh edges cover {covered:.6g} of {seg.length:.6g}"
                )

    def _orient_fracture_edges(self):
        """Set nu_2 and minus/plus side labels on gamma_1/gamma_2 edges.

        The minus side is the cell whose outward normal equals nu_2 rotated
        by +90 degrees.
        """
        tagged = self.edge_frac >= 0
        self.gamma2_minus_first = np.zeros(self.n_edges, dtype=bool)
        for e in np.nonzero(tagged)[0]:
            if self.edge_cells[e, 1] < 0:
                raise MeshError(f"fracture/barrier edge {e} has a single cell")
            seg = self.segments[self.edge_frac[e]] if self.segments else None
            if seg is not None:
                nu = seg.tangent
            else:
                nu = self.edge_tangent[e]
            self.edge_tangent[e] = nu
            n_minus = _rot90(nu)
            # edge_normal points out of edge_cells[e, 0]
            self.gamma2_minus_first[e] = float(self.edge_normal[e] @ n_minus) > 0.0

    # -- queries ---------------------------------------------------------------

    def edges_of_class(self, cls: EdgeClass) -> np.ndarray:
        return np.nonzero(self.edge_class == cls)[0]

    def minus_plus_cells(self, e: int) -> tuple[int, int]:
        c0, c1 = self.edge_cells[e]
        return (c0, c1) if self.gamma2_minus_first[e] else (c1, c0)

    def boundary_edges_at_vertex(self, v: int) -> list[int]:
        out = []
        for e in range(self.n_edges):
            if self.edge_cells[e, 1] < 0 and v in self.edges[e]:
                out.append(e)
        return out

    def structural_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.round(self.vertices, 12).tobytes())
        h.update(self.cells.tobytes())
        h.update(self.edge_class.tobytes())
        return h.hexdigest()


def classify_fracture_vertices(mesh: Mesh, intersection_rule: str = "barrier-priority") -> Mesh:
    """Build fracture-vertex records with the barrier-priority rule.

    At a point where a conductive fracture meets a blocking barrier the
    fracture is treated as two separate, non-communicating pieces: the shared
    vertex becomes tip records carrying no coupling data.  Immersed fracture
    endpoints become plain tips.  Vertex sets are built per fracture, so a
    crossing of two conductive fractures yields one interior record for each.
    """
    if intersection_rule != "barrier-priority":
        raise ValueError(f"unsupported intersection rule {intersection_rule!r}")
    mesh.fracture_vertices = []
    frac_ids = sorted(set(mesh.edge_frac[mesh.edge_class == EdgeClass.FRACTURE]))
    barrier_vertices = set()
    for e in np.nonzero(mesh.edge_class == EdgeClass.BARRIER)[0]:
        barrier_vertices.update(int(v) for v in mesh.edges[e])
    boundary_vertex_class: dict[int, set[int]] = {}
    boundary = np.nonzero(mesh.edge_cells[:, 1] < 0)[0]
    for e in boundary:
        for v in mesh.edges[e]:
            boundary_vertex_class.setdefault(int(v), set()).add(int(mesh.edge_class[e]))

    for f in frac_ids:
        edges_f = np.nonzero(
            (mesh.edge_frac == f) & (mesh.edge_class == EdgeClass.FRACTURE)
        )[0]
        incidence: dict[int, list[int]] = {}
        for e in edges_f:
            for v in mesh.edges[e]:
                incidence.setdefault(int(v), []).append(int(e))
        for v, inc in incidence.items():
            if len(inc) > 2:
                raise MeshError(
                    f"vertex {v}: {len(inc)} edges of fracture {f} meet "
                    "(branching within one segment is unsupported)"
                )
            if v in barrier_vertices:
                # barrier priority: fracture split here, no coupling across
                for e in inc:
                    mesh.fracture_vertices.append(
                        FractureVertex(vertex=v, frac=f, kind="tip")
                    )
                continue
            if len(inc) == 2:
                # order the two edges so nu_2 points from e1 to e2
                nu = mesh.edge_tangent[inc[0]]
                proj = [float(mesh.edge_midpoint[e] @ nu) for e in inc]
                e1, e2 = (inc[0], inc[1]) if proj[0] <= proj[1] else (inc[1], inc[0])
                t1m, t1p = mesh.minus_plus_cells(e1)
                t2m, t2p = mesh.minus_plus_cells(e2)
                mesh.fracture_vertices.append(
                    FractureVertex(
                        vertex=v,
                        frac=f,
                        kind="interior",
                        edges=(e1, e2),
                        cells_minus=(t1m, t2m),
                        cells_plus=(t1p, t2p),
                        tangents=(mesh.edge_tangent[e1].copy(), mesh.edge_tangent[e2].copy()),
                        h_star=float(
                            min(mesh.edge_length[e1], mesh.edge_length[e2])
                        ),
                    )
                )
                continue
            e = inc[0]
            bclasses = boundary_vertex_class.get(v)
            if bclasses is None:
                mesh.fracture_vertices.append(
                    FractureVertex(vertex=v, frac=f, kind="tip")
                )
                continue
            kind = (
                "dirichlet" if int(EdgeClass.DIRICHLET) in bclasses else "neumann"
            )
            tm, tp = mesh.minus_plus_cells(e)
            sign = 0
            if kind == "dirichlet":
                nsum = np.zeros(2)
                for be in mesh.boundary_edges_at_vertex(v):
                    nsum += mesh.edge_normal[be]
                d = float(mesh.edge_tangent[e] @ nsum)
                sign = 1 if d >= 0 else -1
            mesh.fracture_vertices.append(
                FractureVertex(
                    vertex=v,
                    frac=f,
                    kind=kind,
                    edges=(e,),
                    cells_minus=(tm,),
                    cells_plus=(tp,),
                    tangents=(mesh.edge_tangent[e].copy(),),
                    h_star=float(mesh.edge_length[e]),
                    sign=sign,
                )
            )
    return mesh


def _side_classifier(side_map: Optional[dict], lo=(0.0, 0.0), hi=(1.0, 1.0)):
    side_map = side_map or {}
    classes = {
        "dirichlet": EdgeClass.DIRICHLET,
        "neumann": EdgeClass.NEUMANN,
    }
    tol = 1e-12 * max(hi[0] - lo[0], hi[1] - lo[1])

    def classify(mx, my):
        if abs(mx - lo[0]) < tol:
            side = "left"
        elif abs(mx - hi[0]) < tol:
            side = "right"
        elif abs(my - lo[1]) < tol:
            side = "bottom"
        else:
            side = "top"
        return classes[side_map.get(side, "dirichlet")]

    return classify


def generate_structured(
    n: int,
    fractures: Sequence[FractureSegmentSpec] = (),
    side_map: Optional[dict] = None,
    pattern: str = "/",
) -> Mesh:
    """Uniform diagonal-split grid of the unit square with 2*n^2 cells.

    Every declared segment must lie on mesh lines: axis-aligned at a grid
    coordinate, or along the split diagonal of the chosen pattern.
    """
    if pattern not in ("/", "\\"):
        raise ValueError("pattern must be '/' or '\\'")
    h = 1.0 / n
    tol = GEOM_TOL * np.sqrt(2.0)
    for seg in fractures:
        x1, y1, x2, y2 = seg.x1, seg.y1, seg.x2, seg.y2
        on_grid_node = all(
            min(abs(c / h - round(c / h)), 1.0) * h < tol for c in (x1, y1, x2, y2)
        )
        axis_aligned = abs(x1 - x2) < tol or abs(y1 - y2) < tol
        if pattern == "/":
            diagonal = abs((y2 - y1) - (x2 - x1)) < tol
        else:
            diagonal = abs((y2 - y1) + (x2 - x1)) < tol
        if not (on_grid_node and (axis_aligned or diagonal)):
            raise MeshError(
                f"segment ({x1},{y1})-({x2},{y2}) is not resolvable by the "
                f"{n}x{n} '{pattern}' grid"
            )
    xs = np.linspace(0.0, 1.0, n + 1)
    return tensor_mesh(xs, xs, fractures, side_map, pattern)


def tensor_mesh(
    xs: np.ndarray,
    ys: np.ndarray,
    fractures: Sequence[FractureSegmentSpec] = (),
    side_map: Optional[dict] = None,
    pattern: str = "/",
) -> Mesh:
    """Diagonal-split mesh of a tensor grid with given breakpoints."""
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    nx, ny = len(xs) - 1, len(ys) - 1
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.stack([X.ravel(), Y.ravel()], axis=-1)

    def vid(i, j):
        return i * (ny + 1) + j

    cells = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            if pattern == "/":
                cells.append((v00, v10, v11))
                cells.append((v00, v11, v01))
            else:
                cells.append((v00, v10, v01))
                cells.append((v10, v11, v01))
    boundary_class = _side_classifier(
        side_map, lo=(xs[0], ys[0]), hi=(xs[-1], ys[-1])
    )
    return Mesh(vertices, np.array(cells), fractures, boundary_class)
