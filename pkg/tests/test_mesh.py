import numpy as np
import pytest

from fracdg.config import asset_path
from fracdg.gmsh_io import export_gmsh, import_gmsh, read_fracture_csv, write_fracture_csv
from fracdg.mesh import (
    EdgeClass,
    FractureSegmentSpec,
    Mesh,
    MeshError,
    generate_structured,
    tensor_mesh,
)

VERTICAL = FractureSegmentSpec(0.5, 0.0, 0.5, 1.0, "conductive", 1e-4, 1e4)


def test_structured_counts_with_fracture():
    mesh = generate_structured(8, [VERTICAL])
    assert mesh.n_cells == 128
    assert len(mesh.edges_of_class(EdgeClass.FRACTURE)) == 8
    kinds = [v.kind for v in mesh.fracture_vertices]
    assert kinds.count("interior") == 7
    assert kinds.count("dirichlet") == 2  # default all-Dirichlet boundary


def test_structured_no_fracture():
    mesh = generate_structured(2)
    assert mesh.n_cells == 8
    assert len(mesh.edges_of_class(EdgeClass.BARRIER)) == 0
    assert len(mesh.edges_of_class(EdgeClass.FRACTURE)) == 0


def test_uniform_edge_lengths_on_fracture():
    mesh = generate_structured(16, [VERTICAL])
    lengths = mesh.edge_length[mesh.edges_of_class(EdgeClass.FRACTURE)]
    assert np.allclose(lengths, 1.0 / 16.0)


def test_unresolvable_fracture_rejected():
    bad = FractureSegmentSpec(0.31, 0.0, 0.31, 1.0, "conductive", 1e-4, 1e4)
    with pytest.raises(MeshError, match="not resolvable"):
        generate_structured(8, [bad])
    diag = FractureSegmentSpec(0.25, 0.25, 0.75, 0.75, "conductive", 1e-4, 1e4)
    generate_structured(8, [diag], pattern="/")  # on-pattern diagonal is fine
    with pytest.raises(MeshError, match="not resolvable"):
        generate_structured(8, [diag], pattern="\\")


def test_edge_class_partition_and_euler():
    mesh = generate_structured(8, [VERTICAL])
    counts = {cls: len(mesh.edges_of_class(cls)) for cls in EdgeClass}
    assert sum(counts.values()) == mesh.n_edges
    boundary = counts[EdgeClass.DIRICHLET] + counts[EdgeClass.NEUMANN]
    # every triangle contributes 3 edge slots; interior-type edges get two
    assert 2 * (mesh.n_edges - boundary) + boundary == 3 * mesh.n_cells


def test_side_labels_consistent_along_fracture():
    mesh = generate_structured(8, [VERTICAL])
    for e in mesh.edges_of_class(EdgeClass.FRACTURE):
        cm, cp = mesh.minus_plus_cells(e)
        assert cm != cp
        # declared tangent (0,1): rotate +90 -> (-1,0): minus side lies right
        assert mesh.geom.centroid[cm, 0] > 0.5
        assert mesh.geom.centroid[cp, 0] < 0.5
        assert np.allclose(mesh.edge_tangent[e], [0.0, 1.0])


def test_interior_vertex_h_star():
    mesh = generate_structured(8, [VERTICAL])
    for fv in mesh.fracture_vertices:
        if fv.kind != "interior":
            continue
        e1, e2 = fv.edges
        assert fv.h_star == pytest.approx(
            min(mesh.edge_length[e1], mesh.edge_length[e2])
        )
        assert len(fv.cells_minus) == 2 and len(fv.cells_plus) == 2


def test_dirichlet_vertex_signs():
    mesh = generate_structured(8, [VERTICAL])
    by_pos = {
        round(mesh.vertices[v.vertex][1], 6): v
        for v in mesh.fracture_vertices
        if v.kind == "dirichlet"
    }
    assert by_pos[0.0].sign == -1  # tangent (0,1) points inward at the bottom
    assert by_pos[1.0].sign == 1


def test_immersed_fracture_tips():
    frac = FractureSegmentSpec(0.25, 0.5, 0.75, 0.5, "conductive", 1e-4, 1e4)
    mesh = generate_structured(8, [frac])
    kinds = [v.kind for v in mesh.fracture_vertices]
    assert kinds.count("tip") == 2
    assert kinds.count("interior") == 3
    tips = [v for v in mesh.fracture_vertices if v.kind == "tip"]
    for t in tips:
        assert t.cells_minus == () and t.cells_plus == ()  # no coupling data


def test_boundary_vertex_class_follows_side_map():
    frac = FractureSegmentSpec(0.5, 0.5, 0.5, 1.0, "conductive", 1e-4, 1e4)
    mesh = generate_structured(
        8, [frac], side_map={"top": "neumann", "bottom": "neumann"}
    )
    kinds = {v.kind for v in mesh.fracture_vertices}
    assert "neumann" in kinds and "tip" in kinds
    mesh2 = generate_structured(8, [frac])
    kinds2 = [v.kind for v in mesh2.fracture_vertices]
    assert kinds2.count("dirichlet") == 1 and kinds2.count("tip") == 1


def test_barrier_priority_at_intersection():
    frac = FractureSegmentSpec(0.25, 0.5, 0.75, 0.5, "conductive", 1e-4, 1e4)
    barrier = FractureSegmentSpec(0.5, 0.25, 0.5, 0.75, "blocking", 1e-4, 1e-4)
    mesh = generate_structured(8, [frac, barrier])
    at_crossing = [
        v
        for v in mesh.fracture_vertices
        if np.allclose(mesh.vertices[v.vertex], [0.5, 0.5])
    ]
    # the shared vertex becomes two tip records: no coupling across the barrier
    assert len(at_crossing) == 2
    assert all(v.kind == "tip" for v in at_crossing)


def test_fracture_fracture_crossing_is_independent():
    f1 = FractureSegmentSpec(0.25, 0.5, 0.75, 0.5, "conductive", 1e-4, 1e4)
    f2 = FractureSegmentSpec(0.5, 0.25, 0.5, 0.75, "conductive", 1e-4, 1e4)
    mesh = generate_structured(8, [f1, f2])
    at_crossing = [
        v
        for v in mesh.fracture_vertices
        if np.allclose(mesh.vertices[v.vertex], [0.5, 0.5])
    ]
    assert sorted(v.frac for v in at_crossing) == [0, 1]
    assert all(v.kind == "interior" for v in at_crossing)


def test_branching_rejected():
    verts = np.array(
        [[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1], [1, 1], [-1, 1], [-1, -1], [1, -1]],
        dtype=float,
    )
    cells = np.array(
        [[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1], [1, 5, 2], [3, 2, 6], [4, 3, 7], [1, 4, 8]]
    )
    seg = FractureSegmentSpec(-1.0, 0.0, 1.0, 0.0, "conductive", 1e-3, 1e3)
    segv = FractureSegmentSpec(0.0, 0.0, 0.0, 1.0, "conductive", 1e-3, 1e3)
    with pytest.raises(MeshError, match="branch|overlap"):
        # vertical segment shares the origin vertex; tag both with the same id
        # by declaring one fracture covering both legs is impossible, so build
        # a true branching: three collinear-with-junction edges of one id
        bad = FractureSegmentSpec(-1.0, 0.0, 1.0, 0.0, "conductive", 1e-3, 1e3)
        up = FractureSegmentSpec(0.0, 0.0, 0.0, 1.0, "conductive", 1e-3, 1e3)
        m = Mesh(verts, cells, segments=[bad, up])
        # merge ids to force a branch within one declared fracture
        m.edge_frac[m.edge_frac == 1] = 0
        m.edge_class[m.edge_class == EdgeClass.BARRIER] = EdgeClass.FRACTURE
        from fracdg.mesh import classify_fracture_vertices

        classify_fracture_vertices(m)


def test_gmsh_roundtrip_identical():
    mesh = generate_structured(
        6,
        [FractureSegmentSpec(0.5, 0.0, 0.5, 1.0, "conductive", 1e-4, 1e4)],
        side_map={"left": "neumann"},
    )
    text = export_gmsh(mesh)
    back = import_gmsh(text, segments=mesh.segments)
    assert back.structural_hash() == mesh.structural_hash()
    assert export_gmsh(back) == text


def test_import_minimal_two_triangles():
    text = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
2
1 2 2 1 1 1 2 3
2 2 2 1 1 1 3 4
$EndElements
"""
    mesh = import_gmsh(text)
    assert mesh.n_cells == 2
    assert len(mesh.edges_of_class(EdgeClass.INTERIOR)) == 1
    assert len(mesh.edges_of_class(EdgeClass.DIRICHLET)) == 4  # untagged default


def test_import_rejects_duplicate_vertices():
    text = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 1.0000000000000002 1e-16 0
$EndNodes
$Elements
2
1 2 2 1 1 1 2 3
2 2 2 1 1 1 3 4
$EndElements
"""
    with pytest.raises(MeshError, match="duplicate"):
        import_gmsh(text)


def test_import_rejects_unfitted_segment():
    mesh = generate_structured(4)
    text = export_gmsh(mesh)
    seg = FractureSegmentSpec(0.5, 0.0, 0.5, 1.0, "conductive", 1e-4, 1e4)
    with pytest.raises(MeshError, match="covering|fitted"):
        import_gmsh(text, segments=[seg])


def test_import_rejects_wrong_version():
    with pytest.raises(MeshError, match="2.2"):
        import_gmsh("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n")


@pytest.mark.parametrize(
    "name,cells",
    [
        ("single_vertical", 450),
        ("single_slanted", 404),
        ("regular_network", 366),
        ("complex_network", 2680),
        ("realistic_network", 3611),
    ],
)
def test_shipped_mesh_assets(name, cells):
    text = asset_path(f"meshes/{name}.msh").read_text()
    segments = read_fracture_csv(asset_path(f"fractures/{name}.csv").read_text())
    mesh = import_gmsh(text, segments=segments)
    assert mesh.n_cells == cells
    assert all(s.aperture > 0 and s.permeability > 0 for s in segments)


def test_complex_network_composition():
    segments = read_fracture_csv(asset_path("fractures/complex_network.csv").read_text())
    kinds = [s.kind for s in segments]
    assert kinds.count("conductive") == 8
    assert kinds.count("blocking") == 2


def test_realistic_network_has_64_fractures():
    segments = read_fracture_csv(asset_path("fractures/realistic_network.csv").read_text())
    assert len(segments) == 64


def test_fracture_csv_roundtrip():
    segs = [
        FractureSegmentSpec(0.1, 0.2, 0.3, 0.4, "conductive", 1e-3, 1e5),
        FractureSegmentSpec(0.5, 0.5, 0.5, 0.9, "blocking", 1e-4, 1e-7),
    ]
    back = read_fracture_csv(write_fracture_csv(segs))
    assert back == segs


def test_tensor_mesh_nonuniform():
    xs = np.array([0.0, 0.25, 0.5, 1.0])
    ys = np.array([0.0, 0.5, 1.0])
    mesh = tensor_mesh(xs, ys)
    assert mesh.n_cells == 2 * 3 * 2


def test_degenerate_cell_rejected():
    verts = np.array([[0, 0], [1, 0], [2, 0], [0, 1]], dtype=float)
    cells = np.array([[0, 1, 2], [0, 2, 3]])
    with pytest.raises(MeshError, match="degenerate"):
        Mesh(verts, cells)


def test_segment_invariants():
    with pytest.raises(ValueError):
        FractureSegmentSpec(0, 0, 1, 0, "conductive", -1e-4, 1e4)
    with pytest.raises(ValueError):
        FractureSegmentSpec(0, 0, 1, 0, "conductive", 1e-4, 0.0)
    with pytest.raises(ValueError):
        FractureSegmentSpec(0, 0, 1, 0, "weird", 1e-4, 1e4)
