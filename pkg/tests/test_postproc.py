import numpy as np
import pytest

from fracdg.basis import DGField, ReferenceElement, piecewise, project
from fracdg.mesh import FractureSegmentSpec, generate_structured
from fracdg.postproc import (
    ERROR_CSV_HEADER,
    SLICE_CSV_HEADER,
    SliceRequest,
    convergence_table,
    extract_slice,
    slice_discrepancy,
    slice_to_csv,
    write_vtk,
)
from fracdg.problem import ProblemSpec


# ---------------------------------------------------------------------------
# convergence tables


def test_convergence_table_orders_self_consistent():
    report = convergence_table("fracture-5.1a", 1, [8, 16, 32])
    rows = report.rows
    assert rows[0].l2_order is None
    for prev, cur in zip(rows, rows[1:]):
        for err, order in (
            ((prev.l2, cur.l2), cur.l2_order),
            ((prev.h1, cur.h1), cur.h1_order),
            ((prev.dg, cur.dg), cur.dg_order),
        ):
            assert order == pytest.approx(np.log2(err[0] / err[1]), abs=1e-12)


def test_convergence_table_skips_orders_for_nonhalving():
    report = convergence_table("barrier-5.1b", 1, [8, 24])
    assert report.rows[1].l2_order is None


def test_error_csv_format():
    report = convergence_table("fracture-5.1a", 1, [8, 16])
    text = report.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == ERROR_CSV_HEADER
    assert len(lines) == 3
    first = lines[1].split(",")
    assert float(first[0]) == 0.125
    assert first[2] == ""  # first row order is empty


# ---------------------------------------------------------------------------
# slices


def make_field(n=8, segments=(), f=1.0, k=1):
    mesh = generate_structured(n, list(segments))
    ref = ReferenceElement(k)
    return mesh, ref, project(mesh, ref, f)


def test_slice_constant_field():
    _, _, field = make_field()
    rows = extract_slice(field, SliceRequest((0.05, 0.1), (0.9, 0.85), samples=40))
    assert len(rows) >= 41
    assert all(v == pytest.approx(1.0, abs=1e-12) for *_, v in rows)


def test_slice_of_polynomial_matches_everywhere():
    poly = lambda x, y: 2 * x - 3 * y + x * y  # noqa: E731
    _, _, field = make_field(f=poly, k=2)
    rows = extract_slice(field, SliceRequest((0.0, 0.3), (1.0, 0.8), samples=57))
    for s, x, y, side, v in rows:
        assert v == pytest.approx(poly(x, y), abs=1e-12)


def test_slice_reports_both_sides_of_barrier():
    a, kb = 1e-2, 1e-2
    bar = FractureSegmentSpec(0.5, 0.0, 0.5, 1.0, "blocking", a, kb)

    @piecewise
    def p(x, y, cx, cy):
        return np.where(np.asarray(cx) < 0.5, x, x + a / kb)

    mesh = generate_structured(4, [bar])
    ref = ReferenceElement(1)
    field = project(mesh, ref, p)
    rows = extract_slice(field, SliceRequest((0.0, 0.375), (1.0, 0.375), samples=4))
    at_barrier = [r for r in rows if r[1] == pytest.approx(0.5)]
    sides = {r[3]: r[4] for r in at_barrier}
    assert set(sides) == {"-", "+"}
    assert sides["+"] - sides["-"] == pytest.approx(a / kb, abs=1e-12)


def test_slice_outside_domain_raises():
    _, _, field = make_field()
    with pytest.raises(ValueError, match="outside"):
        extract_slice(field, SliceRequest((0.5, 0.5), (1.5, 0.5), samples=10))


def test_slice_csv_format():
    _, _, field = make_field()
    rows = extract_slice(field, SliceRequest((0.1, 0.1), (0.9, 0.9), samples=3))
    text = slice_to_csv(rows)
    assert text.splitlines()[0] == SLICE_CSV_HEADER


def test_slice_discrepancy_identical_is_zero():
    _, _, field = make_field(f=lambda x, y: x + y, k=1)
    rows = extract_slice(field, SliceRequest((0.0, 0.2), (1.0, 0.7), samples=20))
    rep = slice_discrepancy(rows, rows)
    assert rep["max_abs"] == 0.0
    assert rep["mean_abs"] == 0.0


# ---------------------------------------------------------------------------
# VTK writer, checked with an independent minimal reader


def parse_vtk(path):
    lines = iter(open(path).read().splitlines())
    assert next(lines).startswith("# vtk DataFile Version 3.0")
    next(lines)  # title
    assert next(lines) == "ASCII"
    assert next(lines) == "DATASET UNSTRUCTURED_GRID"
    header = next(lines).split()
    assert header[0] == "POINTS"
    npts = int(header[1])
    pts = np.array([[float(v) for v in next(lines).split()] for _ in range(npts)])
    header = next(lines).split()
    assert header[0] == "CELLS"
    ncells = int(header[1])
    cells = [[int(v) for v in next(lines).split()][1:] for _ in range(ncells)]
    header = next(lines).split()
    assert header[0] == "CELL_TYPES"
    types = [int(next(lines)) for _ in range(ncells)]
    data = {}
    section = None
    for line in lines:
        parts = line.split()
        if not parts:
            continue
        if parts[0] in ("CELL_DATA", "POINT_DATA"):
            section = parts[0]
            count = int(parts[1])
        elif parts[0] == "SCALARS":
            name = parts[1]
            next(lines)  # LOOKUP_TABLE
            vals = [float(next(lines)) for _ in range(count)]
            data[(section, name)] = np.array(vals)
    return pts, cells, types, data


def test_vtk_roundtrip_two_cells(tmp_path):
    mesh, ref, field = make_field(n=1, f=lambda x, y: x)
    path = tmp_path / "out.vtk"
    write_vtk(path, mesh, point_fields={"pressure": field})
    pts, cells, types, data = parse_vtk(path)
    assert len(cells) == mesh.n_cells == 2
    assert all(t == 5 for t in types)
    assert len(pts) == 3 * mesh.n_cells
    corner_vals = data[("POINT_DATA", "pressure")]
    assert np.allclose(corner_vals, pts[:, 0], atol=1e-12)  # field is x
    means = data[("CELL_DATA", "pressure_mean")]
    assert np.allclose(means, field.cell_means())


def test_vtk_cell_count_matches_mesh(tmp_path):
    mesh, ref, field = make_field(n=4)
    path = tmp_path / "out.vtk"
    write_vtk(path, mesh, cell_fields={"ids": np.arange(mesh.n_cells, dtype=float)})
    _, cells, _, data = parse_vtk(path)
    assert len(cells) == mesh.n_cells
    assert np.allclose(data[("CELL_DATA", "ids")], np.arange(mesh.n_cells))
