import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracdg.basis import (
    MODE0_VALUE,
    DGField,
    ReferenceElement,
    eval_mode_grads,
    eval_modes,
    l2_norms,
    project,
    triangle_quadrature,
)
from fracdg.mesh import FractureSegmentSpec, generate_structured

from oracles import MonomialBasis


def exact_monomial_integral(a, b):
    # over the triangle (-1,-1), (1,-1), (-1,1): exact rational arithmetic
    from fractions import Fraction
    from math import comb, factorial

    total = Fraction(0)
    for i in range(a + 1):
        for j in range(b + 1):
            c = comb(a, i) * comb(b, j) * 2 ** (i + j) * (-1) ** (a - i + b - j)
            total += Fraction(c * 4 * factorial(i) * factorial(j), factorial(i + j + 2))
    return float(total)


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_quadrature_exactness(k):
    ref = ReferenceElement(k)
    deg = 2 * k + 1
    for a in range(deg + 1):
        for b in range(deg + 1 - a):
            got = np.sum(ref.cell_weights * ref.cell_points[:, 0] ** a * ref.cell_points[:, 1] ** b)
            want = exact_monomial_integral(a, b)
            assert got == pytest.approx(want, rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_edge_quadrature_exactness(k):
    ref = ReferenceElement(k)
    for d in range(2 * k + 2):
        got = np.sum(ref.edge_weights_1d * ref.edge_points_1d**d)
        want = (1 - (-1) ** (d + 1)) / (d + 1)
        assert got == pytest.approx(want, rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_orthonormality(k):
    ref = ReferenceElement(k)
    M = np.einsum("q,mq,nq->mn", ref.cell_weights, ref.cell_basis, ref.cell_basis)
    assert np.abs(M - np.eye(ref.n_modes)).max() < 1e-13


def test_mode0_is_constant():
    pts = np.array([[-0.9, -0.9], [0.2, -0.5], [-1.0, 1.0]])
    vals = eval_modes(3, pts)
    assert np.allclose(vals[0], MODE0_VALUE)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-1, 0.4, 20), rng.uniform(-1, 0.4, 20)])
    g = eval_mode_grads(4, pts)
    h = 1e-6
    for d in range(2):
        e = np.zeros(2)
        e[d] = h
        fd = (eval_modes(4, pts + e) - eval_modes(4, pts - e)) / (2 * h)
        assert np.abs(fd - g[..., d]).max() < 1e-7


def test_constant_field_eval_and_grad():
    mesh = generate_structured(4)
    ref = ReferenceElement(2)
    field = project(mesh, ref, 3.0)
    pts = mesh.geom.centroid[:5]
    assert np.allclose(field.eval(np.arange(5), pts), 3.0, atol=1e-13)
    assert np.abs(field.eval_grad(np.arange(5), pts)).max() < 1e-12


def test_p1_reproduces_linears():
    mesh = generate_structured(3)
    ref = ReferenceElement(1)
    field = project(mesh, ref, lambda x, y: x + 2 * y)
    g = field.eval_grad(np.arange(mesh.n_cells), mesh.geom.centroid)
    assert np.allclose(g, [1.0, 2.0], atol=1e-12)


def test_eval_matches_monomial_expansion():
    # independent route: monomial coefficients of each mode, evaluated directly
    mesh = generate_structured(2)
    ref = ReferenceElement(2)
    rng = np.random.default_rng(7)
    field = DGField(mesh, 2, rng.normal(size=(mesh.n_cells, ref.n_modes)))
    mono = MonomialBasis(2)
    cells = np.repeat(np.arange(mesh.n_cells), ref.n_cell_quad)
    pts = mesh.geom.to_physical(
        np.arange(mesh.n_cells)[:, None], ref.cell_points[None, :, :]
    ).reshape(-1, 2)
    ours = field.eval(cells, pts)
    refc = mesh.geom.to_reference(cells, pts)
    vals = mono.eval(refc[:, 0], refc[:, 1])
    theirs = np.einsum("cm,mc->c", field.coeffs[cells], vals)
    assert np.abs(ours - theirs).max() < 1e-13


def test_eval_outside_cell_raises():
    mesh = generate_structured(2)
    ref = ReferenceElement(1)
    field = project(mesh, ref, 1.0)
    with pytest.raises(ValueError):
        field.eval(np.array([0]), np.array([[0.9, 0.9]]))


class TestTangentialDerivative:
    def setup_method(self):
        self.frac = FractureSegmentSpec(0.5, 0.0, 0.5, 1.0, "conductive", 1e-4, 1e4)
        self.mesh = generate_structured(8, [self.frac])
        self.ref = ReferenceElement(2)
        from fracdg.mesh import EdgeClass

        self.edge = int(self.mesh.edges_of_class(EdgeClass.FRACTURE)[0])

    def test_linear_field_both_sides(self):
        field = project(self.mesh, self.ref, lambda x, y: x + y)
        t = np.array([-0.3, 0.0, 0.7])
        for side in ("-", "+"):
            # vertical fracture, nu_2 = (0, 1): derivative of x + y along it is 1
            vals = field.tangential_derivative(self.edge, side, t)
            assert np.allclose(vals, 1.0, atol=1e-12)

    def test_constant_field(self):
        field = project(self.mesh, self.ref, 4.2)
        assert np.abs(field.tangential_derivative(self.edge, "-", [0.1])).max() < 1e-12

    def test_matches_finite_difference_of_trace(self):
        rng = np.random.default_rng(1)
        field = DGField(self.mesh, 2, rng.normal(size=(self.mesh.n_cells, self.ref.n_modes)))
        mesh = self.mesh
        e = self.edge
        length = mesh.edge_length[e]
        step = 1e-5  # relative to the edge parameter; physical step h*|e|/2
        t0 = 0.2
        cm, cp = mesh.minus_plus_cells(e)
        v0 = mesh.vertices[mesh.edges[e, 0]]
        v1 = mesh.vertices[mesh.edges[e, 1]]

        def trace(cell, t):
            pt = 0.5 * (v0 + v1) + 0.5 * t * (v1 - v0)
            return float(field.eval(np.array([cell]), pt[None, :])[0])

        for side, cell in (("-", cm), ("+", cp)):
            # orientation: edge params run along v0->v1; nu_2 may be opposite
            tang = mesh.edge_tangent[e]
            sign = np.sign((v1 - v0) @ tang)
            fd = sign * (trace(cell, t0 + step) - trace(cell, t0 - step)) / (step * length)
            got = float(field.tangential_derivative(e, side, [t0])[0])
            assert got == pytest.approx(fd, abs=1e-7 * max(1, abs(fd)))

    def test_missing_side_label(self):
        field = project(self.mesh, self.ref, 0.0)
        with pytest.raises(ValueError):
            field.tangential_derivative(0, "-", [0.0])  # edge 0 is not on a fracture


def test_projection_modes_of_constant():
    mesh = generate_structured(3)
    ref = ReferenceElement(3)
    field = project(mesh, ref, 1.0)
    assert np.allclose(field.coeffs[:, 0], 1.0 / MODE0_VALUE)
    assert np.abs(field.coeffs[:, 1:]).max() < 1e-14


def test_projection_convergence_ratio():
    f = lambda x, y: np.sin(x) * np.sin(y)  # noqa: E731
    errs = []
    for n in (16, 32):
        mesh = generate_structured(n)
        ref = ReferenceElement(1)
        field = project(mesh, ref, f)
        l2, _ = l2_norms(field, ref, f)
        errs.append(l2)
    ratio = errs[0] / errs[1]
    assert ratio == pytest.approx(4.0, rel=0.1)


def test_norm_of_field_minus_itself():
    mesh = generate_structured(4)
    ref = ReferenceElement(2)
    field = project(mesh, ref, lambda x, y: x * y + y**2)
    vals, grads = l2_norms(field, ref)
    diff = DGField(mesh, 2, field.coeffs - field.coeffs)
    z1, z2 = l2_norms(diff, ref)
    assert z1 == 0.0 and z2 == 0.0


def test_trace_consistency_eval_vs_tabulation():
    from fracdg.assemble import AssemblyContext

    mesh = generate_structured(3)
    ref = ReferenceElement(2)
    ctx = AssemblyContext(mesh, ref)
    rng = np.random.default_rng(4)
    field = DGField(mesh, 2, rng.normal(size=(mesh.n_cells, ref.n_modes)))
    for e in range(0, mesh.n_edges, 5):
        c = mesh.edge_cells[e, 0]
        pts = ctx.xq_edge[e]
        direct = field.eval(np.full(len(pts), c), pts)
        tab = field.coeffs[c] @ ctx.phi_edge[0][e]
        assert np.allclose(direct, tab, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(min_value=1, max_value=4),
    st.floats(min_value=-0.95, max_value=0.9),
    st.floats(min_value=-0.95, max_value=0.9),
)
def test_partition_of_unity_scaled(k, xi, eta):
    # the constant 1 is exactly representable: sum of mode-0 expansion
    if xi + eta > 0.9:
        eta = -0.95
    vals = eval_modes(k, np.array([[xi, eta]]))
    recon = vals[0, 0] / MODE0_VALUE
    assert recon == pytest.approx(1.0, abs=1e-12)
