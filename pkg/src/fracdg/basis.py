"""Orthonormal modal basis on the reference triangle, quadrature, DG fields.

The reference triangle has vertices (-1,-1), (1,-1), (-1,1).  Basis functions
are products of Jacobi polynomials in collapsed coordinates, normalized so
that the mass matrix on the reference triangle is the identity.  Mode 0 is
the constant 1/sqrt(2), so the cell average of a field equals coefficient 0
divided by sqrt(2).

Physical basis functions are the reference ones composed with the inverse
affine map, *without* Jacobian scaling; the local physical mass matrix is
then (|T|/2) * I, which keeps cell averages readable straight off the
coefficient array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_jacobi, roots_jacobi

MAX_DEGREE = 4

#: value of mode 0, i.e. cell_average = coeffs[:, 0] * MODE0_VALUE
MODE0_VALUE = 1.0 / np.sqrt(2.0)


def n_modes(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


def mode_pairs(degree: int) -> list[tuple[int, int]]:
    """(i, j) index pairs ordered by total degree; mode 0 is the constant."""
    return [(i, d - i) for d in range(degree + 1) for i in range(d + 1)]


def _jacobi_deriv(n: int, a: float, b: float, x: np.ndarray) -> np.ndarray:
    if n == 0:
        return np.zeros_like(x)
    return 0.5 * (n + a + b + 1) * eval_jacobi(n - 1, a + 1, b + 1, x)


def _principal_functions(imax: int, xi: np.ndarray, eta: np.ndarray):
    """Singularity-free evaluation of ((1-eta)/2)^i * P_i(a) and its partials.

    a = 2(1+xi)/(1-eta) - 1 collapses at eta=1; multiplying the three-term
    Legendre recurrence by ((1-eta)/2)^i yields a polynomial recurrence in
    mu = (2 xi + eta + 1)/2 and nu = (1-eta)/2 that is well defined
    everywhere, including the top vertex.
    """
    mu = 0.5 * (2.0 * xi + eta + 1.0)
    nu = 0.5 * (1.0 - eta)
    shape = np.broadcast(mu, nu).shape
    g = np.zeros((imax + 1,) + shape)
    gx = np.zeros_like(g)
    gy = np.zeros_like(g)
    g[0] = 1.0
    if imax >= 1:
        g[1] = mu
        gx[1] = 1.0
        gy[1] = 0.5
    nu2 = nu * nu
    for n in range(1, imax):
        c1, c2 = (2 * n + 1) / (n + 1), n / (n + 1)
        g[n + 1] = c1 * mu * g[n] - c2 * nu2 * g[n - 1]
        gx[n + 1] = c1 * (mu * gx[n] + g[n]) - c2 * nu2 * gx[n - 1]
        gy[n + 1] = c1 * (mu * gy[n] + 0.5 * g[n]) - c2 * (nu2 * gy[n - 1] - nu * g[n - 1])
    return g, gx, gy


def eval_modes(degree: int, points: np.ndarray) -> np.ndarray:
    """Values of all modes at reference points; shape (n_modes, n_points...)."""
    pts = np.asarray(points, dtype=float)
    xi, eta = pts[..., 0], pts[..., 1]
    pairs = mode_pairs(degree)
    imax = max(i for i, _ in pairs)
    g, _, _ = _principal_functions(imax, xi, eta)
    out = np.empty((len(pairs),) + xi.shape)
    for m, (i, j) in enumerate(pairs):
        norm = np.sqrt((2 * i + 1) * (i + j + 1) / 2.0)
        out[m] = norm * g[i] * eval_jacobi(j, 2 * i + 1, 0, eta)
    return out


def eval_mode_grads(degree: int, points: np.ndarray) -> np.ndarray:
    """Reference gradients of all modes; shape (n_modes, n_points..., 2)."""
    pts = np.asarray(points, dtype=float)
    xi, eta = pts[..., 0], pts[..., 1]
    pairs = mode_pairs(degree)
    imax = max(i for i, _ in pairs)
    g, gx, gy = _principal_functions(imax, xi, eta)
    out = np.empty((len(pairs),) + xi.shape + (2,))
    for m, (i, j) in enumerate(pairs):
        norm = np.sqrt((2 * i + 1) * (i + j + 1) / 2.0)
        pj = eval_jacobi(j, 2 * i + 1, 0, eta)
        dpj = _jacobi_deriv(j, 2 * i + 1, 0, eta)
        out[m, ..., 0] = norm * gx[i] * pj
        out[m, ..., 1] = norm * (gy[i] * pj + g[i] * dpj)
    return out


def triangle_quadrature(n1d: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss rule on the reference triangle, exact to degree 2*n1d-1.

    Tensor product of Gauss-Legendre in the first collapsed coordinate and
    Gauss-Jacobi(1,0) in the second; the (1-b) Jacobi weight absorbs the
    Duffy factor, so the points stay strictly inside the triangle.
    """
    a, wa = leggauss(n1d)
    b, wb = roots_jacobi(n1d, 1, 0)
    A, B = np.meshgrid(a, b, indexing="ij")
    WA, WB = np.meshgrid(wa, wb, indexing="ij")
    xi = 0.5 * (1.0 + A) * (1.0 - B) - 1.0
    eta = B
    pts = np.stack([xi.ravel(), eta.ravel()], axis=-1)
    w = 0.5 * (WA * WB).ravel()
    return pts, w


def edge_quadrature(n1d: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points/weights on [-1, 1]."""
    return leggauss(n1d)


class ReferenceElement:
    """Tabulated modal basis and quadrature for one polynomial degree."""

    def __init__(self, degree: int, quad_increment: int = 0):
        if not 0 <= degree <= MAX_DEGREE:
            raise ValueError(f"degree must be in [0, {MAX_DEGREE}], got {degree}")
        self.degree = degree
        self.n_modes = n_modes(degree)
        n1d = degree + 1 + quad_increment
        self.cell_points, self.cell_weights = triangle_quadrature(n1d)
        self.n_cell_quad = len(self.cell_weights)
        self.edge_points_1d, self.edge_weights_1d = edge_quadrature(n1d)
        self.n_edge_quad = len(self.edge_weights_1d)
        # (n_modes, n_q) and (n_modes, n_q, 2)
        self.cell_basis = eval_modes(degree, self.cell_points)
        self.cell_basis_grad = eval_mode_grads(degree, self.cell_points)

    def eval(self, points: np.ndarray) -> np.ndarray:
        return eval_modes(self.degree, points)

    def eval_grad(self, points: np.ndarray) -> np.ndarray:
        return eval_mode_grads(self.degree, points)


# ---------------------------------------------------------------------------
# affine maps between the reference triangle and mesh cells


class CellGeometry:
    """Per-cell affine map data for a triangulation."""

    def __init__(self, vertices: np.ndarray, cells: np.ndarray):
        p0 = vertices[cells[:, 0]]
        p1 = vertices[cells[:, 1]]
        p2 = vertices[cells[:, 2]]
        self.origin = p0
        # columns of the map from barycentric-like coords (lam1, lam2)
        self.jac = 0.5 * np.stack([p1 - p0, p2 - p0], axis=-1)  # (n_c, 2, 2)
        self.detj = np.linalg.det(self.jac)
        if np.any(self.detj <= 0):
            bad = int(np.argmax(self.detj <= 0))
            raise ValueError(f"cell {bad} is degenerate or not counter-clockwise")
        self.invjac = np.linalg.inv(self.jac)
        self.area = 2.0 * self.detj
        self.centroid = (p0 + p1 + p2) / 3.0

    def to_physical(self, cells: np.ndarray, ref_pts: np.ndarray) -> np.ndarray:
        """Map reference points to physical space; ref_pts (..., 2)."""
        lam = 0.5 * (ref_pts + 1.0)
        return self.origin[cells] + 2.0 * np.einsum("...ab,...b->...a", self.jac[cells], lam)

    def to_reference(self, cells: np.ndarray, phys_pts: np.ndarray) -> np.ndarray:
        d = phys_pts - self.origin[cells]
        return np.einsum("...ab,...b->...a", self.invjac[cells], d) - 1.0


@dataclass
class DGField:
    """Piecewise polynomial field: one row of modal coefficients per cell."""

    mesh: "object"
    degree: int
    coeffs: np.ndarray  # (n_cells, n_modes)

    @property
    def n_cells(self) -> int:
        return self.coeffs.shape[0]

    def copy(self) -> "DGField":
        return DGField(self.mesh, self.degree, self.coeffs.copy())

    def cell_means(self) -> np.ndarray:
        return self.coeffs[:, 0] * MODE0_VALUE

    def eval(self, cells: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Evaluate at physical points lying in the given cells."""
        cells = np.atleast_1d(np.asarray(cells, dtype=int))
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ref = self.mesh.geom.to_reference(cells, pts)
        tol = 1e-8
        lam1 = 0.5 * (ref[..., 0] + 1.0)
        lam2 = 0.5 * (ref[..., 1] + 1.0)
        if np.any(lam1 < -tol) or np.any(lam2 < -tol) or np.any(lam1 + lam2 > 1 + tol):
            raise ValueError("point outside cell beyond tolerance")
        vals = eval_modes(self.degree, ref)  # (n_m, n_pts)
        return np.einsum("cm,mc->c", self.coeffs[cells], vals)

    def eval_grad(self, cells: np.ndarray, points: np.ndarray) -> np.ndarray:
        cells = np.atleast_1d(np.asarray(cells, dtype=int))
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ref = self.mesh.geom.to_reference(cells, pts)
        grads = eval_mode_grads(self.degree, ref)  # (n_m, n_pts, 2)
        gref = np.einsum("cm,mca->ca", self.coeffs[cells], grads)
        # chain rule: d/dx = invJ^T d/dxi
        return np.einsum("cba,cb->ca", self.mesh.geom.invjac[cells], gref)

    def tangential_derivative(self, edge: int, side: str, t: np.ndarray) -> np.ndarray:
        """Along-fracture derivative of the trace from one side of a fracture edge.

        `side` is '-' or '+'; `t` are edge parameters in [-1, 1].
        """
        mesh = self.mesh
        if mesh.edge_frac[edge] < 0:
            raise ValueError(f"edge {edge} carries no fracture side labels")
        if side not in ("-", "+"):
            raise ValueError("side must be '-' or '+'")
        cm, cp = mesh.minus_plus_cells(edge)
        cell = cm if side == "-" else cp
        t = np.atleast_1d(np.asarray(t, dtype=float))
        v0 = mesh.vertices[mesh.edges[edge, 0]]
        v1 = mesh.vertices[mesh.edges[edge, 1]]
        pts = 0.5 * (v0 + v1) + 0.5 * t[:, None] * (v1 - v0)
        grads = self.eval_grad(np.full(len(t), cell), pts)
        return grads @ mesh.edge_tangent[edge]


def project(mesh, ref: ReferenceElement, f) -> DGField:
    """Cell-wise L2 projection of a scalar function onto the DG space."""
    xq = mesh.geom.to_physical(
        np.arange(mesh.n_cells)[:, None], ref.cell_points[None, :, :]
    )  # (n_c, n_q, 2)
    fvals = _eval_coeff(f, xq[..., 0], xq[..., 1], *cell_centroid_args(mesh.geom.centroid))
    # reference-orthonormal basis: detJ cancels between load and mass
    coeffs = np.einsum("q,mq,cq->cm", ref.cell_weights, ref.cell_basis, fvals)
    return DGField(mesh, ref.degree, coeffs)


def l2_norms(field: DGField, ref: ReferenceElement, f=None, grad_f=None):
    """(L2, broken H1-seminorm) of field - f, or of the field when f is None."""
    mesh = field.mesh
    cells = np.arange(mesh.n_cells)
    xq = mesh.geom.to_physical(cells[:, None], ref.cell_points[None, :, :])
    vals = np.einsum("cm,mq->cq", field.coeffs, ref.cell_basis)
    gref = np.einsum("cm,mqa->cqa", field.coeffs, ref.cell_basis_grad)
    grads = np.einsum("cba,cqb->cqa", mesh.geom.invjac, gref)
    if f is not None:
        vals = _eval_coeff(f, xq[..., 0], xq[..., 1], *cell_centroid_args(mesh.geom.centroid)) - vals
    if grad_f is not None:
        grads = _eval_vec_coeff(grad_f, xq[..., 0], xq[..., 1], *cell_centroid_args(mesh.geom.centroid)) - grads
    wdet = ref.cell_weights[None, :] * mesh.geom.detj[:, None]
    l2 = np.sqrt(np.sum(wdet * vals**2))
    h1 = np.sqrt(np.sum(wdet * np.sum(grads**2, axis=-1)))
    return l2, h1


def _eval_coeff(f, x, y, cx=None, cy=None):
    """Evaluate a scalar coefficient: constant, f(x, y), or f(x, y, cx, cy).

    The 4-argument form (marked with `piecewise`) receives the owning cell's
    centroid so piecewise definitions can pick the correct branch on points
    that sit exactly on an interface.  cx/cy must broadcast against x.
    """
    if np.isscalar(f):
        return np.broadcast_to(float(f), np.shape(x)).copy()
    if getattr(f, "needs_cell", False):
        if cx is None:
            raise ValueError("coefficient requires cell centroids")
        out = np.asarray(f(x, y, cx, cy), dtype=float)
    else:
        out = np.asarray(f(x, y), dtype=float)
    return np.broadcast_to(out, np.shape(x)).copy() if out.shape != np.shape(x) else out


def _eval_vec_coeff(f, x, y, cx=None, cy=None):
    if getattr(f, "needs_cell", False):
        return np.asarray(f(x, y, cx, cy), dtype=float)
    return np.asarray(f(x, y), dtype=float)


def cell_centroid_args(centroid: np.ndarray):
    """(cx, cy) shaped (n_cells, 1) for broadcasting against (n_cells, n_q)."""
    return centroid[:, 0][:, None], centroid[:, 1][:, None]


def piecewise(fn: Callable) -> Callable:
    """Mark a callable as f(x, y, cx, cy): branch selection by cell centroid."""
    fn.needs_cell = True
    return fn
