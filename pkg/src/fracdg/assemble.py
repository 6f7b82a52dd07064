"""Interior-penalty DG assembly for the fractured-Darcy interface model.

Builds the sparse operator and load vector of the scheme

    bulk volume terms
  + standard IPDG face terms on interior, Dirichlet and fracture edges
    (consistency flux, sigma-transpose, penalty alpha0 k^2 / h_e)
  + Robin-type jump coupling (k_b/a) on barrier edges, with no consistency
    flux and no alpha penalty there
  + the along-fracture 1-D terms: one-sided tangential stiffness on each
    side of every fracture edge, and vertex consistency / transpose /
    penalty couplings at interior and Dirichlet fracture vertices.

The same weighted core also serves the two-phase pressure operator and the
wetting-flux functional; mobility weights default to one.

Edge sign conventions: the stored edge normal points out of the first
incident cell; jump and average operators are expanded so that all emitted
terms are independent of which cell comes first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .basis import (
    DGField,
    ReferenceElement,
    _eval_coeff,
    _eval_vec_coeff,
    cell_centroid_args,
    eval_mode_grads,
    eval_modes,
)
from .mesh import EdgeClass, Mesh
from .problem import ProblemSpec, km_values


@dataclass
class SparseSystem:
    """Assembled operator: CSR matrix, load vector, symmetry flag."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    symmetric: bool
    n_cells: int
    n_modes: int

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


class AssemblyContext:
    """Geometry/basis tabulations reused across assemblies on one mesh.

    Computing these once makes repeated (mobility-weighted) assemblies cheap,
    which the IMPES loop relies on.
    """

    def __init__(self, mesh: Mesh, ref: ReferenceElement):
        self.mesh = mesh
        self.ref = ref
        nm, nq = ref.n_modes, ref.n_cell_quad
        nc, ne = mesh.n_cells, mesh.n_edges
        geom = mesh.geom

        cells = np.arange(nc)
        self.xq_cell = geom.to_physical(cells[:, None], ref.cell_points[None, :, :])
        self.wdet = ref.cell_weights[None, :] * geom.detj[:, None]  # (nc, nq)
        # physical gradients: (nc, nm, nq, 2)
        self.grad_cell = np.einsum(
            "cba,mqb->cmqa", geom.invjac, ref.cell_basis_grad
        )
        self.phi_cell = ref.cell_basis  # (nm, nq)

        # --- edge tabulations ------------------------------------------------
        t1d = ref.edge_points_1d
        v0 = mesh.vertices[mesh.edges[:, 0]]
        v1 = mesh.vertices[mesh.edges[:, 1]]
        mid = 0.5 * (v0 + v1)
        half = 0.5 * (v1 - v0)
        self.xq_edge = mid[:, None, :] + t1d[None, :, None] * half[:, None, :]
        self.w_edge = 0.5 * mesh.edge_length[:, None] * ref.edge_weights_1d[None, :]
        self.nqe = len(t1d)

        self.side_cells = np.stack(
            [mesh.edge_cells[:, 0], np.maximum(mesh.edge_cells[:, 1], 0)]
        )  # (2, ne); boundary side 1 aliases side 0 and is masked by callers
        self.phi_edge = np.empty((2, ne, nm, self.nqe))
        self.grad_edge = np.empty((2, ne, nm, self.nqe, 2))
        for s in range(2):
            cs = self.side_cells[s]
            refpts = geom.to_reference(cs[:, None], self.xq_edge)
            flat = refpts.reshape(-1, 2)
            vals = eval_modes(ref.degree, flat).reshape(nm, ne, self.nqe)
            grads = eval_mode_grads(ref.degree, flat).reshape(nm, ne, self.nqe, 2)
            self.phi_edge[s] = np.transpose(vals, (1, 0, 2))
            gphys = np.einsum("eba,meqb->emqa", geom.invjac[cs], grads)
            self.grad_edge[s] = gphys

        self._km_src = object()  # sentinel: tables not built yet

        # --- fracture vertex tabulations -------------------------------------
        # per record: basis values and tangential-derivative rows at the vertex
        self.vertex_tabs = []
        for fv in mesh.fracture_vertices:
            if fv.kind == "interior":
                cells4 = (*fv.cells_minus, *fv.cells_plus)  # T1m, T2m, T1p, T2p
                tangents = (*fv.tangents, *fv.tangents)
            elif fv.kind == "dirichlet":
                cells4 = (fv.cells_minus[0], fv.cells_plus[0])
                tangents = (fv.tangents[0], fv.tangents[0])
            else:
                self.vertex_tabs.append(None)
                continue
            pt = mesh.vertices[fv.vertex]
            vals, ders = [], []
            for c, nu in zip(cells4, tangents):
                rp = geom.to_reference(np.array([c]), pt[None, :])
                v = eval_modes(ref.degree, rp)[:, 0]
                g = eval_mode_grads(ref.degree, rp)[:, 0, :]
                gphys = np.einsum("ba,mb->ma", geom.invjac[c], g)
                vals.append(v)
                ders.append(gphys @ nu)
            self.vertex_tabs.append((cells4, vals, ders))

        # stacked variants for vectorized per-stage evaluation
        def stack(kind, width):
            recs = [
                (i, t)
                for i, (fv, t) in enumerate(zip(mesh.fracture_vertices, self.vertex_tabs))
                if t is not None and fv.kind == kind
            ]
            idx = np.array([i for i, _ in recs], dtype=np.int64)
            cells = np.array([t[0] for _, t in recs], dtype=np.int64).reshape(-1, width)
            vals = np.array([t[1] for _, t in recs]).reshape(-1, width, nm)
            ders = np.array([t[2] for _, t in recs]).reshape(-1, width, nm)
            return idx, cells, vals, ders

        self.vint_idx, self.vint_cells, self.vint_vals, self.vint_ders = stack("interior", 4)
        self.vdir_idx, self.vdir_cells, self.vdir_vals, self.vdir_ders = stack("dirichlet", 2)
        fvs = mesh.fracture_vertices
        self.vint_akf = np.zeros(len(self.vint_idx))
        self.vint_atil_h = np.array([fvs[i].h_star for i in self.vint_idx])
        self.vint_frac = np.array([fvs[i].frac for i in self.vint_idx], dtype=np.int64)
        self.vdir_frac = np.array([fvs[i].frac for i in self.vdir_idx], dtype=np.int64)
        self.vdir_atil_h = np.array([fvs[i].h_star for i in self.vdir_idx])
        self.vdir_sign = np.array([fvs[i].sign for i in self.vdir_idx], dtype=float)
        self.vdir_points = (
            mesh.vertices[[fvs[i].vertex for i in self.vdir_idx]]
            if len(self.vdir_idx)
            else np.zeros((0, 2))
        )


def _km_tables(ctx: "AssemblyContext", km):
    """Cache permeability-dependent tabulations; km is time-independent."""
    if ctx._km_src is not km:
        mesh, ref = ctx.mesh, ctx.ref
        geom = mesh.geom
        ctx.K_cell = km_values(
            km,
            ctx.xq_cell[..., 0],
            ctx.xq_cell[..., 1],
            geom.centroid[:, None, 0],
            geom.centroid[:, None, 1],
        )
        ctx.flux_cell = np.einsum("cqab,cmqb->cmqa", ctx.K_cell, ctx.grad_cell)
        ne = mesh.n_edges
        ctx.K_edge = np.empty((2, ne, ctx.nqe, 2, 2))
        ctx.fluxn_edge = np.empty((2, ne, ref.n_modes, ctx.nqe))
        for s in (0, 1):
            cs = ctx.side_cells[s]
            K = km_values(
                km,
                ctx.xq_edge[..., 0],
                ctx.xq_edge[..., 1],
                geom.centroid[cs][:, None, 0],
                geom.centroid[cs][:, None, 1],
            )
            ctx.K_edge[s] = K
            ctx.fluxn_edge[s] = np.einsum(
                "eqab,emqb,ea->emq", K, ctx.grad_edge[s], mesh.edge_normal
            )
        ctx._km_src = km
    return ctx


class _COO:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add(self, rows, cols, vals):
        self.rows.append(np.asarray(rows).ravel())
        self.cols.append(np.asarray(cols).ravel())
        self.vals.append(np.asarray(vals).ravel())

    def matrix(self, n: int) -> sp.csr_matrix:
        if not self.rows:
            return sp.csr_matrix((n, n))
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        vals = np.concatenate(self.vals)
        return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def _dofs(cells: np.ndarray, nm: int) -> np.ndarray:
    """Global dof indices (..., nm) for the given cells."""
    return np.asarray(cells)[..., None] * nm + np.arange(nm)


def _block_dofs(rc, cc, nm):
    rows = np.broadcast_to(_dofs(rc, nm)[:, :, None], (len(rc), nm, nm))
    cols = np.broadcast_to(_dofs(cc, nm)[:, None, :], (len(cc), nm, nm))
    return rows, cols


@dataclass
class MobilityData:
    """Mobility samples used to weight an assembly (two-phase pressure/flux).

    lam_edge carries the trace value per edge side; on Dirichlet edges side 0
    already holds the boundary value (inflow data or outflow trace rule).
    lam_vertex maps a fracture-vertex record index to per-cell values at the
    vertex, ordered like the context tabulation.
    """

    lam_cell: np.ndarray                 # (nc, nq)
    lam_edge: np.ndarray                 # (ne, 2, nqe)
    lam_vertex: dict[int, tuple]


def build_system(
    spec: ProblemSpec,
    mesh: Mesh,
    ref: ReferenceElement,
    ctx: Optional[AssemblyContext] = None,
    mobility: Optional[MobilityData] = None,
    include_rhs: bool = True,
    q_override=None,
    qf_override=None,
    g_n_override=None,
) -> SparseSystem:
    """Assemble the full IPDG system for the given problem."""
    ctx = ctx or AssemblyContext(mesh, ref)
    nm = ref.n_modes
    n = mesh.n_cells * nm
    k2 = max(ref.degree, 1) ** 2
    sigma = spec.sigma
    coo = _COO()
    rhs = np.zeros(n)
    geom = mesh.geom

    lam_cell = mobility.lam_cell if mobility else 1.0
    lam_edge = mobility.lam_edge if mobility else None

    def edge_lam(sel, side):
        if lam_edge is None:
            return 1.0
        return lam_edge[sel, side, :]

    # --- bulk ---------------------------------------------------------------
    _km_tables(ctx, spec.km)
    w = ctx.wdet * lam_cell
    S = np.einsum("cq,ciqa,cjqa->cij", w, ctx.grad_cell, ctx.flux_cell)
    rows, cols = _block_dofs(np.arange(mesh.n_cells), np.arange(mesh.n_cells), nm)
    coo.add(rows, cols, S)

    if include_rhs:
        qsrc = spec.q if q_override is None else q_override
        qv = _eval_coeff(qsrc, ctx.xq_cell[..., 0], ctx.xq_cell[..., 1], *cell_centroid_args(geom.centroid))
        rhs += np.einsum("cq,iq->ci", ctx.wdet * qv, ctx.phi_cell).ravel()

    # --- two-sided standard face terms on interior and fracture edges --------
    interior_like = np.nonzero(
        (mesh.edge_class == EdgeClass.INTERIOR)
        | (mesh.edge_class == EdgeClass.FRACTURE)
    )[0]
    if len(interior_like):
        _standard_faces_two_sided(
            spec, mesh, ref, ctx, coo, interior_like, sigma, k2, edge_lam
        )

    # --- Dirichlet faces ------------------------------------------------------
    dir_edges = mesh.edges_of_class(EdgeClass.DIRICHLET)
    if len(dir_edges):
        _dirichlet_faces(
            spec, mesh, ref, ctx, coo, rhs, dir_edges, sigma, k2, edge_lam, include_rhs
        )

    # --- Neumann faces (data only) --------------------------------------------
    if include_rhs:
        neu = mesh.edges_of_class(EdgeClass.NEUMANN)
        if len(neu):
            gn = spec.g_n if g_n_override is None else g_n_override
            if isinstance(gn, np.ndarray):
                gv = gn  # precomputed values at the Neumann quad points
            else:
                gv = _eval_coeff(
                    gn,
                    ctx.xq_edge[neu, :, 0],
                    ctx.xq_edge[neu, :, 1],
                    *cell_centroid_args(geom.centroid[ctx.side_cells[0, neu]]),
                )
            load = np.einsum("eq,emq->em", ctx.w_edge[neu] * gv, ctx.phi_edge[0][neu])
            np.add.at(rhs, _dofs(ctx.side_cells[0, neu], nm), load)

    # --- barrier coupling ------------------------------------------------------
    bar = mesh.edges_of_class(EdgeClass.BARRIER)
    if len(bar):
        _barrier_faces(spec, mesh, ctx, coo, bar, edge_lam)

    # --- fracture 1-D terms -----------------------------------------------------
    frac_edges = mesh.edges_of_class(EdgeClass.FRACTURE)
    if len(frac_edges):
        qf = spec.qf if qf_override is None else qf_override
        _fracture_edges(spec, mesh, ctx, coo, rhs, frac_edges, edge_lam, include_rhs, qf)
    _fracture_vertices(spec, mesh, ref, ctx, coo, rhs, k2, mobility, include_rhs)

    matrix = coo.matrix(n)
    return SparseSystem(matrix, rhs, spec.symmetric, mesh.n_cells, nm)


def _side_K_flux(spec, mesh, ctx, sel, side):
    """(K grad phi) . n0 from one side of the selected edges; (ne, nm, nqe)."""
    _km_tables(ctx, spec.km)
    return ctx.fluxn_edge[side][sel]


def _standard_faces_two_sided(spec, mesh, ref, ctx, coo, sel, sigma, k2, edge_lam):
    nm = ref.n_modes
    w = ctx.w_edge[sel]
    alpha = spec.alpha0 * k2 / mesh.edge_length[sel]
    phi = [ctx.phi_edge[s][sel] for s in (0, 1)]
    fluxn = [_side_K_flux(spec, mesh, ctx, sel, s) for s in (0, 1)]
    lam = [edge_lam(sel, s) for s in (0, 1)]
    lam_avg = 0.5 * (np.asarray(lam[0]) + np.asarray(lam[1]))
    cells = [ctx.side_cells[0, sel], ctx.side_cells[1, sel]]
    sgn = [1.0, -1.0]
    for t in (0, 1):
        for s in (0, 1):
            wl_s = w * lam[s] if np.ndim(lam[s]) else w * lam[s]
            block = (
                -0.5 * sgn[t] * np.einsum("eq,ejq,eiq->eij", wl_s, fluxn[s], phi[t])
                + 0.5 * sigma * sgn[s] * np.einsum("eq,eiq,ejq->eij", w * lam[t], fluxn[t], phi[s])
                + sgn[t] * sgn[s] * np.einsum(
                    "eq,eiq,ejq->eij", w * alpha[:, None] * lam_avg, phi[t], phi[s]
                )
            )
            rows, cols = _block_dofs(cells[t], cells[s], nm)
            coo.add(rows, cols, block)


def _dirichlet_faces(spec, mesh, ref, ctx, coo, rhs, sel, sigma, k2, edge_lam, include_rhs):
    nm = ref.n_modes
    w = ctx.w_edge[sel]
    alpha = spec.alpha0 * k2 / mesh.edge_length[sel]
    phi = ctx.phi_edge[0][sel]
    fluxn = _side_K_flux(spec, mesh, ctx, sel, 0)
    lam = edge_lam(sel, 0)
    wl = w * lam
    block = (
        -np.einsum("eq,ejq,eiq->eij", wl, fluxn, phi)
        + sigma * np.einsum("eq,eiq,ejq->eij", wl, fluxn, phi)
        + np.einsum("eq,eiq,ejq->eij", wl * alpha[:, None], phi, phi)
    )
    cells = ctx.side_cells[0, sel]
    rows, cols = _block_dofs(cells, cells, nm)
    coo.add(rows, cols, block)
    if include_rhs:
        g = _eval_coeff(
            spec.g_d,
            ctx.xq_edge[sel, :, 0],
            ctx.xq_edge[sel, :, 1],
            *cell_centroid_args(mesh.geom.centroid[cells]),
        )
        load = sigma * np.einsum("eq,eiq->ei", wl * g, fluxn) + np.einsum(
            "eq,eiq->ei", wl * alpha[:, None] * g, phi
        )
        np.add.at(rhs, _dofs(cells, nm), load)


def _barrier_faces(spec, mesh, ctx, coo, sel, edge_lam):
    nm = ctx.ref.n_modes
    w = ctx.w_edge[sel]
    segs = [spec.segments[i] for i in mesh.edge_frac[sel]]
    coef = np.array([s.permeability / s.aperture for s in segs])
    lam_avg = 0.5 * (np.asarray(edge_lam(sel, 0)) + np.asarray(edge_lam(sel, 1)))
    wcoef = w * coef[:, None] * lam_avg
    phi = [ctx.phi_edge[s][sel] for s in (0, 1)]
    cells = [ctx.side_cells[0, sel], ctx.side_cells[1, sel]]
    sgn = [1.0, -1.0]
    for t in (0, 1):
        for s in (0, 1):
            block = sgn[t] * sgn[s] * np.einsum("eq,eiq,ejq->eij", wcoef, phi[t], phi[s])
            rows, cols = _block_dofs(cells[t], cells[s], nm)
            coo.add(rows, cols, block)


def _fracture_edges(spec, mesh, ctx, coo, rhs, sel, edge_lam, include_rhs, qf_src):
    """One-dimensional tangential stiffness and channel source on gamma_2."""
    nm = ctx.ref.n_modes
    w = ctx.w_edge[sel]
    segs = [spec.segments[i] for i in mesh.edge_frac[sel]]
    akf = np.array([s.aperture * s.permeability for s in segs])
    nu = mesh.edge_tangent[sel]
    # the two one-sided terms are label-symmetric: iterate adjacency sides
    for s in (0, 1):
        dtau = np.einsum("emqa,ea->emq", ctx.grad_edge[s][sel], nu)
        wl = 0.5 * akf[:, None] * w * np.asarray(edge_lam(sel, s))
        block = np.einsum("eq,eiq,ejq->eij", wl, dtau, dtau)
        cells = ctx.side_cells[s, sel]
        rows, cols = _block_dofs(cells, cells, nm)
        coo.add(rows, cols, block)
        if include_rhs and (not np.isscalar(qf_src) or qf_src != 0.0):
            qf = _eval_coeff(
                qf_src,
                ctx.xq_edge[sel, :, 0],
                ctx.xq_edge[sel, :, 1],
                *cell_centroid_args(mesh.geom.centroid[cells]),
            )
            load = 0.5 * np.einsum("eq,eiq->ei", w * qf, ctx.phi_edge[s][sel])
            np.add.at(rhs, _dofs(cells, nm), load)


def _fracture_vertices(spec, mesh, ref, ctx, coo, rhs, k2, mobility, include_rhs):
    """Vertex consistency, transpose and penalty terms at P* points."""
    nm = ref.n_modes
    sigma = spec.sigma
    for idx, fv in enumerate(mesh.fracture_vertices):
        tab = ctx.vertex_tabs[idx]
        if tab is None or fv.kind == "neumann":
            continue
        cells, vals, ders = tab
        seg = spec.segments[fv.frac]
        akf = seg.aperture * seg.permeability
        lam = (
            mobility.lam_vertex[idx]
            if mobility is not None
            else (1.0,) * len(cells)
        )
        atil = spec.alpha_tilde0 * k2 / fv.h_star
        if fv.kind == "interior":
            # sides: (T1m, T2m) and (T1p, T2p)
            for (ia, ib) in ((0, 1), (2, 3)):
                dofs = np.concatenate([_dofs(cells[ia], nm), _dofs(cells[ib], nm)])
                jump = np.concatenate([vals[ia], -vals[ib]])
                avg = 0.5 * np.concatenate([lam[ia] * ders[ia], lam[ib] * ders[ib]])
                lam_avg = 0.5 * (lam[ia] + lam[ib])
                block = (
                    -0.5 * akf * np.outer(jump, avg)
                    + 0.5 * sigma * akf * np.outer(avg, jump)
                    + atil * lam_avg * np.outer(jump, jump)
                )
                coo.add(*np.meshgrid(dofs, dofs, indexing="ij"), block)
        else:  # dirichlet
            pt = mesh.vertices[fv.vertex]
            for s in (0, 1):
                dofs = _dofs(cells[s], nm)
                jump = fv.sign * vals[s]
                avg = lam[s] * ders[s]
                block = (
                    -0.5 * akf * np.outer(jump, avg)
                    + 0.5 * sigma * akf * np.outer(avg, jump)
                    + atil * lam[s] * np.outer(jump, jump)
                )
                coo.add(*np.meshgrid(dofs, dofs, indexing="ij"), block)
                if include_rhs:
                    g = float(
                        _eval_coeff(
                            spec.g_d,
                            np.array([pt[0]]),
                            np.array([pt[1]]),
                            mesh.geom.centroid[cells[s], 0],
                            mesh.geom.centroid[cells[s], 1],
                        )[0]
                    )
                    rhs[dofs] += (
                        0.5 * sigma * akf * avg * fv.sign * g + atil * lam[s] * vals[s] * g
                    )


# ---------------------------------------------------------------------------
# DG norm and consistency diagnostics


def dg_norm(
    mesh: Mesh,
    ref: ReferenceElement,
    spec: ProblemSpec,
    field: Optional[DGField],
    exact=None,
    exact_grad=None,
) -> float:
    """Mesh-dependent energy norm of `field`, or of (exact - field).

    Includes the broken gradient, the alpha-weighted jumps on interior /
    Dirichlet / fracture edges, the (k_b/a)-weighted barrier jumps, both
    one-sided tangential derivatives along fractures, and the alpha-tilde
    weighted vertex jumps on both fracture sides.
    """
    ctx = AssemblyContext(mesh, ref)
    k2 = max(ref.degree, 1) ** 2
    geom = mesh.geom

    def value_side(sel, side):
        cs = ctx.side_cells[side, sel]
        v = (
            np.zeros((len(sel), ctx.nqe))
            if field is None
            else np.einsum("em,emq->eq", field.coeffs[cs], ctx.phi_edge[side][sel])
        )
        if exact is not None:
            pv = _eval_coeff(
                exact,
                ctx.xq_edge[sel, :, 0],
                ctx.xq_edge[sel, :, 1],
                *cell_centroid_args(geom.centroid[cs]),
            )
            v = pv - v
        return v

    def grad_side(sel, side):
        cs = ctx.side_cells[side, sel]
        g = (
            np.zeros((len(sel), ctx.nqe, 2))
            if field is None
            else np.einsum("em,emqa->eqa", field.coeffs[cs], ctx.grad_edge[side][sel])
        )
        if exact is not None:
            pg = _eval_vec_coeff(
                exact_grad,
                ctx.xq_edge[sel, :, 0],
                ctx.xq_edge[sel, :, 1],
                geom.centroid[cs][:, 0][:, None],
                geom.centroid[cs][:, 1][:, None],
            )
            g = pg - g
        return g

    total = 0.0
    # broken gradient
    gref = (
        np.zeros((mesh.n_cells, ctx.ref.n_cell_quad, 2))
        if field is None
        else np.einsum("cm,cmqa->cqa", field.coeffs, ctx.grad_cell)
    )
    if exact is not None:
        pg = _eval_vec_coeff(
            exact_grad,
            ctx.xq_cell[..., 0],
            ctx.xq_cell[..., 1],
            geom.centroid[:, 0][:, None],
            geom.centroid[:, 1][:, None],
        )
        gref = pg - gref
    total += np.sum(ctx.wdet * np.sum(gref**2, axis=-1))

    # alpha jumps on interior + fracture edges
    sel = np.nonzero(
        (mesh.edge_class == EdgeClass.INTERIOR)
        | (mesh.edge_class == EdgeClass.FRACTURE)
    )[0]
    if len(sel):
        alpha = spec.alpha0 * k2 / mesh.edge_length[sel]
        jump = value_side(sel, 0) - value_side(sel, 1)
        total += np.sum(ctx.w_edge[sel] * alpha[:, None] * jump**2)
    # alpha jumps on Dirichlet edges (v - nothing; for errors exact-trace diff)
    sel = mesh.edges_of_class(EdgeClass.DIRICHLET)
    if len(sel):
        alpha = spec.alpha0 * k2 / mesh.edge_length[sel]
        v = value_side(sel, 0)
        total += np.sum(ctx.w_edge[sel] * alpha[:, None] * v**2)
    # barrier jumps
    sel = mesh.edges_of_class(EdgeClass.BARRIER)
    if len(sel):
        coef = np.array(
            [spec.segments[i].permeability / spec.segments[i].aperture for i in mesh.edge_frac[sel]]
        )
        jump = value_side(sel, 0) - value_side(sel, 1)
        total += np.sum(ctx.w_edge[sel] * coef[:, None] * jump**2)
    # tangential derivatives on both fracture sides
    sel = mesh.edges_of_class(EdgeClass.FRACTURE)
    if len(sel):
        nu = mesh.edge_tangent[sel]
        for side in (0, 1):
            dtau = np.einsum("eqa,ea->eq", grad_side(sel, side), nu)
            total += np.sum(ctx.w_edge[sel] * dtau**2)
    # vertex jumps
    for idx, fv in enumerate(mesh.fracture_vertices):
        tab = ctx.vertex_tabs[idx]
        if tab is None or fv.kind == "neumann":
            continue
        cells, vals, ders = tab
        atil = spec.alpha_tilde0 * k2 / fv.h_star
        pt = mesh.vertices[fv.vertex]

        def vertex_value(slot):
            c = cells[slot]
            v = 0.0 if field is None else float(field.coeffs[c] @ vals[slot])
            if exact is not None:
                pv = float(
                    _eval_coeff(
                        exact,
                        np.array([pt[0]]),
                        np.array([pt[1]]),
                        geom.centroid[c, 0],
                        geom.centroid[c, 1],
                    )[0]
                )
                v = pv - v
            return v

        if fv.kind == "interior":
            for (ia, ib) in ((0, 1), (2, 3)):
                total += atil * (vertex_value(ia) - vertex_value(ib)) ** 2
        else:
            for s in (0, 1):
                total += atil * vertex_value(s) ** 2
    return float(np.sqrt(total))


def residual_check(exact, spec: ProblemSpec, mesh: Mesh, ref: ReferenceElement) -> float:
    """Galerkin-consistency diagnostic: max residual of the projected exact
    solution in the assembled scheme; tends to zero under refinement."""
    from .basis import project

    sys = build_system(spec, mesh, ref)
    pfield = project(mesh, ref, exact)
    r = sys.matrix @ pfield.coeffs.ravel() - sys.rhs
    return float(np.abs(r).max())
