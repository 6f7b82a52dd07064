"""IMPES driver: implicit pressure, explicit saturation with SSP-RK3.

Each Runge-Kutta stage re-solves the mobility-weighted pressure system from
the current stage saturation, evaluates the wetting-flux functional, applies
the inverse of the block-diagonal saturation mass operator, and runs the TVB
minmod limiter followed by the bound-preserving linear scaling limiter.

The saturation mass operator pairs the bulk cell mass (porosity phi_m) with
half the aperture-weighted trace mass on each side of every fracture edge
(porosity phi_f), so it stays block-diagonal per cell.

Mass accounting: every explicit update satisfies the discrete balance
pi(ds, 1) = dt * rhs(1) exactly (up to roundoff); the limiters preserve cell
means but may shift the fracture-trace part of the mass, and mean clamps in
the bound limiter shift bulk mass.  Both corrections are tracked per step
and reported, and the residual net of the reported corrections is the
balance defect.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assemble import (
    AssemblyContext,
    MobilityData,
    SparseSystem,
    _COO,
    _block_dofs,
    _dofs,
    build_system,
)
from .basis import (
    MODE0_VALUE,
    DGField,
    ReferenceElement,
    _eval_coeff,
    cell_centroid_args,
    eval_modes,
    project,
)
from .mesh import EdgeClass, Mesh
from .problem import ProblemSpec, km_values
from .sparse import SolverConfig, solve


def _combine_sources(a, b):
    if np.isscalar(a) and np.isscalar(b):
        return float(a) + float(b)

    def total(x, y, cx=None, cy=None):
        return _eval_coeff(a, x, y, cx, cy) + _eval_coeff(b, x, y, cx, cy)

    total.needs_cell = True
    return total


@dataclass
class TwoPhaseSpec(ProblemSpec):
    """Single-phase problem data plus two-phase closures and controls."""

    phi_m: float = 0.2
    phi_f: float = 1.0
    mu_n: float = 1.0
    mu_w: float = 1.0
    krn: Callable = staticmethod(lambda s: 1.0 - s)
    krw: Callable = staticmethod(lambda s: s)
    q_n: object = 0.0
    q_w: object = 0.0
    q_fn: object = 0.0
    q_fw: object = 0.0
    s_dw: object = 1.0       # inflow Dirichlet saturation
    g_nw: object = 0.0       # wetting inflow Neumann data
    s_w0: object = 0.0       # initial saturation
    beta0: float = 2.0
    beta_tilde0: float = 2.0
    cfl: Optional[float] = None     # default 0.2 / (2k + 1)
    tvb_m: float = 0.0
    dt_max: float = 1e-3
    t_end: float = 0.06

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 < self.phi_m <= 1.0 or not 0.0 < self.phi_f <= 1.0:
            raise ValueError("porosities must lie in (0, 1]")
        if self.mu_n <= 0 or self.mu_w <= 0:
            raise ValueError("viscosities must be positive")
        probe = np.linspace(0.0, 1.0, 11)
        for fn, name in ((self.krn, "krn"), (self.krw, "krw")):
            vals = np.asarray(fn(probe), dtype=float)
            if vals.min() < -1e-12 or vals.max() > 1.0 + 1e-12:
                raise ValueError(f"{name} must map [0, 1] into [0, 1]")
        # the pressure equation sees the total sources
        self.q = _combine_sources(self.q_n, self.q_w)
        self.qf = _combine_sources(self.q_fn, self.q_fw)

    def lam_total(self, s):
        s = np.clip(s, 0.0, 1.0)
        return self.krn(s) / self.mu_n + self.krw(s) / self.mu_w

    def lam_w(self, s):
        s = np.clip(s, 0.0, 1.0)
        return self.krw(s) / self.mu_w

    def lam_w_prime(self, s, eps: float = 1e-6):
        s = np.clip(s, 0.0, 1.0)
        lo = np.clip(s - eps, 0.0, 1.0)
        hi = np.clip(s + eps, 0.0, 1.0)
        return (self.krw(hi) - self.krw(lo)) / np.maximum(hi - lo, 1e-300) / self.mu_w


# ---------------------------------------------------------------------------
# traces, inflow classification, mobility sampling


class TraceData:
    """Field traces at cell/edge quadrature points and fracture vertices."""

    def __init__(self, ctx: AssemblyContext, coeffs: np.ndarray):
        self.cell = np.einsum("cm,mq->cq", coeffs, ctx.phi_cell)
        cs0, cs1 = ctx.side_cells
        self.edge = np.stack(
            [
                np.einsum("em,emq->eq", coeffs[cs0], ctx.phi_edge[0]),
                np.einsum("em,emq->eq", coeffs[cs1], ctx.phi_edge[1]),
            ],
            axis=1,
        )  # (ne, 2, nqe)
        self.vint = (
            np.einsum("nwm,nwm->nw", coeffs[ctx.vint_cells], ctx.vint_vals)
            if len(ctx.vint_idx)
            else np.zeros((0, 4))
        )
        self.vdir = (
            np.einsum("nwm,nwm->nw", coeffs[ctx.vdir_cells], ctx.vdir_vals)
            if len(ctx.vdir_idx)
            else np.zeros((0, 2))
        )
        self.vertex = {int(i): self.vint[n] for n, i in enumerate(ctx.vint_idx)}
        self.vertex.update({int(i): self.vdir[n] for n, i in enumerate(ctx.vdir_idx)})


class InflowState:
    """Per-point inflow classification derived from a pressure field."""

    def __init__(self, spec: TwoPhaseSpec, ctx: AssemblyContext, p: Optional[DGField]):
        mesh = ctx.mesh
        self.dir_edges = mesh.edges_of_class(EdgeClass.DIRICHLET)
        self.neu_edges = mesh.edges_of_class(EdgeClass.NEUMANN)
        nqe = ctx.nqe
        if p is None or len(self.dir_edges) == 0:
            self.dir_inflow = np.zeros((len(self.dir_edges), nqe), dtype=bool)
        else:
            from .assemble import _km_tables

            _km_tables(ctx, spec.km)
            sel = self.dir_edges
            cs = ctx.side_cells[0, sel]
            gp = np.einsum("em,emqa->eqa", p.coeffs[cs], ctx.grad_edge[0][sel])
            kgp = np.einsum("eqab,eqb->eqa", ctx.K_edge[0][sel], gp)
            self.dir_inflow = np.einsum("eqa,ea->eq", kgp, mesh.edge_normal[sel]) > 0.0
        # Neumann inflow is defined by the data sign
        if len(self.neu_edges):
            self.gn_values = _eval_coeff(
                spec.g_n,
                ctx.xq_edge[self.neu_edges, :, 0],
                ctx.xq_edge[self.neu_edges, :, 1],
                *cell_centroid_args(mesh.geom.centroid[ctx.side_cells[0, self.neu_edges]]),
            )
        else:
            self.gn_values = np.zeros((0, nqe))
        self.neu_inflow = self.gn_values > 0.0
        # Dirichlet fracture vertices: inflow if the bulk flux points outward
        self.vertex_inflow = {}
        for idx, fv in enumerate(mesh.fracture_vertices):
            if fv.kind != "dirichlet":
                continue
            if p is None:
                self.vertex_inflow[idx] = False
                continue
            cells, _, _ = ctx.vertex_tabs[idx]
            pt = mesh.vertices[fv.vertex]
            nsum = np.zeros(2)
            for be in mesh.boundary_edges_at_vertex(fv.vertex):
                nsum += mesh.edge_normal[be]
            nsum /= max(np.linalg.norm(nsum), 1e-300)
            val = 0.0
            for c in cells:
                g = p.eval_grad(np.array([c]), pt[None, :])[0]
                K = km_values(
                    spec.km, pt[0], pt[1], mesh.geom.centroid[c, 0], mesh.geom.centroid[c, 1]
                )
                val += float((K @ g) @ nsum)
            self.vertex_inflow[idx] = val > 0.0


def _edge_sdw(spec, ctx, sel):
    return _eval_coeff(
        spec.s_dw,
        ctx.xq_edge[sel, :, 0],
        ctx.xq_edge[sel, :, 1],
        *cell_centroid_args(ctx.mesh.geom.centroid[ctx.side_cells[0, sel]]),
    )


def _vertex_sdw(spec, ctx, idx):
    fv = ctx.mesh.fracture_vertices[idx]
    cells, _, _ = ctx.vertex_tabs[idx]
    pt = ctx.mesh.vertices[fv.vertex]
    return float(
        _eval_coeff(
            spec.s_dw,
            np.array([pt[0]]),
            np.array([pt[1]]),
            ctx.mesh.geom.centroid[cells[0], 0],
            ctx.mesh.geom.centroid[cells[0], 1],
        )[0]
    )


def mobility_data(
    spec: TwoPhaseSpec,
    ctx: AssemblyContext,
    s_tr: TraceData,
    inflow: InflowState,
    lam_fn,
) -> MobilityData:
    """Sample a mobility closure at every assembly point.

    On Dirichlet edges/vertices the relative permeability argument is the
    inflow data saturation on the inflow portion and the interior trace on
    the outflow portion.
    """
    lam_cell = lam_fn(s_tr.cell)
    lam_edge = lam_fn(s_tr.edge)
    if len(inflow.dir_edges):
        sel = inflow.dir_edges
        sdw = _edge_sdw(spec, ctx, sel)
        s_eff = np.where(inflow.dir_inflow, sdw, np.clip(s_tr.edge[sel, 0, :], 0, 1))
        lam_edge[sel, 0, :] = lam_fn(s_eff)
    lam_vint = lam_fn(s_tr.vint)
    s_vdir = s_tr.vdir.copy()
    for n, idx in enumerate(ctx.vdir_idx):
        if inflow.vertex_inflow.get(int(idx), False):
            s_vdir[n, :] = _vertex_sdw(spec, ctx, int(idx))
    lam_vdir = lam_fn(s_vdir)
    lam_vertex = {int(i): lam_vint[n] for n, i in enumerate(ctx.vint_idx)}
    lam_vertex.update({int(i): lam_vdir[n] for n, i in enumerate(ctx.vdir_idx)})
    mob = MobilityData(np.asarray(lam_cell), np.asarray(lam_edge), lam_vertex)
    mob.lam_vint = lam_vint
    mob.lam_vdir = lam_vdir
    return mob


# ---------------------------------------------------------------------------
# saturation mass operator (block diagonal per cell)


class SaturationMass:
    def __init__(self, spec: TwoPhaseSpec, ctx: AssemblyContext):
        mesh, ref = ctx.mesh, ctx.ref
        nm = ref.n_modes
        blocks = np.zeros((mesh.n_cells, nm, nm))
        blocks += spec.phi_m * 0.5 * mesh.geom.area[:, None, None] * np.eye(nm)
        sel = mesh.edges_of_class(EdgeClass.FRACTURE)
        if len(sel):
            seg_a = np.array([spec.segments[i].aperture for i in mesh.edge_frac[sel]])
            w = 0.5 * spec.phi_f * seg_a[:, None] * ctx.w_edge[sel]
            for s in (0, 1):
                tm = np.einsum("eq,eiq,ejq->eij", w, ctx.phi_edge[s][sel], ctx.phi_edge[s][sel])
                np.add.at(blocks, ctx.side_cells[s, sel], tm)
        self.blocks = blocks
        self.inv_blocks = np.linalg.inv(blocks)
        ones = np.zeros(nm)
        ones[0] = 1.0 / MODE0_VALUE
        self._ones = ones

    def apply_inverse(self, r: np.ndarray) -> np.ndarray:
        nm = len(self._ones)
        return np.einsum("cij,cj->ci", self.inv_blocks, r.reshape(-1, nm))

    def mass(self, coeffs: np.ndarray) -> float:
        """pi(s, 1): wetting volume seen by the mass operator."""
        return float(np.einsum("cij,cj,i->", self.blocks, coeffs, self._ones))

    def functional_total(self, r: np.ndarray) -> float:
        """Value of an assembled functional at the constant-one test field."""
        return float(np.sum(r.reshape(-1, len(self._ones)) @ self._ones))


# ---------------------------------------------------------------------------
# stabilization jump penalties on the saturation


def beta_parameters(spec: TwoPhaseSpec, ctx: AssemblyContext, p: DGField):
    """beta = beta0 * max |K grad p|; beta~ = beta~0 * max |a k_f dp/dtau|.

    Maxima are taken over quadrature points (and both fracture sides)."""
    from .assemble import _km_tables

    mesh = ctx.mesh
    _km_tables(ctx, spec.km)
    gp = np.einsum("cm,cmqa->cqa", p.coeffs, ctx.grad_cell)
    kgp = np.einsum("cqab,cqb->cqa", ctx.K_cell, gp)
    beta = spec.beta0 * float(np.max(np.linalg.norm(kgp, axis=-1), initial=0.0))
    btil = 0.0
    sel = mesh.edges_of_class(EdgeClass.FRACTURE)
    if len(sel):
        akf = np.array(
            [spec.segments[i].aperture * spec.segments[i].permeability for i in mesh.edge_frac[sel]]
        )
        nu = mesh.edge_tangent[sel]
        for s in (0, 1):
            cs = ctx.side_cells[s, sel]
            g = np.einsum("em,emqa->eqa", p.coeffs[cs], ctx.grad_edge[s][sel])
            dtau = np.einsum("eqa,ea->eq", g, nu)
            btil = max(btil, float(np.max(akf[:, None] * np.abs(dtau))))
    return beta, spec.beta_tilde0 * btil


def saturation_jump_terms(
    spec: TwoPhaseSpec,
    ctx: AssemblyContext,
    inflow: InflowState,
    beta: float,
    beta_tilde: float,
):
    """Matrix of the beta/beta-tilde jump penalties plus their data vector.

    Faces: interior, barrier, fracture and inflow-Dirichlet edges (one-sided
    against the inflow data).  Vertices: interior fracture vertices and
    inflow Dirichlet fracture vertices.
    """
    mesh, ref = ctx.mesh, ctx.ref
    nm = ref.n_modes
    n = mesh.n_cells * nm
    coo = _COO()
    rhs = np.zeros(n)
    two_sided = np.nonzero(
        (mesh.edge_class == EdgeClass.INTERIOR)
        | (mesh.edge_class == EdgeClass.BARRIER)
        | (mesh.edge_class == EdgeClass.FRACTURE)
    )[0]
    if len(two_sided) and beta != 0.0:
        w = beta * ctx.w_edge[two_sided]
        phi = [ctx.phi_edge[s][two_sided] for s in (0, 1)]
        cells = [ctx.side_cells[0, two_sided], ctx.side_cells[1, two_sided]]
        sgn = [1.0, -1.0]
        for t in (0, 1):
            for s in (0, 1):
                block = sgn[t] * sgn[s] * np.einsum("eq,eiq,ejq->eij", w, phi[t], phi[s])
                coo.add(*_block_dofs(cells[t], cells[s], nm), block)
    sel = inflow.dir_edges
    if len(sel) and beta != 0.0:
        w = beta * ctx.w_edge[sel] * inflow.dir_inflow
        phi = ctx.phi_edge[0][sel]
        cells = ctx.side_cells[0, sel]
        block = np.einsum("eq,eiq,ejq->eij", w, phi, phi)
        coo.add(*_block_dofs(cells, cells, nm), block)
        sdw = _edge_sdw(spec, ctx, sel)
        np.add.at(rhs, _dofs(cells, nm), np.einsum("eq,eiq->ei", w * sdw, phi))
    if beta_tilde != 0.0:
        for idx, fv in enumerate(mesh.fracture_vertices):
            tab = ctx.vertex_tabs[idx]
            if tab is None or fv.kind == "neumann":
                continue
            cells, vals, _ = tab
            if fv.kind == "interior":
                for (ia, ib) in ((0, 1), (2, 3)):
                    dofs = np.concatenate([_dofs(cells[ia], nm), _dofs(cells[ib], nm)])
                    jump = np.concatenate([vals[ia], -vals[ib]])
                    coo.add(
                        *np.meshgrid(dofs, dofs, indexing="ij"),
                        beta_tilde * np.outer(jump, jump),
                    )
            elif inflow.vertex_inflow.get(idx, False):
                sd = _vertex_sdw(spec, ctx, idx)
                for s in (0, 1):
                    dofs = _dofs(cells[s], nm)
                    jump = fv.sign * vals[s]
                    coo.add(
                        *np.meshgrid(dofs, dofs, indexing="ij"),
                        beta_tilde * np.outer(jump, jump),
                    )
                    rhs[dofs] += beta_tilde * sd * vals[s]
    return coo.matrix(n), rhs


# ---------------------------------------------------------------------------
# pressure solve and saturation right-hand side


def assemble_pressure(
    spec: TwoPhaseSpec,
    mesh: Mesh,
    ref: ReferenceElement,
    ctx: AssemblyContext,
    s: DGField,
    p_prev: Optional[DGField],
) -> SparseSystem:
    s_tr = TraceData(ctx, s.coeffs)
    inflow = InflowState(spec, ctx, p_prev)
    mob = mobility_data(spec, ctx, s_tr, inflow, spec.lam_total)
    return build_system(spec, mesh, ref, ctx, mobility=mob)


def solve_pressure(
    spec: TwoPhaseSpec,
    mesh: Mesh,
    ref: ReferenceElement,
    ctx: AssemblyContext,
    s: DGField,
    p_prev: Optional[DGField],
    solver: Optional[SolverConfig] = None,
) -> DGField:
    system = assemble_pressure(spec, mesh, ref, ctx, s, p_prev)
    x, _ = solve(system, solver)
    return DGField(mesh, ref.degree, x.reshape(mesh.n_cells, ref.n_modes))


def saturation_rhs(
    spec: TwoPhaseSpec,
    mesh: Mesh,
    ref: ReferenceElement,
    ctx: AssemblyContext,
    p: DGField,
    s: DGField,
    inflow: Optional[InflowState] = None,
    s_tr: Optional[TraceData] = None,
):
    """Evaluate the wetting functional H + I - c - d as a dof vector.

    Matrix-free: the flux operators act on the known pressure, the jump
    penalties on the known saturation, so only vectors are assembled.
    """
    from .assemble import _km_tables

    _km_tables(ctx, spec.km)
    nm = ref.n_modes
    rhs = np.zeros(mesh.n_cells * nm)
    s_tr = s_tr or TraceData(ctx, s.coeffs)
    inflow = inflow or InflowState(spec, ctx, p)
    mob_w = mobility_data(spec, ctx, s_tr, inflow, spec.lam_w)
    lam_edge = mob_w.lam_edge
    sigma = spec.sigma
    k2 = max(ref.degree, 1) ** 2
    beta, beta_tilde = beta_parameters(spec, ctx, p)
    geom = mesh.geom

    # --- cells: (q_w, xi) - (lam_w K grad p, grad xi) -------------------------
    if not (np.isscalar(spec.q_w) and spec.q_w == 0.0):
        qv = _eval_coeff(
            spec.q_w, ctx.xq_cell[..., 0], ctx.xq_cell[..., 1], *cell_centroid_args(geom.centroid)
        )
        rhs += np.einsum("cq,iq->ci", ctx.wdet * qv, ctx.phi_cell).ravel()
    kgp = np.einsum("cqab,cmqb,cm->cqa", ctx.K_cell, ctx.grad_cell, p.coeffs)
    w = ctx.wdet * mob_w.lam_cell
    rhs -= np.einsum("cq,cqa,ciqa->ci", w, kgp, ctx.grad_cell).ravel()

    # --- per-(edge, side) pressure traces ------------------------------------
    cs = ctx.side_cells
    fluxp = np.stack(
        [np.einsum("em,emq->eq", p.coeffs[cs[s]], ctx.fluxn_edge[s]) for s in (0, 1)]
    )  # (2, ne, nqe): (K grad p).n0 per side
    pv = np.stack(
        [np.einsum("em,emq->eq", p.coeffs[cs[s]], ctx.phi_edge[s]) for s in (0, 1)]
    )
    sv = np.stack([s_tr.edge[:, 0, :], s_tr.edge[:, 1, :]])

    def scatter(sel, side, vals):
        """rhs[dofs(cells of side)] += vals (e, nm)."""
        np.add.at(rhs.reshape(-1, nm), cs[side, sel], vals)

    two_sided = np.nonzero(
        (mesh.edge_class == EdgeClass.INTERIOR)
        | (mesh.edge_class == EdgeClass.FRACTURE)
    )[0]
    if len(two_sided):
        sel = two_sided
        we = ctx.w_edge[sel]
        alpha = spec.alpha0 * k2 / mesh.edge_length[sel]
        lam_avg = 0.5 * (lam_edge[sel, 0, :] + lam_edge[sel, 1, :])
        flux_avg = 0.5 * (
            lam_edge[sel, 0, :] * fluxp[0, sel] + lam_edge[sel, 1, :] * fluxp[1, sel]
        )
        jump_p = pv[0, sel] - pv[1, sel]
        jump_s = sv[0, sel] - sv[1, sel]
        pen = we * (alpha[:, None] * lam_avg * jump_p + beta * jump_s)
        for t, sgn in ((0, 1.0), (1, -1.0)):
            # +<{lam_w K grad p},[[xi]]> - penalties
            vals = np.einsum("eq,eiq->ei", we * flux_avg * sgn - pen * sgn, ctx.phi_edge[t][sel])
            # -sigma <[[p]], {lam_w K grad xi}>
            vals -= sigma * 0.5 * np.einsum(
                "eq,eiq->ei", we * lam_edge[sel, t, :] * jump_p, ctx.fluxn_edge[t][sel]
            )
            scatter(sel, t, vals)

    sel = inflow.dir_edges
    if len(sel):
        we = ctx.w_edge[sel]
        alpha = spec.alpha0 * k2 / mesh.edge_length[sel]
        lamD = lam_edge[sel, 0, :]
        g = _eval_coeff(
            spec.g_d,
            ctx.xq_edge[sel, :, 0],
            ctx.xq_edge[sel, :, 1],
            *cell_centroid_args(geom.centroid[cs[0, sel]]),
        )
        sdw = _edge_sdw(spec, ctx, sel)
        sD_term = beta * inflow.dir_inflow * (sdw - sv[0, sel])
        resid_p = g - pv[0, sel]
        vals = np.einsum(
            "eq,eiq->ei",
            we * (lamD * (fluxp[0, sel] + alpha[:, None] * resid_p) + sD_term),
            ctx.phi_edge[0][sel],
        )
        vals += sigma * np.einsum(
            "eq,eiq->ei", we * lamD * resid_p, ctx.fluxn_edge[0][sel]
        )
        scatter(sel, 0, vals)

    neu = inflow.neu_edges
    if len(neu):
        gnw = _eval_coeff(
            spec.g_nw,
            ctx.xq_edge[neu, :, 0],
            ctx.xq_edge[neu, :, 1],
            *cell_centroid_args(geom.centroid[cs[0, neu]]),
        )
        s_out = np.clip(sv[0, neu], 0.0, 1.0)
        frac_flow = spec.lam_w(s_out) / spec.lam_total(s_out)
        gn_vals = np.where(inflow.neu_inflow, gnw, frac_flow * inflow.gn_values)
        vals = np.einsum("eq,eiq->ei", ctx.w_edge[neu] * gn_vals, ctx.phi_edge[0][neu])
        scatter(neu, 0, vals)

    bar = mesh.edges_of_class(EdgeClass.BARRIER)
    if len(bar):
        we = ctx.w_edge[bar]
        coef = np.array(
            [spec.segments[i].permeability / spec.segments[i].aperture for i in mesh.edge_frac[bar]]
        )
        lam_avg = 0.5 * (lam_edge[bar, 0, :] + lam_edge[bar, 1, :])
        jump_p = pv[0, bar] - pv[1, bar]
        jump_s = sv[0, bar] - sv[1, bar]
        pen = we * (coef[:, None] * lam_avg * jump_p + beta * jump_s)
        for t, sgn in ((0, 1.0), (1, -1.0)):
            vals = -sgn * np.einsum("eq,eiq->ei", pen, ctx.phi_edge[t][bar])
            scatter(bar, t, vals)

    frac = mesh.edges_of_class(EdgeClass.FRACTURE)
    if len(frac):
        we = ctx.w_edge[frac]
        akf = np.array(
            [spec.segments[i].aperture * spec.segments[i].permeability for i in mesh.edge_frac[frac]]
        )
        nu = mesh.edge_tangent[frac]
        if not (np.isscalar(spec.q_fw) and spec.q_fw == 0.0):
            qf = _eval_coeff(
                spec.q_fw,
                ctx.xq_edge[frac, :, 0],
                ctx.xq_edge[frac, :, 1],
                *cell_centroid_args(geom.centroid[cs[0, frac]]),
            )
        else:
            qf = None
        for side in (0, 1):
            dtau_basis = np.einsum("emqa,ea->emq", ctx.grad_edge[side][frac], nu)
            dtau_p = np.einsum("em,emq->eq", p.coeffs[cs[side, frac]], dtau_basis)
            wl = 0.5 * akf[:, None] * we * lam_edge[frac, side, :]
            vals = -np.einsum("eq,eiq->ei", wl * dtau_p, dtau_basis)
            if qf is not None:
                vals += 0.5 * np.einsum("eq,eiq->ei", we * qf, ctx.phi_edge[side][frac])
            scatter(frac, side, vals)

    # --- fracture vertices -----------------------------------------------------
    rview = rhs.reshape(-1, nm)
    seg_akf = np.array([seg.aperture * seg.permeability for seg in spec.segments]) if spec.segments else np.zeros(0)
    if len(ctx.vint_idx):
        akf = seg_akf[ctx.vint_frac]                       # (ni,)
        atil = spec.alpha_tilde0 * k2 / ctx.vint_atil_h    # (ni,)
        pv_v = np.einsum("nwm,nwm->nw", p.coeffs[ctx.vint_cells], ctx.vint_vals)
        dv_v = np.einsum("nwm,nwm->nw", p.coeffs[ctx.vint_cells], ctx.vint_ders)
        lam_v = mob_w.lam_vint                             # (ni, 4)
        sv_v = s_tr.vint
        contrib = np.zeros_like(ctx.vint_vals)             # (ni, 4, nm)
        for (ia, ib) in ((0, 1), (2, 3)):
            jump_p = pv_v[:, ia] - pv_v[:, ib]
            jump_s = sv_v[:, ia] - sv_v[:, ib]
            avg_dp = 0.5 * (lam_v[:, ia] * dv_v[:, ia] + lam_v[:, ib] * dv_v[:, ib])
            lam_avg = 0.5 * (lam_v[:, ia] + lam_v[:, ib])
            pen = atil * lam_avg * jump_p + beta_tilde * jump_s
            coef = 0.5 * akf * avg_dp - pen
            contrib[:, ia, :] += coef[:, None] * ctx.vint_vals[:, ia, :]
            contrib[:, ib, :] -= coef[:, None] * ctx.vint_vals[:, ib, :]
            for iw in (ia, ib):
                contrib[:, iw, :] -= (
                    0.25 * sigma * akf * lam_v[:, iw] * jump_p
                )[:, None] * ctx.vint_ders[:, iw, :]
        np.add.at(rview, ctx.vint_cells, contrib)
    if len(ctx.vdir_idx):
        akf = seg_akf[ctx.vdir_frac]
        atil = spec.alpha_tilde0 * k2 / ctx.vdir_atil_h
        sign = ctx.vdir_sign
        pv_v = np.einsum("nwm,nwm->nw", p.coeffs[ctx.vdir_cells], ctx.vdir_vals)
        dv_v = np.einsum("nwm,nwm->nw", p.coeffs[ctx.vdir_cells], ctx.vdir_ders)
        lam_v = mob_w.lam_vdir
        sv_v = s_tr.vdir
        g = _eval_coeff(
            spec.g_d,
            ctx.vdir_points[:, 0],
            ctx.vdir_points[:, 1],
            geom.centroid[ctx.vdir_cells[:, 0], 0],
            geom.centroid[ctx.vdir_cells[:, 0], 1],
        )
        is_in = np.array(
            [inflow.vertex_inflow.get(int(i), False) for i in ctx.vdir_idx]
        )
        sd = np.array(
            [
                _vertex_sdw(spec, ctx, int(i)) if flag else 0.0
                for i, flag in zip(ctx.vdir_idx, is_in)
            ]
        )
        contrib = np.zeros_like(ctx.vdir_vals)             # (nd, 2, nm)
        for sidx in (0, 1):
            resid = g - pv_v[:, sidx]
            coef_val = (
                sign * (0.5 * akf * lam_v[:, sidx] * dv_v[:, sidx])
                + atil * lam_v[:, sidx] * resid
            )
            contrib[:, sidx, :] += coef_val[:, None] * ctx.vdir_vals[:, sidx, :]
            contrib[:, sidx, :] += (
                0.5 * sigma * akf * lam_v[:, sidx] * sign * resid
            )[:, None] * ctx.vdir_ders[:, sidx, :]
            contrib[:, sidx, :] += (
                np.where(is_in, beta_tilde * (sd - sv_v[:, sidx]), 0.0)
            )[:, None] * ctx.vdir_vals[:, sidx, :]
        np.add.at(rview, ctx.vdir_cells, contrib)

    return rhs, {"beta": beta, "beta_tilde": beta_tilde}


# ---------------------------------------------------------------------------
# limiters


class LimiterData:
    """Geometric tables shared by both limiters."""

    def __init__(self, ctx: AssemblyContext):
        mesh, ref = ctx.mesh, ctx.ref
        nc = mesh.n_cells
        cell_edges = np.full((nc, 3), -1, dtype=np.int64)
        cell_sides = np.zeros((nc, 3), dtype=np.int64)
        fill = np.zeros(nc, dtype=np.int64)
        for e in range(mesh.n_edges):
            for s in (0, 1):
                c = mesh.edge_cells[e, s]
                if c < 0:
                    continue
                cell_edges[c, fill[c]] = e
                cell_sides[c, fill[c]] = s
                fill[c] += 1
        self.cell_edges = cell_edges
        self.cell_sides = cell_sides
        neigh = np.where(
            cell_sides == 0, mesh.edge_cells[cell_edges, 1], mesh.edge_cells[cell_edges, 0]
        )
        self.neighbors = neigh
        self.interior = np.all(neigh >= 0, axis=1)

        # basis values at the cell's own edge midpoints, (3, nc, nm)
        self.phi_mid = []
        mids = mesh.edge_midpoint[cell_edges]
        for i in range(3):
            refpts = mesh.geom.to_reference(np.arange(nc), mids[:, i, :])
            self.phi_mid.append(np.ascontiguousarray(eval_modes(ref.degree, refpts).T))

        # expansion m_i - b_T = a1 (b_Na - b_T) + a2 (b_Nb - b_T), a >= 0
        centroid = mesh.geom.centroid
        self.combo = np.zeros((nc, 3, 2))
        self.combo_idx = np.zeros((nc, 3, 2), dtype=np.int64)
        pairs = [(0, 1), (0, 2), (1, 2)]
        for c in np.nonzero(self.interior)[0]:
            dn = centroid[neigh[c]] - centroid[c]
            for i in range(3):
                dm = mids[c, i] - centroid[c]
                best = None
                for (ja, jb) in pairs:
                    A = np.column_stack([dn[ja], dn[jb]])
                    det = np.linalg.det(A)
                    if abs(det) < 1e-14:
                        continue
                    ab = np.linalg.solve(A, dm)
                    score = float(min(ab))
                    if best is None or score > best[0]:
                        best = (score, ab, (ja, jb))
                    if score >= -1e-12:
                        break
                _, ab, (ja, jb) = best
                self.combo[c, i] = np.maximum(ab, 0.0)
                self.combo_idx[c, i] = (ja, jb)

        # linear reconstruction from midpoint values: modal coefficients of
        # the functions delta_i = 1 - 2*lam_opposite, (nc, 3, nm)
        lam1 = 0.5 * (ref.cell_points[:, 0] + 1.0)
        lam2 = 0.5 * (ref.cell_points[:, 1] + 1.0)
        lams = np.stack([1.0 - lam1 - lam2, lam1, lam2])
        self.mid_basis = np.zeros((nc, 3, ref.n_modes))
        for i in range(3):
            ev = mesh.edges[cell_edges[:, i]]
            opp = np.zeros(nc, dtype=np.int64)
            for loc in range(3):
                is_opp = (mesh.cells[:, loc] != ev[:, 0]) & (mesh.cells[:, loc] != ev[:, 1])
                opp[is_opp] = loc
            delta = 1.0 - 2.0 * lams[opp]
            self.mid_basis[:, i, :] = np.einsum(
                "q,cq,mq->cm", ref.cell_weights, delta, ref.cell_basis
            )

        # stacked fracture-vertex evaluation rows for vectorized extremes
        vcells, vrows = [], []
        for tab in ctx.vertex_tabs:
            if tab is None:
                continue
            cells_, vals_, _ = tab
            vcells.extend(cells_)
            vrows.extend(vals_)
        self.vertex_cells = np.asarray(vcells, dtype=np.int64)
        self.vertex_rows = (
            np.asarray(vrows) if vrows else np.zeros((0, ref.n_modes))
        )


def _minmod_tvb(a: np.ndarray, b: np.ndarray, thresh: np.ndarray) -> np.ndarray:
    mm = np.where(
        np.sign(a) == np.sign(b), np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0
    )
    return np.where(np.abs(a) <= thresh, a, mm)


def tvb_limit(
    field: DGField,
    ctx: AssemblyContext,
    lim: LimiterData,
    m_const: float = 0.0,
    nu: float = 1.5,
) -> DGField:
    """Cockburn-Shu style TVB minmod limiter; cell means are unchanged.

    Where the minmod test (threshold m_const * h_T^2) triggers, all modes
    above the mean are replaced by the limited linear reconstruction built
    from the three edge-midpoint deviations.
    """
    ref = ctx.ref
    if ref.degree == 0:
        return field
    mesh = ctx.mesh
    coeffs = field.coeffs
    means = coeffs[:, 0] * MODE0_VALUE
    lin = coeffs[:, :3]
    vals_mid = np.stack(
        [np.einsum("cm,cm->c", lin, lim.phi_mid[i][:, :3]) for i in range(3)], axis=1
    )
    dev = vals_mid - means[:, None]
    neigh_means = np.where(lim.neighbors >= 0, means[lim.neighbors], means[:, None])
    dmean = neigh_means - means[:, None]
    dbar = lim.combo[:, :, 0] * np.take_along_axis(
        dmean, lim.combo_idx[:, :, 0], axis=1
    ) + lim.combo[:, :, 1] * np.take_along_axis(dmean, lim.combo_idx[:, :, 1], axis=1)
    thresh = m_const * mesh.cell_diameter[:, None] ** 2
    limited = _minmod_tvb(dev, nu * dbar, thresh)
    needs = np.any(limited != dev, axis=1) & lim.interior
    if not np.any(needs):
        return field
    lm = limited[needs]
    pos = np.maximum(lm, 0.0).sum(axis=1)
    neg = np.maximum(-lm, 0.0).sum(axis=1)
    tp = np.where(pos > 0, np.minimum(1.0, neg / np.where(pos > 0, pos, 1.0)), 1.0)
    tm = np.where(neg > 0, np.minimum(1.0, pos / np.where(neg > 0, neg, 1.0)), 1.0)
    lm = np.where(lm >= 0, tp[:, None] * lm, tm[:, None] * lm)
    new_coeffs = coeffs.copy()
    new_coeffs[needs] = np.einsum(
        "cia,ci->ca", lim.mid_basis[needs], means[needs, None] + lm
    )
    return DGField(field.mesh, field.degree, new_coeffs)


def bound_limit(field: DGField, ctx: AssemblyContext, lim: LimiterData):
    """Linear scaling toward the cell mean keeping point values in [0, 1].

    Extremes are checked at cell quadrature points, the cell's own edge-trace
    quadrature points and its fracture-vertex values.  Means outside [0, 1]
    are clamped first; the per-cell clamp amounts are returned so the caller
    can report the mass correction.
    """
    mesh, ref = ctx.mesh, ctx.ref
    coeffs = field.coeffs.copy()
    means = coeffs[:, 0] * MODE0_VALUE
    clamp = np.clip(means, 0.0, 1.0) - means
    if np.any(clamp != 0.0):
        coeffs[:, 0] += clamp / MODE0_VALUE
        means = means + clamp
    if ref.degree == 0:
        return DGField(field.mesh, field.degree, coeffs), clamp
    vals = np.einsum("cm,mq->cq", coeffs, ctx.phi_cell)
    vmin, vmax = vals.min(axis=1), vals.max(axis=1)
    for i in range(3):
        e = lim.cell_edges[:, i]
        s = lim.cell_sides[:, i]
        tr = np.einsum("cm,cmq->cq", coeffs, ctx.phi_edge[s, e])
        vmin = np.minimum(vmin, tr.min(axis=1))
        vmax = np.maximum(vmax, tr.max(axis=1))
    if len(lim.vertex_cells):
        vv = np.einsum("vm,vm->v", coeffs[lim.vertex_cells], lim.vertex_rows)
        np.minimum.at(vmin, lim.vertex_cells, vv)
        np.maximum.at(vmax, lim.vertex_cells, vv)
    t_lo = np.where(vmin < 0.0, means / np.maximum(means - vmin, 1e-300), 1.0)
    t_hi = np.where(vmax > 1.0, (1.0 - means) / np.maximum(vmax - means, 1e-300), 1.0)
    theta = np.clip(np.minimum(t_lo, t_hi), 0.0, 1.0)
    coeffs[:, 1:] *= theta[:, None]
    return DGField(field.mesh, field.degree, coeffs), clamp


# ---------------------------------------------------------------------------
# time stepping


def cfl_dt(
    spec: TwoPhaseSpec,
    mesh: Mesh,
    ref: ReferenceElement,
    ctx: AssemblyContext,
    p: DGField,
    s: DGField,
) -> float:
    """Stable step from the bulk wave speeds and the fracture-channel rate.

    Bulk: dt <= cfl * phi_m h_T / max |lam_w'(s) K grad p . n| over the
    cell's edge quadrature points.  Fracture channel: the saturation trace
    dofs carry the full cell mass, so the constraint compares the channel
    flux slope a k_f lam_w' |dp/dtau| against phi_m |T| + a phi_f |e| / 2.
    """
    cfl = spec.cfl if spec.cfl is not None else 0.2 / (2 * ref.degree + 1)
    dt = spec.dt_max
    # CFL length scale: shortest cell height (2 |T| / longest edge)
    h_cfl = 2.0 * mesh.geom.area / mesh.cell_diameter
    s_tr = TraceData(ctx, s.coeffs)
    speeds = np.zeros(mesh.n_cells)
    from .assemble import _km_tables

    _km_tables(ctx, spec.km)
    for side in (0, 1):
        cs = ctx.side_cells[side]
        un = np.einsum("em,emq->eq", p.coeffs[cs], ctx.fluxn_edge[side])
        rate = np.abs(spec.lam_w_prime(s_tr.edge[:, side, :]) * un).max(axis=1)
        boundary = mesh.edge_cells[:, 1] < 0
        valid = ~boundary | (side == 0)
        np.maximum.at(speeds, cs[valid], rate[valid])
    nz = speeds > 0
    if np.any(nz):
        dt = min(dt, cfl * float(np.min(spec.phi_m * h_cfl[nz] / speeds[nz])))
    sel = mesh.edges_of_class(EdgeClass.FRACTURE)
    if len(sel):
        akf = np.array(
            [spec.segments[i].aperture * spec.segments[i].permeability for i in mesh.edge_frac[sel]]
        )
        a_ap = np.array([spec.segments[i].aperture for i in mesh.edge_frac[sel]])
        nu = mesh.edge_tangent[sel]
        for side in (0, 1):
            cs = ctx.side_cells[side, sel]
            gp = np.einsum("em,emqa->eqa", p.coeffs[cs], ctx.grad_edge[side][sel])
            dtau = np.abs(np.einsum("eqa,ea->eq", gp, nu))
            lwp = spec.lam_w_prime(s_tr.edge[sel, side, :])
            flux_rate = akf * np.max(lwp * dtau, axis=1)
            capacity = (
                spec.phi_m * mesh.geom.area[cs]
                + 0.5 * spec.phi_f * a_ap * mesh.edge_length[sel]
            )
            nz = flux_rate > 0
            if np.any(nz):
                # the capacity/rate quotient already carries all geometry, so
                # the margin is a fixed fraction of the explicit stability
                # radius rather than the bulk CFL number
                chan = 0.6 / (2 * ref.degree + 1)
                dt = min(dt, chan * float(np.min(capacity[nz] / flux_rate[nz])))
    return dt


@dataclass
class StepReport:
    time: float
    dt: float
    mass: float
    flux_mass: float            # dt-weighted functional totals over the stages
    limiter_mass: float         # mass moved by tvb + bound scaling (trace part)
    clamp_mass: float           # mass moved by mean clamping
    balance_residual: float     # dM - flux - limiter - clamp
    s_min: float
    s_max: float
    beta: float = 0.0
    beta_tilde: float = 0.0


@dataclass
class ImpesState:
    s: DGField
    p: Optional[DGField]
    time: float = 0.0
    reports: list = field(default_factory=list)


class ImpesDriver:
    """Owns the precomputed context and advances the coupled system."""

    def __init__(
        self,
        spec: TwoPhaseSpec,
        mesh: Mesh,
        ref: ReferenceElement,
        solver: Optional[SolverConfig] = None,
        limit: bool = True,
    ):
        self.spec = spec
        self.mesh = mesh
        self.ref = ref
        self.ctx = AssemblyContext(mesh, ref)
        self.mass_op = SaturationMass(spec, self.ctx)
        self.lim = LimiterData(self.ctx)
        self.solver = solver
        self.limit = limit
        self._pcache = None

    def initial_state(self) -> ImpesState:
        s0 = project(self.mesh, self.ref, self.spec.s_w0)
        s0, _ = bound_limit(s0, self.ctx, self.lim)
        # bootstrap: classify inflow from a first pressure solve, then redo
        p0 = self._solve_pressure(s0, None)
        p0 = self._solve_pressure(s0, p0)
        return ImpesState(s=s0, p=p0)

    def _solve_pressure(self, s: DGField, p_prev: Optional[DGField]) -> DGField:
        s_tr = TraceData(self.ctx, s.coeffs)
        inflow = InflowState(self.spec, self.ctx, p_prev)
        mob = mobility_data(self.spec, self.ctx, s_tr, inflow, self.spec.lam_total)
        return self._pressure_from_mobility(mob)

    @staticmethod
    def _mobility_equal(a: MobilityData, b: MobilityData) -> bool:
        return (
            np.array_equal(a.lam_cell, b.lam_cell)
            and np.array_equal(a.lam_edge, b.lam_edge)
            and np.array_equal(a.lam_vint, b.lam_vint)
            and np.array_equal(a.lam_vdir, b.lam_vdir)
        )

    def _pressure_from_mobility(self, mob: MobilityData) -> DGField:
        '''Re-solve the pressure; reuse the factorization when the sampled
        mobilities (hence the whole system) are unchanged.'''
        direct = self.solver is None or self.solver.method in ("auto", "direct")
        if (
            direct
            and self._pcache is not None
            and self._mobility_equal(self._pcache[0], mob)
        ):
            lu, rhs = self._pcache[1], self._pcache[2]
            x = lu.solve(rhs)
        else:
            system = build_system(self.spec, self.mesh, self.ref, self.ctx, mobility=mob)
            if direct:
                from scipy.sparse.linalg import splu

                lu = splu(system.matrix.tocsc())
                x = lu.solve(system.rhs)
                self._pcache = (mob, lu, system.rhs)
            else:
                x, _ = solve(system, self.solver)
        return DGField(self.mesh, self.ref.degree, x.reshape(self.mesh.n_cells, self.ref.n_modes))

    def _stage(self, s: DGField, p_prev: Optional[DGField]):
        ctx = self.ctx
        s_tr = TraceData(ctx, s.coeffs)
        inflow_prev = InflowState(self.spec, ctx, p_prev)
        mob_t = mobility_data(self.spec, ctx, s_tr, inflow_prev, self.spec.lam_total)
        p = self._pressure_from_mobility(mob_t)
        inflow = InflowState(self.spec, ctx, p)
        r, diag = saturation_rhs(
            self.spec, self.mesh, self.ref, ctx, p, s, inflow=inflow, s_tr=s_tr
        )
        ds = self.mass_op.apply_inverse(r)
        return p, ds, self.mass_op.functional_total(r), diag

    def _apply_limiters(self, s: DGField):
        """Limit a stage value; returns (field, trace-mass delta, clamp mass)."""
        if not self.limit:
            return s, 0.0, 0.0
        m0 = self.mass_op.mass(s.coeffs)
        s1 = tvb_limit(s, self.ctx, self.lim, self.spec.tvb_m)
        s2, clamp = bound_limit(s1, self.ctx, self.lim)
        m2 = self.mass_op.mass(s2.coeffs)
        # pi-mass moved by the mean clamp alone (mode-0 shift per cell)
        clamp_mass = float(
            np.sum(clamp * self.mass_op.blocks[:, 0, 0]) / MODE0_VALUE**2
        )
        limiter_mass = (m2 - m0) - clamp_mass
        return s2, limiter_mass, clamp_mass

    def step(self, state: ImpesState, dt: Optional[float] = None) -> ImpesState:
        spec = self.spec
        s0 = state.s
        if dt is None:
            dt = cfl_dt(spec, self.mesh, self.ref, self.ctx, state.p, s0)
        dt = min(dt, spec.t_end - state.time) if spec.t_end > state.time else dt
        m0 = self.mass_op.mass(s0.coeffs)

        # SSP-RK3 with per-stage pressure solve and limiting.  Folding the
        # convex combinations, stage quantities reach the end of the step
        # with weights (1/6, 2/3, 1).
        p1, L0, R0, diag = self._stage(s0, state.p)
        u1u = s0.coeffs + dt * L0
        m_u1u = self.mass_op.mass(u1u)
        res1 = m_u1u - (m0 + dt * R0)
        u1, lim1, clamp1 = self._apply_limiters(DGField(self.mesh, self.ref.degree, u1u))
        m_u1 = m_u1u + lim1 + clamp1

        p2, L1, R1, _ = self._stage(u1, p1)
        u2u = 0.75 * s0.coeffs + 0.25 * (u1.coeffs + dt * L1)
        m_u2u = self.mass_op.mass(u2u)
        res2 = m_u2u - (0.75 * m0 + 0.25 * m_u1 + 0.25 * dt * R1)
        u2, lim2, clamp2 = self._apply_limiters(DGField(self.mesh, self.ref.degree, u2u))
        m_u2 = m_u2u + lim2 + clamp2

        p3, L2, R2, _ = self._stage(u2, p2)
        snu = (1.0 / 3.0) * s0.coeffs + (2.0 / 3.0) * (u2.coeffs + dt * L2)
        m_snu = self.mass_op.mass(snu)
        res3 = m_snu - (m0 / 3.0 + (2.0 / 3.0) * m_u2 + (2.0 / 3.0) * dt * R2)
        s_new, lim3, clamp3 = self._apply_limiters(DGField(self.mesh, self.ref.degree, snu))

        w1, w2, w3 = 1.0 / 6.0, 2.0 / 3.0, 1.0
        flux_mass = dt * (R0 + R1 + 4.0 * R2) / 6.0
        limiter_mass = w1 * lim1 + w2 * lim2 + w3 * lim3
        clamp_mass = w1 * clamp1 + w2 * clamp2 + w3 * clamp3
        residual = w1 * res1 + w2 * res2 + w3 * res3
        m_end = self.mass_op.mass(s_new.coeffs)

        vals_min, vals_max = _field_extremes(s_new, self.ctx, self.lim)
        rep = StepReport(
            time=state.time + dt,
            dt=dt,
            mass=m_end,
            flux_mass=flux_mass,
            limiter_mass=limiter_mass,
            clamp_mass=clamp_mass,
            balance_residual=residual,
            s_min=vals_min,
            s_max=vals_max,
            beta=diag["beta"],
            beta_tilde=diag["beta_tilde"],
        )
        return ImpesState(
            s=s_new, p=p3, time=state.time + dt, reports=state.reports + [rep]
        )

    def run(self, t_end: Optional[float] = None, dt: Optional[float] = None, observer=None) -> ImpesState:
        state = self.initial_state()
        t_end = t_end if t_end is not None else self.spec.t_end
        while state.time < t_end - 1e-14:
            step_dt = dt
            if step_dt is None:
                step_dt = cfl_dt(self.spec, self.mesh, self.ref, self.ctx, state.p, state.s)
            step_dt = min(step_dt, t_end - state.time)
            state = self.step(state, step_dt)
            if observer is not None:
                observer(state)
        return state


def _field_extremes(field: DGField, ctx: AssemblyContext, lim: LimiterData):
    vals = np.einsum("cm,mq->cq", field.coeffs, ctx.phi_cell)
    vmin, vmax = float(vals.min()), float(vals.max())
    interior = ctx.mesh.edge_cells[:, 1] >= 0
    for s in (0, 1):
        sel = np.nonzero(interior)[0] if s == 1 else slice(None)
        tr = np.einsum(
            "em,emq->eq", field.coeffs[ctx.side_cells[s][sel]], ctx.phi_edge[s][sel]
        )
        vmin = min(vmin, float(tr.min()))
        vmax = max(vmax, float(tr.max()))
    if len(lim.vertex_cells):
        vv = np.einsum("vm,vm->v", field.coeffs[lim.vertex_cells], lim.vertex_rows)
        vmin = min(vmin, float(vv.min()))
        vmax = max(vmax, float(vv.max()))
    return vmin, vmax


# ---------------------------------------------------------------------------
# checkpoint files: 64-byte header + coefficient arrays

_MAGIC = b"FDGC"
_VERSION = 1


def write_checkpoint(path, mesh: Mesh, p: DGField, s: DGField, time: float) -> None:
    mesh_hash = bytes.fromhex(mesh.structural_hash())[:16]
    n_modes = p.coeffs.shape[1]
    header = struct.pack(
        "<4sII Q I d 16s",
        _MAGIC,
        _VERSION,
        p.degree,
        mesh.n_cells,
        n_modes,
        time,
        mesh_hash,
    )
    header = header.ljust(64, b"\0")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(s.coeffs, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(p.coeffs, dtype="<f8").tobytes())


def read_checkpoint(path, mesh: Mesh):
    with open(path, "rb") as fh:
        header = fh.read(64)
        magic, version, degree, n_cells, n_modes, time, mesh_hash = struct.unpack(
            "<4sII Q I d 16s", header[: struct.calcsize("<4sII Q I d 16s")]
        )
        if magic != _MAGIC:
            raise ValueError("not a checkpoint file")
        if version != _VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        if n_cells != mesh.n_cells:
            raise ValueError("checkpoint cell count does not match the mesh")
        if mesh_hash != bytes.fromhex(mesh.structural_hash())[:16]:
            raise ValueError("checkpoint mesh hash does not match the mesh")
        count = n_cells * n_modes
        data = np.frombuffer(fh.read(2 * count * 8), dtype="<f8")
    s = DGField(mesh, degree, data[:count].reshape(n_cells, n_modes).copy())
    p = DGField(mesh, degree, data[count:].reshape(n_cells, n_modes).copy())
    return p, s, time
