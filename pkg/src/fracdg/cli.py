"""Command-line interface: steady / convergence / twophase / validate / export-matrix."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .assemble import build_system
from .basis import DGField, ReferenceElement
from .config import ConfigError, RunConfig, list_presets, load_preset, resolve_path
from .postproc import (
    SliceRequest,
    convergence_table,
    extract_slice,
    slice_discrepancy,
    slice_to_csv,
    write_vtk,
)
from .sparse import export_matrix_market, solve
from .twophase import ImpesDriver, write_checkpoint


def _load_config(args) -> RunConfig:
    if args.preset:
        return load_preset(args.preset)
    if not args.config:
        raise ConfigError("either --config or --preset is required")
    return RunConfig.load(args.config)


def _outdir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_steady(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    mesh = cfg.mesh()
    scheme = cfg.raw.get("scheme", {})
    ref = ReferenceElement(scheme.get("degree", 1))
    spec = cfg.problem(mesh)
    system = build_system(spec, mesh, ref)
    x, report = solve(system, cfg.solver())
    field = DGField(mesh, ref.degree, x.reshape(mesh.n_cells, ref.n_modes))
    print(
        f"solved {system.n} dofs on {mesh.n_cells} cells "
        f"({report.method}, residual {report.residual:.2e})"
    )
    _write_outputs(cfg, out, mesh, field)
    return 0


def _write_outputs(cfg: RunConfig, out: Path, mesh, field) -> None:
    ocfg = cfg.raw.get("outputs", {})
    if "vtk" in ocfg:
        path = out / ocfg["vtk"]
        write_vtk(path, mesh, point_fields={"pressure": field})
        print(f"wrote {path}")
    for sl in ocfg.get("slices", []):
        req = SliceRequest(tuple(sl["start"]), tuple(sl["end"]), sl.get("samples", 200))
        rows = extract_slice(field, req)
        path = out / f"slice_{sl['name']}.csv"
        path.write_text(slice_to_csv(rows))
        print(f"wrote {path}")
        if "reference" in sl:
            ref_path = resolve_path(sl["reference"], cfg.base_dir)
            ref_rows = _read_slice_csv(ref_path.read_text())
            rep = slice_discrepancy(rows, ref_rows)
            rpath = out / f"slice_{sl['name']}_discrepancy.json"
            rpath.write_text(json.dumps(rep, indent=2) + "\n")
            print(
                f"  vs reference: max {rep['max_abs']:.4e} "
                f"mean {rep['mean_abs']:.4e} over {rep['n_samples']} samples"
            )


def _read_slice_csv(text: str):
    rows = []
    for line in text.strip().splitlines()[1:]:
        s, x, y, side, v = line.split(",")
        rows.append((float(s), float(x), float(y), side, float(v)))
    return rows


def cmd_convergence(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    conv = cfg.raw.get("convergence")
    if conv is None:
        raise ConfigError("configuration lacks a 'convergence' section")
    scheme = cfg.raw.get("scheme", {})

    def run_one(degree):
        return convergence_table(
            conv["case"],
            degree,
            conv["levels"],
            sigma=-1 if scheme.get("sigma", "sipg") == "sipg" else scheme["sigma"],
            alpha0=scheme.get("alpha0", 10.0),
            alpha_tilde0=scheme.get("alpha_tilde0", 10.0),
            solver=cfg.solver(),
        )

    degrees = [conv["degree"]]
    if args.threads > 1 and len(degrees) > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as ex:
            reports = list(ex.map(run_one, degrees))
    else:
        reports = [run_one(d) for d in degrees]
    for rep in reports:
        name = cfg.raw.get("name", conv["case"])
        path = out / f"errors_{name}_p{rep.degree}.csv"
        path.write_text(rep.to_csv())
        print(f"wrote {path}")
        for r in rep.rows:
            orders = " ".join(
                "-" if o is None else f"{o:.2f}"
                for o in (r.l2_order, r.h1_order, r.dg_order)
            )
            print(f"  h={r.h:.6g}  L2={r.l2:.3e}  H1={r.h1:.3e}  DG={r.dg:.3e}  orders {orders}")
    return 0


def cmd_twophase(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    mesh = cfg.mesh()
    scheme = cfg.raw.get("scheme", {})
    ref = ReferenceElement(scheme.get("degree", 1))
    spec = cfg.twophase_spec(mesh)
    tp = cfg.raw.get("twophase", {})
    driver = ImpesDriver(spec, mesh, ref, solver=cfg.solver())
    snapshots = sorted(tp.get("snapshots", [spec.t_end]))
    dt_fixed = tp.get("dt_fixed")
    state = driver.initial_state()
    next_snap = 0
    while state.time < spec.t_end - 1e-14:
        dt = dt_fixed
        if dt is not None:
            dt = min(dt, spec.t_end - state.time)
        if next_snap < len(snapshots):
            target = snapshots[next_snap]
            if dt is None:
                from .twophase import cfl_dt

                dt = cfl_dt(spec, mesh, ref, driver.ctx, state.p, state.s)
                dt = min(dt, spec.t_end - state.time)
            dt = min(dt, max(target - state.time, 1e-14))
        state = driver.step(state, dt)
        rep = state.reports[-1]
        if next_snap < len(snapshots) and state.time >= snapshots[next_snap] - 1e-12:
            tag = f"t{snapshots[next_snap]:g}".replace(".", "p")
            write_vtk(
                out / f"saturation_{tag}.vtk",
                mesh,
                point_fields={"saturation": state.s, "pressure": state.p},
            )
            print(
                f"t={state.time:.5f} dt={rep.dt:.3e} s in [{rep.s_min:.3e}, {rep.s_max:.6f}] "
                f"balance {rep.balance_residual:.2e} -> saturation_{tag}.vtk"
            )
            next_snap += 1
    if "checkpoint" in tp:
        path = out / tp["checkpoint"]
        write_checkpoint(path, mesh, state.p, state.s, state.time)
        print(f"wrote {path}")
    reports = state.reports
    summary = {
        "steps": len(reports),
        "t_end": state.time,
        "s_min": min(r.s_min for r in reports),
        "s_max": max(r.s_max for r in reports),
        "max_balance_residual": max(abs(r.balance_residual) for r in reports),
        "total_clamp_mass": sum(r.clamp_mass for r in reports),
        "total_limiter_mass": sum(r.limiter_mass for r in reports),
    }
    (out / "twophase_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return 0


def cmd_validate(args) -> int:
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"INVALID: {exc}")
        return 1
    problems = []
    try:
        mesh = cfg.mesh()
        print(f"mesh ok: {mesh.n_cells} cells, {mesh.n_edges} edges")
    except Exception as exc:  # surface everything: this is the linting path
        problems.append(f"mesh: {exc}")
    try:
        cfg.solver()
    except Exception as exc:
        problems.append(f"solver: {exc}")
    scheme = cfg.raw.get("scheme", {})
    for key in ("alpha0", "alpha_tilde0", "beta0", "beta_tilde0"):
        if key in scheme and not scheme[key] > 0:
            problems.append(f"scheme.{key} must be positive")
    if problems:
        for p in problems:
            print(f"INVALID: {p}")
        return 1
    print("configuration is valid")
    return 0


def cmd_export_matrix(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    mesh = cfg.mesh()
    scheme = cfg.raw.get("scheme", {})
    ref = ReferenceElement(scheme.get("degree", 1))
    system = build_system(cfg.problem(mesh), mesh, ref)
    name = cfg.raw.get("outputs", {}).get("matrix", "system.mtx")
    path = out / name
    export_matrix_market(system, path)
    print(f"wrote {path} ({system.n} dofs, {system.matrix.nnz} nonzeros)")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracdg",
        description="Interior-penalty DG solver for Darcy flow with fractures",
    )
    parser.add_argument("--list-presets", action="store_true", help="list shipped presets")
    sub = parser.add_subparsers(dest="command")
    for name, fn in [
        ("steady", cmd_steady),
        ("convergence", cmd_convergence),
        ("twophase", cmd_twophase),
        ("validate", cmd_validate),
        ("export-matrix", cmd_export_matrix),
    ]:
        p = sub.add_parser(name)
        p.add_argument("--config", help="path to a JSON run configuration")
        p.add_argument("--preset", help="name of a shipped preset")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="independent-solve parallelism")
        p.set_defaults(func=fn)
    args = parser.parse_args(argv)
    if args.list_presets:
        for name in list_presets():
            print(name)
        return 0
    if not getattr(args, "func", None):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
