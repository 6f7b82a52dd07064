#!/usr/bin/env python3
"""Write the shipped preset configurations under src/fracdg/assets/presets/."""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
PRESETS = ROOT / "src" / "fracdg" / "assets" / "presets"
PRESETS.mkdir(parents=True, exist_ok=True)


def write(name, cfg):
    cfg = {"version": 1, "name": name, **cfg}
    (PRESETS / f"{name}.json").write_text(json.dumps(cfg, indent=2) + "\n")
    print(name)


# -- convergence studies -----------------------------------------------------
for case, tag in [("fracture-5.1a", "5_1a"), ("barrier-5.1b", "5_1b")]:
    for degree, levels in [(1, [16, 32, 64, 128]), (2, [8, 16, 32, 64]), (3, [4, 8, 16, 32])]:
        write(
            f"example_{tag}_p{degree}",
            {
                "physics": {"manufactured": case},
                "scheme": {"degree": degree, "sigma": "sipg", "alpha0": 10.0, "alpha_tilde0": 10.0},
                "convergence": {"case": case, "degree": degree, "levels": levels},
            },
        )

# -- single immersed fracture (450- and 404-cell grids) ----------------------
for grid, gtag in [("single_vertical", ""), ("single_slanted", "_slanted")]:
    slices = (
        [
            {"name": "y075", "start": [0.0, 0.75], "end": [1.0, 0.75], "samples": 200,
             "reference": f"asset:references/{grid}_a_y075.csv"},
        ]
        if gtag == ""
        else [
            {"name": "y05", "start": [0.0, 0.5], "end": [1.0, 0.5], "samples": 200,
             "reference": f"asset:references/{grid}_a_y05.csv"},
        ]
    )
    write(
        f"example_5_2a{gtag}",
        {
            "mesh": {
                "file": f"asset:meshes/{grid}.msh",
                "boundary": {"top": "dirichlet", "bottom": "dirichlet", "left": "neumann", "right": "neumann"},
            },
            "fractures": f"asset:fractures/{grid}.csv",
            "physics": {"km": 1.0, "g_d": {"type": "by_side", "top": 1.0, "bottom": 0.0}},
            "scheme": {"degree": 1, "sigma": "sipg", "alpha0": 5.0, "alpha_tilde0": 5.0e5},
            "outputs": {"vtk": "pressure.vtk", "slices": slices},
        },
    )
    bslices = (
        [
            {"name": "y075", "start": [0.0, 0.75], "end": [1.0, 0.75], "samples": 200,
             "reference": f"asset:references/{grid}_b_y075.csv"},
        ]
        if gtag == ""
        else [
            {"name": "y05", "start": [0.0, 0.5], "end": [1.0, 0.5], "samples": 200,
             "reference": f"asset:references/{grid}_b_y05.csv"},
        ]
    )
    write(
        f"example_5_2b{gtag}",
        {
            "mesh": {
                "file": f"asset:meshes/{grid}.msh",
                "boundary": {"left": "dirichlet", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
            },
            "fractures": f"asset:fractures/{grid}_blocking.csv",
            "physics": {"km": 1.0, "g_d": {"type": "by_side", "left": 0.0, "right": 1.0}},
            "scheme": {"degree": 1, "sigma": "sipg", "alpha0": 10.0},
            "outputs": {"vtk": "pressure.vtk", "slices": bslices},
        },
    )

# -- regular fracture network -------------------------------------------------
write(
    "example_5_3a",
    {
        "mesh": {
            "file": "asset:meshes/regular_network.msh",
            "boundary": {"left": "neumann", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
        },
        "fractures": "asset:fractures/regular_network.csv",
        "physics": {
            "km": 1.0,
            "g_d": {"type": "by_side", "right": 1.0},
            "g_n": {"type": "by_side", "left": 1.0},
        },
        "scheme": {"degree": 1, "sigma": "sipg", "alpha0": 1e4, "alpha_tilde0": 10.0},
        "outputs": {
            "vtk": "pressure.vtk",
            "slices": [
                {"name": "y07", "start": [0.0, 0.7], "end": [1.0, 0.7], "samples": 200,
                 "reference": "asset:references/regular_network_a_y07.csv"},
                {"name": "x05", "start": [0.5, 0.0], "end": [0.5, 1.0], "samples": 200,
                 "reference": "asset:references/regular_network_a_x05.csv"},
            ],
        },
    },
)
write(
    "example_5_3b",
    {
        "mesh": {
            "file": "asset:meshes/regular_network.msh",
            "boundary": {"left": "neumann", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
        },
        "fractures": "asset:fractures/regular_network_blocking.csv",
        "physics": {
            "km": 1.0,
            "g_d": {"type": "by_side", "right": 1.0},
            "g_n": {"type": "by_side", "left": 1.0},
        },
        "scheme": {"degree": 1, "sigma": "sipg", "alpha0": 10.0},
        "outputs": {
            "vtk": "pressure.vtk",
            "slices": [
                {"name": "diag", "start": [0.0, 0.1], "end": [0.9, 1.0], "samples": 200,
                 "reference": "asset:references/regular_network_b_diag.csv"},
            ],
        },
    },
)

# -- complex network -----------------------------------------------------------
for tag, side_map, g_d in [
    ("a", {"top": "dirichlet", "bottom": "dirichlet", "left": "neumann", "right": "neumann"},
     {"type": "by_side", "top": 4.0, "bottom": 1.0}),
    ("b", {"left": "dirichlet", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
     {"type": "by_side", "left": 4.0, "right": 1.0}),
]:
    write(
        f"example_5_4{tag}",
        {
            "mesh": {"file": "asset:meshes/complex_network.msh", "boundary": side_map},
            "fractures": "asset:fractures/complex_network.csv",
            "physics": {"km": 1.0, "g_d": g_d},
            "scheme": {"degree": 1, "sigma": "sipg", "alpha0": 10.0, "alpha_tilde0": 10.0},
            "outputs": {
                "vtk": "pressure.vtk",
                "slices": [
                    {"name": "diag", "start": [0.0, 0.5], "end": [1.0, 0.9], "samples": 200,
                     "reference": f"asset:references/complex_network_{tag}_diag.csv"},
                ],
            },
        },
    )

# -- realistic network ----------------------------------------------------------
for tag, frac_file, alpha0, alpha_t0 in [
    ("a", "realistic_network.csv", 1e-5, 1e-5),
    ("b", "realistic_network_blocking.csv", 1e-4, 1e-4),
]:
    write(
        f"example_5_5{tag}",
        {
            "mesh": {
                "file": "asset:meshes/realistic_network.msh",
                "boundary": {"left": "dirichlet", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
            },
            "fractures": f"asset:fractures/{frac_file}",
            "physics": {"km": 1e-14, "g_d": {"type": "by_side", "left": 1013250.0, "right": 0.0}},
            "scheme": {"degree": 1, "sigma": "sipg", "alpha0": alpha0, "alpha_tilde0": alpha_t0},
            "outputs": {
                "vtk": "pressure.vtk",
                "slices": [
                    {"name": "y500", "start": [0.0, 500.0], "end": [700.0, 500.0], "samples": 200,
                     "reference": f"asset:references/realistic_network_{tag}_y500.csv"},
                    {"name": "x625", "start": [625.0, 0.0], "end": [625.0, 600.0], "samples": 200,
                     "reference": f"asset:references/realistic_network_{tag}_x625.csv"},
                ],
            },
        },
    )

# -- two-phase on the complex network -------------------------------------------
for tag, side_map, g_d, t_end, snaps in [
    ("a", {"top": "dirichlet", "bottom": "dirichlet", "left": "neumann", "right": "neumann"},
     {"type": "by_side", "top": 4.0, "bottom": 1.0}, 0.04, [0.01, 0.02, 0.03, 0.04]),
    ("b", {"left": "dirichlet", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
     {"type": "by_side", "left": 4.0, "right": 1.0}, 0.06, [0.015, 0.03, 0.045, 0.06]),
]:
    write(
        f"example_6_1{tag}",
        {
            "mesh": {"file": "asset:meshes/complex_network.msh", "boundary": side_map},
            "fractures": "asset:fractures/complex_network.csv",
            "physics": {"km": 1.0, "g_d": g_d},
            "scheme": {
                "degree": 1, "sigma": "sipg", "alpha0": 10.0, "alpha_tilde0": 10.0,
                "beta0": 2.0, "beta_tilde0": 2.0, "tvb_m": 0.0,
            },
            "twophase": {
                "phi_m": 0.2, "phi_f": 1.0, "mu_n": 1.0, "mu_w": 1.0, "kr": "linear",
                "s_dw": 1.0, "s_w0": 0.0, "t_end": t_end, "dt_max": 2e-4,
                "snapshots": snaps, "checkpoint": "final.ckpt",
            },
            "outputs": {},
        },
    )
