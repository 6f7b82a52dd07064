"""Run configuration: strict JSON schema, asset resolution, object building."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from jsonschema import Draft202012Validator

from .gmsh_io import import_gmsh, read_fracture_csv
from .manufactured import CASES
from .mesh import FractureSegmentSpec, Mesh, generate_structured, _side_classifier
from .problem import ProblemSpec
from .sparse import SolverConfig
from .twophase import TwoPhaseSpec

_SIDE = {"enum": ["dirichlet", "neumann"]}
_SIDE_MAP = {
    "type": "object",
    "properties": {"left": _SIDE, "right": _SIDE, "top": _SIDE, "bottom": _SIDE},
    "additionalProperties": False,
}
_BOUNDARY_DATA = {
    "oneOf": [
        {"type": "number"},
        {
            "type": "object",
            "properties": {
                "type": {"const": "by_side"},
                "left": {"type": "number"},
                "right": {"type": "number"},
                "top": {"type": "number"},
                "bottom": {"type": "number"},
            },
            "required": ["type"],
            "additionalProperties": False,
        },
    ]
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "version": {"const": 1},
        "name": {"type": "string"},
        "mesh": {
            "type": "object",
            "properties": {
                "structured": {
                    "type": "object",
                    "properties": {
                        "n": {"type": "integer", "minimum": 1},
                        "pattern": {"enum": ["/", "\\"]},
                    },
                    "required": ["n"],
                    "additionalProperties": False,
                },
                "file": {"type": "string"},
                "boundary": _SIDE_MAP,
            },
            "additionalProperties": False,
        },
        "fractures": {"type": "string"},
        "physics": {
            "type": "object",
            "properties": {
                "km": {
                    "oneOf": [
                        {"type": "number", "exclusiveMinimum": 0},
                        {
                            "type": "array",
                            "items": {"type": "array", "items": {"type": "number"}},
                        },
                    ]
                },
                "q": {"type": "number"},
                "qf": {"type": "number"},
                "g_d": _BOUNDARY_DATA,
                "g_n": _BOUNDARY_DATA,
                "manufactured": {"enum": sorted(CASES)},
            },
            "additionalProperties": False,
        },
        "scheme": {
            "type": "object",
            "properties": {
                "degree": {"type": "integer", "minimum": 0, "maximum": 4},
                "sigma": {"enum": ["sipg", "nipg", "iipg", -1, 0, 1]},
                "alpha0": {"type": "number", "exclusiveMinimum": 0},
                "alpha_tilde0": {"type": "number", "exclusiveMinimum": 0},
                "beta0": {"type": "number", "exclusiveMinimum": 0},
                "beta_tilde0": {"type": "number", "exclusiveMinimum": 0},
                "tvb_m": {"type": "number", "minimum": 0},
                "cfl": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "method": {"enum": ["auto", "direct", "cg", "bicgstab"]},
                "tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "max_iterations": {"type": "integer", "minimum": 1},
                "preconditioner": {"enum": ["none", "diagonal", "ilu"]},
            },
            "additionalProperties": False,
        },
        "convergence": {
            "type": "object",
            "properties": {
                "case": {"enum": sorted(CASES)},
                "degree": {"type": "integer", "minimum": 1, "maximum": 4},
                "levels": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 2},
                    "minItems": 1,
                },
            },
            "required": ["case", "degree", "levels"],
            "additionalProperties": False,
        },
        "twophase": {
            "type": "object",
            "properties": {
                "phi_m": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "phi_f": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "mu_n": {"type": "number", "exclusiveMinimum": 0},
                "mu_w": {"type": "number", "exclusiveMinimum": 0},
                "kr": {"enum": ["linear", "quadratic"]},
                "s_dw": {"type": "number"},
                "s_w0": {"type": "number"},
                "g_nw": _BOUNDARY_DATA,
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "dt_max": {"type": "number", "exclusiveMinimum": 0},
                "dt_fixed": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "snapshots": {"type": "array", "items": {"type": "number"}},
                "checkpoint": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "outputs": {
            "type": "object",
            "properties": {
                "vtk": {"type": "string"},
                "table": {"type": "string"},
                "matrix": {"type": "string"},
                "slices": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "name": {"type": "string"},
                            "start": {
                                "type": "array",
                                "items": {"type": "number"},
                                "minItems": 2,
                                "maxItems": 2,
                            },
                            "end": {
                                "type": "array",
                                "items": {"type": "number"},
                                "minItems": 2,
                                "maxItems": 2,
                            },
                            "samples": {"type": "integer", "minimum": 1},
                            "reference": {"type": "string"},
                        },
                        "required": ["name", "start", "end"],
                        "additionalProperties": False,
                    },
                },
            },
            "additionalProperties": False,
        },
    },
    "required": ["version"],
    "additionalProperties": False,
}

_VALIDATOR = Draft202012Validator(SCHEMA)


class ConfigError(Exception):
    pass


def asset_path(rel: str) -> Path:
    base = resources.files("fracdg") / "assets"
    return Path(str(base / rel))


def resolve_path(value: str, base_dir: Optional[Path] = None) -> Path:
    if value.startswith("asset:"):
        p = asset_path(value[len("asset:"):])
    else:
        p = Path(value)
        if not p.is_absolute() and base_dir is not None:
            p = base_dir / p
    return p


@dataclass
class RunConfig:
    raw: dict
    base_dir: Optional[Path] = None

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        raw = json.loads(path.read_text())
        return cls.validate(raw, base_dir=path.parent)

    @classmethod
    def validate(cls, raw: dict, base_dir: Optional[Path] = None) -> "RunConfig":
        errors = sorted(_VALIDATOR.iter_errors(raw), key=lambda e: e.json_path)
        if errors:
            msgs = "; ".join(f"{e.json_path}: {e.message}" for e in errors)
            raise ConfigError(f"invalid configuration: {msgs}")
        return cls(raw, base_dir)

    # -- builders ---------------------------------------------------------

    def segments(self) -> list[FractureSegmentSpec]:
        src = self.raw.get("fractures")
        if src is None:
            return []
        p = resolve_path(src, self.base_dir)
        if not p.exists():
            raise ConfigError(f"fracture file not found: {p}")
        return read_fracture_csv(p.read_text())

    def mesh(self) -> Mesh:
        mcfg = self.raw.get("mesh", {})
        segments = self.segments()
        side_map = mcfg.get("boundary")
        if "structured" in mcfg:
            sc = mcfg["structured"]
            return generate_structured(
                sc["n"], segments, side_map=side_map, pattern=sc.get("pattern", "/")
            )
        if "file" in mcfg:
            p = resolve_path(mcfg["file"], self.base_dir)
            if not p.exists():
                raise ConfigError(f"mesh file not found: {p}")
            text = p.read_text()
            if side_map is not None or segments:
                # re-classify geometrically against the declared data
                raw_mesh = import_gmsh(text)
                lo = raw_mesh.vertices.min(axis=0)
                hi = raw_mesh.vertices.max(axis=0)
                return Mesh(
                    raw_mesh.vertices,
                    raw_mesh.cells,
                    segments=segments,
                    boundary_class=_side_classifier(side_map, lo=lo, hi=hi),
                )
            return import_gmsh(text)
        raise ConfigError("mesh section must give either 'structured' or 'file'")

    def boundary_value(self, key: str, default=0.0):
        phys = self.raw.get("physics", {})
        data = phys.get(key, default)
        if isinstance(data, (int, float)):
            return float(data)
        values = {k: float(v) for k, v in data.items() if k != "type"}

        def by_side(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            out = np.zeros(np.broadcast(x, y).shape)
            lo, hi = self._bbox
            tol = 1e-9 * max(hi[0] - lo[0], hi[1] - lo[1])
            sides = {
                "left": np.abs(x - lo[0]) < tol,
                "right": np.abs(x - hi[0]) < tol,
                "bottom": np.abs(y - lo[1]) < tol,
                "top": np.abs(y - hi[1]) < tol,
            }
            for name, mask in sides.items():
                out = np.where(mask, values.get(name, 0.0), out)
            return out

        return by_side

    def problem(self, mesh: Mesh) -> ProblemSpec:
        self._bbox = (mesh.vertices.min(axis=0), mesh.vertices.max(axis=0))
        phys = self.raw.get("physics", {})
        scheme = self.raw.get("scheme", {})
        if "manufactured" in phys:
            from .manufactured import get_case

            case = get_case(
                phys["manufactured"],
                sigma=scheme.get("sigma", "sipg"),
                alpha0=scheme.get("alpha0", 10.0),
                alpha_tilde0=scheme.get("alpha_tilde0", 10.0),
            )
            return case.spec
        km = phys.get("km", 1.0)
        if isinstance(km, list):
            km = np.asarray(km, dtype=float)
        return ProblemSpec(
            km=km,
            segments=self.segments(),
            q=phys.get("q", 0.0),
            qf=phys.get("qf", 0.0),
            g_d=self.boundary_value("g_d"),
            g_n=self.boundary_value("g_n"),
            sigma=scheme.get("sigma", "sipg"),
            alpha0=scheme.get("alpha0", 10.0),
            alpha_tilde0=scheme.get("alpha_tilde0", 10.0),
        )

    def twophase_spec(self, mesh: Mesh) -> TwoPhaseSpec:
        base = self.problem(mesh)
        tp = self.raw.get("twophase", {})
        scheme = self.raw.get("scheme", {})
        kr = tp.get("kr", "linear")
        if kr == "linear":
            krw = lambda s: s  # noqa: E731
            krn = lambda s: 1.0 - s  # noqa: E731
        else:
            krw = lambda s: s**2  # noqa: E731
            krn = lambda s: (1.0 - s) ** 2  # noqa: E731
        return TwoPhaseSpec(
            km=base.km,
            segments=base.segments,
            g_d=base.g_d,
            g_n=base.g_n,
            sigma=base.sigma,
            alpha0=base.alpha0,
            alpha_tilde0=base.alpha_tilde0,
            phi_m=tp.get("phi_m", 0.2),
            phi_f=tp.get("phi_f", 1.0),
            mu_n=tp.get("mu_n", 1.0),
            mu_w=tp.get("mu_w", 1.0),
            krn=krn,
            krw=krw,
            s_dw=tp.get("s_dw", 1.0),
            s_w0=tp.get("s_w0", 0.0),
            g_nw=self.raw.get("twophase", {}).get("g_nw", 0.0),
            beta0=scheme.get("beta0", 2.0),
            beta_tilde0=scheme.get("beta_tilde0", 2.0),
            cfl=scheme.get("cfl"),
            tvb_m=scheme.get("tvb_m", 0.0),
            dt_max=tp.get("dt_max", 1e-3),
            t_end=tp.get("t_end", 0.06),
        )

    def solver(self) -> SolverConfig:
        s = self.raw.get("solver", {})
        return SolverConfig(
            method=s.get("method", "auto"),
            tol=s.get("tol", 1e-12),
            max_iterations=s.get("max_iterations", 20000),
            preconditioner=s.get("preconditioner", "none"),
        )


def load_preset(name: str) -> RunConfig:
    p = asset_path(f"presets/{name}.json")
    if not p.exists():
        raise ConfigError(f"unknown preset {name!r}")
    return RunConfig.load(p)


def list_presets() -> list[str]:
    d = asset_path("presets")
    return sorted(p.stem for p in Path(d).glob("*.json"))
