import json

import numpy as np
import pytest

from fracdg.cli import main
from fracdg.config import ConfigError, RunConfig, list_presets, load_preset


def write_config(tmp_path, cfg, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


BASE = {
    "version": 1,
    "mesh": {"structured": {"n": 4}},
    "physics": {"km": 1.0, "g_d": {"type": "by_side", "left": 1.0}},
    "scheme": {"degree": 1, "sigma": "sipg", "alpha0": 10.0},
}


def test_schema_rejects_unknown_keys(tmp_path):
    bad = dict(BASE)
    bad["extra_section"] = {}
    with pytest.raises(ConfigError, match="invalid configuration"):
        RunConfig.validate(bad)


def test_schema_rejects_nonpositive_alpha(tmp_path):
    bad = json.loads(json.dumps(BASE))
    bad["scheme"]["alpha0"] = 0.0
    with pytest.raises(ConfigError, match="alpha0"):
        RunConfig.validate(bad)


def test_validate_subcommand_rejects_bad_config(tmp_path, capsys):
    bad = json.loads(json.dumps(BASE))
    bad["scheme"]["alpha0"] = -3.0
    path = write_config(tmp_path, bad)
    assert main(["validate", "--config", str(path)]) == 1
    assert "INVALID" in capsys.readouterr().out


def test_validate_ok(tmp_path, capsys):
    path = write_config(tmp_path, BASE)
    assert main(["validate", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "valid" in out


def test_presets_all_validate():
    names = list_presets()
    assert len(names) == 18
    for name in names:
        cfg = load_preset(name)
        assert cfg.raw["version"] == 1


def test_steady_run_and_outputs(tmp_path):
    cfg = json.loads(json.dumps(BASE))
    cfg["outputs"] = {
        "vtk": "p.vtk",
        "slices": [{"name": "mid", "start": [0.0, 0.5], "end": [1.0, 0.5], "samples": 8}],
    }
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["steady", "--config", str(path), "--out-dir", str(out)]) == 0
    assert (out / "p.vtk").exists()
    assert (out / "slice_mid.csv").exists()


def test_steady_rerun_byte_identical(tmp_path):
    cfg = json.loads(json.dumps(BASE))
    cfg["outputs"] = {
        "slices": [{"name": "mid", "start": [0.0, 0.5], "end": [1.0, 0.5], "samples": 16}]
    }
    path = write_config(tmp_path, cfg)
    outs = []
    for d in ("a", "b"):
        out = tmp_path / d
        assert main(["steady", "--config", str(path), "--out-dir", str(out)]) == 0
        outs.append((out / "slice_mid.csv").read_bytes())
    assert outs[0] == outs[1]


def test_convergence_subcommand(tmp_path):
    cfg = {
        "version": 1,
        "name": "conv",
        "physics": {"manufactured": "fracture-5.1a"},
        "scheme": {"degree": 1, "sigma": "sipg"},
        "convergence": {"case": "fracture-5.1a", "degree": 1, "levels": [8, 16]},
    }
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["convergence", "--config", str(path), "--out-dir", str(out)]) == 0
    csv = (out / "errors_conv_p1.csv").read_text()
    assert csv.splitlines()[0] == "h,l2,l2_order,h1,h1_order,dg,dg_order"
    assert len(csv.strip().splitlines()) == 3


def test_export_matrix(tmp_path):
    cfg = json.loads(json.dumps(BASE))
    cfg["outputs"] = {"matrix": "A.mtx"}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["export-matrix", "--config", str(path), "--out-dir", str(out)]) == 0
    text = (out / "A.mtx").read_text()
    assert text.startswith("%%MatrixMarket matrix coordinate")


def test_twophase_subcommand_small(tmp_path):
    cfg = {
        "version": 1,
        "mesh": {
            "structured": {"n": 4},
            "boundary": {"left": "dirichlet", "right": "dirichlet", "top": "neumann", "bottom": "neumann"},
        },
        "physics": {"km": 1.0, "g_d": {"type": "by_side", "left": 4.0, "right": 1.0}},
        "scheme": {"degree": 1, "sigma": "sipg"},
        "twophase": {"t_end": 5e-4, "dt_max": 1e-4, "snapshots": [5e-4], "checkpoint": "end.ckpt"},
        "outputs": {},
    }
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["twophase", "--config", str(path), "--out-dir", str(out)]) == 0
    summary = json.loads((out / "twophase_summary.json").read_text())
    assert summary["s_max"] <= 1.0 + 1e-12
    assert summary["s_min"] >= -1e-12
    assert (out / "end.ckpt").exists()
    assert (out / "saturation_t0p0005.vtk").exists()


def test_missing_fracture_asset_is_config_error(tmp_path):
    cfg = json.loads(json.dumps(BASE))
    cfg["fractures"] = "asset:fractures/not_there.csv"
    path = write_config(tmp_path, cfg)
    assert main(["steady", "--config", str(path), "--out-dir", str(tmp_path)]) == 1


def test_preset_example_5_2a_runs(tmp_path):
    out = tmp_path / "o"
    assert main(["steady", "--preset", "example_5_2a", "--out-dir", str(out)]) == 0
    assert (out / "pressure.vtk").exists()
    assert (out / "slice_y075_discrepancy.json").exists()
