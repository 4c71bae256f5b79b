import json
import os

import pytest

from mfgnet import presets
from mfgnet.cli import main
from mfgnet.network import save_network


@pytest.fixture
def star_file(tmp_path):
    path = tmp_path / "star.json"
    save_network(presets.star_network(), path)
    return str(path)


@pytest.fixture
def four_edge_file(tmp_path):
    path = tmp_path / "four_edge.json"
    save_network(presets.four_edge_network(), path)
    return str(path)


def write_cfg(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


MFG_CFG = {
    "grid": {"cells": 16, "horizon": 0.75, "nt": 50},
    "hamiltonian": {"kind": "clipped_quadratic", "amax": 1.0},
    "coupling": {"kind": "local", "F": "identity"},
    "fp": {"m0": {"kind": "uniform"}},
    "hjb": {"terminal": {"kind": "cosine", "amplitudes": [0.6, 0.3, 0.1]}},
    "mfg": {"omega": 0.5, "tol": 1e-8},
}


def test_validate_four_edge_network(four_edge_file, capsys):
    assert main(["validate", "--net", four_edge_file]) == 0
    out = capsys.readouterr().out
    assert "4 vertices, 4 edges" in out
    assert "valid" in out


def test_validate_reports_violations(tmp_path, capsys):
    net = presets.star_network(ps=(0.5, 0.25, 0.2))
    path = tmp_path / "bad.json"
    save_network(net, path)
    assert main(["validate", "--net", str(path)]) == 1
    assert "probabilities sum" in capsys.readouterr().out


def test_solve_mfg_decoupled_converges_with_manifest(tmp_path, star_file,
                                                     capsys):
    cfg = {
        "grid": {"cells": 12, "horizon": 0.5, "nt": 30},
        "hamiltonian": {"kind": "zero"},
        "coupling": {"kind": "local", "F": "zero"},
        "fp": {"m0": {"kind": "uniform"}},
        "hjb": {"terminal": {"kind": "cosine", "amplitudes": 0.5}},
        "mfg": {"omega": 1.0, "tol": 1e-10},
    }
    cfg_file = write_cfg(tmp_path, "dec.json", cfg)
    out = str(tmp_path / "out")
    assert main(["solve-mfg", "--net", star_file, "--config", cfg_file,
                 "--out", out]) == 0
    summary = (tmp_path / "out" / "summary.txt").read_text()
    assert "converged=true" in summary
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["command"] == "solve-mfg"
    assert manifest["network_sha256"]
    assert manifest["versions"]["mfgnet"]


def test_solve_fp_outputs_and_determinism(tmp_path, star_file):
    cfg = {"grid": {"cells": 16, "horizon": 0.5, "nt": 40},
           "fp": {"drift": {"kind": "sine", "amplitude": 0.5},
                  "m0": {"kind": "uniform"}}}
    cfg_file = write_cfg(tmp_path, "fp.json", cfg)
    outs = []
    for name in ("o1", "o2"):
        out = str(tmp_path / name)
        assert main(["solve-fp", "--net", star_file, "--config", cfg_file,
                     "--out", out]) == 0
        outs.append(out)
    for fname in sorted(os.listdir(outs[0])):
        if fname == "manifest.json":
            continue
        b1 = open(os.path.join(outs[0], fname), "rb").read()
        b2 = open(os.path.join(outs[1], fname), "rb").read()
        assert b1 == b2, fname
    diag = (tmp_path / "o1" / "diagnostics.csv").read_text().splitlines()
    assert diag[0] == "t,mass,min_m,jump_residual"
    masses = [float(line.split(",")[1]) for line in diag[1:]]
    assert all(abs(m - 1.0) < 1e-10 for m in masses)


def test_solve_hjb_outputs(tmp_path, star_file):
    cfg = {"grid": {"cells": 16, "horizon": 0.5, "nt": 40},
           "hamiltonian": {"kind": "clipped_quadratic", "amax": 1.0},
           "hjb": {"terminal": {"kind": "cosine",
                                "amplitudes": [0.4, 0.2, 0.1]}}}
    cfg_file = write_cfg(tmp_path, "hjb.json", cfg)
    out = str(tmp_path / "out")
    assert main(["solve-hjb", "--net", star_file, "--config", cfg_file,
                 "--out", out]) == 0
    files = os.listdir(out)
    assert "kirchhoff_residual.csv" in files
    assert "gradient_system_residual.csv" in files
    assert any(f.startswith("value_") for f in files)


def test_eig_outputs(tmp_path, star_file):
    out = str(tmp_path / "out")
    assert main(["eig", "--net", star_file, "--k", "5", "--out", out]) == 0
    rows = (tmp_path / "out" / "eigenvalues.csv").read_text().splitlines()
    assert len(rows) == 6
    first = float(rows[1].split(",")[1])
    assert abs(first) < 1e-8


def test_simulate_with_fp_comparison(tmp_path, star_file):
    cfg = {"grid": {"cells": 16, "horizon": 0.5, "nt": 50},
           "fp": {"m0": {"kind": "uniform"}, "scheme": "centered"},
           "sim": {"n_paths": 5000, "dt": 0.005, "t_final": 0.5,
                   "record_times": [0.25, 0.5], "seed": 3,
                   "drift": {"kind": "constant", "value": 0.3},
                   "compare_to_fp": True}}
    cfg_file = write_cfg(tmp_path, "sim.json", cfg)
    out = str(tmp_path / "out")
    assert main(["simulate", "--net", star_file, "--config", cfg_file,
                 "--out", out]) == 0
    files = os.listdir(out)
    assert "histogram_00.csv" in files and "histogram_01.csv" in files
    tv_rows = (tmp_path / "out" / "tv_comparison.csv").read_text().splitlines()
    tvs = [float(r.split(",")[1]) for r in tv_rows[1:]]
    assert all(0.0 <= tv < 0.5 for tv in tvs)


def test_check_command_passes_on_benchmark(tmp_path, star_file, capsys):
    cfg_file = write_cfg(tmp_path, "mfg.json", MFG_CFG)
    assert main(["check", "--net", star_file, "--config", cfg_file]) == 0
    out = capsys.readouterr().out
    assert "fp-mass-conservation" in out
    assert "FAIL" not in out


def test_hamiltonian_per_edge_overrides(tmp_path, star_file):
    from mfgnet.cli import build_hamiltonian, load_config
    from mfgnet.network import load_network
    cfg_file = write_cfg(tmp_path, "ov.json", {
        "hamiltonian": {"kind": "clipped_quadratic", "amax": 1.0,
                        "overrides": {"e2": {"kind": "zero"},
                                      "e3": {"kind": "clipped_linear",
                                             "amax": 2.0, "cost": 0.5}}}})
    net = load_network(star_file)
    model = build_hamiltonian(net, load_config(cfg_file))
    assert model.H(0, 0.5, 2.0) == pytest.approx(1.5)   # base family
    assert model.H(1, 0.5, 2.0) == 0.0                  # zero override
    assert model.H(2, 0.5, 2.0) == pytest.approx(3.0)   # 2 * (|2| - 0.5)
    assert model.c0 == 2.0  # the largest bound among base and overrides


def test_per_edge_drift_config(tmp_path, star_file):
    cfg = {"grid": {"cells": 12, "horizon": 0.5, "nt": 30},
           "fp": {"drift": {"kind": "per_edge",
                            "values": {"e1": 0.5, "e2": -0.2, "e3": 0.0}},
                  "m0": {"kind": "uniform"}}}
    cfg_file = write_cfg(tmp_path, "drift.json", cfg)
    out = str(tmp_path / "out")
    assert main(["solve-fp", "--net", star_file, "--config", cfg_file,
                 "--out", out]) == 0


def test_unknown_config_key_rejected(tmp_path, star_file, capsys):
    cfg_file = write_cfg(tmp_path, "bad.json",
                         {"grid": {"cells": 8, "resolution": 9}})
    assert main(["solve-fp", "--net", star_file, "--config", cfg_file,
                 "--out", str(tmp_path / "o")]) == 2
    assert "unknown key grid.resolution" in capsys.readouterr().err


def test_unknown_section_rejected(tmp_path, star_file, capsys):
    cfg_file = write_cfg(tmp_path, "bad.json", {"grids": {}})
    assert main(["solve-fp", "--net", star_file, "--config", cfg_file,
                 "--out", str(tmp_path / "o")]) == 2
    assert "unknown config section" in capsys.readouterr().err


def test_missing_network_file_reports_error(tmp_path, capsys):
    assert main(["validate", "--net", str(tmp_path / "nope.json")]) == 2
    assert "error:" in capsys.readouterr().err
