import json

import numpy as np

from thirdscat import harness as hs
from thirdscat import io
from thirdscat.cli import main

SOLITON_CFG = {"grid": {"x_min": -18, "x_max": 18, "n_points": 3073}}


def _run(args, tmp_path, name):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_free_forward(tmp_path):
    code, out = _run(["forward", "--preset", "free"], tmp_path, "free")
    assert code == hs.EXIT_PASS
    data = io.read_dataset(out / "dataset.json")
    assert np.max(np.abs(data.Tl["L1"] - 1)) < 1e-8 and np.max(np.abs(data.L)) < 1e-8
    assert data.bound_states == []
    rep = _report(out)
    assert rep["status"] == "pass" and rep["provenance"]["code_version"]
    assert {"profile_f.csv", "profile_g.csv", "dataset.json"} <= set(rep["files"])


def test_weak_gauss_forward_checks_pass(tmp_path):
    code, out = _run(["forward", "--preset", "gauss", "--param", "q_amp=0.05", "--param", "p_amp=0.015"],
                     tmp_path, "g")
    assert code == hs.EXIT_PASS
    names = {c["name"] for c in _report(out)["checks"]}
    assert {"wronskian_constancy", "dual_route_transmission", "coupling_identity_left"} <= names


def test_usage_errors(tmp_path, capsys):
    assert main(["forward", "--config", str(tmp_path / "missing.json")]) == hs.EXIT_USAGE
    assert "not found" in capsys.readouterr().err
    assert main(["forward", "--tolerance", "root_tol=-1", "--out", str(tmp_path)]) == hs.EXIT_USAGE
    assert main(["forward", "--tolerance", "bogus=1", "--out", str(tmp_path)]) == hs.EXIT_USAGE
    assert main(["forward", "--preset", "nope", "--out", str(tmp_path)]) == hs.EXIT_USAGE
    assert main(["nonsense"]) == hs.EXIT_USAGE


def test_config_hash_tracks_content():
    a = hs.RunConfig.build(overrides={"pipeline": "forward"})
    b = hs.RunConfig.build(overrides={"pipeline": "forward"})
    c = hs.RunConfig.build(overrides={"pipeline": "forward", "tolerances": {"root_tol": 1e-9}})
    assert a.hash == b.hash != c.hash


def test_soliton_outputs_are_deterministic(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SOLITON_CFG))
    outs = [_run(["rh-solitons", "--config", str(cfg)], tmp_path, f"r{i}") for i in range(2)]
    assert all(code == hs.EXIT_PASS for code, _ in outs)
    for name in ("report.json", "potential.csv", "poles.json"):
        assert (outs[0][1] / name).read_bytes() == (outs[1][1] / name).read_bytes()


def test_reflectionless_roundtrip(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SOLITON_CFG))
    code, out = _run(["roundtrip", "--mode", "reflectionless", "--config", str(cfg)], tmp_path, "rt")
    assert code == hs.EXIT_PASS
    checks = {c["name"]: c for c in _report(out)["checks"]}
    assert checks["pole_0_location"]["value"] < 1e-5 and checks["reflections"]["value"] < 1e-4


def test_marchenko_skips_on_secondary_reflections(tmp_path):
    code, out = _run(["marchenko", "--preset", "weak-gauss"], tmp_path, "mk")
    assert code == hs.EXIT_MODEL
    rep = _report(out)
    assert rep["status"] == "skipped"
    assert rep["skipped"].startswith("skipped: secondary reflections exceed m_n_tol")


def test_emit_plots(tmp_path):
    _, free_out = _run(["forward", "--preset", "free"], tmp_path, "free")
    assert main(["emit-plots", "reflection", str(free_out / "dataset.json"), "--out", str(tmp_path / "pl")]) == 0
    a = np.loadtxt(tmp_path / "pl" / "reflection.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(a[:, 1:])) < 1e-8

    x = np.linspace(-1, 1, 3)
    io.write_potential_csv(x, x + 0j, 2 * x + 0j, tmp_path / "pot.csv")
    assert main(["emit-plots", "potential", str(tmp_path / "pot.csv"), "--out", str(tmp_path / "pl")]) == 0

    class Sol:
        pass
    sol = Sol()
    sol.x, sol.y = np.array([-0.5, 0.5]), np.array([0.1, 0.2, 0.3])
    sol.F = np.arange(6).reshape(2, 3) * (1 + 1j)
    io.write_marchenko_csv(sol, tmp_path / "F.csv")
    assert main(["emit-plots", "marchenko-slice", str(tmp_path / "F.csv"), "--x", "0.4",
                 "--out", str(tmp_path / "pl")]) == 0
    sl = np.loadtxt(tmp_path / "pl" / "marchenko_slice_x+0.500.csv", delimiter=",", skiprows=1)
    assert np.allclose(sl[:, 1], [3, 4, 5])
    assert main(["emit-plots", "potential", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 2
