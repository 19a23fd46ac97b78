import json

import numpy as np
import pytest

from sqzsta import cli, io

SMALL_TRAP = {
    "scheme": "trap-open",
    "initial": {"r": 0.0, "phi": 0.0, "epsilon": 1.0},
    "target": {"r": 0.2, "phi": 0.0, "epsilon": 1.5},
    "tf": 2.0,
    "fock_dim": 30,
    "steps": 2000,
    "grid_points": 501,
}


def write_spec(tmp_path, doc, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(tmp_path, *args):
    return cli.main([*args, "--out-dir", str(tmp_path / "runs"), "--quiet"])


def out_dir(tmp_path, doc):
    return io.run_dir(tmp_path / "runs", io.spec_hash(doc))


def test_design_and_verify_pass(tmp_path):
    spec = write_spec(tmp_path, SMALL_TRAP)
    assert run(tmp_path, "design", "--spec", spec) == cli.EXIT_OK
    d = out_dir(tmp_path, SMALL_TRAP)
    tab = io.read_csv(d / "controls.csv")
    assert tab["omega_c_sq"][0] == pytest.approx(1.0)
    assert tab["gamma"][0] == pytest.approx(0.0, abs=1e-14)
    assert run(tmp_path, "verify", "--spec", spec) == cli.EXIT_OK
    report = json.loads((d / "report.json").read_text())
    assert report["passed"]
    assert report["spec_hash"] == io.spec_hash(SMALL_TRAP)
    assert (d / "trajectory.csv").read_text().splitlines()[1].startswith("t,fidelity_to_target")


def test_reruns_are_byte_identical(tmp_path):
    spec = write_spec(tmp_path, SMALL_TRAP)
    d = out_dir(tmp_path, SMALL_TRAP)
    run(tmp_path, "verify", "--spec", spec, "--gaussian-only")
    first = {n: (d / n).read_bytes() for n in ("controls.csv", "report.json", "trajectory.csv")}
    for n in first:
        (d / n).unlink()
    run(tmp_path, "verify", "--spec", spec, "--gaussian-only")
    assert all((d / n).read_bytes() == b for n, b in first.items())


def test_dropping_dephasing_fails_on_entropy(tmp_path):
    spec = write_spec(tmp_path, SMALL_TRAP)
    run(tmp_path, "design", "--spec", spec)
    d = out_dir(tmp_path, SMALL_TRAP)
    tab = io.read_csv(d / "controls.csv")
    tab["gamma"] = np.zeros_like(tab["gamma"])
    io.write_table(tmp_path / "unitary.csv", tab, "hand-edited")
    code = run(tmp_path, "verify", "--spec", spec, "--controls", str(tmp_path / "unitary.csv"), "--gaussian-only")
    assert code == cli.EXIT_VERIFY
    checks = {c["name"]: c for c in json.loads((d / "report.json").read_text())["checks"]}
    assert not checks["gaussian_entropy_gap"]["passed"]


def test_identity_spec_has_zero_corrections(tmp_path):
    doc = dict(SMALL_TRAP, target=SMALL_TRAP["initial"])
    spec = write_spec(tmp_path, doc)
    assert run(tmp_path, "design", "--spec", spec) == cli.EXIT_OK
    tab = io.read_csv(out_dir(tmp_path, doc) / "controls.csv")
    assert np.allclose(tab["gamma"], 0) and np.allclose(tab["omega_c_sq"], 1)


def test_raman_closed_phase_constraint(tmp_path):
    doc = {"scheme": "raman-closed", "initial": {"r": 0, "phi": 0, "epsilon": 1},
           "target": {"r": 1, "phi": 0.0, "epsilon": 1}, "tf": 1}
    assert run(tmp_path, "design", "--spec", write_spec(tmp_path, doc)) == cli.EXIT_INPUT
    doc["target"]["phi"] = -2.0
    assert run(tmp_path, "design", "--spec", write_spec(tmp_path, doc)) == cli.EXIT_OK
    doc2 = dict(doc, target={"r": 1, "phi": 0.0, "epsilon": 1}, phase_override=True)
    assert run(tmp_path, "design", "--spec", write_spec(tmp_path, doc2)) == cli.EXIT_OK


def test_trap_scheme_rejects_phase(tmp_path):
    doc = dict(SMALL_TRAP, target={"r": 0.2, "phi": 0.5, "epsilon": 1.5})
    assert run(tmp_path, "design", "--spec", write_spec(tmp_path, doc)) == cli.EXIT_INPUT


def test_jc_cooling_is_infeasible(tmp_path):
    doc = {"scheme": "jc-open", "initial": {"r": 0, "phi": 0, "epsilon": 1},
           "target": {"r": 0, "phi": 0, "epsilon": 2}, "tf": 1}
    assert run(tmp_path, "design", "--spec", write_spec(tmp_path, doc)) == cli.EXIT_INFEASIBLE
    meta = json.loads((out_dir(tmp_path, doc) / "controls.json").read_text())
    assert meta["feasible"] is False and meta["time"] is not None


def test_bad_input_exit_code(tmp_path):
    assert run(tmp_path, "design", "--spec", str(tmp_path / "missing.json")) == cli.EXIT_INPUT
    bad = dict(SMALL_TRAP, scheme="warp-drive")
    assert run(tmp_path, "design", "--spec", write_spec(tmp_path, bad)) == cli.EXIT_INPUT
    assert cli.main(["no-such-command"]) == cli.EXIT_INPUT


def test_missing_control_columns(tmp_path):
    spec = write_spec(tmp_path, SMALL_TRAP)
    io.write_csv(tmp_path / "c.csv", ("t", "kappa"), [(0.0, 0.0), (1.0, 0.0)], "x")
    assert run(tmp_path, "verify", "--spec", spec, "--controls", str(tmp_path / "c.csv")) == cli.EXIT_INPUT


def test_variance_map_command(tmp_path):
    doc = {"omega_ratio": [0.5, 3.0, 6], "beta_ratio": [0.5, 3.0, 6]}
    assert run(tmp_path, "variance-map", "--spec", write_spec(tmp_path, doc)) == cli.EXIT_OK
    tab = io.read_csv(out_dir(tmp_path, doc) / "variance_map.csv")
    assert len(tab["db"]) == 36
    unit = (tab["omega_ratio"] == 1.0) & (tab["beta_ratio"] == 1.0)
    assert not unit.any() or np.allclose(tab["db"][unit], 0)
    assert set(tab) == {"omega_ratio", "beta_ratio", "db", "isentropic_beta_ratio"}


def test_wigner_command(tmp_path):
    spec = write_spec(tmp_path, SMALL_TRAP)
    assert run(tmp_path, "wigner", "--spec", spec, "--times", "0", "2", "--wigner-points", "61") == cli.EXIT_OK
    d = out_dir(tmp_path, SMALL_TRAP)
    meta = json.loads((d / "wigner.json").read_text())
    assert np.allclose(meta["normalization"], 1.0, atol=1e-4)
    assert meta["max_discrepancy"] < 1e-4
    tab = io.read_csv(d / "wigner.csv")
    start = tab["t"] == 0
    # isotropic at t = 0, narrower in x than in p at tf
    x, p, w = tab["x"], tab["p"], tab["W_fock"]

    def spread(mask, coord):
        return np.sum(w[mask] * coord[mask] ** 2) / np.sum(w[mask])

    assert spread(start, x) == pytest.approx(spread(start, p), rel=1e-3)
    assert spread(~start, x) < spread(~start, p)


def test_wigner_rejects_times_outside(tmp_path):
    spec = write_spec(tmp_path, SMALL_TRAP)
    assert run(tmp_path, "wigner", "--spec", spec, "--times", "3") == cli.EXIT_INPUT


def test_stochastic_verify_reports_unsupported(tmp_path):
    # a cooling trap protocol has negative gamma, so the ensemble check fails cleanly
    spec = write_spec(tmp_path, SMALL_TRAP)
    code = run(tmp_path, "verify", "--spec", spec, "--stochastic", "--gaussian-only")
    assert code == cli.EXIT_VERIFY
    d = out_dir(tmp_path, SMALL_TRAP)
    checks = {c["name"]: c for c in json.loads((d / "report.json").read_text())["checks"]}
    assert not checks["stochastic_supported"]["passed"]
    assert json.loads((d / "ensemble.json").read_text())["seed"] == 0
