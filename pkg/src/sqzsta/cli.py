"""Command line front end.

    sqzsta design --spec spec.json
    sqzsta verify --spec spec.json [--controls controls.csv] [--stochastic]
    sqzsta variance-map --spec grid.json
    sqzsta wigner --spec spec.json --times 0 1 2
    sqzsta full-ion-check --spec spec.json

Every command writes into <out-dir>/<spec hash prefix>/.  Exit codes:
0 pass, 2 design infeasible, 3 verification failed, 4 input error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io, protocols, raman
from .errors import (
    DesignInfeasibleError,
    OutOfDomainError,
    SignSplitError,
    SqzError,
    UnsupportedRegimeError,
)
from .squeezed import (
    PhaseSpaceGrid,
    fock_wigner,
    gaussian_wigner,
    grid_integral,
    to_gaussian_moments,
    variance_map,
)

EXIT_OK, EXIT_INFEASIBLE, EXIT_VERIFY, EXIT_INPUT = 0, 2, 3, 4

log = logging.getLogger("sqzsta")


def _load_protocol(args):
    doc = io.validate(io.load_json(args.spec), io.SPEC_SCHEMA)
    for key in ("seed", "fock_dim", "grid_points"):
        v = getattr(args, key)
        if v is not None:
            doc[key] = v
    spec = protocols.ProtocolSpec.from_dict(doc)
    digest = io.spec_hash(doc)
    return doc, spec, digest, io.run_dir(args.out_dir, digest)


def _write_design(res, out, digest):
    io.write_table(out / "controls.csv", res.table, digest)
    io.write_json(out / "controls.json", res.metadata, digest)


def cmd_design(args):
    doc, spec, digest, out = _load_protocol(args)
    try:
        res = protocols.design(spec)
    except DesignInfeasibleError as exc:
        io.write_json(out / "controls.json", {"feasible": False, "reason": str(exc), "time": exc.time}, digest)
        log.error("design infeasible: %s", exc)
        return EXIT_INFEASIBLE
    except (SignSplitError, OutOfDomainError) as exc:
        io.write_json(out / "controls.json", {"feasible": False, "reason": str(exc)}, digest)
        log.error("design infeasible: %s", exc)
        return EXIT_INFEASIBLE
    res.metadata["feasible"] = True
    _write_design(res, out, digest)
    log.info("controls written to %s", out / "controls.csv")
    return EXIT_OK


def cmd_verify(args):
    doc, spec, digest, out = _load_protocol(args)
    path = args.controls or out / "controls.csv"
    if args.controls is None and not path.exists():
        code = cmd_design(args)
        if code:
            return code
    table = io.read_csv(path)
    if spec.scheme.startswith("trap"):
        missing = {"t", "omega_c_sq", "gamma"} - set(table)
    else:
        missing = {"t", "alpha_R", "alpha_I", "kappa"} - set(table)
    if missing:
        log.error("controls file lacks columns %s", sorted(missing))
        return EXIT_INPUT
    rep = protocols.verify(spec, table, fock_oracle=None if not args.gaussian_only else False)
    if args.stochastic:
        checks, meta = protocols.verify_stochastic(spec, table)
        rep.checks.extend(checks)
        io.write_json(out / "ensemble.json", meta, digest)
    if rep.trajectory is not None:
        from .dynamics import TRAJECTORY_COLUMNS

        io.write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, rep.trajectory, digest)
    io.write_json(out / "report.json", rep.as_dict(), digest)
    for c in rep.checks:
        log.info("%-26s %s  value=%.6g  threshold=%.3g %s", c.name, "PASS" if c.passed else "FAIL",
                 c.value, c.threshold, c.note)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def _axis(spec_range, points):
    lo, hi = spec_range[0], spec_range[1]
    n = int(spec_range[2]) if len(spec_range) > 2 else points
    return np.linspace(lo, hi, n)


def cmd_variance_map(args):
    doc = io.validate(io.load_json(args.spec), io.GRID_SCHEMA)
    digest = io.spec_hash(doc)
    out = io.run_dir(args.out_dir, digest)
    points = args.grid_points or doc.get("points", 21)
    vm = variance_map(_axis(doc["omega_ratio"], points), _axis(doc["beta_ratio"], points),
                      doc.get("epsilon0", 1.0))
    io.write_csv(out / "variance_map.csv", ("omega_ratio", "beta_ratio", "db", "isentropic_beta_ratio"),
                 vm.rows(), digest)
    log.info("variance map written to %s", out / "variance_map.csv")
    return EXIT_OK


def cmd_wigner(args):
    doc, spec, digest, out = _load_protocol(args)
    times = np.array(args.times if args.times else [0.0, spec.tf], dtype=float)
    if np.any(times < 0) or np.any(times > spec.tf * (1 + 1e-12)):
        log.error("times must lie in [0, %g]", spec.tf)
        return EXIT_INPUT
    try:
        res = protocols.design(spec)
    except (DesignInfeasibleError, SignSplitError, OutOfDomainError) as exc:
        log.error("design infeasible: %s", exc)
        return EXIT_INFEASIBLE
    from .dynamics import evolve_covariance, integrate_master

    ms, _ = protocols.master_spec(spec, res.table)
    idx = np.unique(np.round(times / ms.dt).astype(int))
    ini = protocols.rotating_initial(spec)
    run = integrate_master(ms, ini.density_matrix(spec.fock_dim), record=idx)
    g = evolve_covariance(ms, to_gaussian_moments(ini, units=spec.units), record=ms.steps)
    rows, worst, norms = [], 0.0, []
    n = args.wigner_points
    for t, rho in zip(run.times, run.states):
        m = g.moments(int(round(t / ms.dt)))
        grid = PhaseSpaceGrid.covering(m, nx=n, npts=n)
        Wf = fock_wigner(rho, grid, units=spec.units)
        Wg = gaussian_wigner(m, grid)
        worst = max(worst, float(np.abs(Wf - Wg).max()))
        norms.append(grid_integral(Wf, grid))
        xs, ps = grid.axes()
        X, P = np.meshgrid(xs, ps, indexing="ij")
        for x, p, a, b in zip(X.ravel(), P.ravel(), Wf.ravel(), Wg.ravel()):
            rows.append((t, x, p, a, b))
    io.write_csv(out / "wigner.csv", ("t", "x", "p", "W_fock", "W_gaussian"), rows, digest)
    io.write_json(out / "wigner.json", {"max_discrepancy": worst, "normalization": norms,
                                        "times": run.times}, digest)
    log.info("wigner grids written; max |W_fock - W_gaussian| = %.3g", worst)
    return EXIT_OK


def cmd_full_ion_check(args):
    from .dynamics import IonModelSpec, detuning_sweep

    doc = io.validate(io.load_json(args.spec), io.SPEC_SCHEMA)
    if args.fock_dim is not None:
        doc["fock_dim"] = args.fock_dim
    digest = io.spec_hash(doc)
    out = io.run_dir(args.out_dir, digest)
    las = doc.get("lasers", {})
    eta = tuple(las.get("lamb_dicke", (0.2, -0.2)))[:2]
    N = int(doc.get("fock_dim", 24))
    cfg = raman.RamanLaserConfig(lamb_dicke=eta, detuning=float(las.get("detuning", 50.0)), check=False)
    base = IonModelSpec(cfg, fock_dim=N, tf=float(doc["tf"]))
    ini = doc["initial"]
    from .squeezed import SqueezeParams

    rho0 = SqueezeParams(ini["r"], ini.get("phi", 0.0), ini["epsilon"]).density_matrix(N)
    try:
        rows = detuning_sweep(base, rho0)
    except UnsupportedRegimeError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    io.write_csv(out / "ion_sweep.csv", ("detuning", "fidelity", "excited_population", "elimination_valid"),
                 rows, digest)
    gaps = [1 - r[1] for r in rows]
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    at50 = [r[1] for r in rows if r[0] == 50.0]
    ok = monotone and (not at50 or at50[0] >= 0.99)
    io.write_json(out / "ion_report.json", {"passed": ok, "monotone": monotone, "sweep": rows}, digest)
    log.info("ion sweep %s (monotone=%s)", "PASS" if ok else "FAIL", monotone)
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {
    "design": cmd_design,
    "verify": cmd_verify,
    "variance-map": cmd_variance_map,
    "wigner": cmd_wigner,
    "full-ion-check": cmd_full_ion_check,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, help="JSON spec (protocol, or grid for variance-map)")
    common.add_argument("--out-dir", default="runs")
    common.add_argument("--seed", type=int)
    common.add_argument("--fock-dim", type=int)
    common.add_argument("--grid-points", type=int)
    common.add_argument("--quiet", action="store_true")
    p = argparse.ArgumentParser(prog="sqzsta", description="Design and verify squeezed thermal state protocols.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("design", parents=[common], help="compute control schedules")
    v = sub.add_parser("verify", parents=[common], help="simulate controls and check the end state")
    v.add_argument("--controls", type=Path)
    v.add_argument("--stochastic", action="store_true", help="also run the trajectory ensemble")
    v.add_argument("--gaussian-only", action="store_true", help="skip the Fock oracle")
    sub.add_parser("variance-map", parents=[common], help="final x-variance map in dB")
    w = sub.add_parser("wigner", parents=[common], help="Wigner grids along a designed protocol")
    w.add_argument("--times", type=float, nargs="*")
    w.add_argument("--wigner-points", type=int, default=81)
    sub.add_parser("full-ion-check", parents=[common], help="two-level ion model vs effective model")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except DesignInfeasibleError as exc:
        log.error("design infeasible: %s", exc)
        return EXIT_INFEASIBLE
    except (SqzError, ValueError, KeyError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
