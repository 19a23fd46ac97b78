"""Acceptance suite.

Each test is tagged with the criterion it checks; the terminal summary prints
one PASS/FAIL line per criterion (see conftest.py).  Run with

    pytest tests/test_acceptance.py -v
"""
import numpy as np
import pytest
from scipy.linalg import expm

from conftest import trap_master_spec
from sqzsta import fock, protocols, raman, trap
from sqzsta import squeezed as sq
from sqzsta.dynamics import (
    IonModelSpec,
    StochasticRunSpec,
    detuning_sweep,
    ensemble_average,
    integrate_master,
)
from sqzsta.errors import DesignInfeasibleError, UnsupportedRegimeError

criterion = pytest.mark.criterion

COOLING_TRAP = {"scheme": "trap-open", "initial": {"r": 0.0, "phi": 0.0, "epsilon": 1.0},
        "target": {"r": 0.5 * np.log(3.0), "phi": 0.0, "epsilon": 6.0}, "tf": 2.0, "fock_dim": 100}


def padded_exponential(r, phi, eps, N, M=500):
    """exp(lambda S a_dag a S_dag), built on M levels and cropped to N."""
    a = np.diag(np.sqrt(np.arange(1, M)), 1).astype(complex)
    ad = a.T.copy()
    S = expm(0.5 * r * (np.exp(-1j * phi) * a @ a - np.exp(1j * phi) * ad @ ad))
    return ((S * np.exp(-eps * np.arange(M))) @ S.conj().T)[:N, :N]


def symplectic_epsilon(m: sq.GaussianMoments):
    nu = np.sqrt(np.linalg.det(m.cov)) / m.hbar
    return 2 * np.arctanh(1 / (2 * nu))


@criterion(1, "factorization identity")
def test_criterion_01_factorization_identity():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        r, eps = rng.uniform(0, 1.5), rng.uniform(0.2, 3.0)
        phi = np.pi - rng.uniform(0, 2 * np.pi)
        f = sq.factorize(sq.SqueezeParams(r, phi, eps))
        worst = max(worst, np.abs(f.operator(40) - padded_exponential(r, phi, eps, 40)).max())
    assert worst <= 1e-8


@criterion(2, "Ermakov consistency")
def test_criterion_02_ermakov_residual():
    w = trap.make_quintic(1.0, 3.0, 2.0)
    res, width = trap.ermakov_residual(w, trap.control_frequency_closed(w), np.linspace(0, 2, 1000))
    assert np.all(np.abs(res) <= 1e-9 * width)


@criterion(3, "trap-open reproduction")
def test_criterion_03_trap_open_protocol():
    spec = protocols.ProtocolSpec.from_dict(COOLING_TRAP)
    assert spec.n_steps == 20000
    res = protocols.design(spec)
    tab = res.table
    # omega_f = e^{2 r_f} is 3 up to the rounding of r_f = ln(3)/2
    assert tab["omega_c_sq"][0] == 1.0 and tab["omega_c_sq"][-1] == pytest.approx(9.0, rel=1e-15)
    assert tab["gamma"][0] == 0.0 and tab["gamma"][-1] == 0.0
    rep = protocols.verify(spec, tab)
    checks = {c.name: c for c in rep.checks}
    assert checks["fock_fidelity"].gating and checks["fock_fidelity"].value >= 0.999
    assert rep.passed
    entropy = rep.trajectory[:, 2]
    assert entropy[-1] < entropy[0]
    assert np.all(np.diff(entropy) < 0)


@criterion(4, "unitary conservation")
@pytest.mark.parametrize("doc", [
    {"scheme": "trap-closed", "initial": {"r": 0.0, "phi": 0.0, "epsilon": 1.0},
     "target": {"r": 0.5, "phi": 0.0, "epsilon": 1.0}, "tf": 2.0, "fock_dim": 80},
    {"scheme": "raman-closed", "initial": {"r": 0.0, "phi": 0.0, "epsilon": 1.0},
     "target": {"r": 1.0, "phi": -2.0, "epsilon": 1.0}, "tf": 1.0, "fock_dim": 160},
], ids=["trap-closed", "raman-closed"])
def test_criterion_04_closed_protocols_conserve_entropy(doc):
    spec = protocols.ProtocolSpec.from_dict(doc)
    res = protocols.design(spec)
    if "gamma" in res.table:
        assert np.all(res.table["gamma"] == 0)
    ms, _ = protocols.master_spec(spec, res.table)
    p0 = protocols.rotating_initial(spec)
    run = integrate_master(ms, p0.density_matrix(spec.fock_dim), record=40)
    assert run.truncation_ok
    s0 = fock.von_neumann_entropy(p0.density_matrix(spec.fock_dim))
    for rho in run.states:
        assert abs(fock.von_neumann_entropy(rho) - s0) <= 1e-6
        assert abs(symplectic_epsilon(sq.moments_from_density(rho)) - 1.0) <= 1e-6


@criterion(5, "variance map")
def test_criterion_05_variance_map_closed_form():
    grid = np.linspace(0.5, 3.0, 21)
    vm = sq.variance_map(grid, grid)
    W, Bt = np.meshgrid(grid, grid, indexing="ij")
    ratio = (1 / W) * np.tanh(0.5) / np.tanh(0.5 * W * Bt)
    assert np.abs(vm.db - 10 * np.log10(ratio)).max() <= 1e-10


@criterion(5, "variance map")
@pytest.mark.parametrize("omega_ratio, beta_ratio", [(2.0, 2.0), (0.5, 3.0), (3.0, 0.5), (1.5, 2.5), (0.75, 0.5)])
def test_criterion_05_designed_protocols_land_on_map(omega_ratio, beta_ratio):
    doc = {"scheme": "trap-open", "initial": {"r": 0.0, "phi": 0.0, "epsilon": 1.0},
           "target": {"r": 0.5 * np.log(omega_ratio), "phi": 0.0, "epsilon": omega_ratio * beta_ratio},
           "tf": 2.0}
    spec = protocols.ProtocolSpec.from_dict(doc)
    rep = protocols.verify(spec, protocols.design(spec).table, fock_oracle=False)
    assert rep.passed
    mapped = sq.variance_map([omega_ratio], [beta_ratio]).db[0, 0]
    v0 = sq.position_variance_closed(1.0, 1.0, spec.units)
    expected = v0 * 10 ** (mapped / 10)
    assert abs(rep.trajectory[-1, 3] / expected - 1) <= 1e-3


@criterion(6, "Raman closed design")
def test_criterion_06_raman_closed_strong_squeezing():
    doc = {"scheme": "raman-closed", "initial": {"r": 0.0, "phi": 0.0, "epsilon": 1.0},
           "target": {"r": 4.0, "phi": -2.0, "epsilon": 1.0}, "tf": 1.0}
    spec = protocols.ProtocolSpec.from_dict(doc)
    res = protocols.design(spec)
    rep = protocols.verify(spec, res.table)
    assert not any(c.name.startswith("fock") for c in rep.checks)  # routed to the Gaussian oracle
    assert rep.passed
    assert rep.metadata["var_x_ratio"] == pytest.approx(np.exp(-8.0), rel=1e-4)
    assert rep.metadata["lab_final_phase"] == -2.0
    assert res.metadata["final_phase"] == -2.0


RAMAN_CASES = [(lf, rf, ph) for lf in (-2.0, -1.0, -0.5) for rf in (0.0, 1.0) for ph in (0.0, np.pi / 4)]


@criterion(7, "Raman open round trip")
@pytest.mark.parametrize("lam_f, r_f, phi_f", RAMAN_CASES)
def test_criterion_07_raman_open(lam_f, r_f, phi_f):
    doc = {"scheme": "raman-open", "initial": {"r": 0.0, "phi": 0.0, "epsilon": 1.0},
           "target": {"r": r_f, "phi": phi_f, "epsilon": -lam_f}, "tf": 1.0, "fock_dim": 100}
    spec = protocols.ProtocolSpec.from_dict(doc)
    flow = raman.quintic_flow(spec.initial, spec.target, spec.tf)
    ctrl = raman.invert_controls(flow, n_points=1001)
    back = raman.forward_parameter_flow(ctrl, flow.initial)
    t = ctrl.times
    assert np.abs(back.Js - flow.J(t)).max() <= 1e-4
    assert np.abs(back.Bs - flow.B(t)).max() <= 1e-4
    rep = protocols.verify(spec, protocols.design(spec).table)
    checks = {c.name: c for c in rep.checks}
    # hot squeezed targets leave ~1e-4 of tail mass at N = 100; the fidelity is still read there
    assert checks["fock_fidelity"].value >= 0.995
    assert checks["gaussian_fidelity"].passed and checks["gaussian_entropy_gap"].passed
    assert checks["trace_drift"].passed


@criterion(7, "Raman open round trip")
def test_criterion_07_dephasing_symmetry():
    p0 = sq.SqueezeParams(0.0, 0.0, 1.0)
    plus = raman.invert_controls(raman.quintic_flow(p0, sq.SqueezeParams(1.0, np.pi / 4, 2.0), 1.0))
    minus = raman.invert_controls(raman.quintic_flow(p0, sq.SqueezeParams(-1.0, np.pi / 4, 2.0), 1.0))
    assert np.abs(plus.kappa - minus.kappa).max() <= 1e-9
    assert abs(np.abs(plus.kappa).max() - np.abs(minus.kappa).max()) <= 1e-9


@criterion(8, "stochastic unraveling")
@pytest.mark.xfail(strict=True, raises=UnsupportedRegimeError,
                   reason="the cooling protocol has gamma < 0, which has no real-noise unraveling")
def test_criterion_08_stochastic_cooling_protocol():
    spec = protocols.ProtocolSpec.from_dict(dict(COOLING_TRAP, fock_dim=20))
    ms, _ = protocols.master_spec(spec, protocols.design(spec).table, anchor=False)
    rho0 = protocols.rotating_initial(spec).density_matrix(20)
    ens = ensemble_average(StochasticRunSpec(ms, seed=7, count=2000), rho0, record=1,
                           checkpoints=(100, 400, 1600))
    ref = integrate_master(ms, rho0, record=1)
    assert fock.trace_distance(ens.final, ref.final) <= 0.05


@criterion(8, "stochastic unraveling")
def test_criterion_08_stochastic_heating_mirror(heating_trap):
    """Same statistics on the time-mirrored protocol, where gamma >= 0 throughout.

    N = 20 with 8000 steps keeps the norm-drift monitor under its limit; a
    2000-trajectory run takes a few minutes on one core.
    """
    ms = trap_master_spec(heating_trap, 8000)
    rho0 = heating_trap.target_params(0).density_matrix(20)
    ens = ensemble_average(StochasticRunSpec(ms, seed=7, count=2000), rho0, record=1,
                           checkpoints=(100, 400, 1600))
    ref = integrate_master(ms, rho0, record=1).final
    d = {m: fock.trace_distance(rho, ref) for m, rho in ens.partial.items()}
    assert d[2000] <= 0.05
    # 1/sqrt(M): each fourfold increase halves the error, within a factor 2
    for small, big in ((100, 400), (400, 1600)):
        assert 1.0 <= d[small] / d[big] <= 4.0
    assert ens.max_norm_drift_rate <= 1e-3


@criterion(9, "adiabatic elimination")
def test_criterion_09_ion_model_sweep():
    base = IonModelSpec(raman.RamanLaserConfig(check=False), fock_dim=24, tf=2 * np.pi)
    rows = detuning_sweep(base, fock.thermal_state(1.0, 24))
    gaps = [1 - r[1] for r in rows]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    fid = dict((r[0], r[1]) for r in rows)
    assert fid[50.0] >= 0.99
    assert all(r[3] for r in rows)


JC_HEATING = [
    (0.5, 0.0, 0.0),
    (0.2, 0.0, 0.0),
    (0.2, 0.5, 0.0),
    (0.2, 1.0, np.pi / 4),
    (0.5, 0.5, np.pi / 4),
]


@criterion(10, "four-laser variant")
@pytest.mark.parametrize("eps_f, r_f, phi_f", JC_HEATING)
def test_criterion_10_jc_heating_verified(eps_f, r_f, phi_f):
    doc = {"scheme": "jc-open", "initial": {"r": 0.0, "phi": 0.0, "epsilon": 1.0},
           "target": {"r": r_f, "phi": phi_f, "epsilon": eps_f}, "tf": 1.0, "fock_dim": 100}
    spec = protocols.ProtocolSpec.from_dict(doc)
    res = protocols.design(spec)
    assert np.all(res.table["kappa"] >= 0) and res.table["kappa"].max() > 0
    rep = protocols.verify(spec, res.table)
    checks = {c.name: c for c in rep.checks}
    assert checks["gaussian_fidelity"].value >= 0.995
    if checks["fock_fidelity"].gating:
        assert checks["fock_fidelity"].value >= 0.995
    else:
        # Fock run lost to truncation (see ledger); the moment oracle decides
        assert r_f > 0
    assert rep.passed


@criterion(10, "four-laser variant")
@pytest.mark.parametrize("eps_f, r_f", [(2.0, 0.0), (2.0, 0.5), (1.5, 1.0)])
def test_criterion_10_jc_cooling_infeasible(eps_f, r_f):
    flow = raman.quintic_flow(sq.SqueezeParams(0.0, 0.0, 1.0), sq.SqueezeParams(r_f, 0.0, eps_f), 1.0)
    with pytest.raises(DesignInfeasibleError, match="kappa < 0"):
        raman.jc_invert_controls(flow)


@criterion(10, "four-laser variant")
@pytest.mark.xfail(strict=True, raises=DesignInfeasibleError,
                   reason="this heating flow needs kappa < 0 early in the protocol")
def test_criterion_10_jc_strongly_squeezed_heating():
    flow = raman.quintic_flow(sq.SqueezeParams(0.0, 0.0, 1.0), sq.SqueezeParams(1.0, 0.0, 0.5), 1.0)
    ctrl = raman.jc_invert_controls(flow)
    assert ctrl.kappa.min() >= 0
