"""Two-level ion coupled to its motion by two Raman beams.

Runs the full atom (x) Fock Schrodinger dynamics in the frame rotating with
the lasers and the trap, without eliminating the excited level, so the
effective squeezing model can be checked against it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .. import fock
from ..errors import UnsupportedRegimeError
from ..raman import RamanLaserConfig, alpha_from_lasers
from .master import MasterEquationSpec, QuadraticHamiltonian, integrate_master

ELIMINATION_FACTOR = 10.0


@dataclass(frozen=True)
class IonModelSpec:
    lasers: RamanLaserConfig
    fock_dim: int = 24
    tf: float = 2 * np.pi
    steps_per_detuning: int = 32
    padding: int = 60
    atomic_gap: float | None = None  # drops out in the rotating frame; kept for records

    @property
    def steps(self):
        c = self.lasers
        rate = max(abs(c.detuning), c.omega0, *map(abs, c.rabi))
        return int(np.ceil(self.tf * rate * self.steps_per_detuning))


@dataclass
class IonRun:
    times: np.ndarray
    reduced: list
    excited_population: float
    elimination_valid: bool
    effective_alpha: complex
    warnings: list = field(default_factory=list)


def _hamiltonian_builder(spec: IonModelSpec):
    c = spec.lasers
    N = spec.fock_dim
    n = np.arange(N)
    a, ad = fock.build_ladder(spec.padding)
    from scipy.linalg import expm

    kicks = [expm(-1j * eta * (a + ad))[:N, :N] for eta in c.lamb_dicke]
    base = np.kron(-0.5 * c.detuning * fock.SIGMA_Z, np.eye(N))
    signs = (1, -1)

    def H(t):
        R = np.exp(1j * n * c.omega0 * t)
        off = np.zeros((N, N), dtype=complex)
        for s, D, om, ph in zip(signs, kicks, c.rabi, c.phases):
            off += 0.5 * om * np.exp(1j * (s * c.omega0 * t + ph)) * (R[:, None] * D * np.conj(R)[None, :])
        h = base.copy()
        h[:N, N:] += off
        h[N:, :N] += off.conj().T
        return h

    return H


def full_ion_model(spec: IonModelSpec, rho0, record=10) -> IonRun:
    """Propagate |g><g| (x) rho0 and return the reduced motional states."""
    c = spec.lasers
    N = spec.fock_dim
    m0 = fock.as_matrix(rho0)
    if m0.shape != (N, N):
        raise UnsupportedRegimeError("initial state dimension must equal fock_dim")
    notes = []
    scale = max(abs(c.rabi[0]), abs(c.rabi[1]), c.omega0)
    if abs(c.detuning) < 10 * scale:
        raise UnsupportedRegimeError("detuning hierarchy violated")
    if abs(c.detuning) < 50 * scale:
        notes.append("detuning below 50x the largest rate")
    H = _hamiltonian_builder(spec)
    steps = spec.steps
    dt = spec.tf / steps
    U = np.eye(2 * N, dtype=complex)
    rec = set(np.linspace(0, steps, record + 1).round().astype(int).tolist())
    full0 = np.kron(fock.PROJ_G, m0)
    times, states = [], []
    pe = 0.0
    for k in range(steps + 1):
        if k in rec or k % 50 == 0:
            rho = U @ full0 @ U.conj().T
            pe = max(pe, fock.excited_population(rho, N))
            if k in rec:
                times.append(k * dt)
                states.append(fock.reduce_to_motion(rho, N))
        if k == steps:
            break
        t = k * dt
        k1 = -1j * H(t) @ U
        Hm = H(t + dt / 2)
        k2 = -1j * Hm @ (U + dt / 2 * k1)
        k3 = -1j * Hm @ (U + dt / 2 * k2)
        k4 = -1j * H(t + dt) @ (U + dt * k3)
        U = U + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    omega = max(abs(c.rabi[0]), abs(c.rabi[1]))
    valid = pe <= ELIMINATION_FACTOR * (omega / c.detuning) ** 2
    if not valid:
        notes.append("excited population exceeds the elimination bound")
    for s in notes:
        warnings.warn(s, stacklevel=2)
    return IonRun(np.array(times), states, pe, bool(valid), alpha_from_lasers(c), notes)


def effective_model(spec: IonModelSpec, rho0, steps=None, record=10):
    """Motional state under H/hbar = alpha a^2 + h.c. with the eliminated coupling."""
    alpha = alpha_from_lasers(spec.lasers)
    ms = MasterEquationSpec(QuadraticHamiltonian(0.0, alpha), (), spec.tf, steps or 2000)
    return integrate_master(ms, rho0, record=record)


def detuning_sweep(base: IonModelSpec, rho0, detunings=(10, 20, 50, 100)):
    """Final-state fidelity between full and effective models for each detuning."""
    out = []
    for d in detunings:
        lasers = RamanLaserConfig(base.lasers.rabi, base.lasers.lamb_dicke, float(d), base.lasers.phases,
                                  base.lasers.omega0, base.lasers.x0, check=False)
        spec = IonModelSpec(lasers, base.fock_dim, base.tf, base.steps_per_detuning, base.padding)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            full = full_ion_model(spec, rho0, record=1)
        eff = effective_model(spec, rho0, record=1)
        out.append((float(d), fock.fidelity(full.reduced[-1], eff.states[-1]), full.excited_population,
                    full.elimination_valid))
    return out
