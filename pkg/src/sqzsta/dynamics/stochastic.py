"""Stochastic pure-state unraveling of position dephasing.

Each trajectory obeys
    d psi = (-i H dt - i sqrt(2k) L dW - k L^2 dt) psi,   k = gamma x0^2,
with L = x / x0.  The Hamiltonian part is stepped with RK4, the noise part
with Euler-Maruyama, and the state is renormalized after every step.

Noise comes from a Philox generator keyed by (seed, trajectory index); the
generator's counter plays the role of the step index, so any trajectory can
be regenerated alone and matches its copy inside an ensemble bit for bit.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import fock
from ..errors import StepSizeError, UnsupportedRegimeError
from .master import Bands, MasterEquationSpec, PositionDephasing

NORM_DRIFT_LIMIT = 1e-3
STABILITY_LIMIT = 0.01
BATCH = 128


def worker_count():
    try:
        return max(1, int(os.environ.get("SQZ_STA_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class StochasticRunSpec:
    base_spec: MasterEquationSpec
    seed: int = 0
    count: int = 100
    dt: float | None = None

    @property
    def step(self):
        return self.dt or self.base_spec.dt

    @property
    def n_steps(self):
        return int(round(self.base_spec.tf / self.step))

    def noise_channel(self) -> PositionDephasing | None:
        chans = [d for d in self.base_spec.dissipators if isinstance(d, PositionDephasing)]
        others = [d for d in self.base_spec.dissipators if not isinstance(d, PositionDephasing)]
        if others or len(chans) > 1:
            raise UnsupportedRegimeError("only a single position-dephasing channel is unraveled")
        return chans[0] if chans else None

    def validate(self):
        chan = self.noise_channel()
        ts = np.linspace(0, self.base_spec.tf, 401)
        rate = self.base_spec.rate_scale()
        if chan is not None:
            ks = np.array([chan.coefficient(t) for t in ts])
            if np.any(ks < 0):
                t_bad = ts[np.argmax(ks < 0)]
                raise UnsupportedRegimeError(
                    f"negative dephasing rate at t={t_bad:.4g}: sqrt(2 gamma) is imaginary and no "
                    "real-noise unraveling exists")
            rate = max(rate, 2 * np.abs(ks).max())
        if self.step * rate > STABILITY_LIMIT:
            raise StepSizeError(f"dt * rate = {self.step * rate:.3g} exceeds {STABILITY_LIMIT}",
                                suggested_dt=STABILITY_LIMIT / rate)
        if self.count < 1:
            raise ValueError("count must be positive")


def _rng(seed, index):
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, index]))


def _initial_columns(rho0, indices, seed):
    """One starting ket per trajectory, drawn from the spectrum of rho0."""
    m = fock.as_matrix(rho0)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.clip(w, 0, None)
    cdf = np.cumsum(w) / w.sum()
    cols, gens = [], []
    for i in indices:
        g = _rng(seed, i)
        k = min(int(np.searchsorted(cdf, g.random(), side="right")), len(w) - 1)
        cols.append(v[:, k])
        gens.append(g)
    return np.array(cols).T.astype(complex), gens


def _run_batch(spec: StochasticRunSpec, rho0, indices, record_steps):
    base = spec.base_spec
    chan = spec.noise_channel()
    dt, n = spec.step, spec.n_steps
    psi, gens = _initial_columns(rho0, indices, spec.seed)
    noise = np.array([g.standard_normal(n) for g in gens]).T * np.sqrt(dt)  # (steps, M)
    bands = Bands(psi.shape[0])
    drift = np.zeros(psi.shape[1])
    snaps = {}
    if 0 in record_steps:
        snaps[0] = psi.copy()

    def ham(t, v):
        return bands.quad(base.hamiltonian.form(t).scale(-1j), v)

    for k in range(n):
        t = k * dt
        k1 = ham(t, psi)
        k2 = ham(t + dt / 2, psi + dt / 2 * k1)
        k3 = ham(t + dt / 2, psi + dt / 2 * k2)
        k4 = ham(t + dt, psi + dt * k3)
        psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if chan is not None:
            kap = chan.coefficient(t)
            if kap != 0:
                L = chan.mode(t)
                Lp = bands.lin(L, psi)
                LLp = bands.lin(L, Lp)
                c = np.sqrt(2 * kap)
                # conditional mean norm change of this step, kap^2 dt^2 <L^4>
                drift += kap * kap * dt * dt * np.sum(np.abs(LLp) ** 2, axis=0)
                psi = psi - 1j * c * Lp * noise[k] - kap * dt * LLp
        psi = psi / np.linalg.norm(psi, axis=0)
        if k + 1 in record_steps:
            snaps[k + 1] = psi.copy()
    return snaps, drift / base.tf


@dataclass
class PureTrajectory:
    times: np.ndarray
    states: np.ndarray  # (n_records, N)
    norm_drift_rate: float


def _record_steps(n, record):
    if record is None:
        record = min(n, 100)
    return sorted(set(np.linspace(0, n, record + 1).round().astype(int).tolist()))


def stochastic_trajectory(spec: StochasticRunSpec, index, rho0, record=None) -> PureTrajectory:
    spec.validate()
    steps = _record_steps(spec.n_steps, record)
    snaps, drift = _run_batch(spec, rho0, [index], set(steps))
    if drift[0] > NORM_DRIFT_LIMIT:
        raise StepSizeError(f"norm drift {drift[0]:.3g} per unit time", suggested_dt=spec.step / 2)
    return PureTrajectory(np.array(steps) * spec.step, np.array([snaps[s][:, 0] for s in steps]),
                          float(drift[0]))


@dataclass
class EnsembleRun:
    times: np.ndarray
    states: list
    count: int
    max_norm_drift_rate: float
    partial: dict = field(default_factory=dict)  # count -> final state over the first `count` trajectories

    @property
    def final(self):
        return self.states[-1]

    def metadata(self, spec: StochasticRunSpec):
        return {"seed": spec.seed, "count": spec.count, "dt": spec.step,
                "max_norm_drift_rate": self.max_norm_drift_rate}


def _chunks(count, batch, checkpoints):
    edges = set(range(0, count, batch)) | {c for c in checkpoints if 0 < c < count} | {count}
    edges = sorted(edges)
    return [list(range(a, b)) for a, b in zip(edges[:-1], edges[1:])]


def ensemble_average(spec: StochasticRunSpec, rho0, record=None, batch=BATCH, workers=None,
                     checkpoints=()) -> EnsembleRun:
    """Mean of |psi><psi| over ``spec.count`` trajectories.

    ``checkpoints`` lists smaller counts whose final averages (over trajectory
    indices 0..count-1) are kept in ``EnsembleRun.partial``; they are the same
    ensembles a run with that count would produce.
    """
    spec.validate()
    steps = _record_steps(spec.n_steps, record)
    chunks = _chunks(spec.count, batch, checkpoints)
    workers = workers or worker_count()
    run = lambda idx: _run_batch(spec, rho0, idx, set(steps))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    N = fock.as_matrix(rho0).shape[0]
    acc = {s: np.zeros((N, N), dtype=complex) for s in steps}
    drift = 0.0
    partial = {}
    done = 0
    for idx, (snaps, d) in zip(chunks, results):  # fixed order: by trajectory index
        drift = max(drift, float(d.max()))
        for s in steps:
            v = snaps[s]
            acc[s] += v @ v.conj().T
        done += len(idx)
        if done in checkpoints:
            partial[done] = acc[steps[-1]] / done
    if drift > NORM_DRIFT_LIMIT:
        raise StepSizeError(f"norm drift {drift:.3g} per unit time", suggested_dt=spec.step / 2)
    states = [acc[s] / spec.count for s in steps]
    partial[spec.count] = states[-1]
    return EnsembleRun(np.array(steps) * spec.step, states, spec.count, drift, partial)
