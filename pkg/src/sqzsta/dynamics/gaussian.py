"""Exact moment flow for quadratic master equations.

The state is tracked through <a>, <a^2> and <a_dag a>; Gaussian states are
closed under these dynamics, so the flow is exact up to the RK4 step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fock import UnitSystem
from ..squeezed import GaussianMoments, from_ladder_moments, to_ladder_moments
from .master import MasterEquationSpec


def moment_rates(spec: MasterEquationSpec, t, y):
    alpha, mu, n = y[0], y[1], y[2].real
    h, z = spec.hamiltonian.coefficients(t)
    da = -1j * (h * alpha + 2 * np.conj(z) * np.conj(alpha))
    dmu = -1j * (2 * h * mu + np.conj(z) * (4 * n + 2))
    dn = -4 * np.imag(z * mu)
    for d in spec.dissipators:
        a_, m_, n_ = d.moment_rates(t, alpha, mu, n)
        da += a_
        dmu += m_
        dn += n_
    return np.array([da, dmu, dn], dtype=complex)


@dataclass
class MomentRun:
    times: np.ndarray
    ladder: np.ndarray  # rows (<a>, <a^2>, <a_dag a>)
    units: UnitSystem
    omega0: float | None = None

    def moments(self, i) -> GaussianMoments:
        a, mu, n = self.ladder[i]
        return from_ladder_moments(complex(a), complex(mu), float(n.real), self.units, self.omega0,
                                   validate=False)

    @property
    def final(self) -> GaussianMoments:
        return self.moments(-1)

    def __len__(self):
        return len(self.times)


def evolve_covariance(spec: MasterEquationSpec, m0: GaussianMoments, record=None, omega0=None) -> MomentRun:
    """RK4 on the ladder moments, on the same grid as the Fock integrator."""
    units = spec.units
    y = np.array(to_ladder_moments(m0, units, omega0), dtype=complex)
    dt = spec.dt
    times = spec.times
    record = record if record is not None else min(spec.steps, 200)
    idx = set(np.unique(np.linspace(0, spec.steps, record + 1).round().astype(int)).tolist())
    out_t, out_y = [], []
    if 0 in idx:
        out_t.append(0.0)
        out_y.append(y.copy())
    for k in range(spec.steps):
        t = times[k]
        k1 = moment_rates(spec, t, y)
        k2 = moment_rates(spec, t + dt / 2, y + dt / 2 * k1)
        k3 = moment_rates(spec, t + dt / 2, y + dt / 2 * k2)
        k4 = moment_rates(spec, t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        y[2] = y[2].real
        if k + 1 in idx:
            out_t.append(times[k + 1])
            out_y.append(y.copy())
    return MomentRun(np.array(out_t), np.array(out_y), units, omega0)
