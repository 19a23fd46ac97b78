"""Trap-frequency shortcut protocols with engineered position dephasing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fock
from .errors import DimensionMismatchError, InvalidScheduleError
from .fock import UnitSystem
from .squeezed import GaussianMoments, SqueezeParams


def quintic(tau):
    return tau ** 3 * (10 - 15 * tau + 6 * tau * tau)


def quintic_d1(tau):
    return 30 * tau * tau * (1 - tau) ** 2


def quintic_d2(tau):
    return 60 * tau * (1 - tau) * (1 - 2 * tau)


@dataclass(frozen=True)
class Schedule:
    """s(t) = s0 + (sf - s0) p(t / tf) with the quintic smoothstep p."""

    s0: float
    sf: float
    tf: float

    def __post_init__(self):
        if not self.tf > 0:
            raise InvalidScheduleError("tf must be positive")

    def _tau(self, t):
        return np.clip(np.asarray(t, dtype=float) / self.tf, 0.0, 1.0)

    def value(self, t):
        return self.s0 + (self.sf - self.s0) * quintic(self._tau(t))

    def d1(self, t):
        return (self.sf - self.s0) * quintic_d1(self._tau(t)) / self.tf

    def d2(self, t):
        return (self.sf - self.s0) * quintic_d2(self._tau(t)) / self.tf ** 2

    __call__ = value


def make_quintic(s0, sf, tf) -> Schedule:
    return Schedule(float(s0), float(sf), float(tf))


def _positive(schedule, name, samples=1001):
    t = np.linspace(0, schedule.tf, samples)
    if np.any(schedule.value(t) <= 0):
        raise InvalidScheduleError(f"{name} must stay positive")


def control_frequency_closed(omega: Schedule):
    """omega_c^2(t) that drives the unitary shortcut along ``omega``."""
    _positive(omega, "omega")

    def omega_c_sq(t):
        w, w1, w2 = omega.value(t), omega.d1(t), omega.d2(t)
        return w * w - 0.75 * (w1 / w) ** 2 + 0.5 * w2 / w

    return omega_c_sq


def ermakov_residual(omega: Schedule, omega_c_sq, t, omega0=1.0):
    """w'' + omega_c^2 w - omega0^2 / w^3 for w = sqrt(omega0 / omega)."""
    w, w1, w2 = omega.value(t), omega.d1(t), omega.d2(t)
    s = np.sqrt(omega0)
    sw = s * w ** -0.5
    sw2 = s * (0.75 * w ** -2.5 * w1 * w1 - 0.5 * w ** -1.5 * w2)
    return sw2 + omega_c_sq(t) * sw - omega0 ** 2 / sw ** 3, sw


@dataclass(frozen=True)
class TrapControls:
    """Controls for driving the trap along (omega(t), beta(t))."""

    omega: Schedule
    beta: Schedule
    units: UnitSystem

    @property
    def tf(self):
        return self.omega.tf

    def epsilon(self, t):
        return self.units.hbar * self.omega.value(t) * self.beta.value(t)

    def epsilon_d1(self, t):
        w, b = self.omega, self.beta
        return self.units.hbar * (w.d1(t) * b.value(t) + w.value(t) * b.d1(t))

    def epsilon_d2(self, t):
        w, b = self.omega, self.beta
        return self.units.hbar * (w.d2(t) * b.value(t) + 2 * w.d1(t) * b.d1(t) + w.value(t) * b.d2(t))

    def omega0_term(self, t):
        return -self.omega.d1(t) / (2 * self.omega.value(t))

    def omega0_term_d1(self, t):
        w, w1, w2 = self.omega.value(t), self.omega.d1(t), self.omega.d2(t)
        return -w2 / (2 * w) + w1 * w1 / (2 * w * w)

    def omega1_term(self, t):
        return -self.epsilon_d1(t) / (2 * np.sinh(self.epsilon(t)))

    def omega1_term_d1(self, t):
        e, e1, e2 = self.epsilon(t), self.epsilon_d1(t), self.epsilon_d2(t)
        sh = np.sinh(e)
        return -e2 / (2 * sh) + e1 * e1 * np.cosh(e) / (2 * sh * sh)

    def chirp(self, t):
        """Total chirp rate Omega_0 + Omega_1."""
        return self.omega0_term(t) + self.omega1_term(t)

    def omega_c_sq(self, t):
        w = self.omega.value(t)
        return w * w - self.chirp(t) ** 2 - self.omega0_term_d1(t) - self.omega1_term_d1(t)

    def gamma(self, t):
        e, e1 = self.epsilon(t), self.epsilon_d1(t)
        w = self.omega.value(t)
        return -(self.units.mass * w / self.units.hbar) * e1 / (4 * np.sinh(0.5 * e) ** 2)

    def table(self, n_points):
        t = np.linspace(0.0, self.tf, n_points)
        return {
            "t": t,
            "omega_t": self.omega.value(t),
            "omega_c_sq": self.omega_c_sq(t),
            "gamma": self.gamma(t),
            "Omega0": self.omega0_term(t),
            "Omega1": self.omega1_term(t),
        }

    def flags(self, n_points=2001):
        tab = self.table(n_points)
        return {
            "inverted_trap": bool(np.any(tab["omega_c_sq"] < 0)),
            "non_lindblad_segment": bool(np.any(tab["gamma"] < -1e-15)),
            "omega_c_sq_range": [float(tab["omega_c_sq"].min()), float(tab["omega_c_sq"].max())],
            "gamma_range": [float(tab["gamma"].min()), float(tab["gamma"].max())],
        }

    # reference path

    def squeeze(self, t):
        """Instantaneous squeezing r_t = ln sqrt(omega_t / omega_0)."""
        return 0.5 * np.log(self.omega.value(t) / self.units.omega0)

    def target_params(self, t) -> SqueezeParams:
        return SqueezeParams(float(self.squeeze(t)), 0.0, float(self.epsilon(t)))

    def lab_bogoliubov(self, t):
        """(u, v, epsilon): the state is thermal in b = u a + v a_dag."""
        r = self.squeeze(t)
        ch, sh = np.cosh(r), np.sinh(r)
        k = self.chirp(t) / (2 * self.omega.value(t))
        u = ch - 1j * k * (ch + sh)
        v = sh - 1j * k * (ch + sh)
        return complex(u), complex(v), float(self.epsilon(t))

    def lab_moments(self, t) -> GaussianMoments:
        """Moments of the chirped squeezed thermal state along the path."""
        u = self.units
        w, e = float(self.omega.value(t)), float(self.epsilon(t))
        coth = 1.0 / np.tanh(0.5 * e)
        X = u.hbar / (2 * u.mass * w) * coth
        P = u.hbar * u.mass * w / 2 * coth
        chirp = float(self.chirp(t))
        mx = u.mass * chirp
        cov = np.array([[X, mx * X], [mx * X, P + mx * mx * X]])
        return GaussianMoments([0.0, 0.0], cov, u.hbar)


def control_open(omega: Schedule, beta: Schedule, units: UnitSystem | None = None) -> TrapControls:
    units = units or UnitSystem()
    if abs(omega.tf - beta.tf) > 1e-12:
        raise InvalidScheduleError("omega and beta schedules need the same duration")
    _positive(omega, "omega")
    _positive(beta, "beta")
    return TrapControls(omega, beta, units)


def hamiltonian_coefficients(omega_c_sq, omega0):
    """H/hbar = h (a_dag a + 1/2) + zeta (a^2 + a_dag^2) in the omega0 basis."""
    h = (omega0 ** 2 + omega_c_sq) / (2 * omega0)
    zeta = (omega_c_sq - omega0 ** 2) / (4 * omega0)
    return h, zeta


def cd_hamiltonian(p: SqueezeParams, rdot, phidot, N, units: UnitSystem | None = None):
    """Counter-diabatic term i hbar (dS/dt) S^dag along a squeezing path."""
    units = units or UnitSystem()
    a, ad = fock.build_ladder(N)
    c, s = np.cosh(p.r), np.sinh(p.r)
    A = c * a + np.exp(1j * p.phi) * s * ad
    H = 0.5 * phidot * (A.conj().T @ A - ad @ a)
    H = H + 0.5j * rdot * (np.exp(-1j * p.phi) * (a @ a) - np.exp(1j * p.phi) * (ad @ ad))
    return units.hbar * H


def control_dissipator(rho, gamma, x):
    """-gamma [x, [x, rho]]."""
    m = fock.as_matrix(rho)
    if m.shape != x.shape:
        raise DimensionMismatchError("state and position operator dimensions differ")
    inner = x @ m - m @ x
    return -gamma * (x @ inner - inner @ x)


def bogoliubov_operator(u, v, N):
    a, ad = fock.build_ladder(N)
    return u * a + v * ad


def general_control_dissipator(rho, b, omega1, eps_dot, epsilon):
    """Dissipator written with the instantaneous thermal mode b.

    (Omega_1/2)[b^2 - b_dag^2, rho] - eps_dot rho (b_dag b + 1/(1 - e^eps)).
    Equal to the position form only on the instantaneous target state.
    """
    m = fock.as_matrix(rho)
    if m.shape != b.shape:
        raise DimensionMismatchError("state and mode operator dimensions differ")
    bd = b.conj().T
    G = b @ b - bd @ bd
    occ = bd @ b + np.eye(b.shape[0]) / (1 - np.exp(epsilon))
    return 0.5 * omega1 * (G @ m - m @ G) - eps_dot * (m @ occ)
