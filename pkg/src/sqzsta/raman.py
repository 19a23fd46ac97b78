"""Two-photon Raman squeezing protocols and the four-laser variant.

The state is carried in factorized form (J, B); the controls are the
dephasing strength kappa and the complex two-photon coupling alpha in the
rotating-frame Hamiltonian H/hbar = alpha a^2 + conj(alpha) a_dag^2.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    DesignInfeasibleError,
    OutOfDomainError,
    SignSplitError,
    UnsupportedRegimeError,
)
from .squeezed import FactorizedForm, SqueezeParams, factorize, unfactorize, wrap_phase
from .trap import Schedule, make_quintic

CONDITION_LIMIT = 1e8


class HierarchyWarning(UserWarning):
    """Detuning is large enough to run but below the comfortable margin."""


def _check_hierarchy(detuning, rates):
    scale = max(rates)
    if detuning == 0:
        raise UnsupportedRegimeError("detuning must be nonzero")
    if abs(detuning) < 10 * scale:
        raise UnsupportedRegimeError(f"|detuning| must exceed 10 x {scale:g}")
    if abs(detuning) < 50 * scale:
        warnings.warn(f"detuning {detuning:g} below 50 x {scale:g}", HierarchyWarning, stacklevel=3)


@dataclass(frozen=True)
class RamanLaserConfig:
    """Two lasers on the second blue sideband (omega_1 - omega_2 = 2 omega_0)."""

    rabi: tuple = (1.0, 1.0)
    lamb_dicke: tuple = (0.2, -0.2)
    detuning: float = 50.0
    phases: tuple = (0.0, 0.0)
    omega0: float = 1.0
    x0: float | None = None
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self.check:
            _check_hierarchy(self.detuning, [abs(self.rabi[0]), abs(self.rabi[1]), self.omega0])

    @property
    def sideband_offset(self):
        return 2 * self.omega0


def alpha_from_lasers(c: RamanLaserConfig) -> complex:
    """Effective two-photon coupling after eliminating the excited level."""
    if c.detuning == 0:
        raise UnsupportedRegimeError("detuning must be nonzero")
    deta = c.lamb_dicke[1] - c.lamb_dicke[0]
    amp = deta ** 2 * c.rabi[0] * c.rabi[1] / (8 * c.detuning)
    return complex(-amp * np.exp(1j * (c.phases[0] - c.phases[1])))


def lasers_from_alpha(alpha, lamb_dicke, detuning):
    """Rabi product and phase difference realizing ``alpha``."""
    deta = lamb_dicke[1] - lamb_dicke[0]
    product = 8 * detuning * np.abs(alpha) / deta ** 2
    return product, np.angle(-np.asarray(alpha))


@dataclass(frozen=True)
class ClosedRamanDesign:
    r: Schedule
    omega0: float = 1.0

    @property
    def tf(self):
        return self.r.tf

    def alpha(self, t):
        return 0.5j * self.r.d1(t)

    def abs_alpha(self, t):
        return np.abs(self.alpha(t))

    @property
    def final_phase(self):
        """Lab-frame squeezing phase reached at tf."""
        return -2 * self.omega0 * self.tf

    def lab_phase(self, t):
        return -2 * self.omega0 * np.asarray(t)


def closed_squeeze_design(r: Schedule, omega0=1.0, samples=2001) -> ClosedRamanDesign:
    """|alpha| = rdot / 2 with alpha = i rdot / 2 in the rotating frame."""
    t = np.linspace(0, r.tf, samples)
    rd = r.d1(t)
    scale = np.abs(rd).max()
    if scale > 0 and rd.min() < -1e-12 * scale and rd.max() > 1e-12 * scale:
        i = int(np.argmax(np.sign(rd[1:]) != np.sign(rd[:-1])))
        raise SignSplitError(f"squeezing rate changes sign near t={t[i]:.6g}")
    return ClosedRamanDesign(r, omega0)


def transfer_matrix(J, B):
    """3x3 map from (kappa, alpha_R, alpha_I) to (dJ_R, dJ_I, dB)."""
    jr, ji = J.real, J.imag
    eb = np.exp(-B)
    e2 = eb * eb
    q = 4 * (jr * jr - ji * ji)
    return np.array([
        [-4 * (1 - eb) * jr, -8 * jr * ji, e2 - 1 + q],
        [-4 * (1 - eb) * ji, 1 - e2 + q, 8 * jr * ji],
        [-4 * (np.cosh(B) - 1 + 2 * np.exp(B) * (jr * jr + ji * ji)), 8 * ji, -8 * jr],
    ])


def jc_transfer_matrix(J, B):
    """Four-laser variant: dephasing through the normalized x-sandwich."""
    jr, ji = J.real, J.imag
    eb = np.exp(-B)
    e2 = eb * eb
    q = 4 * (jr * jr - ji * ji)
    return np.array([
        [0.25 * eb * (1 + 2 * jr), -8 * jr * ji, q + e2 - 1],
        [0.5 * eb * ji, q + 1 - e2, 8 * jr * ji],
        [-(0.5 * np.cosh(B) + np.exp(B) * (jr * jr + ji * ji + jr)), 8 * ji, -8 * jr],
    ])


def parameter_rates(J, B, kappa, alpha, jc=False):
    """dJ and dB for given controls."""
    M = jc_transfer_matrix(J, B) if jc else transfer_matrix(J, B)
    v = M @ np.array([kappa, alpha.real, alpha.imag])
    return complex(v[0], v[1]), float(v[2])


def _in_domain(J, B):
    return np.isfinite(B) and np.isfinite(J) and B > 0 and abs(J) < 0.5


class StateFlow:
    """Path of the factorized parameters (J(t), B(t)) with time derivatives."""

    tf: float

    def J(self, t):
        raise NotImplementedError

    def J_dot(self, t):
        raise NotImplementedError

    def B(self, t):
        raise NotImplementedError

    def B_dot(self, t):
        raise NotImplementedError

    def velocity(self, t):
        jd = self.J_dot(t)
        return np.array([np.real(jd), np.imag(jd), self.B_dot(t)])

    def params(self, t) -> SqueezeParams:
        return unfactorize(FactorizedForm(1.0, complex(self.J(t)), float(self.B(t))))

    def lam(self, t):
        return -self.params(t).epsilon

    def check_domain(self, n_points=101):
        for t in np.linspace(0, self.tf, n_points):
            try:
                self.params(t)
            except OutOfDomainError:
                raise DesignInfeasibleError(f"flow leaves the physical domain at t={t:.6g}", t)


@dataclass(frozen=True)
class QuinticFlow(StateFlow):
    """Quintic interpolation of (J_R, J_I, B) between two states."""

    initial: FactorizedForm
    final: FactorizedForm
    tf: float

    @property
    def _parts(self):
        i, f = self.initial, self.final
        return (make_quintic(i.J.real, f.J.real, self.tf), make_quintic(i.J.imag, f.J.imag, self.tf),
                make_quintic(i.B, f.B, self.tf))

    def J(self, t):
        jr, ji, _ = self._parts
        return jr.value(t) + 1j * ji.value(t)

    def J_dot(self, t):
        jr, ji, _ = self._parts
        return jr.d1(t) + 1j * ji.d1(t)

    def B(self, t):
        return self._parts[2].value(t)

    def B_dot(self, t):
        return self._parts[2].d1(t)


def quintic_flow(initial: SqueezeParams, target: SqueezeParams, tf) -> QuinticFlow:
    return QuinticFlow(factorize(initial), factorize(target), float(tf))


@dataclass(frozen=True)
class SampledFlow(StateFlow):
    """Flow known on a grid, with derivatives evaluated from the dynamics."""

    times: np.ndarray
    Js: np.ndarray
    Bs: np.ndarray
    J_dots: np.ndarray
    B_dots: np.ndarray

    @property
    def tf(self):
        return float(self.times[-1])

    def _index(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, self.tf):
            raise ValueError(f"t={t} is not a grid point of the sampled flow")
        return i

    def J(self, t):
        return self.Js[self._index(t)]

    def J_dot(self, t):
        return self.J_dots[self._index(t)]

    def B(self, t):
        return self.Bs[self._index(t)]

    def B_dot(self, t):
        return self.B_dots[self._index(t)]


@dataclass
class RamanControls:
    """kappa(t) and alpha(t) on a grid, plus exact pointwise evaluation."""

    times: np.ndarray
    kappa: np.ndarray
    alpha: np.ndarray
    condition: np.ndarray
    evaluator: Callable | None = None
    jc: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def tf(self):
        return float(self.times[-1])

    def evaluate(self, t):
        """(kappa, alpha) at time t; splines the samples when no exact rule exists."""
        if self.evaluator is not None:
            return self.evaluator(t)
        if not hasattr(self, "_splines"):
            from scipy.interpolate import CubicSpline

            self._splines = (CubicSpline(self.times, self.kappa), CubicSpline(self.times, self.alpha.real),
                             CubicSpline(self.times, self.alpha.imag))
        k, ar, ai = self._splines
        return float(k(t)), complex(ar(t), ai(t))

    def kappa_at(self, t):
        return self.evaluate(t)[0]

    def alpha_at(self, t):
        return self.evaluate(t)[1]

    def table(self):
        return {
            "t": self.times,
            "alpha_R": self.alpha.real,
            "alpha_I": self.alpha.imag,
            "abs_alpha": np.abs(self.alpha),
            "phase_diff": np.angle(-self.alpha),
            "kappa": self.kappa,
        }


def _solve_controls(M, v, t):
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise DesignInfeasibleError(f"transfer matrix ill-conditioned (cond={cond:.3g}) at t={t:.6g}", t)
    return np.linalg.solve(M, v), cond


def _invert(flow: StateFlow, times, jc):
    mat = jc_transfer_matrix if jc else transfer_matrix

    def at(t):
        M = mat(complex(flow.J(t)), float(flow.B(t)))
        sol, _ = _solve_controls(M, flow.velocity(t), t)
        return float(sol[0]), complex(sol[1], sol[2])

    kap = np.empty(len(times))
    alp = np.empty(len(times), dtype=complex)
    cond = np.empty(len(times))
    for i, t in enumerate(times):
        M = mat(complex(flow.J(t)), float(flow.B(t)))
        sol, cond[i] = _solve_controls(M, flow.velocity(t), t)
        kap[i], alp[i] = sol[0], sol[1] + 1j * sol[2]
    exact = at if not isinstance(flow, SampledFlow) else None
    return RamanControls(np.asarray(times, float), kap, alp, cond, exact, jc)


def invert_controls(flow: StateFlow, n_points=1001, times=None) -> RamanControls:
    """Controls (kappa, alpha) that move the state along ``flow``."""
    times = np.linspace(0, flow.tf, n_points) if times is None else np.asarray(times)
    return _invert(flow, times, jc=False)


def forward_parameter_flow(controls: RamanControls, initial: FactorizedForm, times=None) -> SampledFlow:
    """Integrate dJ, dB under the controls with classical RK4."""
    times = controls.times if times is None else np.asarray(times, float)
    jc = controls.jc

    def rhs(t, y):
        k, a = controls.evaluate(t)
        J, B = complex(y[0], y[1]), y[2]
        M = jc_transfer_matrix(J, B) if jc else transfer_matrix(J, B)
        return M @ np.array([k, a.real, a.imag])

    y = np.array([initial.J.real, initial.J.imag, initial.B], dtype=float)
    ys = np.empty((len(times), 3))
    ds = np.empty((len(times), 3))
    ys[0] = y
    for i in range(len(times) - 1):
        t, h = times[i], times[i + 1] - times[i]
        k1 = rhs(t, y)
        ds[i] = k1
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not _in_domain(complex(y[0], y[1]), y[2]):
            raise OutOfDomainError(f"parameter flow left the physical domain at t={times[i + 1]:.6g}")
        ys[i + 1] = y
    ds[-1] = rhs(times[-1], y)
    return SampledFlow(times, ys[:, 0] + 1j * ys[:, 1], ys[:, 2], ds[:, 0] + 1j * ds[:, 1], ds[:, 2])


# four-laser variant

@dataclass(frozen=True)
class JcLaserConfig:
    """Lasers 0,1 (carrier-sideband pair with noisy laser 0), 2,3 (squeezing pair)."""

    rabi: tuple = (1.0, 1.0, 1.0, 1.0)
    lamb_dicke: tuple = (0.0, 0.2, 0.2, -0.2)
    detuning: float = 50.0
    phases: tuple = (0.0, np.pi / 2, 0.0, 0.0)
    nu: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if abs(wrap_phase(self.phases[1] - self.phases[0] - np.pi / 2)) > 1e-12:
            raise UnsupportedRegimeError("the dissipator form needs Phi_1 - Phi_0 = pi/2")

    @property
    def resonances(self):
        return {"omega2_minus_omega3": 2 * self.nu, "omega1_minus_omega0": self.nu}


def jc_kappa_from_lasers(c: JcLaserConfig):
    return (c.hbar * c.rabi[1] * np.sqrt(c.rabi[0]) * (c.lamb_dicke[1] - c.lamb_dicke[0]) / (2 * c.detuning)) ** 2


def jc_alpha_from_lasers(c: JcLaserConfig):
    deta = c.lamb_dicke[3] - c.lamb_dicke[2]
    amp = deta ** 2 * c.rabi[2] * c.rabi[3] / (8 * c.detuning)
    return complex(-amp * np.exp(1j * (c.phases[2] - c.phases[3])))


def jc_invert_controls(flow: StateFlow, n_points=1001, times=None) -> RamanControls:
    """Controls for the four-laser scheme; kappa must stay non-negative."""
    times = np.linspace(0, flow.tf, n_points) if times is None else np.asarray(times)
    ctrl = _invert(flow, times, jc=True)
    scale = max(np.abs(ctrl.kappa).max(), 1e-300)
    bad = np.nonzero(ctrl.kappa < -1e-10 * scale)[0]
    if len(bad):
        t = float(ctrl.times[bad[0]])
        raise DesignInfeasibleError(
            f"four-laser scheme needs kappa < 0 (kappa={ctrl.kappa[bad[0]]:.3g}) at t={t:.6g}; "
            "kappa is a square of real amplitudes", t)
    ctrl.metadata["phase_requirement"] = "Phi_1 - Phi_0 = pi/2"
    return ctrl


def jc_laser_amplitudes(kappa, rabi_probe, lamb_dicke01, detuning, hbar=1.0):
    """Noise-laser strength Omega_0 giving ``kappa`` for a fixed probe Omega_1."""
    deta = lamb_dicke01[1] - lamb_dicke01[0]
    return (2 * detuning * np.sqrt(np.clip(kappa, 0, None)) / (hbar * rabi_probe * deta)) ** 2
