"""Fixed-step RK4 integration of quadratic master equations in Fock space.

Every generator used here is at most quadratic in (a, a_dag), so it is
written as

    d rho / dt = A rho + (A rho)^dag + sum_k c_k L_k rho L_k^dag

with A a pentadiagonal matrix and L_k linear in the ladder operators.  All
products are applied through their bands, which keeps a step O(N^2).

Sandwich terms with a negative coefficient (cooling segments) are not
completely positive and blow up in a truncated space.  When the spec carries
an anchor (the Gaussian state the protocol is designed to follow), such a
term c L rho L^dag is replaced by (rho Z + Z^dag rho)/2 with
Z = c (rho_t^-1 L rho_t) L^dag.  The replacement agrees with the original
term on the anchored path, so the designed trajectory is unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .. import fock
from ..errors import DimensionMismatchError, StepSizeError
from ..fock import DensityMatrix, UnitSystem

TRACE_DRIFT_LIMIT = 1e-6
STEPS_PER_PERIOD = 50


def _as_function(v):
    return v if callable(v) else (lambda t, _v=v: _v)


# ladder algebra ----------------------------------------------------------

@dataclass(frozen=True)
class LinearForm:
    """la * a + ld * a_dag."""

    la: complex
    ld: complex

    def conjugated_by(self, T):
        """Image under (a, a_dag) -> T (a, a_dag)."""
        return LinearForm(self.la * T[0, 0] + self.ld * T[1, 0], self.la * T[0, 1] + self.ld * T[1, 1])

    def times_dagger_of(self, other: "LinearForm") -> "QuadForm":
        """self * other^dag as a quadratic form (truncated a a_dag kept)."""
        ca, cd = np.conj(other.la), np.conj(other.ld)
        # other^dag = cd * a + ca * a_dag
        return QuadForm(aa=self.la * cd, dd=self.ld * ca, nd=self.ld * cd, ad=self.la * ca)

    def matrix(self, N):
        a, ad = fock.build_ladder(N)
        return self.la * a + self.ld * ad


@dataclass(frozen=True)
class QuadForm:
    """aa a^2 + dd a_dag^2 + nd a_dag a + ad a a_dag + one."""

    aa: complex = 0j
    dd: complex = 0j
    nd: complex = 0j
    ad: complex = 0j
    one: complex = 0j

    def __add__(self, o):
        return QuadForm(self.aa + o.aa, self.dd + o.dd, self.nd + o.nd, self.ad + o.ad, self.one + o.one)

    def scale(self, c):
        return QuadForm(c * self.aa, c * self.dd, c * self.nd, c * self.ad, c * self.one)

    def matrix(self, N):
        a, ad = fock.build_ladder(N)
        return (self.aa * (a @ a) + self.dd * (ad @ ad) + self.nd * (ad @ a) + self.ad * (a @ ad)
                + self.one * np.eye(N))


class Bands:
    """Precomputed ladder diagonals for dimension N."""

    def __init__(self, N):
        self.N = N
        n = np.arange(N, dtype=float)
        self.n = n
        self.n_trunc = n + 1
        self.n_trunc[-1] = 0.0
        self.s1 = np.sqrt(n[1:])[:, None]
        self.s2 = np.sqrt(n[1:-1] * n[2:])[:, None]

    def quad(self, q: QuadForm, M):
        d = (q.nd * self.n + q.ad * self.n_trunc + q.one)[:, None]
        out = d * M
        if q.aa:
            out[:-2] += q.aa * self.s2 * M[2:]
        if q.dd:
            out[2:] += q.dd * self.s2 * M[:-2]
        return out

    def lin(self, l: LinearForm, M):
        out = np.zeros_like(M)
        if l.la:
            out[:-1] = l.la * self.s1 * M[1:]
        if l.ld:
            out[1:] += l.ld * self.s1 * M[:-1]
        return out


# Hamiltonian and dissipators --------------------------------------------

@dataclass(frozen=True)
class QuadraticHamiltonian:
    """H/hbar = h(t) a_dag a + zeta(t) a^2 + conj(zeta(t)) a_dag^2."""

    h: Callable | float = 0.0
    zeta: Callable | complex = 0j

    def coefficients(self, t):
        return float(_as_function(self.h)(t)), complex(_as_function(self.zeta)(t))

    def form(self, t) -> QuadForm:
        h, z = self.coefficients(t)
        return QuadForm(aa=z, dd=np.conj(z), nd=h)

    def matrix(self, t, N):
        return self.form(t).matrix(N)


@dataclass
class Parts:
    A: QuadForm = field(default_factory=QuadForm)
    sandwiches: list = field(default_factory=list)  # (coefficient, LinearForm)
    normalized: list = field(default_factory=list)  # (coefficient, LinearForm), minus trace part


@dataclass(frozen=True)
class PositionDephasing:
    """-gamma [x_t, [x_t, rho]] with x_t = x0 (a e^{-i nu t} + a_dag e^{i nu t})."""

    gamma: Callable | float
    x0: float = 1 / math.sqrt(2)
    nu: float = 0.0

    def coefficient(self, t):
        return float(_as_function(self.gamma)(t)) * self.x0 ** 2

    def mode(self, t):
        ph = np.exp(-1j * self.nu * t)
        return LinearForm(ph, np.conj(ph))

    def parts(self, t):
        k = self.coefficient(t)
        L = self.mode(t)
        return Parts(A=L.times_dagger_of(L).scale(-k), sandwiches=[(2 * k, L)])

    def moment_rates(self, t, alpha, mu, n):
        k = self.coefficient(t)
        return 0j, -2 * k * np.exp(2j * self.nu * t), 2 * k


@dataclass(frozen=True)
class RamanPair:
    """2 kappa (D[a] + D[a_dag])."""

    kappa: Callable | float

    def coefficient(self, t):
        return float(_as_function(self.kappa)(t))

    def parts(self, t):
        k = self.coefficient(t)
        A = QuadForm(nd=-k, ad=-k)
        return Parts(A=A, sandwiches=[(2 * k, LinearForm(1, 0)), (2 * k, LinearForm(0, 1))])

    def moment_rates(self, t, alpha, mu, n):
        return 0j, 0j, 2 * self.coefficient(t)


@dataclass(frozen=True)
class NormalizedSandwich:
    """(kappa/4)(X rho X - Tr(X rho X) rho) with X = a + a_dag."""

    kappa: Callable | float

    def coefficient(self, t):
        return float(_as_function(self.kappa)(t))

    def parts(self, t):
        return Parts(normalized=[(0.25 * self.coefficient(t), LinearForm(1, 1))])

    def moment_rates(self, t, alpha, mu, n):
        if abs(alpha) > 1e-12:
            raise NotImplementedError("moment closure for this dissipator assumes zero mean")
        c = 0.25 * self.coefficient(t)
        dmu = 2 * (mu + n) * (mu + n + 1)
        dn = (n + 1 + np.conj(mu)) * (mu + n + 1) + (mu + n) * (n + np.conj(mu))
        return 0j, c * dmu, float(np.real(c * dn))


@dataclass(frozen=True)
class ThermalModeForm:
    """Dissipator written with the instantaneous thermal mode b = u a + v a_dag.

    (Omega_1/2)[b^2 - b_dag^2, rho] - (eps_dot/2){b_dag b + 1/(1 - e^eps), rho}.
    The anticommutator is the symmetrized version of the one-sided product;
    both agree on the instantaneous state, which commutes with b_dag b.
    """

    omega1: Callable
    eps_dot: Callable
    epsilon: Callable
    mode: Callable  # t -> (u, v)

    def parts(self, t):
        u, v = self.mode(t)
        b = LinearForm(u, v)
        bd_conj = LinearForm(np.conj(v), np.conj(u))  # b_dag as a linear form
        b2 = _product(b, b)
        bd2 = _product(bd_conj, bd_conj)
        occ = _product(bd_conj, b)
        om, ed, e = self.omega1(t), self.eps_dot(t), self.epsilon(t)
        A = (b2 + bd2.scale(-1)).scale(0.5 * om) + (occ + QuadForm(one=1 / (1 - np.exp(e)))).scale(-0.5 * ed)
        return Parts(A=A)

    def moment_rates(self, t, alpha, mu, n):
        raise NotImplementedError("the thermal-mode form is state dependent; use PositionDephasing")


def _product(x: LinearForm, y: LinearForm) -> QuadForm:
    """x * y for linear forms."""
    # (xa a + xd a_dag)(ya a + yd a_dag)
    return QuadForm(aa=x.la * y.la, dd=x.ld * y.ld, nd=x.ld * y.la, ad=x.la * y.ld)


# anchors ----------------------------------------------------------------

@dataclass(frozen=True)
class GaussianAnchor:
    """Conjugation rule rho^-1 (a, a_dag) rho = T (a, a_dag) for a Gaussian rho."""

    T: np.ndarray

    @classmethod
    def from_bogoliubov(cls, u, v, epsilon):
        em, ep = np.exp(-epsilon), np.exp(epsilon)
        au2, av2 = abs(u) ** 2, abs(v) ** 2
        T = np.array([
            [au2 * em - av2 * ep, np.conj(u) * v * (em - ep)],
            [u * np.conj(v) * (ep - em), au2 * ep - av2 * em],
        ], dtype=complex)
        return cls(T)

    @classmethod
    def from_squeeze(cls, r, phi, epsilon):
        return cls.from_bogoliubov(np.cosh(r), np.exp(1j * phi) * np.sinh(r), epsilon)

    @classmethod
    def from_factorized(cls, J, B):
        eB = np.exp(B)
        T = np.array([
            [np.exp(-B) - 4 * abs(J) ** 2 * eB, 2 * np.conj(J) * eB],
            [-2 * J * eB, eB],
        ], dtype=complex)
        return cls(T)


# spec and integrator ------------------------------------------------------

@dataclass(frozen=True)
class MasterEquationSpec:
    hamiltonian: QuadraticHamiltonian
    dissipators: Sequence = ()
    tf: float = 1.0
    steps: int = 1000
    anchor: Callable | None = None  # t -> GaussianAnchor
    recast: str = "auto"  # "auto" or "never"
    units: UnitSystem = field(default_factory=UnitSystem)

    @property
    def dt(self):
        return self.tf / self.steps

    @property
    def times(self):
        return np.linspace(0.0, self.tf, self.steps + 1)

    def parts(self, t):
        out = Parts(A=self.hamiltonian.form(t).scale(-1j))
        for d in self.dissipators:
            p = d.parts(t)
            out.A = out.A + p.A
            out.sandwiches.extend(p.sandwiches)
            out.normalized.extend(p.normalized)
        return out

    def rate_scale(self, samples=201):
        """Largest frequency or rate appearing along the grid."""
        best = 0.0
        for t in np.linspace(0, self.tf, samples):
            h, z = self.hamiltonian.coefficients(t)
            best = max(best, abs(h), 2 * abs(z), math.sqrt(abs(h * h - 4 * abs(z) ** 2)))
            for d in self.dissipators:
                if hasattr(d, "coefficient"):
                    best = max(best, 2 * abs(d.coefficient(t)))
        return best


@dataclass
class MasterRun:
    times: np.ndarray
    states: list
    max_trace_drift: float
    max_hermiticity_correction: float
    max_tail_mass: float
    recast_used: bool

    @property
    def final(self) -> DensityMatrix:
        return DensityMatrix(self.states[-1], validate=False)

    @property
    def truncation_ok(self):
        return self.max_tail_mass <= fock.TAIL_TOLERANCE


class Generator:
    """Right-hand side of the master equation for one spec and dimension."""

    def __init__(self, spec: MasterEquationSpec, N):
        self.spec = spec
        self.bands = Bands(N)
        self.recast_used = False

    def prepare(self, t):
        spec = self.spec
        p = spec.parts(t)
        A = p.A
        keep = []
        anchor = None
        for c, L in p.sandwiches:
            if c < 0 and spec.recast == "auto" and spec.anchor is not None:
                if anchor is None:
                    anchor = spec.anchor(t)
                Lp = L.conjugated_by(anchor.T)
                # Z^dag / 2 with Z = c L' L^dag
                A = A + L.times_dagger_of(Lp).scale(0.5 * c)
            elif c != 0:
                keep.append((c, L))
        if anchor is not None:
            self.recast_used = True
        return A, keep, p.normalized, anchor is not None

    def apply(self, prepared, rho):
        A, keep, normalized, renorm = prepared
        bands = self.bands
        y = bands.quad(A, rho)
        y = y + y.conj().T
        for c, L in keep:
            Lr = bands.lin(L, rho)
            y += c * bands.lin(L, Lr.conj().T)
        for c, L in normalized:
            Lr = bands.lin(L, rho)
            S = bands.lin(L, Lr.conj().T)
            y += c * (S - np.trace(S) * rho)
        if renorm:
            y -= np.trace(y) * rho
        return y

    def __call__(self, t, rho):
        return self.apply(self.prepare(t), rho)


def _record_indices(steps, record):
    if record is None:
        record = min(steps, 200)
    if isinstance(record, int):
        idx = np.unique(np.linspace(0, steps, record + 1).round().astype(int))
    else:
        idx = np.unique(np.asarray(record, dtype=int))
    return set(idx.tolist()), idx


def integrate_master(spec: MasterEquationSpec, rho0, record=None, check_grid=True) -> MasterRun:
    """Classical RK4 with per-step Hermitian symmetrization.

    ``record`` is a number of evenly spaced snapshots or explicit step indices.
    """
    rho = np.array(fock.as_matrix(rho0), dtype=complex)
    N = rho.shape[0]
    if rho.shape[1] != N:
        raise DimensionMismatchError("initial state must be square")
    dt = spec.dt
    if check_grid:
        rate = spec.rate_scale()
        if rate > 0 and dt > 2 * math.pi / (STEPS_PER_PERIOD * rate):
            raise StepSizeError(
                f"dt={dt:.3g} gives fewer than {STEPS_PER_PERIOD} steps per period 2pi/{rate:.3g}",
                suggested_dt=2 * math.pi / (STEPS_PER_PERIOD * rate))
    gen = Generator(spec, N)
    wanted, idx = _record_indices(spec.steps, record)
    times = spec.times
    states, rec_times = [], []
    drift = herm = tail = 0.0
    if 0 in wanted:
        states.append(rho.copy())
        rec_times.append(0.0)
    tail = fock.tail_mass(rho)
    nxt = gen.prepare(0.0)
    for k in range(spec.steps):
        t = times[k]
        p0 = nxt
        pm = gen.prepare(t + dt / 2)
        nxt = gen.prepare(t + dt)
        k1 = gen.apply(p0, rho)
        k2 = gen.apply(pm, rho + 0.5 * dt * k1)
        k3 = gen.apply(pm, rho + 0.5 * dt * k2)
        k4 = gen.apply(nxt, rho + dt * k3)
        rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        sym = 0.5 * (rho + rho.conj().T)
        herm = max(herm, float(np.abs(rho - sym).max()))
        rho = sym
        tr = float(np.real(np.trace(rho)))
        drift = max(drift, abs(tr - 1))
        if not np.isfinite(tr) or drift > TRACE_DRIFT_LIMIT:
            raise StepSizeError(f"trace drift {abs(tr - 1):.3g} at t={t + dt:.6g}; reduce dt",
                                suggested_dt=dt / 2)
        if (k + 1) % 10 == 0 or k + 1 == spec.steps:
            tail = max(tail, fock.tail_mass(rho))
        if k + 1 in wanted:
            states.append(rho.copy())
            rec_times.append(times[k + 1])
    return MasterRun(np.array(rec_times), states, drift, herm, tail, gen.recast_used)


def trajectory_table(run: MasterRun, target=None, units: UnitSystem | None = None, omega0=None):
    """Rows t, fidelity_to_target, entropy, var_x, var_p, cov_xp, trace_error."""
    from ..squeezed import moments_from_density

    units = units or UnitSystem()
    rows = []
    for t, rho in zip(run.times, run.states):
        m = moments_from_density(rho, omega0, units)
        f = fock.fidelity(rho, target(t)) if target is not None else float("nan")
        rows.append((t, f, fock.von_neumann_entropy(rho), m.var_x, m.var_p, m.cov_xp,
                     abs(np.trace(rho).real - 1)))
    return np.array(rows)


TRAJECTORY_COLUMNS = ("t", "fidelity_to_target", "entropy", "var_x", "var_p", "cov_xp", "trace_error")
