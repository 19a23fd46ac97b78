"""Truncated Fock-space operators, states and comparison metrics.

Operators are plain complex ``numpy`` arrays.  States are wrapped in
:class:`DensityMatrix`, which validates the physical invariants and carries
the truncation (tail-mass) diagnostic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import (
    DimensionMismatchError,
    InvalidDimensionError,
    InvalidFrequencyError,
    InvalidStateError,
    UnsupportedTemperatureError,
)

# rows/cols excluded from operator identity checks
EDGE = 5
TAIL_LEVELS = 5
TAIL_TOLERANCE = 1e-8
TRACE_TOLERANCE = 1e-9
HERMITIAN_TOLERANCE = 1e-10
PSD_TOLERANCE = 1e-8
EIG_FLOOR = 1e-14


@dataclass(frozen=True)
class UnitSystem:
    """Physical units.  Defaults put hbar = m = omega0 = 1."""

    hbar: float = 1.0
    mass: float = 1.0
    omega0: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "omega0"):
            if not getattr(self, name) > 0:
                raise InvalidFrequencyError(f"{name} must be positive")

    def x0(self, omega=None) -> float:
        """Ground-state width sqrt(hbar / (2 m omega))."""
        omega = self.omega0 if omega is None else omega
        if not omega > 0:
            raise InvalidFrequencyError("omega must be positive")
        return float(np.sqrt(self.hbar / (2.0 * self.mass * omega)))

    def p0(self, omega=None) -> float:
        return self.hbar / (2.0 * self.x0(omega))


def _check_dim(N):
    if int(N) != N or N < 2:
        raise InvalidDimensionError(f"Fock dimension must be an integer >= 2, got {N}")
    return int(N)


def build_ladder(N):
    """Return (a, a_dagger) truncated to N levels."""
    N = _check_dim(N)
    a = np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1).astype(complex)
    return a, a.conj().T.copy()


def number_operator(N):
    N = _check_dim(N)
    return np.diag(np.arange(N, dtype=float)).astype(complex)


def quadratures(N, omega=None, units: UnitSystem | None = None):
    """Position and momentum operators for an oscillator of frequency ``omega``."""
    units = units or UnitSystem()
    omega = units.omega0 if omega is None else omega
    if not omega > 0:
        raise InvalidFrequencyError("omega must be positive")
    a, ad = build_ladder(N)
    x0 = units.x0(omega)
    x = x0 * (a + ad)
    p = 1j * units.p0(omega) * (ad - a)
    return x, p


def interior(M, margin=EDGE):
    """Crop away the top ``margin`` rows and columns."""
    n = M.shape[0] - margin
    return M[:n, :n]


def commutator(A, B):
    return A @ B - B @ A


def default_padding(N, r=0.0):
    """Working dimension for exponentials of quadratic generators."""
    return int(N + max(60, N) + 40 * abs(r))


def squeeze_operator(r, phi, N, padding=None):
    """exp((r/2)(e^{-i phi} a^2 - e^{i phi} a_dag^2)) truncated to N levels.

    The exponential is taken in a larger space and cropped, so the returned
    block matches the untruncated operator away from the edge.
    """
    N = _check_dim(N)
    M = padding or default_padding(N, r)
    a, ad = build_ladder(M)
    gen = 0.5 * r * (np.exp(-1j * phi) * (a @ a) - np.exp(1j * phi) * (ad @ ad))
    return expm(gen)[:N, :N]


def padded_expm(generator_builder, N, padding=None):
    """Exponentiate ``generator_builder(a, a_dag)`` in a padded space, crop to N."""
    M = padding or default_padding(N)
    a, ad = build_ladder(M)
    return expm(generator_builder(a, ad))[:N, :N]


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian unit-trace matrix on a truncated Fock space."""

    entries: np.ndarray = field(repr=False)
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError("density matrix must be square")
        _check_dim(m.shape[0])
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        if self.validate:
            self.check()

    def check(self):
        m = self.entries
        tr = np.trace(m)
        if abs(tr - 1) > TRACE_TOLERANCE:
            raise InvalidStateError(f"trace {tr.real:.3e} differs from 1")
        if np.abs(m - m.conj().T).max() > HERMITIAN_TOLERANCE:
            raise InvalidStateError("density matrix is not Hermitian")
        lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()
        if lo < -PSD_TOLERANCE:
            raise InvalidStateError(f"negative eigenvalue {lo:.3e}")

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def tail_mass(self):
        return float(np.real(np.diag(self.entries)[-TAIL_LEVELS:]).sum())

    @property
    def truncation_ok(self):
        return self.tail_mass <= TAIL_TOLERANCE

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def as_matrix(rho):
    if isinstance(rho, DensityMatrix):
        return rho.entries
    return np.asarray(rho, dtype=complex)


def tail_mass(rho):
    return float(np.real(np.diag(as_matrix(rho))[-TAIL_LEVELS:]).sum())


def thermal_state(epsilon, N):
    """Gibbs state with populations proportional to exp(-epsilon n)."""
    N = _check_dim(N)
    if not epsilon > 0:
        raise UnsupportedTemperatureError("epsilon must be positive (finite temperature)")
    p = np.exp(-epsilon * np.arange(N)) * (-np.expm1(-epsilon))
    return DensityMatrix(np.diag(p / p.sum()).astype(complex))


def squeezed_thermal_state(r, phi, epsilon, N, padding=None):
    """S thermal(epsilon) S^dag, built in a padded space and cropped to N."""
    N = _check_dim(N)
    if not epsilon > 0:
        raise UnsupportedTemperatureError("epsilon must be positive (finite temperature)")
    M = padding or default_padding(N, r)
    S = squeeze_operator(r, phi, M, padding=M)
    p = np.exp(-epsilon * np.arange(M)) * (-np.expm1(-epsilon))
    rho = (S * p) @ S.conj().T
    rho = rho[:N, :N]
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def pure_state(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi.conj()))


def _spectrum(rho):
    m = as_matrix(rho)
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def von_neumann_entropy(rho):
    w = _spectrum(rho)
    if w.min() < -PSD_TOLERANCE:
        raise InvalidStateError(f"negative eigenvalue {w.min():.3e}")
    w = w[w > EIG_FLOOR]
    return float(-(w * np.log(w)).sum())


def purity(rho):
    m = as_matrix(rho)
    return float(np.real(np.vdot(m, m)))


def expectation(op, rho):
    return complex(np.trace(op @ as_matrix(rho)))


def _psd_sqrt(m):
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity(rho, sigma):
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clipped to [0, 1]."""
    A, B = as_matrix(rho), as_matrix(sigma)
    if A.shape != B.shape:
        raise DimensionMismatchError(f"shapes {A.shape} and {B.shape} differ")
    s = _psd_sqrt(A)
    w = np.linalg.eigvalsh(s @ B @ s)
    f = np.sqrt(np.clip(w, 0.0, None)).sum() ** 2
    return float(min(max(f, 0.0), 1.0))


def trace_distance(rho, sigma):
    A, B = as_matrix(rho), as_matrix(sigma)
    if A.shape != B.shape:
        raise DimensionMismatchError(f"shapes {A.shape} and {B.shape} differ")
    d = A - B
    return float(0.5 * np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T))).sum())


# two-level (x) Fock helpers; atomic basis ordered (g, e)

SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
SIGMA_GE = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|
PROJ_G = np.diag([1.0, 0.0]).astype(complex)
PROJ_E = np.diag([0.0, 1.0]).astype(complex)


def atom_motion(atom_op, motion_op):
    """Tensor an atomic 2x2 operator with a motional N x N operator."""
    return np.kron(atom_op, motion_op)


def reduce_to_motion(rho_full, N):
    """Partial trace over the atom for a (2N x 2N) state."""
    r = np.asarray(rho_full).reshape(2, N, 2, N)
    return np.einsum("inim->nm", r)


def excited_population(rho_full, N):
    return float(np.real(np.trace(np.asarray(rho_full)[N:, N:])))
