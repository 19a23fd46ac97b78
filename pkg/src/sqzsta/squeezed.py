"""Squeezed thermal states: parametrizations, moments, Wigner functions.

Phase convention: the squeezing operator is
S(r, phi) = exp((r/2)(e^{-i phi} a^2 - e^{i phi} a_dag^2)), so that
S a S^dag = cosh(r) a + e^{i phi} sinh(r) a_dag.  Every other module takes
its phase convention from here.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import fock
from .errors import (
    CoverageError,
    DegenerateParameterError,
    InvalidStateError,
    OutOfDomainError,
    UnsupportedRegimeError,
    WrongBranchError,
)
from .fock import UnitSystem

R_BOUNDS = (0.0, 10.0)
EPS_BOUNDS = (1e-4, 50.0)


def wrap_phase(phi):
    """Map an angle into (-pi, pi]."""
    w = float(np.mod(phi + np.pi, 2 * np.pi) - np.pi)
    return np.pi if w == -np.pi else w


@dataclass(frozen=True)
class SqueezeParams:
    """(r, phi, epsilon) of S(r, phi) exp(-epsilon n) S^dag / Z.

    A negative ``r`` is folded into the canonical form (|r|, phi + pi);
    the two describe the same state.
    """

    r: float
    phi: float = 0.0
    epsilon: float = 1.0

    def __post_init__(self):
        r, phi = float(self.r), float(self.phi)
        if r < 0:
            r, phi = -r, phi + np.pi
        if not np.isfinite(r):
            raise OutOfDomainError("r must be finite")
        if not self.epsilon > 0:
            raise UnsupportedRegimeError("epsilon must be positive")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "phi", wrap_phase(phi))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def lam(self):
        return -self.epsilon

    @property
    def nbar(self):
        return 1.0 / np.expm1(self.epsilon)

    @classmethod
    def from_lambda(cls, r, phi, lam):
        return cls(r, phi, -lam)

    def density_matrix(self, N, padding=None):
        return fock.squeezed_thermal_state(self.r, self.phi, self.epsilon, N, padding)


@dataclass(frozen=True)
class FactorizedForm:
    """rho proportional to K exp(conj(J) a_dag^2) exp(-B n) exp(J a^2)."""

    K: complex
    J: complex
    B: float

    def operator(self, N):
        """The (unnormalized) product as an N x N matrix.

        Each factor is an exact block of its untruncated counterpart, so the
        truncated product needs no padding.
        """
        a, ad = fock.build_ladder(N)
        left = expm(np.conj(self.J) * (ad @ ad))
        right = expm(self.J * (a @ a))
        mid = np.exp(-self.B * np.arange(N))
        return self.K * (left * mid) @ right


def _sq_components(r, lam):
    c, s = np.cosh(r), np.sinh(r)
    e2 = np.exp(2 * lam)
    D = c * c - s * s * e2
    return c, s, e2, D


def squeeze_rate_j(r, lam):
    """Real amplitude j(r, lambda) with J = j e^{-i phi}; j <= 0 for r >= 0."""
    c, s, e2, D = _sq_components(r, lam)
    return s * c * (e2 - 1.0) / (2.0 * D)


def factorize(p: SqueezeParams) -> FactorizedForm:
    lam = p.lam
    if lam >= 0:
        raise UnsupportedRegimeError("factorization needs lambda < 0")
    c, s, e2, D = _sq_components(p.r, lam)
    if abs(D) < 1e-14:
        raise DegenerateParameterError("cosh^2 r - sinh^2 r e^{2 lambda} vanishes")
    arg = np.exp(lam) / D
    if arg <= 1e-14:
        raise DegenerateParameterError(f"logarithm argument {arg:.3e} is not positive")
    j = s * c * (e2 - 1.0) / (2.0 * D)
    J = complex(j * np.exp(-1j * p.phi))
    return FactorizedForm(K=complex(D ** -0.5), J=J, B=float(-np.log(arg)))


def factorized_trace(f: FactorizedForm, N=200):
    """Trace of the factorized product, used to cross-check K."""
    return complex(np.trace(f.operator(N)))


def normalization_gap(p: SqueezeParams, N=200):
    """|K Tr(product) - Tr exp(lambda n)|, relative; should be ~1e-12."""
    f = factorize(p)
    expected = 1.0 / (-np.expm1(p.lam))
    return abs(factorized_trace(f, N) - expected) / expected


def _residual(r, eps, target_j, target_B):
    lam = -eps
    c, s, e2, D = _sq_components(r, lam)
    return np.array([s * c * (e2 - 1.0) / (2.0 * D) - target_j, -lam + np.log(D) - target_B])


def unfactorize(f: FactorizedForm, tol=1e-13, max_iter=200) -> SqueezeParams:
    """Invert :func:`factorize` by damped Newton on (r, epsilon)."""
    absJ = abs(f.J)
    B = float(f.B)
    if absJ == 0.0:
        if not EPS_BOUNDS[0] < B <= EPS_BOUNDS[1]:
            raise OutOfDomainError(f"B={B} outside the physical domain")
        return SqueezeParams(0.0, 0.0, B)
    # J = -|j| e^{-i phi}
    phi = float(np.angle(-np.conj(f.J)))
    x = np.array([min(absJ, R_BOUNDS[1]), min(max(B, 1e-3), EPS_BOUNDS[1])])
    target = (-absJ, B)
    F = _residual(*x, *target)
    h = 1e-7
    for _ in range(max_iter):
        if np.abs(F).max() < tol:
            break
        Jac = np.empty((2, 2))
        for k in range(2):
            d = np.zeros(2)
            d[k] = h * max(1.0, abs(x[k]))
            Jac[:, k] = (_residual(*(x + d), *target) - _residual(*(x - d), *target)) / (2 * d[k])
        try:
            step = np.linalg.solve(Jac, -F)
        except np.linalg.LinAlgError:
            raise OutOfDomainError("singular Jacobian while inverting the factorized form")
        t = 1.0
        while t > 1e-6:
            trial = x + t * step
            trial[0] = max(trial[0], 0.0)
            trial[1] = max(trial[1], 0.5 * x[1])
            with np.errstate(all="ignore"):
                Ft = _residual(*trial, *target)
            if np.all(np.isfinite(Ft)) and np.abs(Ft).max() < np.abs(F).max():
                break
            t *= 0.5
        else:
            break
        x, F = trial, Ft
    r, eps = x
    if np.abs(F).max() > 1e-9 or not (R_BOUNDS[0] <= r <= R_BOUNDS[1]) or not (EPS_BOUNDS[0] < eps <= EPS_BOUNDS[1]):
        raise OutOfDomainError(f"no (r, epsilon) root in bounds for J={f.J}, B={B}")
    return SqueezeParams(float(r), phi, float(eps))


@dataclass(frozen=True)
class GaussianMoments:
    """Mean (<x>, <p>) and symmetrized covariance of a single mode."""

    mean: np.ndarray
    cov: np.ndarray
    hbar: float = 1.0
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(2)
        cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * max(1.0, np.abs(cov).max()):
            raise InvalidStateError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        if self.validate and np.linalg.det(cov) < (self.hbar / 2) ** 2 - 1e-9:
            raise InvalidStateError("covariance violates the uncertainty relation")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def var_x(self):
        return float(self.cov[0, 0])

    @property
    def var_p(self):
        return float(self.cov[1, 1])

    @property
    def cov_xp(self):
        return float(self.cov[0, 1])

    def symplectic_nbar(self):
        """Thermal occupation of the symplectic eigenvalue."""
        return float(np.sqrt(np.linalg.det(self.cov)) / self.hbar - 0.5)

    def entropy(self):
        n = max(self.symplectic_nbar(), 0.0)
        if n < 1e-300:
            return 0.0
        return float((n + 1) * np.log1p(n) - n * np.log(n))


def from_ladder_moments(alpha, mu, n, units: UnitSystem, omega0=None, validate=True):
    """Build (x, p) moments from <a>, <a^2>, <a_dag a> (central parts derived)."""
    x0, p0 = units.x0(omega0), units.p0(omega0)
    mu_c = mu - alpha * alpha
    n_c = n - abs(alpha) ** 2
    mean = [2 * x0 * alpha.real, 2 * p0 * alpha.imag]
    vx = x0 * x0 * (2 * mu_c.real + 2 * n_c + 1)
    vp = p0 * p0 * (2 * n_c + 1 - 2 * mu_c.real)
    cxp = units.hbar * mu_c.imag
    cov = np.array([[vx, cxp], [cxp, vp]])
    return GaussianMoments(mean, cov, units.hbar, validate=validate)


def to_ladder_moments(m: GaussianMoments, units: UnitSystem, omega0=None):
    """Inverse of :func:`from_ladder_moments`: returns (<a>, <a^2>, <a_dag a>)."""
    x0, p0 = units.x0(omega0), units.p0(omega0)
    alpha = m.mean[0] / (2 * x0) + 1j * m.mean[1] / (2 * p0)
    sx, sp = m.cov[0, 0] / x0 ** 2, m.cov[1, 1] / p0 ** 2
    n_c = 0.25 * (sx + sp) - 0.5
    mu_c = 0.25 * (sx - sp) + 1j * m.cov[0, 1] / units.hbar
    return alpha, mu_c + alpha * alpha, n_c + abs(alpha) ** 2


def ladder_moments(p: SqueezeParams):
    """(<a>, <a^2>, <a_dag a>) of the squeezed thermal state."""
    nb = p.nbar
    mu = -0.5 * np.sinh(2 * p.r) * np.exp(1j * p.phi) * (2 * nb + 1)
    n = (nb + 0.5) * np.cosh(2 * p.r) - 0.5
    return 0j, complex(mu), float(n)


def to_gaussian_moments(p: SqueezeParams, omega0=None, units: UnitSystem | None = None):
    units = units or UnitSystem()
    return from_ladder_moments(*ladder_moments(p), units, omega0)


def moments_from_density(rho, omega0=None, units: UnitSystem | None = None):
    """Fock-space expectation values turned into Gaussian moments."""
    units = units or UnitSystem()
    m = fock.as_matrix(rho)
    N = m.shape[0]
    sq = np.sqrt(np.arange(1, N))
    alpha = np.sum(sq * np.diagonal(m, -1))
    sq2 = np.sqrt(np.arange(1, N - 1) * np.arange(2, N))
    mu = np.sum(sq2 * np.diagonal(m, -2))
    n = np.real(np.sum(np.arange(N) * np.diagonal(m)))
    return from_ladder_moments(complex(alpha), complex(mu), float(n), units, omega0, validate=False)


def variance_x(p: SqueezeParams, omega0=None, units: UnitSystem | None = None):
    """Closed-form position variance for a squeezed axis aligned with x.

    phi = 0 squeezes x; phi = pi (a folded negative r) stretches it.
    """
    units = units or UnitSystem()
    omega0 = units.omega0 if omega0 is None else omega0
    if abs(p.phi) < 1e-12:
        sign = -1.0
    elif abs(abs(p.phi) - np.pi) < 1e-12:
        sign = 1.0
    else:
        raise WrongBranchError("variance_x needs phi = 0; use to_gaussian_moments for general phi")
    return units.hbar / (2 * units.mass * omega0) * (2 * p.nbar + 1) * np.exp(2 * sign * p.r)


def gaussian_fidelity(m1: GaussianMoments, m2: GaussianMoments):
    """Fidelity between two single-mode Gaussian states."""
    hbar = m1.hbar
    V1, V2 = 2 * m1.cov / hbar, 2 * m2.cov / hbar
    d1, d2 = np.linalg.det(V1), np.linalg.det(V2)
    S = V1 + V2
    delta = max((d1 - 1) * (d2 - 1), 0.0)
    big = np.linalg.det(S)
    d = (m1.mean - m2.mean) / np.sqrt(hbar)
    # mean offset in units where the vacuum covariance is identity/2 * hbar
    expo = np.exp(-d @ np.linalg.solve(S, d))
    return float(min(2.0 / (np.sqrt(big + delta) - np.sqrt(delta)) * expo, 1.0))


@dataclass(frozen=True)
class PhaseSpaceGrid:
    x_min: float
    x_max: float
    p_min: float
    p_max: float
    nx: int = 201
    np: int = 201

    def axes(self):
        return np.linspace(self.x_min, self.x_max, self.nx), np.linspace(self.p_min, self.p_max, self.np)

    @classmethod
    def covering(cls, m: GaussianMoments, widths=7.0, nx=201, npts=201):
        sx, sp = np.sqrt(m.var_x), np.sqrt(m.var_p)
        return cls(m.mean[0] - widths * sx, m.mean[0] + widths * sx,
                   m.mean[1] - widths * sp, m.mean[1] + widths * sp, nx, npts)


def _check_coverage(m: GaussianMoments, grid: PhaseSpaceGrid, widths=6.0):
    sx, sp = np.sqrt(m.var_x), np.sqrt(m.var_p)
    ok = (grid.x_min <= m.mean[0] - widths * sx and grid.x_max >= m.mean[0] + widths * sx
          and grid.p_min <= m.mean[1] - widths * sp and grid.p_max >= m.mean[1] + widths * sp)
    if not ok:
        raise CoverageError(f"grid must span +-{widths:g} standard deviations in x and p")


def gaussian_wigner(m: GaussianMoments, grid: PhaseSpaceGrid):
    """W(x, p) on the grid, shape (nx, np), indexed [x, p]."""
    xs, ps = grid.axes()
    X, P = np.meshgrid(xs - m.mean[0], ps - m.mean[1], indexing="ij")
    inv = np.linalg.inv(m.cov)
    q = inv[0, 0] * X * X + 2 * inv[0, 1] * X * P + inv[1, 1] * P * P
    return np.exp(-0.5 * q) / (2 * np.pi * np.sqrt(np.linalg.det(m.cov)))


def wigner(p: SqueezeParams, grid: PhaseSpaceGrid, omega0=None, units: UnitSystem | None = None):
    m = to_gaussian_moments(p, omega0, units)
    _check_coverage(m, grid)
    return gaussian_wigner(m, grid)


def fock_wigner(rho, grid: PhaseSpaceGrid, omega0=None, units: UnitSystem | None = None):
    """Wigner function of a Fock-space state by the Laguerre recursion."""
    units = units or UnitSystem()
    m = fock.as_matrix(rho)
    N = m.shape[0]
    x0, p0 = units.x0(omega0), units.p0(omega0)
    xs, ps = grid.axes()
    X, P = np.meshgrid(xs, ps, indexing="ij")
    A = 0.5 * (X / x0 + 1j * P / p0)
    w = [np.exp(-2.0 * np.abs(A) ** 2) / np.pi + 0j]
    W = np.real(m[0, 0]) * np.real(w[0])
    for k in range(1, N):
        w.append(2.0 * A * w[k - 1] / np.sqrt(k))
        W = W + 2 * np.real(m[0, k] * w[k])
    for j in range(1, N):
        temp = w[j].copy()
        w[j] = (2 * np.conj(A) * temp - np.sqrt(j) * w[j - 1]) / np.sqrt(j)
        W = W + np.real(m[j, j] * w[j])
        for k in range(j + 1, N):
            nxt = (2 * A * w[k - 1] - np.sqrt(j) * temp) / np.sqrt(k)
            temp = w[k].copy()
            w[k] = nxt
            W = W + 2 * np.real(m[j, k] * w[k])
    return W / units.hbar


def grid_integral(W, grid: PhaseSpaceGrid):
    xs, ps = grid.axes()
    return float(np.trapezoid(np.trapezoid(W, ps, axis=1), xs))


def marginal_x_variance(W, grid: PhaseSpaceGrid):
    xs, ps = grid.axes()
    marg = np.trapezoid(W, ps, axis=1)
    norm = np.trapezoid(marg, xs)
    mean = np.trapezoid(xs * marg, xs) / norm
    return float(np.trapezoid((xs - mean) ** 2 * marg, xs) / norm)


def position_variance_closed(omega, epsilon, units: UnitSystem | None = None):
    """1 / (2 k^2 tanh(epsilon/2)) with k^2 = m omega / hbar."""
    units = units or UnitSystem()
    k2 = units.mass * omega / units.hbar
    return 1.0 / (2 * k2 * np.tanh(0.5 * epsilon))


@dataclass(frozen=True)
class VarianceMap:
    omega_ratios: np.ndarray
    beta_ratios: np.ndarray
    db: np.ndarray  # indexed [omega, beta]
    epsilon0: float

    @property
    def isentropic_beta(self):
        return 1.0 / self.omega_ratios

    def rows(self):
        for i, w in enumerate(self.omega_ratios):
            for j, b in enumerate(self.beta_ratios):
                yield w, b, self.db[i, j], 1.0 / w


def variance_map(omega_ratios, beta_ratios, epsilon0=1.0, units: UnitSystem | None = None):
    """dB change of the position variance over final (omega, beta) ratios."""
    units = units or UnitSystem()
    w = np.asarray(omega_ratios, dtype=float)
    b = np.asarray(beta_ratios, dtype=float)
    if np.any(w <= 0) or np.any(b <= 0):
        raise OutOfDomainError("ratios must be positive")
    W, Bt = np.meshgrid(w, b, indexing="ij")
    om0 = units.omega0
    v0 = position_variance_closed(om0, epsilon0, units)
    vf = position_variance_closed(W * om0, epsilon0 * W * Bt, units)
    return VarianceMap(w, b, 10 * np.log10(vf / v0), float(epsilon0))
