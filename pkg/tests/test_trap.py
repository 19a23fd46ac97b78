import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from sqzsta import fock, trap
from sqzsta import squeezed as sq
from sqzsta.errors import DimensionMismatchError, InvalidScheduleError


def test_quintic_boundaries():
    s = trap.make_quintic(1.0, 3.0, 2.0)
    assert s(1.0) == pytest.approx(2.0)
    t = np.array([0.0, 2.0])
    assert np.allclose(s(t), [1, 3])
    assert np.allclose(s.d1(t), 0) and np.allclose(s.d2(t), 0)


def test_quintic_derivatives_match_finite_difference():
    s = trap.make_quintic(0.3, -1.2, 1.7)
    t, h = np.linspace(0.1, 1.6, 9), 1e-5
    assert np.allclose((s(t + h) - s(t - h)) / (2 * h), s.d1(t), atol=1e-8)
    assert np.allclose((s.d1(t + h) - s.d1(t - h)) / (2 * h), s.d2(t), atol=1e-7)


def test_invalid_schedules():
    with pytest.raises(InvalidScheduleError):
        trap.make_quintic(1, 2, 0)
    with pytest.raises(InvalidScheduleError):
        trap.control_open(trap.make_quintic(1, -1, 1), trap.make_quintic(1, 2, 1))
    with pytest.raises(InvalidScheduleError):
        trap.control_open(trap.make_quintic(1, 2, 1), trap.make_quintic(1, 2, 2))


def test_closed_control_solves_ermakov():
    w = trap.make_quintic(1.0, 3.0, 2.0)
    res, width = trap.ermakov_residual(w, trap.control_frequency_closed(w), np.linspace(0, 2, 1000))
    assert np.abs(res / width).max() < 1e-10


def test_open_controls_boundary_values(cooling_trap):
    ends = np.array([0.0, cooling_trap.tf])
    assert np.allclose(cooling_trap.omega_c_sq(ends), [1.0, 9.0])
    assert np.allclose(cooling_trap.gamma(ends), 0.0)
    flags = cooling_trap.flags()
    assert not flags["inverted_trap"]
    # beta rises while omega rises: the state cools and gamma turns negative
    assert flags["non_lindblad_segment"]
    assert flags["gamma_range"][0] == pytest.approx(-1.1092915814844104, rel=1e-6)


def test_heating_gamma_nonnegative(heating_trap):
    assert heating_trap.flags()["gamma_range"][0] >= 0
    assert not heating_trap.flags()["non_lindblad_segment"]


def test_isentropic_path_needs_no_dephasing():
    w = trap.make_quintic(1.0, 3.0, 1.0)
    beta = trap.make_quintic(1.0, 1.0 / 3.0, 1.0)
    # beta omega is not constant along the quintic path, so only the endpoints are isentropic
    c = trap.control_open(w, beta)
    assert c.epsilon(0.0) == pytest.approx(c.epsilon(1.0))
    assert np.allclose(c.gamma(np.array([0.0, 1.0])), 0.0)


def test_open_reduces_to_closed_at_fixed_epsilon():
    from sqzsta.protocols import IsentropicBeta

    w = trap.make_quintic(1.0, 3.0, 2.0)
    c = trap.TrapControls(w, IsentropicBeta(w, 1.5, 1.0), fock.UnitSystem())
    t = np.linspace(0, 2, 41)
    assert np.allclose(c.epsilon(t), 1.5)
    assert np.allclose(c.gamma(t), 0.0, atol=1e-14)
    assert np.allclose(c.omega_c_sq(t), trap.control_frequency_closed(w)(t), atol=1e-12)


def test_lab_moments_match_bogoliubov_state(cooling_trap):
    N, M = 100, 300
    for t in (0.5, 1.0, 1.4):
        u, v, e = cooling_trap.lab_bogoliubov(t)
        B = trap.bogoliubov_operator(u, v, M)
        R = expm(-e * (B.conj().T @ B))[:N, :N]
        R /= np.trace(R)
        assert np.abs(sq.moments_from_density(R).cov - cooling_trap.lab_moments(t).cov).max() < 1e-12
        assert abs(u) ** 2 - abs(v) ** 2 == pytest.approx(1.0)


def test_mode_form_matches_position_dissipator(cooling_trap):
    N, M = 100, 300
    x, _ = fock.quadratures(N)
    for t in (0.5, 1.0, 1.4):
        u, v, e = cooling_trap.lab_bogoliubov(t)
        B = trap.bogoliubov_operator(u, v, M)
        R = expm(-e * (B.conj().T @ B))[:N, :N]
        R /= np.trace(R)
        d1 = trap.control_dissipator(R, cooling_trap.gamma(t), x)
        d2 = trap.general_control_dissipator(R, trap.bogoliubov_operator(u, v, N), cooling_trap.omega1_term(t),
                                             cooling_trap.epsilon_d1(t), e)
        assert np.abs(fock.interior(d1 - d2, 30)).max() < 1e-12


def test_control_dissipator_dimension_check():
    x, _ = fock.quadratures(10)
    with pytest.raises(DimensionMismatchError):
        trap.control_dissipator(np.eye(8) / 8, 0.1, x)


def test_dissipator_is_traceless():
    x, _ = fock.quadratures(30)
    rho = sq.SqueezeParams(0.3, 0.0, 1.0).density_matrix(30)
    assert abs(np.trace(trap.control_dissipator(rho, 0.7, x))) < 1e-12


def test_cd_hamiltonian_finite_difference():
    N, M = 40, 200
    r, phi, rd, pd, h = 0.4, 0.7, 0.3, -0.5, 1e-5

    def S(t):
        return fock.squeeze_operator(r + rd * t, phi + pd * t, M, padding=M)

    Hfd = (1j * (S(h) - S(-h)) / (2 * h) @ S(0).conj().T)[:N, :N]
    H = trap.cd_hamiltonian(sq.SqueezeParams(r, phi, 1.0), rd, pd, N)
    assert np.abs(fock.interior(H - Hfd)).max() < 1e-7
    assert np.allclose(H, H.conj().T)


def test_hamiltonian_coefficients_static_trap():
    assert trap.hamiltonian_coefficients(1.0, 1.0) == (1.0, 0.0)
    h, z = trap.hamiltonian_coefficients(4.0, 1.0)
    assert (h, z) == (2.5, 0.75)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(0.5, 4.0), st.floats(0.5, 4.0), st.floats(0.5, 4.0), st.floats(0.5, 3.0))
def test_gamma_sign_follows_epsilon(w0, wf, b0, bf, tf):
    c = trap.control_open(trap.make_quintic(w0, wf, tf), trap.make_quintic(b0, bf, tf))
    t = np.linspace(0, tf, 101)
    g, ed = c.gamma(t), c.epsilon_d1(t)
    assert np.all(g * ed <= 1e-15)
