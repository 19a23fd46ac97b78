from collections import defaultdict

import numpy as np
import pytest

from sqzsta import trap
from sqzsta.fock import UnitSystem


@pytest.fixture(scope="session")
def units():
    return UnitSystem()


@pytest.fixture(scope="session")
def cooling_trap():
    """omega 1 -> 3, beta 1 -> 2 over tf = 2 (x-squeezing while cooling)."""
    return trap.control_open(trap.make_quintic(1.0, 3.0, 2.0), trap.make_quintic(1.0, 2.0, 2.0))


@pytest.fixture(scope="session")
def heating_trap():
    """Time-mirror of the cooling protocol; gamma stays non-negative."""
    return trap.control_open(trap.make_quintic(3.0, 1.0, 2.0), trap.make_quintic(2.0, 1.0, 2.0))


def ladder(N):
    a = np.diag(np.sqrt(np.arange(1, N)), 1).astype(complex)
    return a, a.conj().T


def trap_master_spec(controls, steps, dissipate=True):
    """Lab-frame master equation for a trap protocol in the omega0 = 1 basis."""
    from sqzsta.dynamics import MasterEquationSpec, PositionDephasing, QuadraticHamiltonian

    def coeff(t):
        return trap.hamiltonian_coefficients(controls.omega_c_sq(t), 1.0)

    diss = [PositionDephasing(controls.gamma, controls.units.x0())] if dissipate else []
    return MasterEquationSpec(QuadraticHamiltonian(lambda t: coeff(t)[0], lambda t: coeff(t)[1]), diss,
                              tf=controls.tf, steps=steps)


# acceptance summary: one line per criterion

_criteria = defaultdict(list)
_titles = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", m.args[0]))
            if len(m.args) > 1:
                _titles.setdefault(m.args[0], m.args[1])


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        if hasattr(report, "wasxfail"):
            _criteria[crit].append("xfail" if report.skipped else "xpass")
        else:
            _criteria[crit].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_criteria):
        outcomes = _criteria[crit]
        if any(o in ("failed", "xpass") for o in outcomes):
            verdict = "FAIL"
        elif "xfail" in outcomes and all(o in ("passed", "xfail") for o in outcomes):
            n = outcomes.count("xfail")
            verdict = f"XFAIL ({n} of {len(outcomes)} parts unattainable as stated; others pass)"
        elif all(o == "passed" for o in outcomes):
            verdict = "PASS"
        else:
            verdict = "INCOMPLETE"
        tr.write_line(f"criterion {crit:2d} {_titles.get(crit, ''):<34s} {verdict}")
