"""How far the rotating-wave pair form is from the full position dephasing.

The engineered noise acts through x_t = x0 (a e^{-i w t} + a_dag e^{i w t}).
Dropping the terms that rotate at 2w gives kappa (D[a] + D[a_dag]).  The
two agree when kappa is small next to w; this prints the trace distance
between the two runs for a few ratios.  No tolerance is claimed.

    python demos/dephasing_forms.py
"""
import numpy as np

from sqzsta import fock
from sqzsta import squeezed as sq
from sqzsta.dynamics import MasterEquationSpec, PositionDephasing, QuadraticHamiltonian, RamanPair, integrate_master

N = 40
rho0 = sq.SqueezeParams(0.5, 0.0, 1.0).density_matrix(N)
x0 = 1 / np.sqrt(2)
tf = 2 * np.pi

print(f"{'kappa/w':>8} {'trace distance':>15}")
for ratio in (0.3, 0.1, 0.03, 0.01):
    kappa = ratio * 1.0
    gamma = kappa / x0 ** 2
    full = MasterEquationSpec(QuadraticHamiltonian(), [PositionDephasing(gamma, x0, nu=1.0)], tf, 4000)
    pair = MasterEquationSpec(QuadraticHamiltonian(), [RamanPair(kappa)], tf, 4000)
    a = integrate_master(full, rho0, record=1).final
    b = integrate_master(pair, rho0, record=1).final
    print(f"{ratio:8.2f} {fock.trace_distance(a, b):15.3e}")
