"""Squeezing with two Raman beams, with and without engineered dephasing.

First the closed design: the coupling magnitude is half the squeezing rate,
and the lab-frame phase is fixed by the duration.  Then an open design that
also cools, with the laser settings that realize it.

    python demos/raman_squeezing.py
"""
import numpy as np

from sqzsta import raman, trap
from sqzsta import squeezed as sq
from sqzsta.dynamics import MasterEquationSpec, QuadraticHamiltonian, evolve_covariance

# closed: r goes 0 -> 2 along a smooth ramp
r = trap.make_quintic(0.0, 2.0, 1.0)
closed = raman.closed_squeeze_design(r)
print("closed design: peak |alpha| = %.3f at t = 0.5" % closed.abs_alpha(0.5))
print("lab phase reached at tf = %.3f rad" % closed.final_phase)

run = evolve_covariance(MasterEquationSpec(QuadraticHamiltonian(0.0, closed.alpha), (), 1.0, 2000),
                        sq.to_gaussian_moments(sq.SqueezeParams(0.0, 0.0, 1.0)))
print("x variance ratio %.6f, expected e^-4 = %.6f" % (run.final.var_x / run.moments(0).var_x, np.exp(-4)))

# open: squeeze to r = 1 at phi = pi/4 while cooling from eps = 1 to eps = 2
flow = raman.quintic_flow(sq.SqueezeParams(0.0, 0.0, 1.0), sq.SqueezeParams(1.0, np.pi / 4, 2.0), 1.0)
ctrl = raman.invert_controls(flow, n_points=11)
print("\nopen design (cooling, so kappa < 0 in the middle)")
print(f"{'t':>5} {'kappa':>9} {'|alpha|':>9} {'phase':>7}")
tab = ctrl.table()
for i in range(len(tab["t"])):
    print(f"{tab['t'][i]:5.2f} {tab['kappa'][i]:9.4f} {tab['abs_alpha'][i]:9.4f} {tab['phase_diff'][i]:7.3f}")

# laser settings for the peak coupling, with eta = (0.2, -0.2) and Delta = 50
i = int(np.argmax(tab["abs_alpha"]))
product, phase = raman.lasers_from_alpha(ctrl.alpha[i], (0.2, -0.2), 50.0)
print("\npeak coupling needs Omega1 Omega2 = %.2f and Phi1 - Phi2 = %.3f" % (product, phase))

back = raman.forward_parameter_flow(raman.invert_controls(flow, n_points=1001), flow.initial)
end = back.params(1.0)
print("forward run lands on r=%.5f phi=%.5f eps=%.5f" % (end.r, end.phi, end.epsilon))
