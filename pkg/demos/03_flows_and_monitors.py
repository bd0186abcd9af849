"""Flows: integrate dx/dt = Theta(x) grad H(x) and watch what is conserved.

No inversion of the bracket matrix is needed, so exactly degenerate
structures integrate like any other.  Monitors sample the Hamiltonian,
the bracket entries, and the combinations c_m = q_m + theta_mn p_n every
step; on a degenerate structure the c_m freeze.
"""

import numpy as np

from noncanon import FlowProblem, constant_theta_f, integrate, theta_f_field

HARMONIC = "(p1^2 + p2^2 + q1^2 + q2^2)/2"

# degenerate constant brackets: theta * f = 1
s = constant_theta_f(1.0, 1.0)
traj = integrate(FlowProblem(s, HARMONIC, [1.0, 0.0, 0.0, 0.0], 1e-3, 10.0))
print("steps:", len(traj.times) - 1)
for name in ("H", "c_1", "c_2"):
    mx, final = traj.monitor_drift(name)
    print(f"monitor {name}: max drift {mx:.3e}, final drift {final:.3e}")
for w in traj.warnings:
    print("warning:", w)

# a state-dependent degenerate structure; the bracket functions themselves
# are frozen along every flow
field = theta_f_field(2, theta={(1, 2): "-q1/p2"}, f={(1, 2): "-p2/q1"})
traj = integrate(FlowProblem(field, "q1*p1", [1.0, 0.4, 0.3, 2.0], 1e-3, 10.0))
print("\nstate-dependent brackets along the flow:")
print("theta_12 drift:", traj.monitor_drift("theta_12")[0])
print("f_12 drift:    ", traj.monitor_drift("f_12")[0])
print("final state:   ", np.round(traj.states[-1], 6))

# slightly detuned from degeneracy the combinations drift at order epsilon
for eps in (1e-2, 1e-3, 1e-4):
    s_eps = constant_theta_f(1.0, 1.0 - eps)
    traj = integrate(FlowProblem(s_eps, HARMONIC, [1.0, 0.3, -0.2, -0.8], 1e-3, 10.0))
    print(f"eps = {eps:.0e}: c_1 drift = {traj.monitor_drift('c_1')[0]:.3e}")
