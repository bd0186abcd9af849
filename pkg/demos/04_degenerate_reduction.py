"""Dimensional reduction: on the degenerate locus the brackets collapse to
constants and half the phase space survives.

The constraint surface through a reference point is sampled by choosing
momenta freely and solving the coordinates from q_m = -theta_mn p_n + c_m.
On that surface the bracket function takes a single value, the reduced
system lives on the coordinates alone, and a rotationally invariant
Hamiltonian turns into an oscillator whose frequency the script measures
two independent ways.
"""

import numpy as np

from noncanon import (
    build_reduced,
    check_reduction,
    constant_theta_f,
    implicit_theta,
    integrate_reduced,
    reduction_constants,
    spectrum_and_frequency,
    surface_cloud,
    theta_f_field,
    zero_crossing_frequency,
)

HARMONIC = "(p1^2 + p2^2 + q1^2 + q2^2)/2"

# a state-dependent degenerate structure
s = theta_f_field(2, theta={(1, 2): "-q1/p2"}, f={(1, 2): "-p2/q1"})
reference = [1.0, 0.5, 0.3, 2.0]
print("frozen combinations c =", reduction_constants(s, reference))

rng = np.random.default_rng(0)
sample = surface_cloud(s, reference, rng.uniform(0.8, 1.6, size=(200, 2)))
report = check_reduction(s, sample)
print("reduced:", report.reduced)
print("bracket value on the surface:", report.theta_red, "spread:", report.spread)
print("surface map vs brackets:", report.dual_relation_residuals)

# the reduced oscillator from constant degenerate brackets
c = constant_theta_f(1.0, 1.0)
system = build_reduced(c, HARMONIC, reference=[1.0, 0.0, 0.0, -1.0])
spectrum = spectrum_and_frequency(system, 5)
times, qs = integrate_reduced(system, [1.0, 0.0], 1e-3, 10.0)
measured = zero_crossing_frequency(times, qs[:, 0])
print("\nreduced oscillator:")
print("frequency dh/dn:          ", spectrum.omega_red)
print("frequency, zero crossings:", measured)
for label, levels in spectrum.levels.items():
    print(f"levels [{label}]: {levels}")

# implicit solutions theta = phi(q1 + theta p2, q2 - theta p1)
print("\nimplicit bracket solutions:")
print("phi = c1      ->", implicit_theta("c1", [1.0, 0.3, 0.7, 0.5]))
print("phi = c2      ->", implicit_theta("c2", [0.2, 1.0, 1.0, 0.8]))
print("phi = c1*c2/2 ->", implicit_theta("c1*c2/2", [0.9, 0.4, 0.2, 0.3]))
