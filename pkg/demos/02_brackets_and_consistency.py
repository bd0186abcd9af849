"""Poisson structures: build brackets, check their internal consistency.

The coefficient matrix of the bracket can depend on the state.  The cyclic
identity {A,{B,C}} + {B,{C,A}} + {C,{A,B}} = 0 then becomes a system of
differential constraints on the bracket functions; this script evaluates
the residuals pointwise for a consistent and an inconsistent choice.
"""

import numpy as np

from noncanon import constant_theta_f, omega_matrix, theta_f_field

rng = np.random.default_rng(5)

# constant brackets: {q1,q2} = 0.5, {p1,p2} = 0.25, {q_i,p_j} = delta_ij
s = constant_theta_f(0.5, 0.25)
x = rng.uniform(-1, 1, 4)
print("Theta(x) =\n", s.theta_matrix(x))
print("bracket {q1, q2} =", s.bracket("q1", "q2", x))
print("bracket {q1^2, p1} at q1=3:", s.bracket("q1^2", "p1", [3.0, 0, 0, 0]))

# the closed-form inverse pairs with the bracket matrix exactly
om = omega_matrix(0.5, 0.25)
print("max |Theta @ omega - I| =", np.max(np.abs(s.theta_matrix(x) @ om - np.eye(4))))

# a state-dependent structure that satisfies every constraint...
good = theta_f_field(2, theta={(1, 2): "-q1/p2"}, f={(1, 2): "-p2/q1"})
x = np.array([1.0, 0.4, 0.3, 2.0])
rep = good.jacobi_report(x)
print("\nconsistent field: generic residual =", rep.generic_max)
print("degeneracy:", good.degeneracy(x))

# ... and one that violates them (no momentum bracket to compensate)
bad = theta_f_field(2, theta={(1, 2): "q2"})
rep = bad.jacobi_report(np.zeros(4))
print("\nviolating field: generic residual =", rep.generic_max)
for name, value in rep.identities.items():
    print(f"  {name}: {value}")
