"""Expressions: parse once, evaluate anywhere, differentiate exactly.

Every function the library consumes (bracket entries, Hamiltonians,
hodograph generators) is plain infix text.  Derivatives are dual-number
propagation, so there is no step-size tuning and no symbolic engine.
"""

from noncanon import derivative, evaluate, free_names, parse, to_source

field = parse("q1/(1 - p2)")
point = {"q1": 1.0, "p2": 0.5}

print("expression:      ", to_source(field))
print("free names:      ", sorted(free_names(field)))
print("value at point:  ", evaluate(field, point))
print("d/dp2 (exact):   ", derivative(field, "p2", point))
print("analytic check:  ", point["q1"] / (1.0 - point["p2"]) ** 2)

# parameters mix freely with phase-space names
well = parse("exp(-(q1 - mu)^2 / (2*w^2)) + p1^2/2")
env = {"q1": 0.3, "p1": -1.1, "mu": 0.5, "w": 0.8}
print("\nparameterized Hamiltonian value:", evaluate(well, env))
print("gradient wrt q1:                ", derivative(well, "q1", env))

# a finite-difference cross-check, the only place differences appear
h = 1e-6
hi = dict(env, q1=env["q1"] + h)
lo = dict(env, q1=env["q1"] - h)
fd = (evaluate(well, hi) - evaluate(well, lo)) / (2 * h)
print("central difference (for comparison):", fd)
