"""Flows generated by non-canonical brackets.

The equations of motion are dx_a/dt = Theta_ab dH/dx_b.  Integration is
fixed-step (classical RK4 by default, implicit midpoint for long
horizons), with conserved-quantity monitors sampled every step: the
Hamiltonian, every named bracket entry, and the coordinate-momentum
combinations c_m = q_m + theta_mn p_n that freeze in the degenerate
limit.  No inversion of Theta is ever needed, so exactly singular
structures integrate like any other; a warning is attached when the
trajectory runs through a numerically degenerate region.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .brackets import DELTA_KINDS, PoissonStructure, StructureError, d_operator_values
from .expressions import (
    Const,
    Dual,
    Expression,
    Name,
    _eval,
    free_names,
    parse,
)

__all__ = [
    "FlowProblem",
    "Trajectory",
    "IntegrationError",
    "velocity",
    "integrate",
    "default_monitors",
    "constant_combination_expressions",
    "evolution_residuals",
    "EvolutionReport",
    "vanishing_combinations",
    "time_derivative_split",
    "d_dependence_fit",
    "zero_crossing_frequency",
]

DEGENERACY_WARNING_CUTOFF = 1e-8


class IntegrationError(RuntimeError):
    pass


def _as_expression(src) -> Expression:
    return parse(src) if isinstance(src, str) else src


class _Velocity:
    """Callable Theta(x) grad H(x) with a reused evaluation environment."""

    def __init__(self, structure: PoissonStructure, hamiltonian: Expression):
        self.structure = structure
        self.names = structure.variable_names
        self.env = dict(structure.parameters)
        for name in self.names:
            self.env[name] = 0.0
        self.entries = [(a, b, e) for (a, b), e in structure.entries.items()]
        used = free_names(hamiltonian)
        self.grad_names = [
            (i, name) for i, name in enumerate(self.names) if name in used
        ]
        self.hamiltonian = hamiltonian

    def __call__(self, x: np.ndarray) -> np.ndarray:
        env = self.env
        names = self.names
        for name, xi in zip(names, x):
            env[name] = xi
        dim = len(names)
        grad = np.zeros(dim)
        h = self.hamiltonian
        for i, name in self.grad_names:
            saved = env[name]
            env[name] = Dual(saved, 1.0)
            result = _eval(h, env)
            env[name] = saved
            grad[i] = result.deriv if isinstance(result, Dual) else 0.0
        out = np.zeros(dim)
        eval_ = _eval
        for a, b, expr in self.entries:
            v = eval_(expr, env)
            out[a] += v * grad[b]
            out[b] -= v * grad[a]
        return out


def velocity(structure: PoissonStructure, hamiltonian, x) -> np.ndarray:
    """Phase-space velocity Theta_ab dH/dx_b at a point."""
    h = _as_expression(hamiltonian)
    x = np.asarray(x, dtype=float)
    if x.shape != (structure.dim,):
        raise StructureError(f"phase point must have length {structure.dim}")
    return _Velocity(structure, h)(x)


@dataclass(frozen=True, eq=False)
class FlowProblem:
    structure: PoissonStructure
    hamiltonian: Expression
    x0: Sequence[float]
    dt: float
    t_end: float
    method: str = "rk4"

    def __post_init__(self):
        object.__setattr__(self, "hamiltonian", _as_expression(self.hamiltonian))
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end <= self.dt:
            raise ValueError("t_end must exceed dt")
        if self.method not in ("rk4", "midpoint"):
            raise ValueError(f"unknown method '{self.method}'")
        allowed = set(self.structure.variable_names) | set(self.structure.parameters)
        unknown = free_names(self.hamiltonian) - allowed
        if unknown:
            raise ValueError(f"hamiltonian references undeclared names {sorted(unknown)}")


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    monitors: dict[str, np.ndarray]
    truncated: bool = False
    warnings: tuple[str, ...] = ()

    def monitor_drift(self, name: str) -> tuple[float, float]:
        """(max drift, final drift) of a monitor from its initial value."""
        series = self.monitors[name]
        dev = np.abs(series - series[0])
        return float(dev.max()), float(dev[-1])


def _rk4_step(v: Callable, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = v(x)
    k2 = v(x + 0.5 * dt * k1)
    k3 = v(x + 0.5 * dt * k2)
    k4 = v(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _midpoint_step(v: Callable, x: np.ndarray, dt: float) -> np.ndarray:
    # implicit midpoint by fixed-point iteration on the step map
    y = x + dt * v(x)
    scale = np.max(np.abs(x)) + 1.0
    for _ in range(100):
        y_next = x + dt * v(0.5 * (x + y))
        if np.max(np.abs(y_next - y)) <= 1e-14 * scale:
            return y_next
        y = y_next
    raise IntegrationError("implicit midpoint iteration did not converge")


def constant_combination_expressions(structure: PoissonStructure) -> dict[str, Expression]:
    """Expressions c_m = q_m + sum_n theta_mn p_n for delta-kind structures."""
    if structure.kind not in DELTA_KINDS:
        return {}
    n = structure.n
    out = {}
    for m in range(n):
        expr: Expression = Name(f"q{m + 1}")
        for k in range(n):
            if k == m:
                continue
            theta_mk = structure.entry_expression(m, k)
            if theta_mk == Const(0.0):
                continue
            expr = expr + theta_mk * Name(f"p{k + 1}")
        out[f"c_{m + 1}"] = expr
    return out


def default_monitors(structure: PoissonStructure) -> dict[str, Expression]:
    """Named bracket entries plus the frozen combinations, per kind."""
    monitors: dict[str, Expression] = {}
    n = structure.n
    for (a, b), expr in sorted(structure.entries.items()):
        if a < n and b < n:
            monitors[f"theta_{a + 1}{b + 1}"] = expr
        elif a >= n and b >= n:
            monitors[f"f_{a - n + 1}{b - n + 1}"] = expr
        elif structure.kind == "general-planar":
            monitors[f"g_{a + 1}{b - n + 1}"] = expr
    monitors.update(constant_combination_expressions(structure))
    return monitors


def integrate(
    problem: FlowProblem,
    extra_monitors: Mapping[str, Expression] | None = None,
) -> Trajectory:
    """Fixed-step integration with per-step monitor sampling.

    The step is adjusted by at most half a step so that an integer number
    of equal steps lands exactly on t_end."""
    structure = problem.structure
    v = _Velocity(structure, problem.hamiltonian)
    n_steps = max(1, int(round(problem.t_end / problem.dt)))
    dt = problem.t_end / n_steps
    step = _rk4_step if problem.method == "rk4" else _midpoint_step

    states = np.empty((n_steps + 1, structure.dim))
    x = np.array(problem.x0, dtype=float)
    if x.shape != (structure.dim,):
        raise ValueError(f"x0 must have length {structure.dim}")
    states[0] = x
    truncated = False
    count = n_steps + 1
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            x = step(v, x, dt)
            if not np.all(np.isfinite(x)):
                count = k
                truncated = True
                break
            states[k] = x
    states = states[:count]
    times = dt * np.arange(count)

    monitor_exprs: dict[str, Expression] = {"H": problem.hamiltonian}
    monitor_exprs.update(default_monitors(structure))
    if extra_monitors:
        monitor_exprs.update(
            {name: _as_expression(e) for name, e in extra_monitors.items()}
        )

    env = dict(structure.parameters)
    names = structure.variable_names
    series = {name: np.empty(count) for name in monitor_exprs}
    min_abs_det = np.inf
    for k in range(count):
        for name, xi in zip(names, states[k]):
            env[name] = xi
        for name, expr in monitor_exprs.items():
            out = _eval(expr, env)
            series[name][k] = out.value if isinstance(out, Dual) else out
        det = np.linalg.det(structure.theta_matrix(states[k]))
        min_abs_det = min(min_abs_det, abs(det))

    warnings = []
    if truncated:
        warnings.append("trajectory truncated: state left the finite range")
    if min_abs_det < DEGENERACY_WARNING_CUTOFF:
        warnings.append(
            "bracket matrix numerically degenerate along the trajectory "
            f"(min |det| = {min_abs_det:.3e}); the reduced dynamics applies"
        )
    return Trajectory(
        times=times,
        states=states,
        monitors=series,
        truncated=truncated,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Residual reports along the flow


@dataclass(frozen=True, eq=False)
class EvolutionReport:
    """How strongly time evolution deforms each bracket relation.

    ``identities`` holds, per relation ({q_m,p_n}, {q_m,q_n}, {p_m,p_n}),
    the gradient-of-H weighted combination of brackets of the entry
    functions with coordinates and momenta; every value vanishes when the
    Jacobi residuals do.  ``bracket_term_max`` is the largest unweighted
    constituent bracket, a Hamiltonian-independent violation witness.
    """

    identities: dict[str, float]
    bracket_term_max: float

    @property
    def max_identity(self) -> float:
        return max(abs(v) for v in self.identities.values())


def evolution_residuals(structure: PoissonStructure, hamiltonian, x) -> EvolutionReport:
    if structure.kind not in DELTA_KINDS:
        raise StructureError(
            "evolution residuals are defined for structures with canonical "
            "mixed brackets"
        )
    h = _as_expression(hamiltonian)
    n = structure.n
    env = structure.env_at(x)
    names = structure.variable_names
    from .expressions import gradient

    grad_h = gradient(h, names, env)
    hq = grad_h[:n]
    hp = grad_h[n:]

    term_max = 0.0
    cache: dict[tuple[int, int, int], float] = {}

    def bk(entry_a: int, entry_b: int, coord: int) -> float:
        # {Theta_(entry_a,entry_b), x_coord}
        nonlocal term_max
        key = (entry_a, entry_b, coord)
        if key not in cache:
            expr = structure.entry_expression(entry_a, entry_b)
            value = (
                0.0
                if expr == Const(0.0)
                else structure.bracket(expr, Name(names[coord]), x)
            )
            cache[key] = value
            term_max = max(term_max, abs(value))
        return cache[key]

    identities: dict[str, float] = {}
    for m in range(n):
        for k in range(n):
            r = 0.0
            for s in range(n):
                # {F_ns, q_m} and {theta_ms, p_n} weighted by grad H
                r -= hp[s] * bk(n + k, n + s, m)
                r += hq[s] * bk(m, s, n + k)
            identities[f"qp_{m + 1}{k + 1}"] = r
    for m in range(n):
        for k in range(m + 1, n):
            r = 0.0
            for s in range(n):
                r -= hp[s] * bk(m, k, n + s)
                r -= hq[s] * (bk(k, s, m) + bk(s, m, k) + bk(m, k, s))
            identities[f"qq_{m + 1}{k + 1}"] = r
            r = 0.0
            for s in range(n):
                r -= hq[s] * bk(n + m, n + k, s)
                r += hp[s] * (
                    bk(n + m, n + k, n + s)
                    + bk(n + k, n + s, n + m)
                    + bk(n + s, n + m, n + k)
                )
            identities[f"pp_{m + 1}{k + 1}"] = r
    return EvolutionReport(identities=identities, bracket_term_max=term_max)


def vanishing_combinations(structure: PoissonStructure, hamiltonian, x) -> dict[str, float]:
    """Velocity combinations that vanish exactly on the degenerate locus.

    For delta-kind structures these are q'_m + theta_mn p'_n and
    p'_m - f_mn q'_n; for the general planar kind, the four combinations
    tied to the null-determinant condition.
    """
    h = _as_expression(hamiltonian)
    xdot = velocity(structure, h, x)
    n = structure.n
    out: dict[str, float] = {}
    if structure.kind in DELTA_KINDS:
        t = structure.theta_block(x)
        f = structure.f_block(x)
        qdot = xdot[:n]
        pdot = xdot[n:]
        for m in range(n):
            out[f"qdot_plus_theta_pdot_{m + 1}"] = float(qdot[m] + t[m] @ pdot)
            out[f"pdot_minus_f_qdot_{m + 1}"] = float(pdot[m] - f[m] @ qdot)
        return out
    if structure.kind == "general-planar":
        env = structure.env_at(x)
        from .expressions import evaluate

        theta = evaluate(structure.entry_expression(0, 1), env)
        fv = evaluate(structure.entry_expression(2, 3), env)
        g11 = evaluate(structure.entry_expression(0, 2), env)
        g12 = evaluate(structure.entry_expression(0, 3), env)
        g21 = evaluate(structure.entry_expression(1, 2), env)
        g22 = evaluate(structure.entry_expression(1, 3), env)
        dq1, dq2, dp1, dp2 = xdot
        out["f_q1"] = fv * dq1 - g12 * dp1 + g11 * dp2
        out["f_q2"] = fv * dq2 - g22 * dp1 + g21 * dp2
        out["theta_p2"] = g22 * dq1 - g12 * dq2 + theta * dp2
        out["theta_p1"] = g21 * dq1 - g11 * dq2 + theta * dp1
        return out
    raise StructureError(f"no vanishing combinations defined for kind '{structure.kind}'")


def time_derivative_split(
    structure: PoissonStructure, hamiltonian, f_expr, x
) -> tuple[float, float]:
    """d f/dt along the flow, computed two ways for planar structures:
    directly as grad f . xdot, and through the D-operator combination
    H_q1 D1 f - H_q2 D2 f + H_p1 D3 f + H_p2 D4 f."""
    h = _as_expression(hamiltonian)
    f_expr = _as_expression(f_expr)
    from .expressions import gradient

    env = structure.env_at(x)
    names = structure.variable_names
    direct = float(
        np.array(gradient(f_expr, names, env)) @ velocity(structure, h, x)
    )
    hq1, hq2, hp1, hp2 = gradient(h, names, env)
    d1, d2, d3, d4 = d_operator_values(structure, f_expr, x)
    return direct, float(hq1 * d1 - hq2 * d2 + hp1 * d3 + hp2 * d4)


def d_dependence_fit(
    structure: PoissonStructure, x, test_functions: Sequence
) -> tuple[float, float]:
    """Least-squares coefficient sigma in g11 D2 f - g12 D3 f + sigma D1 f = 0.

    The coefficient is solved per point over the supplied test functions,
    since no closed form for it is published; the returned residual is the
    largest leftover after the fit.
    """
    from .expressions import evaluate

    env = structure.env_at(x)
    g11 = evaluate(structure.entry_expression(0, 2), env)
    g12 = evaluate(structure.entry_expression(0, 3), env)
    rows = []
    for f_expr in test_functions:
        d1, d2, d3, _ = d_operator_values(structure, f_expr, x)
        rows.append((d1, g11 * d2 - g12 * d3))
    a = np.array([r[0] for r in rows])
    b = np.array([r[1] for r in rows])
    denom = float(a @ a)
    if denom == 0.0:
        return 0.0, float(np.max(np.abs(b)))
    sigma = -float(a @ b) / denom
    residual = float(np.max(np.abs(b + sigma * a)))
    return sigma, residual


def zero_crossing_frequency(times: np.ndarray, values: np.ndarray) -> float:
    """Angular frequency from linearly interpolated upward zero crossings."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    crossings = []
    for i in range(len(values) - 1):
        if values[i] < 0.0 <= values[i + 1]:
            frac = -values[i] / (values[i + 1] - values[i])
            crossings.append(times[i] + frac * (times[i + 1] - times[i]))
    if len(crossings) < 2:
        raise ValueError("need at least two upward zero crossings")
    periods = np.diff(crossings)
    return float(2.0 * np.pi / periods.mean())
