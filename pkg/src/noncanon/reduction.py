"""Degenerate-limit analysis: detecting the singular locus, sampling the
constraint surface, and verifying that the reduced brackets are constant.

When the coordinate-coordinate and momentum-momentum bracket matrices pair
into minus the identity (in the planar case, theta * f = 1), the flow
freezes the combinations c_m = q_m + theta_mn p_n.  The surface of fixed
(c_1..c_n) through a reference point carries a constant bracket value; the
checks here sample that surface, measure the spread of the bracket
functions on it, and probe the exchange relations dq_m/dp_s = -theta_ms
and dp_k/dq_n = f_kn by finite differences of the sampled surface map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .brackets import (
    DELTA_KINDS,
    PoissonStructure,
    StructureError,
    constant_theta_f,
)
from .dynamics import FlowProblem, integrate
from .expressions import (
    Const,
    DomainError,
    Expression,
    Name,
    derivative,
    evaluate,
    free_names,
    parse,
    substitute,
)

__all__ = [
    "ReductionError",
    "FixedPointError",
    "ReductionReport",
    "ReducedSystem",
    "SurfaceSample",
    "SpectrumReport",
    "EpsilonSweep",
    "reduction_constants",
    "momentum_offsets",
    "surface_cloud",
    "leaf_cloud",
    "check_reduction",
    "total_variation_residual",
    "build_reduced",
    "reduced_velocity",
    "integrate_reduced",
    "spectrum_and_frequency",
    "implicit_theta",
    "implicit_theta_constraint_residuals",
    "epsilon_sweep",
]

DEFAULT_TOL = 1e-9


class ReductionError(RuntimeError):
    pass


class FixedPointError(ReductionError):
    def __init__(self, message: str, last_iterate):
        super().__init__(f"{message}; last iterate {last_iterate!r}")
        self.last_iterate = last_iterate


def _as_expression(src) -> Expression:
    return parse(src) if isinstance(src, str) else src


def _require_delta_kind(structure: PoissonStructure, what: str):
    if structure.kind not in DELTA_KINDS:
        raise StructureError(f"{what} requires canonical mixed brackets")


def reduction_constants(structure: PoissonStructure, x) -> np.ndarray:
    """c_m = q_m + theta_mn(x) p_n, the combinations frozen by reduction."""
    _require_delta_kind(structure, "reduction constants")
    x = np.asarray(x, dtype=float)
    n = structure.n
    return x[:n] + structure.theta_block(x) @ x[n:]


def momentum_offsets(structure: PoissonStructure, x) -> np.ndarray:
    """d_m = p_m - f_mn(x) q_n, the dual frozen combinations."""
    _require_delta_kind(structure, "momentum offsets")
    x = np.asarray(x, dtype=float)
    n = structure.n
    return x[n:] - structure.f_block(x) @ x[:n]


# ---------------------------------------------------------------------------
# Constraint-surface sampling


@dataclass(eq=False)
class SurfaceSample:
    """Points on one constraint surface plus the map p -> q that built them."""

    structure: PoissonStructure
    constants: np.ndarray
    reference: np.ndarray
    points: np.ndarray  # (k, 2n)
    solve_q: Callable[[np.ndarray], np.ndarray]
    rejected: int = 0


def _solve_surface_q(structure, constants, theta_ref, p, tol, max_iter):
    """Solve q = c - theta(q, p) p by fixed-point iteration, seeded with the
    reference bracket values so the iteration starts on the intended leaf.
    A non-convergent plain iteration is retried once with damping 0.5."""
    seed = constants - theta_ref @ p
    q = seed
    for damping in (1.0, 0.5):
        q = seed
        delta0 = None
        for _ in range(max_iter):
            x = np.concatenate([q, p])
            target = constants - structure.theta_block(x) @ p
            delta = np.max(np.abs(target - q))
            if delta <= tol:
                return target
            if delta0 is None:
                delta0 = delta
            if not np.isfinite(delta) or delta > 10.0 * delta0 + 1.0:
                break  # clearly diverging under this damping
            q = q + damping * (target - q)
    raise FixedPointError("surface solve did not converge", q)


def surface_cloud(
    structure: PoissonStructure,
    reference,
    p_points,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> SurfaceSample:
    """Sample the constraint surface through ``reference``.

    Momenta are chosen freely (``p_points``, shape (k, n)); coordinates are
    solved from q_m = -theta_mn(q, p) p_n + c_m with the constants taken at
    the reference point.  Points whose solve fails to converge or leaves
    the expression domain are dropped and counted."""
    _require_delta_kind(structure, "surface sampling")
    reference = np.asarray(reference, dtype=float)
    constants = reduction_constants(structure, reference)
    theta_ref = structure.theta_block(reference)
    p_points = np.atleast_2d(np.asarray(p_points, dtype=float))

    def solve_q(p):
        return _solve_surface_q(structure, constants, theta_ref, p, tol, max_iter)

    points = []
    rejected = 0
    for p in p_points:
        try:
            q = solve_q(p)
        except (FixedPointError, DomainError):
            rejected += 1
            continue
        points.append(np.concatenate([q, p]))
    return SurfaceSample(
        structure=structure,
        constants=constants,
        reference=reference,
        points=np.array(points) if points else np.empty((0, structure.dim)),
        solve_q=solve_q,
        rejected=rejected,
    )


def leaf_cloud(
    structure: PoissonStructure,
    reference,
    hamiltonians: Sequence,
    segment_time: float = 0.4,
    dt: float = 1e-3,
    samples_per_segment: int = 20,
) -> np.ndarray:
    """Sample the reachable set through ``reference`` by chaining short
    Hamiltonian flow segments; every collected point lies on the same leaf
    of the bracket foliation up to integration error."""
    x = np.asarray(reference, dtype=float)
    collected = [x]
    for h in hamiltonians:
        problem = FlowProblem(structure, _as_expression(h), x, dt, segment_time)
        traj = integrate(problem)
        stride = max(1, len(traj.states) // samples_per_segment)
        collected.extend(traj.states[stride::stride])
        x = traj.states[-1]
    return np.array(collected)


# ---------------------------------------------------------------------------
# Reduction report


@dataclass(eq=False)
class ReductionReport:
    reduced: bool
    condition_residuals: dict[str, float]
    admissible_count: int
    total_count: int
    constants: np.ndarray | None = None
    theta_red: float | None = None
    spread: float | None = None
    entry_spreads: dict[str, float] = field(default_factory=dict)
    dual_relation_residuals: dict[str, float] | None = None
    constancy_implied: bool | None = None
    notes: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        out = {
            "reduced": self.reduced,
            "condition_residuals": dict(self.condition_residuals),
            "admissible_count": self.admissible_count,
            "total_count": self.total_count,
            "entry_spreads": dict(self.entry_spreads),
            "notes": list(self.notes),
        }
        out["constants"] = None if self.constants is None else [float(c) for c in self.constants]
        out["theta_red"] = self.theta_red
        out["spread"] = self.spread
        out["dual_relation_residuals"] = (
            None
            if self.dual_relation_residuals is None
            else dict(self.dual_relation_residuals)
        )
        out["constancy_implied"] = self.constancy_implied
        return out


def _point_condition(structure: PoissonStructure, x) -> float:
    report = structure.degeneracy(x)
    if structure.kind in DELTA_KINDS:
        return report.inverse_pairing_residual
    if structure.kind == "general-planar":
        return abs(report.planar_condition)
    return abs(report.det)


def check_reduction(
    structure: PoissonStructure,
    cloud,
    tol: float = DEFAULT_TOL,
) -> ReductionReport:
    """Evaluate the degeneracy condition over a cloud and, on the admissible
    subset, the spread of every nonconstant bracket entry.

    ``cloud`` is either a plain (k, 2n) array or a :class:`SurfaceSample`;
    with a sample the exchange relations are also probed by finite
    differences of the surface map."""
    sample = cloud if isinstance(cloud, SurfaceSample) else None
    points = sample.points if sample is not None else np.atleast_2d(np.asarray(cloud, dtype=float))
    if points.size == 0:
        return ReductionReport(
            reduced=False,
            condition_residuals={},
            admissible_count=0,
            total_count=0,
            notes=("empty cloud: not reduced",),
        )

    condition_max = 0.0
    det_max = 0.0
    admissible = []
    for x in points:
        c = _point_condition(structure, x)
        condition_max = max(condition_max, c)
        det_max = max(det_max, abs(structure.degeneracy(x).det))
        if c <= tol:
            admissible.append(x)

    key = (
        "inverse_pairing"
        if structure.kind in DELTA_KINDS
        else "planar_determinant_condition"
        if structure.kind == "general-planar"
        else "determinant"
    )
    condition_residuals = {key: condition_max, "det_max": det_max}

    notes: list[str] = []
    constancy_implied: bool | None = None
    if structure.kind == "general-planar":
        nonconstant = structure.nonconstant_entry_names()
        constancy_implied = len(nonconstant) <= 3
        if not constancy_implied:
            notes.append(
                "constancy not implied: more than three bracket functions are "
                "nonconstant; only the product ratio theta*f/(g11*g22) is checked"
            )
            ratio_max = 0.0
            for x in admissible:
                env = structure.env_at(x)
                theta = evaluate(structure.entry_expression(0, 1), env)
                fv = evaluate(structure.entry_expression(2, 3), env)
                g11 = evaluate(structure.entry_expression(0, 2), env)
                g22 = evaluate(structure.entry_expression(1, 3), env)
                ratio_max = max(ratio_max, abs(theta * fv / (g11 * g22) - 1.0))
            condition_residuals["product_ratio_minus_one"] = ratio_max

    if not admissible:
        notes.append("no admissible points: not reduced")
        return ReductionReport(
            reduced=False,
            condition_residuals=condition_residuals,
            admissible_count=0,
            total_count=len(points),
            constancy_implied=constancy_implied,
            notes=tuple(notes),
        )

    admissible = np.array(admissible)
    reference = sample.reference if sample is not None else admissible[0]

    entry_spreads: dict[str, float] = {}
    names = structure.variable_names
    from .brackets import entry_label

    theta_red = None
    spread = None
    check_spread = constancy_implied is not False
    if check_spread:
        for (a, b), expr in sorted(structure.entries.items()):
            if free_names(expr) & set(names):
                values = [evaluate(expr, structure.env_at(x)) for x in admissible]
            else:
                values = [evaluate(expr, structure.env_at(admissible[0]))]
            entry_spreads[entry_label(structure.n, a, b)] = float(
                max(values) - min(values)
            )
        if structure.n >= 2 and (
            (0, 1) in structure.entries or structure.kind in DELTA_KINDS
        ):
            theta_expr = structure.entry_expression(0, 1)
            theta_red = float(evaluate(theta_expr, structure.env_at(reference)))
            theta_values = [
                evaluate(theta_expr, structure.env_at(x)) for x in admissible
            ]
            spread = float(max(theta_values) - min(theta_values))

    constants = None
    if structure.kind in DELTA_KINDS:
        constants = reduction_constants(structure, reference)

    dual_residuals = None
    if sample is not None and len(sample.points) > 0:
        dual_residuals = _exchange_relation_residuals(structure, sample)

    return ReductionReport(
        reduced=True,
        condition_residuals=condition_residuals,
        admissible_count=len(admissible),
        total_count=len(points),
        constants=constants,
        theta_red=theta_red,
        spread=spread,
        entry_spreads=entry_spreads,
        dual_relation_residuals=dual_residuals,
        constancy_implied=constancy_implied,
        notes=tuple(notes),
    )


def _exchange_relation_residuals(
    structure: PoissonStructure, sample: SurfaceSample, h: float = 1e-6
) -> dict[str, float]:
    """Finite-difference dq/dp of the surface map against -theta, and its
    inverse against f, at up to five sampled points."""
    n = structure.n
    worst_theta = 0.0
    worst_f = 0.0
    count = 0
    for x in sample.points[:: max(1, len(sample.points) // 5)]:
        p = x[n:]
        jac = np.empty((n, n))
        try:
            for s in range(n):
                dp = np.zeros(n)
                dp[s] = h
                q_plus = sample.solve_q(p + dp)
                q_minus = sample.solve_q(p - dp)
                jac[:, s] = (q_plus - q_minus) / (2.0 * h)
        except (FixedPointError, DomainError):
            continue
        theta = structure.theta_block(x)
        worst_theta = max(worst_theta, float(np.max(np.abs(jac + theta))))
        try:
            inv = np.linalg.inv(jac)
        except np.linalg.LinAlgError:
            continue
        worst_f = max(worst_f, float(np.max(np.abs(inv - structure.f_block(x)))))
        count += 1
    if count == 0:
        return {"dq_dp_plus_theta": np.nan, "dp_dq_minus_f": np.nan}
    return {"dq_dp_plus_theta": worst_theta, "dp_dq_minus_f": worst_f}


def total_variation_residual(structure: PoissonStructure, x) -> dict[str, float]:
    """On-surface total variations of the bracket entries.

    For each entry theta_mn and direction q_l the combination
    d theta_mn/d q_l + f_sl d theta_mn/d p_s, and dually for the momentum
    entries; all vanish at points where the transport constraints hold."""
    _require_delta_kind(structure, "total variation residuals")
    n = structure.n
    env = structure.env_at(x)
    names = structure.variable_names
    fb = structure.f_block(x)
    tb = structure.theta_block(x)
    out: dict[str, float] = {}
    for (a, b), expr in sorted(structure.entries.items()):
        if a < n and b < n:
            grads = [derivative(expr, nm, env) if nm in free_names(expr) else 0.0 for nm in names]
            for l in range(n):
                r = grads[l] + sum(fb[s, l] * grads[n + s] for s in range(n))
                out[f"theta_{a+1}{b+1}_dq{l+1}"] = abs(r)
        elif a >= n and b >= n:
            grads = [derivative(expr, nm, env) if nm in free_names(expr) else 0.0 for nm in names]
            for l in range(n):
                r = grads[n + l] - sum(tb[s, l] * grads[s] for s in range(n))
                out[f"f_{a-n+1}{b-n+1}_dp{l+1}"] = abs(r)
    return out


# ---------------------------------------------------------------------------
# The reduced system


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """Half-dimensional system on the coordinates alone, with a constant
    bracket matrix and the momenta eliminated through the frozen
    combinations."""

    n: int
    theta_red: float
    theta_matrix: np.ndarray  # n x n constant coordinate bracket
    hamiltonian: Expression   # in q1..qn only
    constants: np.ndarray
    parameters: Mapping[str, float]
    reference: np.ndarray | None = None


def build_reduced(
    structure: PoissonStructure,
    hamiltonian,
    constants=None,
    reference=None,
    tol: float = DEFAULT_TOL,
) -> ReducedSystem:
    """Eliminate the momenta via q_m = -theta_mn p_n + c_m.

    Requires a reference point where the degeneracy condition holds within
    ``tol``; the constant bracket matrix is read off there."""
    _require_delta_kind(structure, "building a reduced system")
    if reference is None:
        raise ReductionError("a reference point on the degenerate locus is required")
    reference = np.asarray(reference, dtype=float)
    condition = _point_condition(structure, reference)
    if condition > tol:
        raise ReductionError(
            f"degeneracy condition fails at the reference point "
            f"(residual {condition:.3e} > {tol:.1e})"
        )
    n = structure.n
    theta = structure.theta_block(reference)
    if constants is None:
        constants = reduction_constants(structure, reference)
    constants = np.asarray(constants, dtype=float)
    try:
        coeff = np.linalg.inv(theta)
    except np.linalg.LinAlgError:
        raise ReductionError(
            "coordinate-coordinate bracket matrix is singular; cannot "
            "eliminate the momenta"
        ) from None
    # p = theta^{-1} (c - q)
    replacements = {}
    h = _as_expression(hamiltonian)
    for k in range(n):
        terms = []
        for m in range(n):
            a = float(coeff[k, m])
            if a == 0.0:
                continue
            terms.append(Const(a) * (Const(constants[m]) - Name(f"q{m + 1}")))
        expr: Expression = terms[0] if terms else Const(0.0)
        for t in terms[1:]:
            expr = expr + t
        replacements[f"p{k + 1}"] = expr
    reduced_h = substitute(h, replacements)
    return ReducedSystem(
        n=n,
        theta_red=float(theta[0, 1]) if n >= 2 else 0.0,
        theta_matrix=theta,
        hamiltonian=reduced_h,
        constants=constants,
        parameters=dict(structure.parameters),
        reference=reference[:n].copy(),
    )


def reduced_velocity(system: ReducedSystem, q) -> np.ndarray:
    """dq_i/dt = theta_ij dh/dq_j with the constant reduced bracket."""
    q = np.asarray(q, dtype=float)
    env = dict(system.parameters)
    for i in range(system.n):
        env[f"q{i + 1}"] = float(q[i])
    grad = np.array(
        [derivative(system.hamiltonian, f"q{i + 1}", env) for i in range(system.n)]
    )
    return system.theta_matrix @ grad


def integrate_reduced(
    system: ReducedSystem, q0, dt: float, t_end: float
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step RK4 on the reduced coordinates."""
    n_steps = max(1, int(round(t_end / dt)))
    qs = np.empty((n_steps + 1, system.n))
    q = np.asarray(q0, dtype=float)
    qs[0] = q
    for k in range(1, n_steps + 1):
        k1 = reduced_velocity(system, q)
        k2 = reduced_velocity(system, q + 0.5 * dt * k1)
        k3 = reduced_velocity(system, q + 0.5 * dt * k2)
        k4 = reduced_velocity(system, q + dt * k3)
        q = q + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        qs[k] = q
    return dt * np.arange(n_steps + 1), qs


# ---------------------------------------------------------------------------
# Rotationally invariant planar case: oscillator profile


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Level ladder and classical angular frequency of a rotationally
    invariant planar reduced system.

    The action variable is n_bar = (q1^2 + q2^2) / (2 theta), the value of
    a_bar a for a = (q1 + i q2) / sqrt(2 theta).  Levels are emitted under
    both published argument conventions, theta*(n + 1/2) and (n + 1/2),
    since the two normalizations disagree in print; the classical
    frequency is convention-free."""

    omega_red: float
    levels: dict[str, list[float]]
    n_max: int


class NotRotationallyInvariantError(ReductionError):
    pass


def _radial_profile(system: ReducedSystem) -> Callable[[float], float]:
    if system.n != 2:
        raise ReductionError("spectrum analysis is planar only")
    env = dict(system.parameters)

    def h_at(q1, q2):
        env["q1"] = q1
        env["q2"] = q2
        return evaluate(system.hamiltonian, env)

    for r in (0.37, 0.83, 1.29):
        base = h_at(r, 0.0)
        for ang in (0.7, 1.9, 3.4, 5.1):
            v = h_at(r * np.cos(ang), r * np.sin(ang))
            if abs(v - base) > 1e-9 * (1.0 + abs(base)):
                raise NotRotationallyInvariantError(
                    "reduced Hamiltonian is not a function of q1^2 + q2^2"
                )

    def radial(s: float) -> float:
        return h_at(np.sqrt(s), 0.0)

    return radial


def spectrum_and_frequency(
    system: ReducedSystem, n_max: int, reference=None
) -> SpectrumReport:
    """Oscillator level ladder and the classical orbit frequency
    d h / d n_bar through the reference point."""
    radial = _radial_profile(system)
    theta = system.theta_red
    if theta == 0.0:
        raise ReductionError("reduced bracket is zero; no oscillator structure")
    ref = reference if reference is not None else system.reference
    if ref is None:
        raise ReductionError("a reference point in the reduced plane is required")
    r0 = float(np.hypot(ref[0], ref[1]))
    if r0 == 0.0:
        raise ReductionError("reference orbit has zero radius")
    env = dict(system.parameters)
    env["q1"] = r0
    env["q2"] = 0.0
    dh_dq1 = derivative(system.hamiltonian, "q1", env)
    # h = h_rad(q1^2 + q2^2), so dh/dn_bar = 2 theta h_rad' = theta dh/dq1 / q1
    omega = theta * dh_dq1 / r0
    levels = {
        "argument_theta_times_n_plus_half": [
            radial(2.0 * theta * theta * (k + 0.5)) for k in range(n_max + 1)
        ],
        "argument_n_plus_half": [
            radial(2.0 * theta * (k + 0.5)) for k in range(n_max + 1)
        ],
    }
    return SpectrumReport(omega_red=float(omega), levels=levels, n_max=n_max)


# ---------------------------------------------------------------------------
# Implicit planar solutions theta = phi(q1 + theta p2, q2 - theta p1)


def implicit_theta(
    phi,
    x,
    parameters: Mapping[str, float] | None = None,
    theta0: float = 0.0,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Solve theta = phi(q1 + theta p2, q2 - theta p1) by fixed point.

    ``phi`` is an expression in the surface labels c1, c2.  Divergence
    triggers a damped retry; persistent failure raises with the last
    iterate attached."""
    phi = _as_expression(phi)
    q1, q2, p1, p2 = (float(v) for v in np.asarray(x, dtype=float))
    env = dict(parameters or {})

    def step(theta):
        env["c1"] = q1 + theta * p2
        env["c2"] = q2 - theta * p1
        return evaluate(phi, env)

    theta = theta0
    for damping in (1.0, 0.5):
        theta = theta0
        delta0 = None
        for _ in range(max_iter):
            target = step(theta)
            delta = abs(target - theta)
            if delta <= tol:
                return target
            if delta0 is None:
                delta0 = delta
            if not np.isfinite(delta) or delta > 10.0 * delta0 + 1.0:
                break  # clearly diverging under this damping
            theta = theta + damping * (target - theta)
    raise FixedPointError("implicit bracket solve did not converge", theta)


def implicit_theta_constraint_residuals(
    phi,
    x,
    parameters: Mapping[str, float] | None = None,
    theta0: float = 0.0,
    h: float = 1e-6,
) -> tuple[float, float]:
    """Residuals of the halved transport pair for the implicit solution,
    theta dtheta/dq1 - dtheta/dp2 and theta dtheta/dq2 + dtheta/dp1,
    with the partials taken by finite differences of the solved field."""
    x = np.asarray(x, dtype=float)

    def solve(point):
        return implicit_theta(phi, point, parameters, theta0=theta0)

    theta = solve(x)
    partials = []
    for a in range(4):
        dx = np.zeros(4)
        dx[a] = h
        partials.append((solve(x + dx) - solve(x - dx)) / (2.0 * h))
    tq1, tq2, tp1, tp2 = partials
    return abs(theta * tq1 - tp2), abs(theta * tq2 + tp1)


# ---------------------------------------------------------------------------
# Near-degenerate sweep


@dataclass(eq=False)
class EpsilonSweep:
    rows: list[dict[str, float]]
    fitted_slope: float

    def to_json_dict(self) -> dict:
        return {"rows": self.rows, "fitted_slope": self.fitted_slope}


def epsilon_sweep(
    theta: float,
    hamiltonian,
    x0,
    epsilons: Sequence[float],
    dt: float = 1e-3,
    t_end: float = 10.0,
    method: str = "rk4",
) -> EpsilonSweep:
    """Drift of the frozen combinations for the family f = (1 - eps)/theta.

    At eps = 0 the combinations are exact invariants; their drift over a
    fixed horizon is expected to scale linearly with eps, and the log-log
    slope of max drift against eps is reported."""
    h = _as_expression(hamiltonian)
    rows = []
    for eps in epsilons:
        structure = constant_theta_f(theta, (1.0 - eps) / theta)
        problem = FlowProblem(structure, h, x0, dt, t_end, method)
        traj = integrate(problem)
        row: dict[str, float] = {"epsilon": float(eps)}
        drifts = []
        for m in range(structure.n):
            drift, _ = traj.monitor_drift(f"c_{m + 1}")
            row[f"c_{m + 1}_drift"] = drift
            drifts.append(drift)
        row["max_drift"] = max(drifts)
        rows.append(row)
    eps_arr = np.array([r["epsilon"] for r in rows])
    drift_arr = np.array([r["max_drift"] for r in rows])
    if np.any(drift_arr <= 0.0):
        slope = float("nan")
    else:
        slope = float(np.polyfit(np.log(eps_arr), np.log(drift_arr), 1)[0])
    return EpsilonSweep(rows=rows, fitted_slope=slope)
