"""Poisson structures with state-dependent brackets.

A structure stores the upper triangle of the antisymmetric coefficient
matrix Theta_ab = {x_a, x_b} as expression trees over the phase-space
names q1..qn, p1..pn, plus any parameter values those expressions use.
Antisymmetry is structural: only a < b entries exist, the mirror entry is
the negation.  Everything here is a pure function of (structure, point).

Supported kinds:

* ``canonical``          {q_i,p_j} = delta_ij, all else zero
* ``constant-theta-f``   planar, {q1,q2} = theta and {p1,p2} = f constant
* ``theta-f-field``      {q_i,q_j} and {p_i,p_j} state-dependent,
                         {q_i,p_j} = delta_ij
* ``general-planar``     planar with all six brackets free functions
* ``custom``             explicit upper-triangle entries
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping

import numpy as np

from .expressions import (
    Const,
    Expression,
    Unary,
    evaluate,
    free_names,
    gradient,
    is_constant_over,
    parse,
)

__all__ = [
    "PoissonStructure",
    "entry_label",
    "StructureError",
    "JacobiReport",
    "DegeneracyReport",
    "DELTA_KINDS",
    "phase_variable_names",
    "canonical",
    "constant_theta_f",
    "theta_f_field",
    "general_planar",
    "custom",
    "omega_matrix",
    "d_operator_values",
]

#: kinds whose coordinate-momentum brackets are exactly delta_ij
DELTA_KINDS = frozenset({"canonical", "constant-theta-f", "theta-f-field"})

_ZERO = Const(0.0)


class StructureError(ValueError):
    """Invalid structure description."""


def phase_variable_names(n: int) -> tuple[str, ...]:
    return tuple(f"q{i}" for i in range(1, n + 1)) + tuple(
        f"p{i}" for i in range(1, n + 1)
    )


def _as_expression(src) -> Expression:
    if isinstance(src, str):
        return parse(src)
    if isinstance(src, (int, float)):
        return Const(float(src))
    return src


@dataclass(frozen=True, eq=False)
class JacobiReport:
    """Pointwise Jacobi residuals: the generic triple sum plus, where the
    structure names its bracket functions, each constraint separately."""

    generic_max: float
    identities: dict[str, float] = field(default_factory=dict)

    @property
    def max_identity(self) -> float:
        return max(self.identities.values()) if self.identities else 0.0


@dataclass(frozen=True, eq=False)
class DegeneracyReport:
    det: float
    inverse_pairing_residual: float | None = None
    planar_condition: float | None = None


@dataclass(frozen=True, eq=False)
class PoissonStructure:
    """Antisymmetric bracket coefficient matrix over a 2n phase space."""

    n: int
    kind: str
    entries: Mapping[tuple[int, int], Expression]
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise StructureError("need at least one degree of freedom")
        dim = 2 * self.n
        for (a, b) in self.entries:
            if not (0 <= a < b < dim):
                raise StructureError(
                    f"entry index ({a},{b}) outside the upper triangle of a "
                    f"{dim}x{dim} matrix; only a < b entries may be supplied"
                )
        allowed = set(phase_variable_names(self.n)) | set(self.parameters)
        for expr in self.entries.values():
            unknown = free_names(expr) - allowed
            if unknown:
                raise StructureError(
                    f"entry references undeclared names {sorted(unknown)}"
                )

    # -- naming ------------------------------------------------------------

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def variable_names(self) -> tuple[str, ...]:
        return phase_variable_names(self.n)

    def env_at(self, x, extra: Mapping[str, float] | None = None) -> dict:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise StructureError(
                f"phase point must have length {self.dim}, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise StructureError("phase point has non-finite entries")
        env = dict(self.parameters)
        if extra:
            env.update(extra)
        for name, value in zip(self.variable_names, x):
            env[name] = float(value)
        return env

    def entry_expression(self, a: int, b: int) -> Expression:
        """Signed expression for Theta_ab, including the implicit zeros."""
        if a == b:
            return _ZERO
        if a < b:
            return self.entries.get((a, b), _ZERO)
        expr = self.entries.get((b, a), _ZERO)
        return _ZERO if expr is _ZERO else Unary("neg", expr)

    # -- evaluation ----------------------------------------------------------

    def theta_matrix(self, x) -> np.ndarray:
        """Numeric antisymmetric matrix Theta_ab(x)."""
        env = self.env_at(x)
        m = np.zeros((self.dim, self.dim))
        for (a, b), expr in self.entries.items():
            v = evaluate(expr, env)
            m[a, b] = v
            m[b, a] = -v
        return m

    def theta_block(self, x) -> np.ndarray:
        """The n x n coordinate-coordinate block {q_i, q_j}."""
        return self.theta_matrix(x)[: self.n, : self.n]

    def f_block(self, x) -> np.ndarray:
        """The n x n momentum-momentum block {p_i, p_j}."""
        return self.theta_matrix(x)[self.n :, self.n :]

    def g_block(self, x) -> np.ndarray:
        """The n x n mixed block {q_i, p_j}."""
        return self.theta_matrix(x)[: self.n, self.n :]

    def bracket(self, a_expr, b_expr, x) -> float:
        """{A, B}(x) = Theta_ab dA/dx_a dB/dx_b."""
        a_expr = _as_expression(a_expr)
        b_expr = _as_expression(b_expr)
        env = self.env_at(x)
        names = self.variable_names
        ga = np.array(gradient(a_expr, names, env))
        gb = np.array(gradient(b_expr, names, env))
        return float(ga @ self.theta_matrix(x) @ gb)

    # -- consistency ---------------------------------------------------------

    def _entry_gradients(self, x):
        """Values and gradients of every Theta_ab at x, with antisymmetry."""
        env = self.env_at(x)
        names = self.variable_names
        dim = self.dim
        m = np.zeros((dim, dim))
        grads = np.zeros((dim, dim, dim))
        for (a, b), expr in self.entries.items():
            v = evaluate(expr, env)
            m[a, b] = v
            m[b, a] = -v
            g = np.array(gradient(expr, names, env))
            grads[a, b] = g
            grads[b, a] = -g
        return m, grads

    def jacobi_report(self, x) -> JacobiReport:
        """Residuals of {x_a,{x_b,x_c}} + cyclic over all index triples,
        plus the named constraints for kinds with named bracket functions."""
        m, grads = self._entry_gradients(x)
        generic = 0.0
        for a, b, c in combinations(range(self.dim), 3):
            r = (
                m[a] @ grads[b, c]
                + m[b] @ grads[c, a]
                + m[c] @ grads[a, b]
            )
            generic = max(generic, abs(r))
        identities: dict[str, float] = {}
        if self.kind in DELTA_KINDS:
            identities = self._delta_kind_identities(x, m, grads)
        elif self.kind == "general-planar":
            identities = self._planar_identities(x)
        return JacobiReport(generic_max=generic, identities=identities)

    def _delta_kind_identities(self, x, m, grads) -> dict[str, float]:
        n = self.n
        ids: dict[str, float] = {}
        if n == 2:
            # planar transport constraints on theta = {q1,q2}, f = {p1,p2}
            tg = grads[0, 1]
            fg = grads[2, 3]
            tv = m[0, 1]
            fv = m[2, 3]
            ids["theta_transport_q1"] = abs(tg[0] - fv * tg[3])
            ids["theta_transport_q2"] = abs(tg[1] + fv * tg[2])
            ids["f_transport_p2"] = abs(fg[3] - tv * fg[0])
            ids["f_transport_p1"] = abs(fg[2] + tv * fg[1])
            # the halved pair valid on the degenerate locus theta*f = 1
            ids["reduced_transport_q1"] = abs(tv * tg[0] - tg[3])
            ids["reduced_transport_q2"] = abs(tv * tg[1] + tg[2])
            return ids
        # arbitrary n: aggregate the transport and cyclic constraints
        theta_transport = 0.0
        f_transport = 0.0
        for i, j in combinations(range(n), 2):
            tgrad = grads[i, j]
            fgrad = grads[n + i, n + j]
            for k in range(n):
                r = tgrad[k] + sum(tgrad[n + s] * m[n + s, n + k] for s in range(n))
                theta_transport = max(theta_transport, abs(r))
                r = fgrad[n + k] - sum(fgrad[s] * m[s, k] for s in range(n))
                f_transport = max(f_transport, abs(r))
        ids["theta_transport"] = theta_transport
        ids["f_transport"] = f_transport
        if n >= 3:
            theta_cyc = 0.0
            f_cyc = 0.0
            for i, j, k in combinations(range(n), 3):
                r = sum(
                    grads[a, b][n + c]
                    - sum(grads[a, b][s] * m[s, c] for s in range(n))
                    for a, b, c in ((i, j, k), (j, k, i), (k, i, j))
                )
                theta_cyc = max(theta_cyc, abs(r))
                r = sum(
                    grads[n + a, n + b][c]
                    + sum(
                        grads[n + a, n + b][n + s] * m[n + s, n + c]
                        for s in range(n)
                    )
                    for a, b, c in ((i, j, k), (j, k, i), (k, i, j))
                )
                f_cyc = max(f_cyc, abs(r))
            ids["theta_cyclic"] = theta_cyc
            ids["f_cyclic"] = f_cyc
        return ids

    def _planar_identities(self, x) -> dict[str, float]:
        th = self.entry_expression(0, 1)
        f = self.entry_expression(2, 3)
        g11 = self.entry_expression(0, 2)
        g12 = self.entry_expression(0, 3)
        g21 = self.entry_expression(1, 2)
        g22 = self.entry_expression(1, 3)
        d = {
            name: d_operator_values(self, expr, x)
            for name, expr in (
                ("theta", th),
                ("f", f),
                ("g11", g11),
                ("g12", g12),
                ("g21", g21),
                ("g22", g22),
            )
        }
        return {
            "theta_d3": abs(d["theta"][2] + d["g21"][0] + d["g11"][1]),
            "theta_d4": abs(d["theta"][3] + d["g22"][0] + d["g12"][1]),
            "f_d1": abs(d["f"][0] - d["g12"][2] + d["g11"][3]),
            "f_d2": abs(d["f"][1] - d["g22"][2] + d["g21"][3]),
        }

    def degeneracy(self, x) -> DegeneracyReport:
        """det Theta plus the kind-specific degeneracy measure."""
        det = float(np.linalg.det(self.theta_matrix(x)))
        pairing = None
        planar = None
        if self.kind in DELTA_KINDS:
            t = self.theta_block(x)
            f = self.f_block(x)
            pairing = float(np.max(np.abs(t @ f + np.eye(self.n))))
        elif self.kind == "general-planar":
            env = self.env_at(x)
            theta = evaluate(self.entry_expression(0, 1), env)
            field = evaluate(self.entry_expression(2, 3), env)
            g = [
                [evaluate(self.entry_expression(i, 2 + j), env) for j in (0, 1)]
                for i in (0, 1)
            ]
            planar = theta * field - g[0][0] * g[1][1] + g[0][1] * g[1][0]
        return DegeneracyReport(
            det=det, inverse_pairing_residual=pairing, planar_condition=planar
        )

    def nonconstant_entry_names(self) -> tuple[str, ...]:
        """Labels of stored entries that depend on phase-space variables."""
        names = self.variable_names
        labels = []
        for (a, b), expr in sorted(self.entries.items()):
            if not is_constant_over(expr, names):
                labels.append(entry_label(self.n, a, b))
        return tuple(labels)


def entry_label(n: int, a: int, b: int) -> str:
    """Human-readable name for the (a, b) bracket entry: theta_ij, f_ij, g_ij."""
    def side(c):
        return ("q", c + 1) if c < n else ("p", c - n + 1)

    (sa, ia), (sb, ib) = side(a), side(b)
    if sa == "q" and sb == "q":
        return f"theta_{ia}{ib}"
    if sa == "p" and sb == "p":
        return f"f_{ia}{ib}"
    return f"g_{ia}{ib}"


# ---------------------------------------------------------------------------
# Builders


def canonical(n: int, parameters: Mapping[str, float] | None = None) -> PoissonStructure:
    entries = {(i, n + i): Const(1.0) for i in range(n)}
    return PoissonStructure(n, "canonical", entries, dict(parameters or {}))


def constant_theta_f(
    theta: float, f: float, parameters: Mapping[str, float] | None = None
) -> PoissonStructure:
    """Planar structure with constant {q1,q2} = theta and {p1,p2} = f."""
    entries = {
        (0, 1): Const(float(theta)),
        (0, 2): Const(1.0),
        (1, 3): Const(1.0),
        (2, 3): Const(float(f)),
    }
    return PoissonStructure(2, "constant-theta-f", entries, dict(parameters or {}))


def _field_entries(n, offset, fields, label):
    entries = {}
    for key, src in (fields or {}).items():
        i, j = key
        if not (1 <= i <= n and 1 <= j <= n):
            raise StructureError(f"{label} index {key} outside 1..{n}")
        if i >= j:
            raise StructureError(
                f"{label} entries must be given for i < j only (antisymmetry "
                f"is structural); got {key}"
            )
        entries[(offset + i - 1, offset + j - 1)] = _as_expression(src)
    return entries


def theta_f_field(
    n: int,
    theta: Mapping[tuple[int, int], object] | None = None,
    f: Mapping[tuple[int, int], object] | None = None,
    parameters: Mapping[str, float] | None = None,
) -> PoissonStructure:
    """Structure with {q_i,q_j} = theta_ij(q,p), {p_i,p_j} = f_ij(q,p) and
    canonical mixed brackets.  Field mappings are keyed by (i, j), i < j."""
    entries = {(i, n + i): Const(1.0) for i in range(n)}
    entries.update(_field_entries(n, 0, theta, "theta"))
    entries.update(_field_entries(n, n, f, "f"))
    return PoissonStructure(n, "theta-f-field", entries, dict(parameters or {}))


def general_planar(
    theta, f, g11, g12, g21, g22, parameters: Mapping[str, float] | None = None
) -> PoissonStructure:
    """Planar structure with all six bracket functions user-supplied."""
    entries = {
        (0, 1): _as_expression(theta),
        (2, 3): _as_expression(f),
        (0, 2): _as_expression(g11),
        (0, 3): _as_expression(g12),
        (1, 2): _as_expression(g21),
        (1, 3): _as_expression(g22),
    }
    entries = {k: e for k, e in entries.items() if e != Const(0.0)}
    return PoissonStructure(2, "general-planar", entries, dict(parameters or {}))


def custom(
    n: int,
    entries: Mapping[tuple[int, int], object],
    parameters: Mapping[str, float] | None = None,
) -> PoissonStructure:
    """Explicit upper-triangle entries keyed by 1-based flat indices (a, b)."""
    converted = {}
    for (a, b), src in entries.items():
        if not (1 <= a < b <= 2 * n):
            raise StructureError(
                f"custom entry ({a},{b}) must satisfy 1 <= a < b <= {2*n}"
            )
        converted[(a - 1, b - 1)] = _as_expression(src)
    return PoissonStructure(n, "custom", converted, dict(parameters or {}))


# ---------------------------------------------------------------------------
# Constant planar helpers


def omega_matrix(theta: float, f: float) -> np.ndarray:
    """Closed-form inverse of the constant planar bracket matrix, with the
    1/(1 - theta*f) prefactor.  The product theta_matrix @ omega_matrix is
    the identity whenever theta*f != 1."""
    denom = 1.0 - theta * f
    if denom == 0.0:
        raise StructureError("omega undefined at the degenerate limit theta*f = 1")
    return (1.0 / denom) * np.array(
        [
            [0.0, f, -1.0, 0.0],
            [-f, 0.0, 0.0, -1.0],
            [1.0, 0.0, 0.0, theta],
            [0.0, 1.0, -theta, 0.0],
        ]
    )


def d_operator_values(structure: PoissonStructure, expr, x) -> np.ndarray:
    """Values of the four planar first-order operators applied to ``expr``.

    With entry values (theta, f, g11, g12, g21, g22) at x and partials
    (f_q1, f_q2, f_p1, f_p2) of the target function:

        D1 = -theta d/dq2 - g11 d/dp1 - g12 d/dp2
        D2 = -theta d/dq1 + g21 d/dp1 + g22 d/dp2
        D3 = -f d/dp2 + g11 d/dq1 + g21 d/dq2
        D4 = +f d/dp1 + g12 d/dq1 + g22 d/dq2

    Any two of them span the time-derivative of the reduced flow; see the
    dynamics module for the combination rule.
    """
    if structure.n != 2:
        raise StructureError("the D operators are defined for planar structures")
    expr = _as_expression(expr)
    env = structure.env_at(x)
    theta = evaluate(structure.entry_expression(0, 1), env)
    f = evaluate(structure.entry_expression(2, 3), env)
    g11 = evaluate(structure.entry_expression(0, 2), env)
    g12 = evaluate(structure.entry_expression(0, 3), env)
    g21 = evaluate(structure.entry_expression(1, 2), env)
    g22 = evaluate(structure.entry_expression(1, 3), env)
    eq1, eq2, ep1, ep2 = gradient(expr, structure.variable_names, env)
    return np.array(
        [
            -theta * eq2 - g11 * ep1 - g12 * ep2,
            -theta * eq1 + g21 * ep1 + g22 * ep2,
            -f * ep2 + g11 * eq1 + g21 * eq2,
            f * ep1 + g12 * eq1 + g22 * eq2,
        ]
    )
