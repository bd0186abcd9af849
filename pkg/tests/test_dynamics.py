"""Non-canonical flows: velocities, monitors, residuals along the motion."""

import numpy as np
import pytest

from noncanon.artifacts import trajectory_rows, write_csv
from noncanon.brackets import canonical, constant_theta_f, general_planar, theta_f_field
from noncanon.dynamics import (
    FlowProblem,
    d_dependence_fit,
    default_monitors,
    evolution_residuals,
    integrate,
    time_derivative_split,
    vanishing_combinations,
    velocity,
    zero_crossing_frequency,
)
from noncanon.expressions import parse

RNG = np.random.default_rng(2024)

HARMONIC = "(p1^2 + p2^2 + q1^2 + q2^2)/2"


def singular_field():
    return theta_f_field(2, theta={(1, 2): "-q1/p2"}, f={(1, 2): "-p2/q1"})


class TestVelocity:
    def test_canonical_free_particle(self):
        v = velocity(canonical(1), "p1^2/2", [0.0, 2.0])
        assert np.allclose(v, [2.0, 0.0], atol=0.0)

    def test_constant_structure_coordinate_hamiltonian(self):
        # hand substitution into the component equations of motion
        v = velocity(constant_theta_f(0.5, 0.0), "q1", [0.2, -0.4, 1.0, 0.3])
        assert np.array_equal(v, [0.0, -0.5, -1.0, 0.0])

    def test_degenerate_combinations(self):
        v = velocity(constant_theta_f(1.0, 1.0), HARMONIC, [1.0, 0.0, 0.0, 0.0])
        assert v[0] + v[3] == 0.0
        assert v[1] - v[2] == 0.0

    def test_matches_matrix_contraction(self):
        from noncanon.expressions import gradient

        s = singular_field()
        h = parse("q1*p2 + sin(q2)")
        for _ in range(10):
            x = RNG.uniform(0.4, 1.6, 4)
            g = np.array(gradient(h, s.variable_names, s.env_at(x)))
            assert np.allclose(velocity(s, h, x), s.theta_matrix(x) @ g, atol=1e-14)


class TestIntegrate:
    def test_harmonic_period_return(self):
        traj = integrate(
            FlowProblem(canonical(1), "(p1^2 + q1^2)/2", [1.0, 0.0], 1e-3, 2 * np.pi)
        )
        assert np.max(np.abs(traj.states[-1] - traj.states[0])) <= 1e-8

    def test_identification_monitors(self):
        s = constant_theta_f(1.0, 1.0)
        traj = integrate(FlowProblem(s, HARMONIC, [1.0, 0.0, 0.0, 0.0], 1e-3, 10.0))
        assert traj.monitor_drift("c_1")[0] <= 1e-8
        assert traj.monitor_drift("c_2")[0] <= 1e-8
        assert any("degenerate" in w for w in traj.warnings)

    def test_frozen_brackets_along_flow(self):
        traj = integrate(
            FlowProblem(singular_field(), HARMONIC, [1.0, 0.4, 0.3, 1.9], 1e-3, 10.0)
        )
        assert traj.monitor_drift("theta_12")[0] <= 1e-7
        assert traj.monitor_drift("f_12")[0] <= 1e-7

    @pytest.mark.parametrize(
        "structure,x0",
        [
            (canonical(2), [1.0, 0.2, -0.3, 0.5]),
            (constant_theta_f(0.7, -0.4), [1.0, 0.2, -0.3, 0.5]),
            (constant_theta_f(1.0, 1.0), [1.0, 0.0, 0.0, 0.0]),
        ],
    )
    def test_energy_conservation(self, structure, x0):
        traj = integrate(FlowProblem(structure, HARMONIC, x0, 1e-3, 10.0))
        h0 = traj.monitors["H"][0]
        assert traj.monitor_drift("H")[0] <= 1e-7 * (1.0 + abs(h0))

    def test_midpoint_method(self):
        traj = integrate(
            FlowProblem(canonical(1), "(p1^2 + q1^2)/2", [1.0, 0.0], 1e-2, 10.0,
                        method="midpoint")
        )
        # implicit midpoint conserves quadratic invariants up to solver slack
        assert traj.monitor_drift("H")[0] <= 1e-9

    def test_blow_up_truncates(self):
        traj = integrate(
            FlowProblem(canonical(1), "q1^3*p1", [2.0, 1.0], 1e-3, 10.0)
        )
        assert traj.truncated
        assert len(traj.times) < 10001
        assert np.all(np.isfinite(traj.states))
        assert any("truncated" in w for w in traj.warnings)

    def test_times_end_exactly_at_t_end(self):
        traj = integrate(
            FlowProblem(canonical(1), "(p1^2 + q1^2)/2", [1.0, 0.0], 1e-3, 2 * np.pi)
        )
        assert traj.times[-1] == pytest.approx(2 * np.pi, abs=1e-15)

    def test_extra_monitors(self):
        s = constant_theta_f(1.0, 1.0)
        traj = integrate(
            FlowProblem(s, HARMONIC, [1.0, 0.0, 0.0, 0.0], 1e-2, 1.0),
            extra_monitors={"spin": "q1*p2 - q2*p1"},
        )
        assert "spin" in traj.monitors

    def test_default_monitor_names(self):
        s = singular_field()
        names = set(default_monitors(s))
        assert names == {"theta_12", "f_12", "c_1", "c_2"}

    def test_invalid_problem(self):
        with pytest.raises(ValueError):
            FlowProblem(canonical(1), "p1", [0, 0], -1e-3, 1.0)
        with pytest.raises(ValueError):
            FlowProblem(canonical(1), "p3", [0, 0], 1e-3, 1.0)


class TestTrajectoryCsv:
    def test_header_and_digits(self, tmp_path):
        s = constant_theta_f(1.0, 1.0)
        traj = integrate(FlowProblem(s, HARMONIC, [1.0, 0.0, 0.0, 0.0], 1e-2, 0.1))
        header, rows = trajectory_rows(traj, s.variable_names)
        assert header[:6] == ["t", "q1", "q2", "p1", "p2", "H"]
        assert set(header[6:]) == {"theta_12", "f_12", "c_1", "c_2"}
        path = tmp_path / "traj.csv"
        write_csv(path, header, rows)
        lines = path.read_text().splitlines()
        assert len(lines) == len(traj.times) + 1
        # 17 significant digits round-trip through text
        value = float(lines[1].split(",")[1])
        assert value == traj.states[0][0]


class TestEvolutionResiduals:
    def test_constant_structure_all_zero(self):
        s = constant_theta_f(0.8, -0.2)
        rep = evolution_residuals(s, "q1^2*p2 + p1", RNG.uniform(-1, 1, 4))
        assert rep.max_identity <= 1e-14
        assert rep.bracket_term_max <= 1e-14

    def test_consistent_field_small_residuals(self):
        s = theta_f_field(2, theta={(1, 2): "q1/(1-p2)"}, f={(1, 2): "(1-p2)/q1"})
        for _ in range(20):
            x = RNG.uniform(0.2, 0.8, 4)
            rep = evolution_residuals(s, "q1*p1", x)
            assert rep.max_identity <= 1e-9

    def test_violation_shows_in_bracket_terms(self):
        s = theta_f_field(2, theta={(1, 2): "q2"})
        rep = evolution_residuals(s, "p1", [0.01, 0.02, 0.01, 0.03])
        assert rep.bracket_term_max >= 0.9


class TestVanishingCombinations:
    def test_degenerate_constant_structure(self):
        out = vanishing_combinations(
            constant_theta_f(1.0, 1.0), HARMONIC, [1.0, 0.0, 0.0, 0.0]
        )
        assert abs(out["qdot_plus_theta_pdot_1"]) == 0.0
        assert abs(out["qdot_plus_theta_pdot_2"]) == 0.0

    def test_canonical_has_no_reduction(self):
        out = vanishing_combinations(canonical(2), "p1", np.zeros(4))
        assert out["qdot_plus_theta_pdot_1"] == 1.0

    def test_planar_null_determinant(self):
        s = general_planar("1", "1", "1", "0", "0", "1")
        for _ in range(20):
            x = RNG.uniform(-1, 1, 4)
            out = vanishing_combinations(s, "q2", x)
            assert max(abs(v) for v in out.values()) <= 1e-12

    def test_planar_nonconstant_null_determinant(self):
        s = general_planar("1 + q1^2/2", "1/(1 + q1^2/2)", "1", "0", "0", "1")
        for h in ("q2", "p1*p2", "q1*q2 + p2^2/2"):
            for _ in range(10):
                x = RNG.uniform(-1, 1, 4)
                out = vanishing_combinations(s, h, x)
                assert max(abs(v) for v in out.values()) <= 1e-12


def random_polynomial(rng, degree=2):
    monomials = ["q1", "q2", "p1", "p2", "q1*q2", "q1*p1", "q1*p2", "q2*p1",
                 "q2*p2", "p1*p2", "q1^2", "q2^2", "p1^2", "p2^2"]
    coefs = rng.uniform(-1.0, 1.0, len(monomials))
    return " + ".join(f"{c:.6f}*{m}" for c, m in zip(coefs, monomials))


class TestDOperatorCalculus:
    def test_time_derivative_combination(self):
        # the operator combination reproduces grad f . xdot identically,
        # for any bracket functions and any observable
        s = general_planar(
            "1 + q2^2/4", "(3 + q2^2/4)/(1 + q2^2/4)", "1", "-(1 + q2^2/4)", "1", "2"
        )
        for _ in range(30):
            x = RNG.uniform(-1.2, 1.2, 4)
            f = random_polynomial(RNG)
            h = random_polynomial(RNG)
            direct, via_d = time_derivative_split(s, h, f, x)
            assert direct == pytest.approx(via_d, abs=1e-9 * (1.0 + abs(direct)))

    def test_dependence_fit_on_closing_family(self):
        # with theta = -g12 and the determinant condition, the combination
        # g11 D2 f - g12 D3 f + sigma D1 f closes with sigma = g21
        s = general_planar(
            "1 + q2^2/4", "(3 + q2^2/4)/(1 + q2^2/4)", "1", "-(1 + q2^2/4)", "1", "2"
        )
        fs = [parse(src) for src in ("q1*p2", "q2^2 - p1", "q1 + p1*p2", "p2^3/3")]
        for _ in range(20):
            x = RNG.uniform(-1.2, 1.2, 4)
            sigma, residual = d_dependence_fit(s, x, fs)
            assert sigma == pytest.approx(1.0, abs=1e-9)
            assert residual <= 1e-9

    def test_dependence_fit_reports_open_residual(self):
        # away from the closing family the fit leaves a visible leftover
        s = general_planar("1 + q1^2", "1", "1", "0", "0", "1")
        fs = [parse(src) for src in ("q1*p2", "q2^2 - p1", "q1 + p1*p2")]
        sigma, residual = d_dependence_fit(s, [0.5, 0.2, -0.3, 0.4], fs)
        assert residual > 1e-3


class TestZeroCrossing:
    def test_pure_tone(self):
        t = np.linspace(0.0, 10.0, 20001)
        assert zero_crossing_frequency(t, np.cos(2.0 * t)) == pytest.approx(
            2.0, abs=1e-4
        )

    def test_needs_two_crossings(self):
        t = np.linspace(0.0, 1.0, 100)
        with pytest.raises(ValueError):
            zero_crossing_frequency(t, np.ones_like(t))
