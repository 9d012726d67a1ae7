import numpy as np
import pytest

from kapitza_cell.geometry import PlacedInclusion, ShapeSpec, discretize
from kapitza_cell.oracles import disk_limit_lambda_general, exterior_neumann_ball_field
from kapitza_cell.transmission import (
    PhaseParameters,
    SolverError,
    TransmissionSolution,
    boundary_residuals,
    evaluate_solution,
    solve_cell_problem,
    solve_exterior_neumann,
    solve_limit_problem,
)

DISK = ShapeSpec.disk()
UNIT = PhaseParameters.linear(1.0, 1.0, 1.0)


class TestPhaseParameters:
    def test_rho_models(self):
        lin = PhaseParameters.linear(1.0, 2.0, r_star=4.0)
        assert lin.rho(0.2) == pytest.approx(0.05)
        assert lin.r_star == 4.0
        const = PhaseParameters.constant(1.0, 2.0, rho0=0.7)
        assert const.rho(0.01) == 0.7
        assert const.r_star == 0.0
        pw = PhaseParameters.power(1.0, 2.0, coefficient=2.0, exponent=0.5)
        assert pw.rho(0.25) == pytest.approx(1.0)
        assert pw.r_star == 0.0

    def test_validation(self):
        with pytest.raises(ValueError, match="conductivity must be positive"):
            PhaseParameters.linear(-1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            PhaseParameters.linear(1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            PhaseParameters.power(1.0, 1.0, 1.0, exponent=1.5)


class TestLimitProblem:
    def test_disk_fully_resistive_fields(self):
        # at r* = 0 the problem decouples; both pieces must still come back
        sol = solve_limit_problem(DISK, UNIT, 0.0, 0, 128)
        value, _ = evaluate_solution(sol, np.array([2.0, 0.0]), side="matrix")
        assert abs(value - 0.5) < 1e-8
        assert value == pytest.approx(exterior_neumann_ball_field(np.array([2.0, 0.0]), 0), abs=1e-8)
        inner, _ = evaluate_solution(sol, np.array([0.3, 0.0]), side="inclusion")
        assert abs(inner - (-0.3)) < 1e-8

    @pytest.mark.parametrize("lam_plus,lam_minus,r_star",
                             [(1.0, 1.0, 1.0), (2.0, 3.0, 0.5), (10.0, 1.0, 10.0)])
    def test_disk_traces_match_linear_ansatz(self, lam_plus, lam_minus, r_star):
        phases = PhaseParameters.linear(lam_plus, lam_minus, max(r_star, 1e-12))
        sol = solve_limit_problem(DISK, phases, r_star, 0, 128)
        coeff = disk_limit_lambda_general(lam_plus, lam_minus, r_star)
        tj = sol.disc.nodes[:, 0]
        assert np.abs(sol.boundary_u_plus - coeff.interior_coefficient * tj).max() < 1e-8
        assert np.abs(sol.boundary_u_minus - coeff.exterior_coefficient * tj).max() < 1e-8

    def test_normalizations_and_constraints(self):
        sol = solve_limit_problem(ShapeSpec.star(0.1, 3), PhaseParameters.linear(2.0, 1.0, 1.0),
                                  1.0, 0, 128)
        w = sol.disc.weights
        assert abs(w @ sol.boundary_u_plus) < 1e-10
        assert abs(w @ sol.boundary_u_minus) < 1e-10
        assert abs(w @ sol.mu_plus) < 1e-12
        assert abs(w @ sol.mu_minus) < 1e-12

    def test_far_field_is_bounded(self):
        sol = solve_limit_problem(DISK, UNIT, 1.0, 0, 96)
        far, _ = evaluate_solution(sol, np.array([1000.0, 3.0]), side="matrix")
        assert np.isfinite(far)
        assert abs(far - sol.c_minus) < 1e-2

    def test_compatibility_multipliers_vanish(self):
        sol = solve_limit_problem(DISK, PhaseParameters.linear(3.0, 1.0, 2.0), 2.0, 0, 128)
        assert max(abs(m) for m in sol.multipliers) < 1e-12

    def test_spectral_residual_decay(self):
        shape = ShapeSpec.star(0.1, 3)
        phases = PhaseParameters.linear(5.0, 1.0, 2.0)
        res = {}
        for n in (64, 128):
            sol = solve_limit_problem(shape, phases, 2.0, 0, n)
            res[n] = max(sol.residuals["flux"], sol.residuals["jump"])
        assert res[64] / max(res[128], 1e-300) > 1e2

    def test_rejects_bad_contact_ratio(self):
        with pytest.raises(ValueError):
            solve_limit_problem(DISK, UNIT, -1.0, 0, 64)
        with pytest.raises(ValueError):
            solve_limit_problem(DISK, UNIT, np.inf, 0, 64)


class TestExteriorNeumann:
    def test_disk_field_values(self):
        sol = solve_exterior_neumann(DISK, 0, 128)
        v, _ = evaluate_solution(sol, np.array([2.0, 0.0]), side="matrix")
        assert abs(v - 0.5) < 1e-10
        v0, _ = evaluate_solution(sol, np.array([0.0, 2.0]), side="matrix")
        assert abs(v0) < 1e-10

    @pytest.mark.parametrize("shape", [DISK, ShapeSpec.ellipse(2.0, 1.0), ShapeSpec.star(0.1, 3)])
    def test_zero_boundary_mean(self, shape):
        sol = solve_exterior_neumann(shape, 1, 128)
        assert abs(sol.disc.weights @ sol.boundary_u_minus) < 1e-10

    def test_spectral_residual_decay(self):
        res = {}
        for n in (64, 128):
            sol = solve_exterior_neumann(ShapeSpec.star(0.1, 3), 0, n)
            res[n] = sol.residuals["neumann"]
        assert res[64] / max(res[128], 1e-300) > 1e2

    def test_no_inclusion_side(self):
        sol = solve_exterior_neumann(DISK, 0, 64)
        with pytest.raises(ValueError):
            evaluate_solution(sol, np.array([0.1, 0.0]), side="inclusion")


class TestCellProblem:
    def setup_method(self):
        self.inc = PlacedInclusion(DISK, (0.5, 0.5), 0.1)

    def test_interface_residuals_and_temperature_jump(self):
        sol = solve_cell_problem(self.inc, UNIT, 0, 128)
        assert max(sol.residuals["flux"], sol.residuals["jump"]) < sol.residuals["tol_bc"]
        # imperfect contact forces a genuine temperature jump across the interface
        gap = np.abs(sol.boundary_u_minus - sol.boundary_u_plus).max()
        assert gap > 1e-4

    def test_side_constraints(self):
        sol = solve_cell_problem(self.inc, UNIT, 0, 128)
        w = sol.disc.weights
        assert abs(w @ sol.mu_plus) < 1e-12
        assert abs(w @ sol.mu_minus) < 1e-12
        assert abs(w @ sol.boundary_u_plus) < 1e-10

    def test_independent_checkpoint_grids(self):
        # re-assemble the interface conditions on two fresh off-node grids
        sol = solve_cell_problem(self.inc, UNIT, 0, 128)
        for offset in (0.25, 0.75):
            res = boundary_residuals(sol, offset=offset)
            assert max(res["flux"], res["jump"]) < sol.residuals["tol_bc"]

    def test_quasi_periodicity(self):
        pts = np.array([[0.2, 0.3], [0.85, 0.15]])
        for j, expect in ((0, np.array([0.0, 1.0])), (1, np.array([1.0, 0.0]))):
            # expect[0]: shift by e2 adds delta_{2,j+1}; expect[1]: shift by e1
            sol = solve_cell_problem(self.inc, UNIT, j, 96)
            base, _ = evaluate_solution(sol, pts, side="matrix")
            up, _ = evaluate_solution(sol, pts + np.array([0.0, 1.0]), side="matrix")
            right, _ = evaluate_solution(sol, pts + np.array([1.0, 0.0]), side="matrix")
            assert np.abs(up - base - expect[0]).max() < 1e-10
            assert np.abs(right - base - expect[1]).max() < 1e-10

    def test_matrix_field_mean_value_property(self):
        sol = solve_cell_problem(self.inc, UNIT, 0, 128)
        center = np.array([0.25, 0.3])
        value, _ = evaluate_solution(sol, center, side="matrix")
        theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        ring = center + 0.01 * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        ring_vals, _ = evaluate_solution(sol, ring, side="matrix")
        assert abs(ring_vals.mean() - value) < 1e-8

    def test_inclusion_field_harmonic_mean_value(self):
        sol = solve_cell_problem(self.inc, UNIT, 1, 128)
        center = np.array([0.5, 0.5])
        value, _ = evaluate_solution(sol, center, side="inclusion")
        theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        ring = center + 0.02 * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        ring_vals, _ = evaluate_solution(sol, ring, side="inclusion")
        assert abs(ring_vals.mean() - value) < 1e-8

    def test_spectral_residual_decay_on_disk(self):
        inc = PlacedInclusion(DISK, (0.5, 0.5), 0.4)
        phases = PhaseParameters.linear(10.0, 1.0, 1.0)
        res = {}
        for n in (64, 128):
            sol = solve_cell_problem(inc, phases, 0, n)
            res[n] = max(sol.residuals["flux"], sol.residuals["jump"])
        assert res[64] / max(res[128], 1e-300) > 1e2

    def test_uniqueness_regression_across_resolutions(self):
        phases = PhaseParameters.linear(2.0, 1.0, 1.0)
        probes = np.array([[0.2, 0.2], [0.8, 0.45]])
        inner = np.array([[0.5, 0.52], [0.47, 0.48]])
        vals = {}
        for n in (128, 192):
            sol = solve_cell_problem(self.inc, phases, 0, n)
            vm, _ = evaluate_solution(sol, probes, side="matrix")
            vp, _ = evaluate_solution(sol, inner, side="inclusion")
            vals[n] = np.concatenate([vm, vp])
        assert np.abs(vals[128] - vals[192]).max() < 1e-8

    def test_under_resolved_solve_fails_honestly(self):
        inc = PlacedInclusion(ShapeSpec.star(0.15, 4), (0.5, 0.5), 0.3)
        with pytest.raises(SolverError):
            solve_cell_problem(inc, PhaseParameters.linear(5.0, 1.0, 1.0), 0, 64)

    def test_wrong_side_evaluation_rejected(self):
        sol = solve_cell_problem(self.inc, UNIT, 0, 96)
        with pytest.raises(ValueError):
            evaluate_solution(sol, np.array([0.5, 0.5]), side="matrix")
        with pytest.raises(ValueError):
            evaluate_solution(sol, np.array([0.2, 0.2]), side="inclusion")

    def test_eps_below_minimum_rejected(self):
        with pytest.raises(ValueError):
            PlacedInclusion(DISK, (0.5, 0.5), 5e-4)


def test_zero_density_solution_evaluates_to_constants():
    disc = discretize(DISK, 64)
    sol = TransmissionSolution(
        problem="limit", direction=0, disc=disc,
        mu_plus=np.zeros(64), mu_minus=np.zeros(64),
        c_plus=1.7, c_minus=-0.4, multipliers=(0.0, 0.0),
        boundary_u_plus=np.full(64, 1.7), boundary_u_minus=np.full(64, -0.4),
        residuals={}, phases=UNIT, r_star=1.0)
    v_in, g_in = evaluate_solution(sol, np.array([0.2, 0.0]), side="inclusion")
    v_out, g_out = evaluate_solution(sol, np.array([3.0, 0.0]), side="matrix")
    assert v_in == pytest.approx(1.7, abs=1e-15)
    assert v_out == pytest.approx(-0.4, abs=1e-15)
    assert np.abs(g_in).max() < 1e-15 and np.abs(g_out).max() < 1e-15
