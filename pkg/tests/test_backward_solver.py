import unittest
import sys
import os
import numpy as np
from numpy.testing import assert_allclose

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from experiments.data import pairing_terminal, random_backward_problem, random_forward_problem
from experiments.report import pairing_mismatch
from spde.backward_solver import (
    BackwardProblem, BackwardSolver, estimate_P_star_norm, k_shift_roundtrip, solve_backward_dp,
    solve_backward_path,
)
from spde.coefficients import get_preset
from spde.errors import ConvergenceError, GuardError
from spde.forward_solver import ForwardSolver
from spde.grid_norms import build_grid
from spde.noise_tree import TerminalVariable, build_tree


class TestBackwardRoutes(unittest.TestCase):
    """Tests for the adjoint, dynamic-programming and Neumann routes"""

    def setUp(self):
        self.grid = build_grid(0.0, 1.0, 8)
        self.tree = build_tree(2, 3, 1.0)
        self.coeffs = get_preset("transport", 2)
        self.forward = ForwardSolver(self.coeffs, self.grid, self.tree)
        self.solver = BackwardSolver(self.coeffs, self.grid, self.tree, self.forward.operators)
        self.rng = np.random.default_rng(21)
        self.problem = random_backward_problem(self.coeffs, self.grid, self.tree, self.rng)
        self.adjoint = self.solver.solve_adjoint(self.problem)

    def test_duality_pairing(self):
        M = self.tree.M
        for _ in range(5):
            fp = random_forward_problem(self.coeffs, self.grid, self.tree, self.rng)
            bp = random_backward_problem(self.coeffs, self.grid, self.tree, self.rng)
            u = self.forward.solve(fp)
            solution = self.solver.solve_adjoint(bp)
            left = [u.inner(bp.xi), pairing_terminal(self.grid, u[M], bp.Psi.values)]
            right = (
                [fp.phi.inner(solution.p_drift)]
                + [fp.h[i].inner(solution.chi[i]) for i in range(2)]
                + [pairing_terminal(self.grid, fp.Phi, solution.p_initial)]
            )
            self.assertLess(pairing_mismatch(left, right), 1e-11)

    def test_terminal_condition_is_exact(self):
        assert_allclose(self.adjoint.p[self.tree.M], self.problem.Psi.values, rtol=0, atol=0)

    def test_dp_matches_adjoint(self):
        dp = solve_backward_dp(self.problem)
        scale = max(self.adjoint.p.max_abs(), 1.0)
        self.assertLess(dp.p.max_abs_difference(self.adjoint.p), 1e-10 * scale)
        for chi_dp, chi_adjoint in zip(dp.chi, self.adjoint.chi):
            self.assertLess(chi_dp.max_abs_difference(chi_adjoint), 1e-10 * scale)
        self.assertGreaterEqual(dp.diagnostics["residual_channel_max"], 0.0)

    def test_equation_residual(self):
        residual = self.solver.equation_residual(self.adjoint, self.problem)
        scale = max(self.adjoint.p.max_abs(), 1.0)
        self.assertLess(residual["p"], 1e-10 * scale)
        self.assertLess(residual["chi"], 1e-10 * scale)

    def test_neumann_matches_adjoint(self):
        neumann = self.solver.solve_neumann(self.problem, K=0.0, tol=1e-12, max_iter=20)
        scale = max(self.adjoint.p.max_abs(), 1.0)
        self.assertLess(neumann.p.max_abs_difference(self.adjoint.p), 1e-9 * scale)
        for chi_n, chi_adjoint in zip(neumann.chi, self.adjoint.chi):
            self.assertLess(chi_n.max_abs_difference(chi_adjoint, 0, self.tree.M - 1), 1e-9 * scale)
        diagnostics = neumann.diagnostics
        self.assertEqual(diagnostics["route"], "neumann")
        self.assertLessEqual(diagnostics["iterations"], self.tree.M + 1)
        self.assertLess(diagnostics["residual"], 1e-12)
        self.assertLessEqual(diagnostics["observed_rate"], 1.1 * diagnostics["P_star_estimate"])

    def test_neumann_with_damping(self):
        neumann = self.solver.solve_neumann(self.problem, K=5.0, tol=1e-12, max_iter=20)
        scale = max(self.adjoint.p.max_abs(), 1.0)
        self.assertLess(neumann.p.max_abs_difference(self.adjoint.p), 1e-9 * scale)
        self.assertEqual(neumann.diagnostics["K"], 5.0)

    def test_neumann_reports_non_convergence(self):
        with self.assertRaises(ConvergenceError) as context:
            self.solver.solve_neumann(self.problem, K=0.0, tol=1e-14, max_iter=1)
        self.assertGreater(context.exception.residual, 0.0)
        self.assertEqual(context.exception.iterations, 1)

    def test_neumann_needs_full_window(self):
        window = BackwardProblem(self.coeffs, self.grid, self.tree, Psi=self.problem.Psi, start_level=1)
        with self.assertRaises(GuardError):
            self.solver.solve_neumann(window, K=0.0)

    def test_semigroup_window(self):
        tau, s = 1, 2
        window = BackwardProblem(
            self.coeffs, self.grid, self.tree, xi=self.problem.xi, Psi=self.adjoint.p[s],
            start_level=tau, end_level=s,
        )
        local = self.solver.solve_adjoint(window)
        scale = max(self.adjoint.p.max_abs(), 1.0)
        self.assertLess(local.p.max_abs_difference(self.adjoint.p, tau, s), 1e-12 * scale)
        for i in range(2):
            self.assertLess(local.chi[i].max_abs_difference(self.adjoint.chi[i], tau, s - 1), 1e-12 * scale)

    def test_zero_data(self):
        solution = self.solver.solve_adjoint(BackwardProblem(self.coeffs, self.grid, self.tree))
        self.assertEqual(solution.p.max_abs(), 0.0)
        self.assertEqual(max(chi.max_abs() for chi in solution.chi), 0.0)


class TestDeterministicBackward(unittest.TestCase):
    """Tests with deterministic coefficients and data"""

    def setUp(self):
        self.grid = build_grid(0.0, 1.0, 10)
        self.tree = build_tree(1, 4, 0.5)
        self.coeffs = get_preset("heat", 1)
        self.Psi = TerminalVariable(self.tree, self.grid, np.sin(np.pi * self.grid.nodes))

    def test_no_noise_dependence(self):
        solution = BackwardSolver(self.coeffs, self.grid, self.tree).solve_adjoint(
            BackwardProblem(self.coeffs, self.grid, self.tree, Psi=self.Psi)
        )
        self.assertEqual(solution.chi[0].max_abs(), 0.0)

    def test_noise_free_neumann_stops_after_one_iteration(self):
        problem = BackwardProblem(self.coeffs, self.grid, self.tree, Psi=self.Psi)
        solution = BackwardSolver(self.coeffs, self.grid, self.tree).solve_neumann(problem, K=0.0)
        self.assertEqual(solution.diagnostics["iterations"], 1)

    def test_heat_has_zero_contraction(self):
        self.assertEqual(estimate_P_star_norm(self.coeffs, self.grid, self.tree), 0.0)

    def test_k_shift_roundtrip_at_zero(self):
        problem = BackwardProblem(self.coeffs, self.grid, self.tree, Psi=self.Psi)
        self.assertLess(k_shift_roundtrip(problem, 0.0), 1e-14)

    def test_k_shift_deviation_halves_with_step(self):
        """
        The shift changes the implicit step at second order in dt, so the deviation
        is first order in dt K. When dt K is not small (K = 10 with M = 6, say)
        the ratio between M and 2M stays well below 2.
        """
        grid = build_grid(0.0, 4.0, 15)
        coeffs = get_preset("heat", 1)
        deviations = []
        for M in (8, 16):
            tree = build_tree(1, M, 1.0)
            Psi = TerminalVariable(tree, grid, np.sin(np.pi * grid.nodes / 4.0))
            deviations.append(k_shift_roundtrip(BackwardProblem(coeffs, grid, tree, Psi=Psi), 1.0))
        self.assertGreater(deviations[1], 0.0)
        ratio = deviations[0] / deviations[1]
        self.assertGreaterEqual(ratio, 1.7)
        self.assertLessEqual(ratio, 2.1)

    def test_single_path_against_exact_solution(self):
        grid = build_grid(0.0, 1.0, 31)
        T = 0.1
        u = solve_backward_path(self.coeffs, grid, T, 400, np.sin(np.pi * grid.nodes))
        exact = np.sin(np.pi * grid.nodes) * np.exp(-np.pi ** 2 * T)
        self.assertLess(float(np.max(np.abs(u[0] - exact))), 5e-3)


class TestContraction(unittest.TestCase):
    """Tests for the power-iteration estimate of the contraction factor"""

    def test_damping_reduces_estimate(self):
        grid = build_grid(0.0, 1.0, 8)
        tree = build_tree(1, 4, 1.0)
        solver = BackwardSolver(get_preset("transport", 1), grid, tree)
        undamped, _ = solver.estimate_P_star_norm(0.0)
        damped, _ = solver.estimate_P_star_norm(20.0)
        self.assertGreater(undamped, 0.0)
        self.assertLess(damped, undamped)

    def test_estimate_decreases_with_damping(self):
        grid = build_grid(0.0, 1.0, 8)
        tree = build_tree(1, 4, 1.0)
        solver = BackwardSolver(get_preset("transport", 1), grid, tree)
        estimates = [solver.estimate_P_star_norm(K)[0] for K in (0.0, 5.0, 10.0, 20.0)]
        slack = 1e-10 * estimates[0]
        for previous, current in zip(estimates, estimates[1:]):
            self.assertLessEqual(current, previous + slack)


if __name__ == '__main__':
    unittest.main()
