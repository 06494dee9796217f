import unittest
import sys
import os
import numpy as np
from numpy.testing import assert_allclose

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from spde.coefficients import get_preset
from spde.errors import GuardError
from spde.forward_solver import (
    ForwardProblem, ForwardSolver, apply_Q_family, evaluate_at, solve_forward, solve_forward_path,
)
from spde.grid_norms import build_grid
from spde.noise_tree import AdaptedField, build_tree


class TestForwardSolver(unittest.TestCase):
    """Tests for the forward scheme and its solution operators"""

    def setUp(self):
        self.grid = build_grid(0.0, 1.0, 8)
        self.tree = build_tree(2, 3, 1.0)
        self.coeffs = get_preset("transport", 2)
        self.solver = ForwardSolver(self.coeffs, self.grid, self.tree)
        self.rng = np.random.default_rng(11)
        self.phi = AdaptedField.random(self.tree, self.grid, self.rng)
        self.h = [AdaptedField.random(self.tree, self.grid, self.rng) for _ in range(2)]
        self.Phi = self.rng.standard_normal(self.grid.n_x)

    def _problem(self, **parts):
        return ForwardProblem(self.coeffs, self.grid, self.tree, **parts)

    def test_superposition(self):
        u = self.solver.solve(self._problem(phi=self.phi, h=self.h, Phi=self.Phi))
        parts = self.solver.apply_L(self.phi) + self.solver.apply_Lambda(self.Phi)
        for i in range(2):
            parts = parts + self.solver.apply_M(i, self.h[i])
        self.assertLess(u.max_abs_difference(parts), 1e-12 * max(u.max_abs(), 1.0))

    def test_L_is_Q0_plus_PL(self):
        L_phi = self.solver.apply_L(self.phi)
        rebuilt = self.solver.q_family().apply_L(self.phi) + self.solver.apply_P(L_phi)
        self.assertLess(L_phi.max_abs_difference(rebuilt), 1e-11 * max(L_phi.max_abs(), 1.0))

    def test_M_is_Q_plus_PM(self):
        for i in range(2):
            M_h = self.solver.apply_M(i, self.h[i])
            rebuilt = self.solver.q_family().apply_M(i, self.h[i]) + self.solver.apply_P(M_h)
            self.assertLess(M_h.max_abs_difference(rebuilt), 1e-11 * max(M_h.max_abs(), 1.0))

    def test_Q_family_helper(self):
        direct = apply_Q_family(self.coeffs, self.grid, self.tree, phi=self.phi)
        assert_allclose(direct[3], self.solver.q_family().apply_L(self.phi)[3], rtol=1e-14)

    def test_zero_data(self):
        u = solve_forward(self._problem())
        self.assertEqual(u.max_abs(), 0.0)

    def test_initial_slice(self):
        u = self.solver.apply_Lambda(self.Phi)
        assert_allclose(evaluate_at(u, 0)[0], self.Phi)

    def test_window_start(self):
        start = self.rng.standard_normal((16, self.grid.n_x))
        u = self.solver.apply_Lambda(start, start_level=2)
        self.assertEqual((u.start_level, u.end_level), (2, 3))
        assert_allclose(u[2], start)

    def test_shape_guards(self):
        with self.assertRaises(GuardError):
            self.solver.solve(self._problem(h=self.h[:1]))
        with self.assertRaises(GuardError):
            self.solver.solve(self._problem(Phi=np.zeros(3)))

    def test_mean_solves_noise_free_scheme(self):
        # deterministic phi and Phi: noise enters every step with mean zero over the children
        phi = AdaptedField.from_function(self.tree, self.grid, lambda x, view: np.cos(3.0 * x))
        u = self.solver.solve(self._problem(phi=phi, h=self.h, Phi=self.Phi))
        mean_field = self.solver.q_family().solve(self._problem(phi=phi, Phi=self.Phi))
        scale = max(u.max_abs(), 1.0)
        for k in range(self.tree.M + 1):
            assert_allclose(u[k].mean(axis=0), mean_field[k][0], rtol=0, atol=1e-12 * scale)
            assert_allclose(mean_field[k], np.tile(mean_field[k][0], (self.tree.branching ** k, 1)), rtol=1e-14)

    def test_damping_scales_each_step(self):
        coeffs = get_preset("heat", 1)
        tree = build_tree(1, 4, 1.0)
        plain = ForwardSolver(coeffs, self.grid, tree).apply_Lambda(self.Phi)
        damped = ForwardSolver(coeffs, self.grid, tree, damping=3.0).apply_Lambda(self.Phi)
        theta = 1.0 / (1.0 + tree.dt * 3.0)
        for k in range(tree.M + 1):
            assert_allclose(damped[k], theta ** k * plain[k], rtol=1e-13)


class TestHeatEquation(unittest.TestCase):
    """Tests against the heat equation, where every path gives the same solution"""

    def setUp(self):
        self.coeffs = get_preset("heat", 1)

    def test_tree_matches_single_path(self):
        grid = build_grid(0.0, 1.0, 12)
        tree = build_tree(1, 4, 0.2)
        Phi = np.sin(np.pi * grid.nodes)
        u = ForwardSolver(self.coeffs, grid, tree).apply_Lambda(Phi)
        path = solve_forward_path(self.coeffs, grid, tree.T, tree.M, Phi)
        for k in range(tree.M + 1):
            assert_allclose(u[k], np.tile(path[k], (tree.level_size(k), 1)), rtol=1e-12, atol=1e-15)

    def test_single_path_against_exact_solution(self):
        grid = build_grid(0.0, 1.0, 31)
        T = 0.1
        u = solve_forward_path(self.coeffs, grid, T, 200, np.sin(np.pi * grid.nodes))
        exact = np.sin(np.pi * grid.nodes) * np.exp(-np.pi ** 2 * T)
        self.assertLess(float(np.max(np.abs(u[-1] - exact))), 5e-3)


if __name__ == '__main__':
    unittest.main()
