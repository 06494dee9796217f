import unittest
import sys
import os
import numpy as np
from numpy.testing import assert_allclose

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from spde.errors import GuardError
from spde.grid_norms import build_grid
from spde.noise_tree import (
    AdaptedField, TerminalVariable, build_tree, conditional_expectation, ito_integral,
    martingale_representation, project_increment,
)


class TestNoiseTree(unittest.TestCase):
    """Tests for the tree structure and the Wiener paths on it"""

    def setUp(self):
        self.tree = build_tree(2, 3, 1.5)

    def test_guards(self):
        with self.assertRaises(GuardError):
            build_tree(4, 2, 1.0)
        with self.assertRaises(GuardError):
            build_tree(1, 0, 1.0)
        with self.assertRaises(GuardError):
            build_tree(3, 9, 1.0)
        with self.assertRaises(GuardError):
            build_tree(1, 4, 0.0)

    def test_level_sizes(self):
        self.assertEqual(self.tree.branching, 4)
        self.assertEqual([self.tree.level_size(k) for k in range(4)], [1, 4, 16, 64])
        self.assertEqual(self.tree.total_nodes, 85)
        with self.assertRaises(GuardError):
            self.tree.level_size(4)

    def test_increments(self):
        increments = self.tree.increments(1)
        assert_allclose(np.abs(increments), self.tree.sqrt_dt)
        # every sign pattern appears once among the children
        self.assertEqual(len({tuple(row) for row in np.sign(increments)}), 4)
        with self.assertRaises(GuardError):
            self.tree.increments(0)

    def test_wiener_moments(self):
        for k in range(self.tree.M + 1):
            w = self.tree.wiener(k)
            assert_allclose(w.mean(axis=0), 0.0, atol=1e-13)
            assert_allclose((w ** 2).mean(axis=0), k * self.tree.dt, rtol=1e-12)

    def test_wiener_is_martingale(self):
        for k in range(self.tree.M):
            assert_allclose(conditional_expectation(self.tree, self.tree.wiener(k + 1), k), self.tree.wiener(k), atol=1e-14)

    def test_conditional_expectation_shape_guard(self):
        with self.assertRaises(GuardError):
            conditional_expectation(self.tree, np.ones((5, 3)), 0)

    def test_scatter_operator(self):
        operator = self.tree.scatter_operator(1)
        self.assertEqual(operator.shape, (16, 4))
        noise = self.tree.scatter_operator(1, 0)
        assert_allclose(noise @ np.ones(4), self.tree.increments(2)[:, 0])

    def test_words_match_increments(self):
        words = self.tree.words(2)
        assert_allclose(self.tree.sqrt_dt * words.sum(axis=2), self.tree.wiener(2))


class TestTreeOperations(unittest.TestCase):
    """Tests for projections, Ito integrals and the martingale representation"""

    def setUp(self):
        self.grid = build_grid(0.0, 1.0, 5)
        self.rng = np.random.default_rng(42)

    def test_project_increment_decomposition(self):
        tree = build_tree(2, 2, 1.0)
        values = self.rng.standard_normal((16, self.grid.n_x))
        mean, gamma, residual = project_increment(tree, values, 1)
        dw = tree.increments(2)
        fitted = np.repeat(mean, 4, axis=0) + sum(np.repeat(gamma[i], 4, axis=0) * dw[:, i:i + 1] for i in range(2))
        assert_allclose(fitted + residual, values, atol=1e-13)
        children = residual.reshape(4, 4, -1)
        assert_allclose(children.mean(axis=1), 0.0, atol=1e-13)
        for i in range(2):
            assert_allclose((children * tree.signs[:, i][None, :, None]).mean(axis=1), 0.0, atol=1e-13)

    def test_single_noise_has_no_residual(self):
        tree = build_tree(1, 3, 1.0)
        values = self.rng.standard_normal((8, self.grid.n_x))
        _, _, residual = project_increment(tree, values, 2)
        assert_allclose(residual, 0.0, atol=1e-14)

    def test_ito_integral_of_one_is_wiener(self):
        tree = build_tree(2, 3, 1.0)
        ones = AdaptedField.from_function(tree, self.grid, lambda x, view: np.ones_like(x))
        for j in range(2):
            integral = ito_integral(ones, j, 3)
            assert_allclose(integral, np.repeat(tree.wiener(3)[:, j:j + 1], self.grid.n_x, axis=1), atol=1e-14)

    def test_ito_integral_guard(self):
        tree = build_tree(1, 2, 1.0)
        field = AdaptedField.zeros(tree, self.grid)
        with self.assertRaises(GuardError):
            ito_integral(field, 1, 2)

    def test_martingale_representation_reconstructs(self):
        tree = build_tree(2, 3, 1.0)
        X = TerminalVariable.random(tree, self.grid, self.rng)
        representation = martingale_representation(X)
        assert_allclose(representation.reconstruct(), X.values, atol=1e-12)
        assert_allclose(representation.mean, X.values.mean(axis=0), atol=1e-13)

    def test_martingale_representation_of_wiener(self):
        # w_1(T) = int 1 dw_1
        tree = build_tree(1, 4, 1.0)
        X = TerminalVariable(tree, self.grid, np.repeat(tree.wiener(4)[:, :1], self.grid.n_x, axis=1))
        representation = martingale_representation(X)
        assert_allclose(representation.mean, 0.0, atol=1e-15)
        for k in range(tree.M):
            assert_allclose(representation.gamma[0][k], 1.0, rtol=1e-12)

    def test_martingale_representation_needs_leaves(self):
        tree = build_tree(1, 3, 1.0)
        with self.assertRaises(GuardError):
            martingale_representation(TerminalVariable.zeros(tree, self.grid, level=2))


class TestAdaptedField(unittest.TestCase):
    """Tests for the field containers"""

    def setUp(self):
        self.grid = build_grid(0.0, 1.0, 4)
        self.tree = build_tree(1, 3, 1.0)
        self.rng = np.random.default_rng(0)

    def test_shape_guard(self):
        levels = [np.zeros((2 ** k, 4)) for k in range(4)]
        levels[2] = np.zeros((3, 4))
        with self.assertRaises(GuardError):
            AdaptedField(self.tree, self.grid, levels)

    def test_arithmetic(self):
        a = AdaptedField.random(self.tree, self.grid, self.rng)
        b = AdaptedField.random(self.tree, self.grid, self.rng)
        total = a + b * 2.0 - a
        self.assertLess(total.max_abs_difference(2.0 * b), 1e-14)
        self.assertEqual((-a).max_abs(), a.max_abs())

    def test_window(self):
        a = AdaptedField.random(self.tree, self.grid, self.rng)
        window = a.window(1, 2)
        self.assertEqual((window.start_level, window.end_level), (1, 2))
        with self.assertRaises(GuardError):
            window[0]
        with self.assertRaises(GuardError):
            a + window

    def test_inner_is_symmetric(self):
        a = AdaptedField.random(self.tree, self.grid, self.rng)
        b = AdaptedField.random(self.tree, self.grid, self.rng)
        self.assertAlmostEqual(a.inner(b), b.inner(a), places=14)
        self.assertGreater(a.inner(a), 0.0)

    def test_terminal_variable_broadcasts_vector(self):
        X = TerminalVariable(self.tree, self.grid, np.arange(4.0))
        self.assertEqual(X.values.shape, (8, 4))
        with self.assertRaises(GuardError):
            TerminalVariable(self.tree, self.grid, np.zeros((3, 4)))

    def test_from_function_sees_path(self):
        field = AdaptedField.from_function(self.tree, self.grid, lambda x, view: view.w[:, :1] + 0.0 * x)
        assert_allclose(field[2][:, 0], self.tree.wiener(2)[:, 0])


if __name__ == '__main__':
    unittest.main()
