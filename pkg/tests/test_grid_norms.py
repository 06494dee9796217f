import unittest
import sys
import os
import numpy as np
from numpy.testing import assert_allclose

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from spde.errors import GuardError
from spde.grid_norms import (
    NormKind, build_grid, discrete_norm, edge_weights, h0_squared, h1_seminorm_squared,
    hminus1_squared, inner, spacetime_norm, squared_norm, terminal_norm, weighted_h1_squared,
)
from spde.noise_tree import AdaptedField, build_tree


class TestGrid(unittest.TestCase):
    """Tests for grid construction"""

    def test_nodes_and_spacing(self):
        grid = build_grid(0.0, 1.0, 3)
        self.assertAlmostEqual(grid.h, 0.25)
        assert_allclose(grid.nodes, [0.25, 0.5, 0.75])
        self.assertEqual(len(grid.edges), 4)
        self.assertEqual(len(grid.nodes_with_boundary), 5)

    def test_guards(self):
        with self.assertRaises(GuardError):
            build_grid(0.0, 1.0, 1)
        with self.assertRaises(GuardError):
            build_grid(1.0, 1.0, 8)
        with self.assertRaises(GuardError):
            build_grid(0.0, np.inf, 8)

    def test_check_vector_rejects_wrong_length(self):
        grid = build_grid(0.0, 1.0, 4)
        with self.assertRaises(GuardError):
            h0_squared(grid, np.ones(5))


class TestDiscreteNorms(unittest.TestCase):
    """Tests for the H^k norms of grid vectors"""

    def setUp(self):
        self.grid = build_grid(0.0, 1.0, 63)
        self.v = np.sin(np.pi * self.grid.nodes)

    def test_h0_of_constant(self):
        grid = build_grid(0.0, 1.0, 3)
        self.assertAlmostEqual(float(h0_squared(grid, np.ones(3))), 0.75)

    def test_h1_seminorm_approximates_integral(self):
        # int_0^1 (pi cos pi x)^2 dx = pi^2 / 2
        assert_allclose(h1_seminorm_squared(self.grid, self.v), np.pi ** 2 / 2, rtol=1e-3)

    def test_hminus1_on_eigenvector(self):
        h = self.grid.h
        eigenvalue = 4.0 / h ** 2 * np.sin(np.pi * h / 2) ** 2
        assert_allclose(hminus1_squared(self.grid, self.v), h0_squared(self.grid, self.v) / eigenvalue, rtol=1e-12)

    def test_hminus1_row_stack(self):
        rows = np.stack([self.v, 2.0 * self.v])
        values = hminus1_squared(self.grid, rows)
        self.assertEqual(values.shape, (2,))
        assert_allclose(values[1], 4.0 * values[0], rtol=1e-12)

    def test_norm_orders_are_nested(self):
        norms = [discrete_norm(self.grid, self.v, NormKind.from_order(k)) for k in (-1, 0, 1, 2)]
        self.assertEqual(norms, sorted(norms))

    def test_invalid_order(self):
        with self.assertRaises(GuardError):
            squared_norm(self.grid, self.v, 3)
        with self.assertRaises(GuardError):
            NormKind.from_order(-2)
        with self.assertRaises(GuardError):
            discrete_norm(self.grid, self.v, NormKind.WEIGHTED_H1)

    def test_weighted_h1_scales_with_b(self):
        plain = h1_seminorm_squared(self.grid, self.v)
        assert_allclose(weighted_h1_squared(self.grid, self.v, 1.0), plain, rtol=1e-14)
        assert_allclose(weighted_h1_squared(self.grid, self.v, 2.0), 2.0 * plain, rtol=1e-14)

    def test_edge_weights_from_nodes(self):
        b = edge_weights(self.grid, np.full(self.grid.n_x, 3.0))
        self.assertEqual(b.shape, (self.grid.n_x + 1,))
        assert_allclose(b, 3.0)

    def test_edge_weights_need_positive_b(self):
        with self.assertRaises(GuardError):
            edge_weights(self.grid, 0.0)
        with self.assertRaises(GuardError):
            edge_weights(self.grid, np.ones(5))

    def test_inner_matches_h0(self):
        assert_allclose(inner(self.grid, self.v, self.v), h0_squared(self.grid, self.v), rtol=1e-14)


class TestSpacetimeNorms(unittest.TestCase):
    """Tests for the X, C and Y norms of adapted fields"""

    def setUp(self):
        self.grid = build_grid(0.0, 1.0, 7)
        self.tree = build_tree(1, 4, 2.0)
        self.ones = AdaptedField.from_function(self.tree, self.grid, lambda x, view: np.ones_like(x))
        self.level_h0 = self.grid.n_x * self.grid.h

    def test_x_norm_of_constant_field(self):
        # levels 0..M-1, each weighted by dt
        expected = np.sqrt(self.tree.T * self.level_h0)
        self.assertAlmostEqual(spacetime_norm(self.ones, "X", 0), expected, places=12)

    def test_c_norm_of_constant_field(self):
        self.assertAlmostEqual(spacetime_norm(self.ones, "C", 0), np.sqrt(self.level_h0), places=12)

    def test_y_norm_is_sum(self):
        expected = spacetime_norm(self.ones, "X", 1) + spacetime_norm(self.ones, "C", 0)
        self.assertAlmostEqual(spacetime_norm(self.ones, "Y", 1), expected, places=12)

    def test_empty_window(self):
        self.assertEqual(spacetime_norm(self.ones, "X", 0, start=2, end=2), 0.0)

    def test_unknown_kind(self):
        with self.assertRaises(GuardError):
            spacetime_norm(self.ones, "Z", 0)
        with self.assertRaises(GuardError):
            spacetime_norm(self.ones, "Y", -1)

    def test_terminal_norm(self):
        values = self.ones[self.tree.M]
        self.assertAlmostEqual(terminal_norm(self.grid, values, 0), np.sqrt(self.level_h0), places=12)


if __name__ == '__main__':
    unittest.main()
