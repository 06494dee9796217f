import unittest
import sys
import os
import numpy as np
from numpy.testing import assert_allclose

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from spde.coefficients import constant_set, get_preset, scalar_set
from spde.errors import GuardError, SingularStepError
from spde.grid_norms import build_grid, weighted_h1_squared
from spde.noise_tree import build_tree
from spde.operators import (
    OperatorStack, assemble_A, assemble_A_star, assemble_A_star_direct, assemble_B, stiffness,
)
from spde.tridiagonal import TridiagonalStack


class TestTridiagonal(unittest.TestCase):
    """Tests for the batched tridiagonal stack"""

    def setUp(self):
        rng = np.random.default_rng(1)
        self.stack = TridiagonalStack(rng.standard_normal((3, 6)), 4.0 + rng.random((3, 6)), rng.standard_normal((3, 6)))
        self.rhs = rng.standard_normal((3, 6))

    def test_matvec_matches_dense(self):
        result = self.stack.matvec(self.rhs)
        for node in range(3):
            assert_allclose(result[node], self.stack.to_dense(node) @ self.rhs[node], rtol=1e-13)

    def test_transpose_is_exact(self):
        for node in range(3):
            assert_allclose(self.stack.T.to_dense(node), self.stack.to_dense(node).T, rtol=0, atol=0)

    def test_solve_inverts(self):
        solution = self.stack.factorize().solve(self.rhs)
        assert_allclose(self.stack.matvec(solution), self.rhs, atol=1e-12)

    def test_singular_step(self):
        zeros = np.zeros((1, 3))
        with self.assertRaises(SingularStepError) as context:
            TridiagonalStack(zeros, zeros, zeros).factorize(level=4)
        self.assertEqual(context.exception.level, 4)
        self.assertEqual(context.exception.node, 0)


class TestOperators(unittest.TestCase):
    """Tests for the finite-difference drift and noise operators"""

    def setUp(self):
        self.grid = build_grid(0.0, 1.0, 15)
        self.tree = build_tree(1, 2, 1.0)
        self.view = self.tree.view(0)

    def test_heat_is_laplacian(self):
        A = assemble_A(get_preset("heat", 1), self.grid, self.view)
        h2 = self.grid.h ** 2
        assert_allclose(A.diag, -2.0 / h2)
        assert_allclose(A.upper[:, :-1], 1.0 / h2)
        assert_allclose(A.lower[:, 1:], 1.0 / h2)

    def test_stiffness_summation_by_parts(self):
        b_edges = (1.0 + 0.5 * np.sin(self.grid.edges))[None, :]
        v = np.cos(3.0 * self.grid.nodes)[None, :]
        energy = self.grid.h * float(np.sum(v * stiffness(self.grid, b_edges).matvec(v)))
        assert_allclose(energy, -float(weighted_h1_squared(self.grid, v[0], b_edges[0])), rtol=1e-12)

    def test_second_order_consistency(self):
        coeffs = get_preset("heat", 1)
        errors = []
        for n_x in (15, 31):
            grid = build_grid(0.0, 1.0, n_x)
            v = np.sin(np.pi * grid.nodes)[None, :]
            Av = assemble_A(coeffs, grid, self.view).matvec(v)
            errors.append(float(np.max(np.abs(Av + np.pi ** 2 * v))))
        self.assertTrue(3.5 < errors[0] / errors[1] < 4.5)

    def test_second_order_consistency_variable_b(self):
        # A_h v approximates (b v)'' for f = lam = 0
        coeffs = scalar_set("variable", 1, b=lambda x, view: 2.0 + x ** 2, db_dx=lambda x, view: 2.0 * x)
        errors = []
        for n_x in (15, 31):
            grid = build_grid(0.0, 1.0, n_x)
            x = grid.nodes
            v = np.sin(np.pi * x)
            exact = 2.0 * v + 4.0 * np.pi * x * np.cos(np.pi * x) - (2.0 + x ** 2) * np.pi ** 2 * v
            Av = assemble_A(coeffs, grid, self.view).matvec(v[None, :])
            errors.append(float(np.max(np.abs(Av - exact))))
        self.assertTrue(3.5 < errors[0] / errors[1] < 4.5, errors)

    def test_adjoint_is_transpose(self):
        coeffs = get_preset("driftful", 1)
        tree = build_tree(1, 2, 1.0)
        A = assemble_A(coeffs, self.grid, tree.view(2))
        A_star = assemble_A_star(coeffs, self.grid, tree.view(2))
        for node in range(A.size):
            assert_allclose(A_star.to_dense(node), A.to_dense(node).T, rtol=0, atol=0)

    def test_direct_adjoint_agrees_for_constant_coefficients(self):
        coeffs = get_preset("heat", 1)
        direct = assemble_A_star_direct(coeffs, self.grid, self.view)
        transposed = assemble_A_star(coeffs, self.grid, self.view)
        assert_allclose(direct.to_dense(), transposed.to_dense(), rtol=1e-13)

    def test_constant_beta_gives_skew_noise_operator(self):
        coeffs = constant_set("constant", b=[[1.0]], beta=[[0.7]])
        B = assemble_B(coeffs, self.grid, self.view, 0).to_dense()
        assert_allclose(B + B.T, 0.0, atol=1e-12)

    def test_noise_operator_guards(self):
        with self.assertRaises(GuardError):
            assemble_B(get_preset("transport", 1), self.grid, self.view, 1)
        with self.assertRaises(GuardError):
            assemble_A(get_preset("example1", 2), self.grid, self.view)

    def test_operator_stack(self):
        coeffs = get_preset("transport", 1)
        stack = OperatorStack(coeffs, self.grid, self.tree)
        self.assertIs(stack.A(1), stack.A(1))
        self.assertEqual(stack.B(2, 0).size, 4)
        quiet = stack.without_noise()
        self.assertFalse(quiet.include_noise)
        number, lam_number = stack.stability_number()
        self.assertGreater(number, 0.0)
        self.assertEqual(lam_number, 0.0)
        with self.assertRaises(GuardError):
            OperatorStack(get_preset("transport", 2), self.grid, self.tree)


if __name__ == '__main__':
    unittest.main()
