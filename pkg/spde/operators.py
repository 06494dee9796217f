"""
Finite-difference assembly of the drift operator A, its adjoint A*, the noise
operators B_i and their adjoints on a Dirichlet grid.

    A_h   = S_h(b) + T_h(b' - f) + diag(lam)
    B_i,h = -T_h(beta_i) + diag(beta_bar_i)

S_h(b) is the conservative stiffness stencil with b at edge midpoints and
T_h(g) the centred flux divergence of g v with g at edge midpoints and v
averaged across each edge. Adjoints are literal transposes.
"""

import logging
import numpy as np

from .errors import GuardError
from .tridiagonal import TridiagonalStack

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def stiffness(grid, b_edges):
    """S_h(b): rows [b_{j-1/2}, -(b_{j-1/2} + b_{j+1/2}), b_{j+1/2}] / h^2"""
    h2 = grid.h ** 2
    left = b_edges[:, :-1]
    right = b_edges[:, 1:]
    return TridiagonalStack(left / h2, -(left + right) / h2, right / h2)


def flux_divergence(grid, g_edges):
    """T_h(g): (T v)_j = [g_{j+1/2}(v_j + v_{j+1}) - g_{j-1/2}(v_{j-1} + v_j)] / (2h)"""
    two_h = 2.0 * grid.h
    left = g_edges[:, :-1]
    right = g_edges[:, 1:]
    return TridiagonalStack(-left / two_h, (right - left) / two_h, right / two_h)


def assemble_A(coeffs, grid, view, shift=0.0):
    """
    Assemble A_h (optionally A_h - shift I) for every node of one level.

    Args:
        coeffs (CoefficientSet): Coefficients with n = 1
        grid (Grid): Grid
        view (LevelView): Level whose coefficient samples are used
        shift (float): Constant subtracted from lam

    Returns:
        TridiagonalStack: One matrix per node of the level
    """
    coeffs.require_scalar_space()
    edges = grid.edges
    b_edges = coeffs.evaluate("b", edges, view)[..., 0, 0]
    slope = coeffs.derivative("b", edges, view, 0.5 * grid.h)[..., 0, 0]
    f_edges = coeffs.evaluate("f", edges, view)[..., 0]
    lam = coeffs.evaluate("lam", grid.nodes, view)
    operator = stiffness(grid, b_edges) + flux_divergence(grid, slope - f_edges)
    operator.diag += lam - shift
    return operator


def assemble_A_star(coeffs, grid, view, shift=0.0):
    """(A*)_h as the exact transpose of A_h"""
    return assemble_A(coeffs, grid, view, shift).transpose()


def assemble_A_star_direct(coeffs, grid, view):
    """Direct non-divergence stencil b_j D2 v + f_j D0 v + lam_j v (cross-check only)"""
    coeffs.require_scalar_space()
    x = grid.nodes
    b = coeffs.evaluate("b", x, view)[..., 0, 0]
    f = coeffs.evaluate("f", x, view)[..., 0]
    lam = coeffs.evaluate("lam", x, view)
    h = grid.h
    return TridiagonalStack(b / h ** 2 - f / (2 * h), -2.0 * b / h ** 2 + lam, b / h ** 2 + f / (2 * h))


def assemble_B(coeffs, grid, view, i):
    """B_i,h = -T_h(beta_i) + diag(beta_bar_i) for every node of one level"""
    coeffs.require_scalar_space()
    if not 0 <= i < coeffs.N:
        raise GuardError(f"Noise component {i} out of range for N = {coeffs.N}")
    beta_edges = coeffs.evaluate("beta", grid.edges, view)[..., i, 0]
    beta_bar = coeffs.evaluate("beta_bar", grid.nodes, view)[..., i]
    operator = flux_divergence(grid, beta_edges).scaled(-1.0)
    operator.diag += beta_bar
    return operator


def assemble_B_star(coeffs, grid, view, i):
    return assemble_B(coeffs, grid, view, i).transpose()


class OperatorStack:
    """
    A_h and B_i,h for every level of a tree, assembled once and cached together
    with the factorized implicit-step matrices I - dt (A_h - shift).
    """

    def __init__(self, coeffs, grid, tree, shift=0.0, include_noise=True):
        coeffs.require_scalar_space()
        if coeffs.N != tree.N:
            raise GuardError(f"Coefficients have N = {coeffs.N}, tree has N = {tree.N}")
        self.coeffs = coeffs
        self.grid = grid
        self.tree = tree
        self.shift = float(shift)
        self.include_noise = include_noise
        self._A = {}
        self._B = {}
        self._step = {}
        self._step_transposed = {}

    def without_noise(self):
        """The same drift operators with every B_i = 0 (the Q-family)"""
        clone = OperatorStack(self.coeffs, self.grid, self.tree, self.shift, include_noise=False)
        clone._A = self._A
        clone._step = self._step
        clone._step_transposed = self._step_transposed
        return clone

    def A(self, k):
        if k not in self._A:
            self._A[k] = assemble_A(self.coeffs, self.grid, self.tree.view(k), self.shift)
        return self._A[k]

    def B(self, k, i):
        key = (k, i)
        if key not in self._B:
            self._B[key] = assemble_B(self.coeffs, self.grid, self.tree.view(k), i)
        return self._B[key]

    def apply_B(self, k, i, values):
        return self.B(k, i).matvec(values)

    def apply_B_transpose(self, k, i, values):
        return self.B(k, i).transpose().matvec(values)

    def step_factors(self, k):
        """Factors of I - dt A_h at level k"""
        if k not in self._step:
            self._step[k] = self.A(k).implicit_step(self.tree.dt).factorize(level=k)
        return self._step[k]

    def step_factors_transposed(self, k):
        """Factors of (I - dt A_h)^T at level k"""
        if k not in self._step_transposed:
            matrix = self.A(k).implicit_step(self.tree.dt).transpose()
            self._step_transposed[k] = matrix.factorize(level=k)
        return self._step_transposed[k]

    def stability_number(self):
        """dt * (max|lam| + max|beta_bar| + max ||B_h||_inf) over all levels"""
        tree, grid = self.tree, self.grid
        lam = 0.0
        beta_bar = 0.0
        b_norm = 0.0
        for k in range(tree.M + 1):
            view = tree.view(k)
            lam = max(lam, float(np.max(np.abs(self.coeffs.evaluate("lam", grid.nodes, view)))))
            beta_bar = max(beta_bar, float(np.max(np.abs(self.coeffs.evaluate("beta_bar", grid.nodes, view)), initial=0.0)))
            if self.include_noise:
                for i in range(tree.N):
                    b_norm = max(b_norm, self.B(k, i).max_row_sum())
        return tree.dt * (lam + beta_bar + b_norm), tree.dt * lam
