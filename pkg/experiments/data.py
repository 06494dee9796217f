"""
Shared inputs for the experiments: grids, trees and coefficients built from
a RunConfig, smooth and random data fields, and route dispatch for the
backward solvers.
"""

import logging
import numpy as np

from spde.backward_solver import BackwardProblem
from spde.errors import GuardError
from spde.forward_solver import ForwardProblem
from spde.noise_tree import AdaptedField, TerminalVariable

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def build_setting(config, N=None, M=None, n_x=None, preset=None):
    """
    Grid, tree and coefficients for one run, with optional overrides.

    Returns:
        tuple: (grid, tree, coeffs)
    """
    grid = config.build_grid(n_x)
    tree = config.build_tree(N=N, M=M)
    coeffs = config.build_coefficients(N=tree.N, preset=preset)
    return grid, tree, coeffs


def parse_pairs(text, separator):
    """'3x8, 6x16' -> [(3, 8), (6, 16)] for separator 'x'"""
    pairs = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(separator)
        if len(parts) != 2:
            raise GuardError(f"Expected entries like a{separator}b, got {item!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    return pairs


# -- smooth data ----------------------------------------------------------

def smooth_phi(x, view):
    return np.sin(np.pi * x) * (1.0 + view.t) * np.cos(view.w[:, :1])


def smooth_h(i):
    def fn(x, view):
        return x * (1.0 - x) * (1.0 + 0.5 * np.sin(view.w[:, i:i + 1]))
    return fn


def smooth_Phi(x):
    return np.sin(np.pi * x)


def smooth_xi(x, view):
    return np.sin(2.0 * np.pi * x) * (1.0 + 0.5 * np.tanh(view.w[:, :1]))


def smooth_Psi(x, view):
    return np.sin(np.pi * x) * (1.0 + 0.5 * np.sin(view.w[:, :1]))


def delta_xi(x, view):
    return x * (1.0 - x) + 0.0 * view.w[:, :1]


def delta_Psi(x, view):
    return np.sin(2.0 * np.pi * x) + 0.0 * view.w[:, :1]


def smooth_forward_problem(coeffs, grid, tree):
    """Forward problem with smooth path-dependent phi, h_i and the initial value sin(pi x)"""
    phi = AdaptedField.from_function(tree, grid, smooth_phi)
    h = [AdaptedField.from_function(tree, grid, smooth_h(i)) for i in range(tree.N)]
    return ForwardProblem(coeffs, grid, tree, phi=phi, h=h, Phi=smooth_Phi(grid.nodes))


def smooth_backward_problem(coeffs, grid, tree, xi_scale=1.0, Psi_scale=1.0):
    xi = AdaptedField.from_function(tree, grid, smooth_xi) * xi_scale
    Psi = TerminalVariable.from_function(tree, grid, smooth_Psi) * Psi_scale
    return BackwardProblem(coeffs, grid, tree, xi=xi, Psi=Psi)


# -- random data ----------------------------------------------------------

def random_forward_problem(coeffs, grid, tree, rng):
    """Standard normal phi, h_i and Phi"""
    phi = AdaptedField.random(tree, grid, rng)
    h = [AdaptedField.random(tree, grid, rng) for _ in range(tree.N)]
    Phi = rng.standard_normal(grid.n_x)
    return ForwardProblem(coeffs, grid, tree, phi=phi, h=h, Phi=Phi)


def random_backward_problem(coeffs, grid, tree, rng):
    xi = AdaptedField.random(tree, grid, rng)
    Psi = TerminalVariable.random(tree, grid, rng)
    return BackwardProblem(coeffs, grid, tree, xi=xi, Psi=Psi)


def zero_forward_problem(coeffs, grid, tree):
    return ForwardProblem(
        coeffs, grid, tree,
        phi=AdaptedField.zeros(tree, grid),
        h=[AdaptedField.zeros(tree, grid) for _ in range(tree.N)],
        Phi=np.zeros(grid.n_x),
    )


def zero_backward_problem(coeffs, grid, tree):
    return BackwardProblem(
        coeffs, grid, tree,
        xi=AdaptedField.zeros(tree, grid),
        Psi=TerminalVariable.zeros(tree, grid),
    )


# -- routes ---------------------------------------------------------------

def solve_backward(solver, problem, route, K=None, tol=1e-8, max_iter=50):
    """
    Solve a backward problem on the configured route.

    Args:
        solver (BackwardSolver): Solver bound to the problem's coefficients
        problem (BackwardProblem): Data
        route (str): 'adjoint', 'dp' or 'neumann'
        K (float): Damping for the Neumann route, None for the default policy
        tol (float): Neumann tolerance
        max_iter (int): Neumann iteration cap

    Returns:
        BackwardSolution: The solution
    """
    if route == "adjoint":
        return solver.solve_adjoint(problem)
    if route == "dp":
        return solver.solve_dp(problem)
    if route == "neumann":
        return solver.solve_neumann(problem, K=K, tol=tol, max_iter=max_iter)
    raise GuardError(f"Unknown backward route {route!r}")


def pairing_terminal(grid, values, other):
    """Z0 pairing of two level slices given as arrays"""
    return float(np.mean(grid.h * np.sum(np.atleast_2d(values) * np.atleast_2d(other), axis=1)))


def report_parameters(config, coeffs=None, grid=None, tree=None, **extra):
    """Run parameters plus the coefficient parameter set (sup norms and margins) when it applies"""
    params = config.to_parameters()
    if coeffs is not None and grid is not None and tree is not None and coeffs.n == 1:
        for key, value in coeffs.parameter_set(grid, tree).items():
            params[f"coefficients.{key}"] = value
    params.update(extra)
    return params
