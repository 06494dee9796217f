"""
Forward equation du = (A u + phi) dt + sum_i (B_i u + h_i) dw_i on the noise tree.

Drift-implicit, noise-explicit Euler on every tree edge (v at level k, child c):

    (I - dt A_h(k+1, c)) u_{k+1}(c) = u_k(v) + dt phi_k(v) + sum_i (B_i,h(k, v) u_k(v) + h_i,k(v)) dw_i(c)

The solution operators L (drift term), M_i (noise terms), Lambda (initial
condition), their B = 0 counterparts Q_0, Q_i, K and the composite
P = sum_i Q_i B_i are all this one scheme with some inputs zeroed.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional
import numpy as np
from scipy.linalg import solve_banded

from .coefficients import check_coercivity
from .errors import GuardError
from .noise_tree import AdaptedField, PathView, TerminalVariable
from .operators import OperatorStack, assemble_A

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

STABILITY_WARNING_THRESHOLD = 0.5


@dataclass
class ForwardProblem:
    """Data of the forward equation; None means zero"""
    coeffs: object
    grid: object
    tree: object
    phi: Optional[AdaptedField] = None
    h: Optional[list] = None
    Phi: Optional[np.ndarray] = None
    start_level: int = 0
    label: str = field(default="forward")


class ForwardSolver:
    """Tree solver for the forward equation and its solution operators"""

    def __init__(self, coeffs, grid, tree, operators=None, damping=0.0, include_noise=True):
        """
        Args:
            coeffs (CoefficientSet): Coefficients (n = 1)
            grid (Grid): Grid
            tree (NoiseTree): Tree
            operators (OperatorStack): Shared operator cache, built when None
            damping (float): K >= 0; every step is multiplied by 1 / (1 + dt K)
            include_noise (bool): False gives the Q-family (all B_i = 0)
        """
        self.coeffs = coeffs
        self.grid = grid
        self.tree = tree
        operators = operators or OperatorStack(coeffs, grid, tree)
        self.operators = operators if include_noise else operators.without_noise()
        self.include_noise = include_noise
        self.damping = float(damping)
        self.theta = 1.0 / (1.0 + tree.dt * self.damping)
        self._validated = False

    def validate(self):
        """Soft guards on the step size and the coercivity margin, logged once"""
        if self._validated:
            return
        self._validated = True
        number, lam_number = self.operators.stability_number()
        if lam_number >= 1.0:
            logger.warning(f"dt * max|lam| = {lam_number:.3f} >= 1: implicit steps may be singular")
        if number > STABILITY_WARNING_THRESHOLD:
            logger.warning(
                f"dt * (max|lam| + max|beta_bar| + max||B_h||) = {number:.3f} exceeds "
                f"{STABILITY_WARNING_THRESHOLD}: explicit noise term may dominate"
            )
        margin = check_coercivity(self.coeffs, self.grid, self.tree)
        if margin <= 0:
            logger.warning(f"Coercivity margin {margin:.4g} is not positive for {self.coeffs.name}")

    def q_family(self):
        """Solver with the same drift operators and every B_i = 0"""
        return ForwardSolver(self.coeffs, self.grid, self.tree, self.operators, self.damping, include_noise=False)

    def _initial(self, Phi, start_level):
        n_s = self.tree.branching ** start_level
        if Phi is None:
            return np.zeros((n_s, self.grid.n_x))
        values = Phi.values if isinstance(Phi, TerminalVariable) else np.asarray(Phi, dtype=float)
        if values.shape == (self.grid.n_x,):
            values = np.tile(values, (n_s, 1))
        if values.shape != (n_s, self.grid.n_x):
            raise GuardError(f"Initial condition has shape {values.shape}, expected ({n_s}, {self.grid.n_x})")
        return values.copy()

    def step(self, k, u_k, phi_k=None, h_k=None):
        """Advance one level: values at level k to values at level k + 1"""
        tree, ops = self.tree, self.operators
        base = u_k if phi_k is None else u_k + tree.dt * phi_k
        rhs = tree.scatter_operator(k) @ base
        for i in range(tree.N):
            noise = None
            if self.include_noise:
                noise = ops.apply_B(k, i, u_k)
            if h_k is not None and h_k[i] is not None:
                noise = h_k[i] if noise is None else noise + h_k[i]
            if noise is not None:
                rhs = rhs + tree.scatter_operator(k, i) @ noise
        solution = ops.step_factors(k + 1).solve(rhs)
        return self.theta * solution if self.damping else solution

    def solve(self, problem, end_level=None):
        """
        Solve the forward equation on [start_level, end_level].

        Args:
            problem (ForwardProblem): Data; phi and h must cover levels start..end-1
            end_level (int): Last level (default M)

        Returns:
            AdaptedField: u on the window
        """
        tree = self.tree
        start = tree.check_level(problem.start_level)
        end = tree.check_level(tree.M if end_level is None else end_level, start)
        self.validate()
        if problem.h is not None and len(problem.h) != tree.N:
            raise GuardError(f"Expected {tree.N} noise terms h_i, got {len(problem.h)}")
        levels = [None] * (tree.M + 1)
        levels[start] = self._initial(problem.Phi, start)
        for k in range(start, end):
            phi_k = None if problem.phi is None else problem.phi[k]
            h_k = None if problem.h is None else [None if h is None else h[k] for h in problem.h]
            levels[k + 1] = self.step(k, levels[k], phi_k, h_k)
        return AdaptedField(tree, self.grid, levels, start, end)

    def _problem(self, **parts):
        return ForwardProblem(self.coeffs, self.grid, self.tree, **parts)

    def apply_L(self, phi):
        return self.solve(self._problem(phi=phi))

    def apply_M(self, i, h):
        terms = [None] * self.tree.N
        terms[i] = h
        return self.solve(self._problem(h=terms))

    def apply_Lambda(self, Phi, start_level=0):
        return self.solve(self._problem(Phi=Phi, start_level=start_level))

    def apply_P(self, u):
        """P u = sum_i Q_i (B_i u)"""
        tree = self.tree
        noise_terms = []
        for i in range(tree.N):
            levels = [None] * (tree.M + 1)
            for k in range(tree.M):
                levels[k] = self.operators.apply_B(k, i, u[k])
            levels[tree.M] = np.zeros_like(u[tree.M])
            noise_terms.append(AdaptedField(tree, self.grid, levels))
        return self.q_family().solve(self._problem(h=noise_terms))

    def apply_P0(self, u):
        """P_0 u = I_T P u"""
        return self.apply_P(u).terminal()


def solve_forward(problem):
    """Solve a forward problem with a freshly assembled operator stack"""
    return ForwardSolver(problem.coeffs, problem.grid, problem.tree).solve(problem)


def apply_L(coeffs, grid, tree, phi):
    return ForwardSolver(coeffs, grid, tree).apply_L(phi)


def apply_M(coeffs, grid, tree, i, h):
    return ForwardSolver(coeffs, grid, tree).apply_M(i, h)


def apply_Lambda(coeffs, grid, tree, Phi):
    return ForwardSolver(coeffs, grid, tree).apply_Lambda(Phi)


def apply_Q_family(coeffs, grid, tree, phi=None, h=None, Phi=None):
    """Q_0 phi + sum_i Q_i h_i + K Phi: the forward scheme with every B_i = 0"""
    solver = ForwardSolver(coeffs, grid, tree, include_noise=False)
    return solver.solve(ForwardProblem(coeffs, grid, tree, phi=phi, h=h, Phi=Phi))


def apply_P(coeffs, grid, tree, u):
    return ForwardSolver(coeffs, grid, tree).apply_P(u)


def apply_P0(coeffs, grid, tree, u):
    return ForwardSolver(coeffs, grid, tree).apply_P0(u)


def evaluate_at(u, k):
    """I_t u: the level-k slice of u"""
    return u[k].copy()


def solve_forward_path(coeffs, grid, T, M, Phi, phi=None):
    """
    Forward scheme along the single path w = 0 with banded LAPACK solves.

    Args:
        coeffs (CoefficientSet): Coefficients (noise terms are ignored)
        grid (Grid): Grid
        T (float): Horizon
        M (int): Number of steps
        Phi (array): Initial values, shape (n_x,)
        phi (callable): Optional drift term phi(x, t)

    Returns:
        array: u at every level, shape (M + 1, n_x)
    """
    dt = T / M
    u = np.empty((M + 1, grid.n_x))
    u[0] = np.asarray(Phi, dtype=float)
    for k in range(M):
        rhs = u[k] if phi is None else u[k] + dt * np.asarray(phi(grid.nodes, k * dt), dtype=float)
        step = assemble_A(coeffs, grid, PathView(coeffs.N, k + 1, (k + 1) * dt)).implicit_step(dt)
        u[k + 1] = solve_banded((1, 1), step.to_banded(0), rhs)
    return u
