"""
Backward equation dp + (A* p + sum_i B_i* chi_i + xi) dt = sum_i chi_i dw_i,
p(T) = Psi, on the noise tree.

The scheme is the exact transpose of the forward scheme. With
S_{k+1} = (I - dt A_h(k+1))^{-1} on each child edge:

    p_M      = Psi
    y        = S_{k+1}^T p_{k+1}                      (every child of v)
    chi_i,k  = E[y dw_i | v] / dt
    pbar_k   = E[y | v]
    p_k      = pbar_k + dt (sum_i B_i,h(k)^T chi_i,k + xi_k)

pbar (stored as p_drift) is L* xi + (I_T L)* Psi and p pairs with the initial
condition:

    <u, xi>_X0 + <u_M, Psi>_Z0 = <phi, pbar>_X0 + sum_i <h_i, chi_i>_X0 + <Phi, p_0>_Z0

Three routes compute the same (p, chi): the adjoint route transposes the
sparse edge maps literally, the dynamic-programming route uses tree
conditional expectations on the node-level form
(I - dt A*_h(k)) q_k = E[q_{k+1} | v] + dt (...), and the Neumann route
solves g = xi + P* g + P_0* Psi with B = 0 solves only.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional
import numpy as np
from scipy.linalg import solve_banded

from .coefficients import check_coercivity
from .errors import ConvergenceError, GuardError
from .forward_solver import ForwardSolver
from .noise_tree import AdaptedField, PathView, TerminalVariable, conditional_expectation, project_increment
from .operators import OperatorStack, assemble_A

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

DEFAULT_K_CANDIDATES = (0.0, 2.0, 5.0, 10.0, 20.0, 50.0)
CONTRACTION_TARGET = 0.8
POWER_ITERATIONS = 40
POWER_SEED = 12345


@dataclass
class BackwardProblem:
    """Data of the backward equation; None means zero"""
    coeffs: object
    grid: object
    tree: object
    xi: Optional[AdaptedField] = None
    Psi: Optional[object] = None
    K_shift: Optional[float] = None
    start_level: int = 0
    end_level: Optional[int] = None


@dataclass
class BackwardSolution:
    """p on the window, chi_i and p_drift on its intervals (their end-level slot holds zeros and Psi)"""
    p: AdaptedField
    chi: list
    p_drift: AdaptedField
    diagnostics: dict = field(default_factory=dict)

    @property
    def p_initial(self):
        return self.p[self.p.start_level]


class BackwardSolver:
    """Tree solver for the backward equation by the adjoint, DP and Neumann routes"""

    def __init__(self, coeffs, grid, tree, operators=None, damping=0.0, include_noise=True):
        """
        Args:
            coeffs (CoefficientSet): Coefficients (n = 1)
            grid (Grid): Grid
            tree (NoiseTree): Tree
            operators (OperatorStack): Shared operator cache, built when None
            damping (float): K >= 0; every transposed step is multiplied by 1 / (1 + dt K)
            include_noise (bool): False drops every B_i* (adjoints of the Q-family)
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
        if self._validated:
            return
        self._validated = True
        number, lam_number = self.operators.stability_number()
        if lam_number >= 1.0:
            logger.warning(f"dt * max|lam| = {lam_number:.3f} >= 1: implicit steps may be singular")
        margin = check_coercivity(self.coeffs, self.grid, self.tree)
        if margin <= 0:
            logger.warning(f"Coercivity margin {margin:.4g} is not positive for {self.coeffs.name}")

    def with_damping(self, K, include_noise=None):
        """Solver sharing this operator cache with damping K"""
        include = self.include_noise if include_noise is None else include_noise
        solver = BackwardSolver(self.coeffs, self.grid, self.tree, self.operators, K, include)
        solver._validated = self._validated
        return solver

    # -- plumbing ---------------------------------------------------------

    def _window(self, problem):
        tree = self.tree
        start = tree.check_level(problem.start_level)
        end = tree.check_level(tree.M if problem.end_level is None else problem.end_level, start + 1)
        return start, end

    def _terminal(self, Psi, level):
        n_e = self.tree.branching ** level
        if Psi is None:
            return np.zeros((n_e, self.grid.n_x))
        values = Psi.values if isinstance(Psi, TerminalVariable) else np.asarray(Psi, dtype=float)
        if values.shape == (self.grid.n_x,):
            values = np.tile(values, (n_e, 1))
        if values.shape != (n_e, self.grid.n_x):
            raise GuardError(f"Terminal condition has shape {values.shape}, expected ({n_e}, {self.grid.n_x})")
        return values.copy()

    def _transposed_step(self, k, values):
        solution = self.operators.step_factors_transposed(k).solve(values)
        return self.theta * solution if self.damping else solution

    def _noise_adjoint(self, k, chi_k):
        total = None
        if self.include_noise:
            for i in range(self.tree.N):
                term = self.operators.apply_B_transpose(k, i, chi_k[i])
                total = term if total is None else total + term
        return total

    def _assemble(self, start, end, p_levels, chi_levels, drift_levels, diagnostics):
        tree, grid = self.tree, self.grid
        drift_levels[end] = p_levels[end].copy()
        chi = []
        for i in range(tree.N):
            levels = [None] * (tree.M + 1)
            for k in range(start, end):
                levels[k] = chi_levels[k][i]
            levels[end] = np.zeros((tree.branching ** end, grid.n_x))
            chi.append(AdaptedField(tree, grid, levels, start, end))
        return BackwardSolution(
            p=AdaptedField(tree, grid, p_levels, start, end),
            chi=chi,
            p_drift=AdaptedField(tree, grid, drift_levels, start, end),
            diagnostics=diagnostics,
        )

    # -- routes -----------------------------------------------------------

    def solve_adjoint(self, problem):
        """
        Apply the transpose of the forward edge factorization to (xi, Psi).

        Args:
            problem (BackwardProblem): Data and window

        Returns:
            BackwardSolution: p, chi, p_drift on the window
        """
        tree = self.tree
        start, end = self._window(problem)
        self.validate()
        weight = 1.0 / tree.branching
        p_levels = [None] * (tree.M + 1)
        drift_levels = [None] * (tree.M + 1)
        chi_levels = [None] * (tree.M + 1)
        p_levels[end] = self._terminal(problem.Psi, end)
        for k in range(end - 1, start - 1, -1):
            y = self._transposed_step(k + 1, p_levels[k + 1])
            drift = weight * (tree.scatter_operator(k).T @ y)
            chi_k = np.stack([
                weight * (tree.scatter_operator(k, i).T @ y) / tree.dt for i in range(tree.N)
            ])
            current = drift.copy()
            noise = self._noise_adjoint(k, chi_k)
            if noise is not None:
                current += tree.dt * noise
            if problem.xi is not None:
                current += tree.dt * problem.xi[k]
            p_levels[k] = current
            drift_levels[k] = drift
            chi_levels[k] = chi_k
        return self._assemble(start, end, p_levels, chi_levels, drift_levels, {"route": "adjoint"})

    def solve_dp(self, problem):
        """
        Dynamic-programming recursion with exact conditional expectations.

        Works on q_k = S_k^T p_k: q_end solves the terminal step, then for each
        level (I - dt A_h(k))^T q_k = E[q_{k+1} | v] + dt (sum_i B_i^T chi_i,k + xi_k)
        with chi_i,k the increment loadings of q_{k+1}; the right-hand side is p_k.
        """
        tree = self.tree
        start, end = self._window(problem)
        self.validate()
        p_levels = [None] * (tree.M + 1)
        drift_levels = [None] * (tree.M + 1)
        chi_levels = [None] * (tree.M + 1)
        p_levels[end] = self._terminal(problem.Psi, end)
        q_next = self._transposed_step(end, p_levels[end])
        residual_channel = 0.0
        for k in range(end - 1, start - 1, -1):
            drift, gamma, rest = project_increment(tree, q_next, k)
            residual_channel = max(residual_channel, float(np.max(np.abs(rest), initial=0.0)))
            current = drift.copy()
            noise = self._noise_adjoint(k, gamma)
            if noise is not None:
                current = current + tree.dt * noise
            if problem.xi is not None:
                current = current + tree.dt * problem.xi[k]
            p_levels[k] = current
            drift_levels[k] = drift
            chi_levels[k] = gamma
            if k > start:
                q_next = self._transposed_step(k, current)
        diagnostics = {"route": "dp", "residual_channel_max": residual_channel}
        return self._assemble(start, end, p_levels, chi_levels, drift_levels, diagnostics)

    def apply_P_star(self, g, Psi=None):
        """sum_i B_i^T chi_i[g, Psi] with chi from the damped B = 0 adjoint; level M is zero"""
        tree = self.tree
        q = self.with_damping(self.damping, include_noise=False)
        solution = q.solve_adjoint(BackwardProblem(self.coeffs, self.grid, tree, xi=g, Psi=Psi))
        levels = [None] * (tree.M + 1)
        for k in range(tree.M):
            chi_k = [chi[k] for chi in solution.chi]
            levels[k] = sum(self.operators.apply_B_transpose(k, i, chi_k[i]) for i in range(tree.N))
        levels[tree.M] = np.zeros((tree.branching ** tree.M, self.grid.n_x))
        return AdaptedField(tree, self.grid, levels)

    def apply_P0_star(self, Psi):
        return self.apply_P_star(None, Psi)

    def estimate_P_star_norm(self, K=0.0, iterations=POWER_ITERATIONS, seed=POWER_SEED):
        """
        Power iteration on P P* in the X0 inner product, with damping K.

        Returns:
            tuple: (estimate of ||P*||, gap between the last two iterates)
        """
        tree, grid = self.tree, self.grid
        if not self.include_noise:
            return 0.0, 0.0
        damped = self.with_damping(K)
        forward = ForwardSolver(self.coeffs, grid, tree, self.operators, damping=K)
        forward._validated = True
        rng = np.random.default_rng(seed)
        x = AdaptedField.random(tree, grid, rng)
        x[tree.M] = np.zeros_like(x[tree.M])
        x = x * (1.0 / np.sqrt(x.inner(x)))
        estimate, previous, gap = 0.0, 0.0, 0.0
        for iteration in range(iterations):
            y = damped.apply_P_star(x)
            estimate = float(np.sqrt(max(y.inner(y), 0.0)))
            gap = abs(estimate - previous)
            previous = estimate
            if estimate == 0.0:
                break
            x = forward.apply_P(y)
            size = float(np.sqrt(max(x.inner(x), 0.0)))
            if size == 0.0:
                break
            x = x * (1.0 / size)
        logger.debug(f"||P*|| estimate {estimate:.6f} for K = {K} (gap {gap:.2e})")
        return estimate, gap

    def choose_K(self, candidates=DEFAULT_K_CANDIDATES, target=CONTRACTION_TARGET):
        """Smallest K among the candidates whose estimated ||P*|| is at most target"""
        estimate = None
        for K in candidates:
            estimate, gap = self.estimate_P_star_norm(K)
            if estimate <= target:
                return K, estimate
        logger.warning(f"No K in {list(candidates)} reaches ||P*|| <= {target}; using K = {candidates[-1]}")
        return candidates[-1], estimate

    def solve_neumann(self, problem, K=None, tol=1e-8, max_iter=50):
        """
        Neumann iteration g <- xi^K + P_0* Psi + P* g with damping K, then recovery and unshift.

        Args:
            problem (BackwardProblem): Data on the full window [0, M]
            K (float): Damping; None uses problem.K_shift or the default K policy
            tol (float): Stopping threshold on the unshifted X0 norm of the increment
            max_iter (int): Iteration cap

        Returns:
            BackwardSolution: p, chi, p_drift and the iteration diagnostics
        """
        tree, grid = self.tree, self.grid
        if problem.start_level != 0 or problem.end_level not in (None, tree.M):
            raise GuardError("The Neumann route works on the full window [0, M]")
        if tol <= 0:
            raise GuardError(f"Tolerance must be positive, got {tol}")
        self.validate()
        estimate = None
        if K is None:
            K = problem.K_shift
        if K is None:
            K, estimate = self.choose_K()
        if K < 0:
            raise GuardError(f"K must be non-negative, got {K}")
        if estimate is None:
            estimate, _ = self.estimate_P_star_norm(K)
        damped = self.with_damping(K)
        q = self.with_damping(K, include_noise=False)
        theta = damped.theta
        scale = np.array([theta ** (tree.M - k) for k in range(tree.M + 1)])

        levels = [None] * (tree.M + 1)
        for k in range(tree.M + 1):
            levels[k] = np.zeros((tree.branching ** k, grid.n_x)) if problem.xi is None else scale[k] * problem.xi[k]
        xi_shifted = AdaptedField(tree, grid, levels)
        Psi = self._terminal(problem.Psi, tree.M)

        g = xi_shifted + damped.apply_P0_star(Psi)
        history = []
        rates = []
        previous_shifted = None
        converged = False
        iteration = 0
        while iteration < max_iter:
            iteration += 1
            g_next = xi_shifted + damped.apply_P_star(g, Psi)
            delta = g_next - g
            shifted_norm = float(np.sqrt(max(delta.inner(delta), 0.0)))
            unshifted = AdaptedField(tree, grid, [delta.levels[k] / scale[k] for k in range(tree.M + 1)])
            residual = float(np.sqrt(max(unshifted.inner(unshifted), 0.0)))
            history.append(residual)
            if previous_shifted:
                rates.append(shifted_norm / previous_shifted)
            previous_shifted = shifted_norm
            g = g_next
            if residual < tol:
                converged = True
                break
        if not converged:
            raise ConvergenceError(iteration, history[-1], estimate)

        shifted = q.solve_adjoint(BackwardProblem(self.coeffs, grid, tree, xi=g, Psi=Psi))
        p_levels = [shifted.p[k] / scale[k] for k in range(tree.M + 1)]
        drift_levels = [shifted.p_drift[k] / scale[k] for k in range(tree.M + 1)]
        chi_levels = [None] * (tree.M + 1)
        for k in range(tree.M):
            chi_levels[k] = np.stack([chi[k] / scale[k] for chi in shifted.chi])
        p_levels[tree.M] = Psi
        diagnostics = {
            "route": "neumann",
            "K": float(K),
            "iterations": iteration,
            "residual": history[-1],
            "residual_history": history,
            "observed_rates": rates,
            "observed_rate": max(rates) if rates else 0.0,
            "P_star_estimate": float(estimate),
        }
        logger.info(
            f"Neumann route converged in {iteration} iterations (K = {K}, residual {history[-1]:.2e}, "
            f"||P*|| estimate {estimate:.4f})"
        )
        return self._assemble(0, tree.M, p_levels, chi_levels, drift_levels, diagnostics)

    def equation_residual(self, solution, problem):
        """
        Largest per-node residual of the discrete backward equation on the window.

        Returns:
            dict: max |p_k - pbar_k - dt(...)| and max |chi_k - E[y dw]/dt| over levels and nodes
        """
        tree = self.tree
        start, end = solution.p.start_level, solution.p.end_level
        p_residual = float(np.max(np.abs(solution.p[end] - self._terminal(problem.Psi, end))))
        chi_residual = 0.0
        for k in range(end - 1, start - 1, -1):
            y = self._transposed_step(k + 1, solution.p[k + 1])
            drift = conditional_expectation(tree, y, k)
            _, gamma, _ = project_increment(tree, y, k)
            expected = drift.copy()
            noise = self._noise_adjoint(k, gamma)
            if noise is not None:
                expected += tree.dt * noise
            if problem.xi is not None:
                expected += tree.dt * problem.xi[k]
            p_residual = max(p_residual, float(np.max(np.abs(solution.p[k] - expected))))
            for i in range(tree.N):
                chi_residual = max(chi_residual, float(np.max(np.abs(solution.chi[i][k] - gamma[i]))))
        return {"p": p_residual, "chi": chi_residual}

    def k_shift_deviations(self, problem, K):
        """
        Compare p, chi with the solution of the operator-shifted problem (lam - K in A).

        The shifted problem uses data s_k xi_k with s_k = (1 + dt K)^-(M-k); the
        deviation is max_k |p^K_k / s_k - p_k| relative to max |p| (same for chi).
        """
        tree = self.tree
        base = self.solve_adjoint(problem)
        shifted_ops = OperatorStack(self.coeffs, self.grid, tree, shift=K)
        shifted_solver = BackwardSolver(self.coeffs, self.grid, tree, shifted_ops)
        shifted_solver._validated = True
        scale = np.array([(1.0 + tree.dt * K) ** (-(tree.M - k)) for k in range(tree.M + 1)])
        xi = None
        if problem.xi is not None:
            xi = AdaptedField(tree, self.grid, [scale[k] * problem.xi[k] for k in range(tree.M + 1)])
        shifted = shifted_solver.solve_adjoint(BackwardProblem(self.coeffs, self.grid, tree, xi=xi, Psi=problem.Psi))
        p_size = max(base.p.max_abs(), np.finfo(float).tiny)
        p_dev = max(float(np.max(np.abs(shifted.p[k] / scale[k] - base.p[k]))) for k in range(tree.M + 1))
        chi_size = max(max(chi.max_abs() for chi in base.chi), np.finfo(float).tiny)
        chi_dev = max(
            float(np.max(np.abs(shifted.chi[i][k] / scale[k] - base.chi[i][k])))
            for i in range(tree.N) for k in range(tree.M)
        )
        return {"p": p_dev / p_size, "chi": chi_dev / chi_size}


def solve_backward_adjoint(problem):
    return BackwardSolver(problem.coeffs, problem.grid, problem.tree).solve_adjoint(problem)


def solve_backward_dp(problem):
    return BackwardSolver(problem.coeffs, problem.grid, problem.tree).solve_dp(problem)


def solve_backward_neumann(problem, K=None, tol=1e-8, max_iter=50):
    return BackwardSolver(problem.coeffs, problem.grid, problem.tree).solve_neumann(problem, K, tol, max_iter)


def estimate_P_star_norm(coeffs, grid, tree, K=0.0):
    """Dominant singular value of P* with damping K (40 power iterations, seed 12345)"""
    estimate, _ = BackwardSolver(coeffs, grid, tree).estimate_P_star_norm(K)
    return estimate


def k_shift_roundtrip(problem, K):
    """Relative deviation of the unshifted p after the operator shift lam -> lam - K; 0 for K = 0"""
    return BackwardSolver(problem.coeffs, problem.grid, problem.tree).k_shift_deviations(problem, K)["p"]


def solve_backward_path(coeffs, grid, T, M, Psi, xi=None, K=0.0):
    """
    Backward scheme along the single path w = 0 in node form:
    (I - dt (A_h(t_k)^T - K)) u_k = u_{k+1} + dt xi(x, t_k), u_M = Psi.

    Args:
        coeffs (CoefficientSet): Coefficients (noise terms are ignored)
        grid (Grid): Grid
        T (float): Horizon
        M (int): Number of steps
        Psi (array): Terminal values, shape (n_x,)
        xi (callable): Optional free term xi(x, t)
        K (float): Shift subtracted from lam

    Returns:
        array: u at every level, shape (M + 1, n_x)
    """
    dt = T / M
    u = np.empty((M + 1, grid.n_x))
    u[M] = np.asarray(Psi, dtype=float)
    for k in range(M - 1, -1, -1):
        rhs = u[k + 1] if xi is None else u[k + 1] + dt * np.asarray(xi(grid.nodes, k * dt), dtype=float)
        step = assemble_A(coeffs, grid, PathView(coeffs.N, k, k * dt), shift=K).implicit_step(dt).transpose()
        u[k] = solve_banded((1, 1), step.to_banded(0), rhs)
    return u
