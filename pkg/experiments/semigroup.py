import logging
import numpy as np

from spde.backward_solver import BackwardProblem, BackwardSolver
from spde.errors import GuardError
from spde.forward_solver import ForwardProblem, ForwardSolver
from .data import (
    build_setting, parse_pairs, random_backward_problem, random_forward_problem,
    report_parameters, solve_backward, zero_backward_problem,
)
from .report import ExperimentReport

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def default_windows(M):
    """(0, M-1), (M/4, 3M/4) and (1, M/2), dropping any that collapse"""
    windows = [(0, M - 1), (M // 4, (3 * M) // 4), (1, M // 2)]
    unique = []
    for tau, s in windows:
        if 0 <= tau < s < M and (tau, s) not in unique:
            unique.append((tau, s))
    return unique


class SemigroupExperiment:
    """Re-solves the backward (and forward) equation on sub-windows and compares with the full solve"""

    name = "verify_semigroup"
    description = "window re-solve of p and chi_i from p(s) as terminal data; forward causality on the same windows"
    defaults = {"windows": "0-(M-1), M/4-3M/4, 1-M/2", "tolerance": 1e-11}

    def __init__(self, config):
        self.config = config
        self.tolerance = config.option_float("tolerance", self.defaults["tolerance"])
        text = config.option("windows")
        self.windows = None if text is None else parse_pairs(text, "-")

    def run(self):
        config = self.config
        grid, tree, coeffs = build_setting(config)
        windows = self.windows or default_windows(tree.M)
        for tau, s in windows:
            if not 0 <= tau < s < tree.M:
                raise GuardError(f"Window ({tau}, {s}) must satisfy 0 <= tau < s < M = {tree.M}")
        report = ExperimentReport(self.name, report_parameters(
            config, coeffs, grid, tree, windows=" ".join(f"{tau}-{s}" for tau, s in windows)
        ))
        logger.info(f"Running {self.name} on {coeffs.name} with {tree}, windows {windows}")

        forward = ForwardSolver(coeffs, grid, tree)
        backward = BackwardSolver(coeffs, grid, tree, forward.operators)
        rng = np.random.default_rng(config.seed)
        problem = random_backward_problem(coeffs, grid, tree, rng)
        route = config.solver
        if route == "neumann":
            logger.warning("Neumann route agrees only to its tolerance; window checks use the adjoint route")
            route = "adjoint"
        self.route = route
        full = solve_backward(backward, problem, route)
        forward_problem = random_forward_problem(coeffs, grid, tree, rng)
        u = forward.solve(forward_problem)

        rows = []
        for tau, s in windows:
            self._check_backward_window(report, backward, problem, full, tau, s, rows)
            self._check_forward_window(report, forward, forward_problem, u, tau, s, rows)
        self._check_zero_data(report, backward, windows[0])
        report.add_table("windows", rows, ["equation", "tau", "s", "component", "relative_deviation"])
        return report

    def _check_backward_window(self, report, backward, problem, full, tau, s, rows):
        """Terminal data p(s) on [tau, s] must reproduce p and every chi_i there"""
        tree = backward.tree
        window = BackwardProblem(
            problem.coeffs, problem.grid, tree, xi=problem.xi, Psi=full.p[s], start_level=tau, end_level=s
        )
        local = backward.solve_adjoint(window)
        scale = max(full.p.max_abs(), np.finfo(float).tiny)
        deviation = full.p.max_abs_difference(local.p, tau, s) / scale
        rows.append(["backward", tau, s, "p", deviation])
        provenance = f"{self.route} full solve vs adjoint window solve, seed={self.config.seed}"
        report.assert_at_most("Backward", f"p on [{tau}, {s}]", deviation, self.tolerance, provenance)
        for i in range(tree.N):
            chi_scale = max(full.chi[i].max_abs(), np.finfo(float).tiny)
            chi_deviation = full.chi[i].max_abs_difference(local.chi[i], tau, s - 1) / chi_scale
            rows.append(["backward", tau, s, f"chi_{i + 1}", chi_deviation])
            report.assert_at_most(
                "Backward", f"chi_{i + 1} on [{tau}, {s - 1}]", chi_deviation, self.tolerance, provenance
            )

    def _check_forward_window(self, report, forward, problem, u, tau, s, rows):
        """Starting from u(tau) with the restricted data must reproduce u on [tau, s]"""
        restart = ForwardProblem(
            problem.coeffs, problem.grid, problem.tree,
            phi=problem.phi, h=problem.h, Phi=u[tau], start_level=tau,
        )
        local = forward.solve(restart, end_level=s)
        scale = max(u.max_abs(), np.finfo(float).tiny)
        deviation = u.max_abs_difference(local, tau, s) / scale
        rows.append(["forward", tau, s, "u", deviation])
        report.assert_at_most(
            "Forward", f"u on [{tau}, {s}]", deviation, self.tolerance,
            f"forward scheme full vs restarted, seed={self.config.seed}",
        )

    def _check_zero_data(self, report, backward, window):
        tau, s = window
        tree = backward.tree
        zero = zero_backward_problem(backward.coeffs, backward.grid, tree)
        full = backward.solve_adjoint(zero)
        local = backward.solve_adjoint(BackwardProblem(
            zero.coeffs, zero.grid, tree, xi=zero.xi, Psi=full.p[s], start_level=tau, end_level=s
        ))
        largest = max(full.p.max_abs(), local.p.max_abs(), max(chi.max_abs() for chi in local.chi))
        report.assert_true(
            "Backward", "zero data gives zero on every window", largest == 0.0, "adjoint route, zero data",
            value=largest,
        )
