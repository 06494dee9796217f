import logging
import numpy as np

from spde.backward_solver import BackwardProblem, BackwardSolver
from spde.coefficients import get_preset
from spde.errors import ConvergenceError
from spde.grid_norms import spacetime_norm
from utils.csv_export import field_frame, matrix_frame
from .data import build_setting, random_backward_problem, report_parameters
from .report import ExperimentReport

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

ROUTE_AGREEMENT = 1e-10
RATE_SLACK = 1.1


def relative_distance(first, second, kind):
    """||first - second|| / ||second|| in the X0 or C0 norm"""
    size = spacetime_norm(second, kind, 0)
    gap = spacetime_norm(first - second, kind, 0)
    return gap / size if size > 0 else gap


class SolverAgreementExperiment:
    """Cross-checks the adjoint, dynamic-programming and Neumann routes of the backward solver"""

    name = "solver_agreement"
    description = "adjoint vs DP to 1e-10 in C0 and X0, per-node residuals, Neumann route against adjoint with rate check"
    defaults = {"neumann": True, "export_fields": False}

    def __init__(self, config):
        self.config = config
        self.with_neumann = config.option_bool("neumann", self.defaults["neumann"])
        self.export_fields = config.option_bool("export_fields", self.defaults["export_fields"])

    def run(self):
        config = self.config
        grid, tree, coeffs = build_setting(config)
        report = ExperimentReport(self.name, report_parameters(config, coeffs, grid, tree))
        logger.info(f"Running {self.name} on {coeffs.name} with {tree}, n_x = {grid.n_x}")

        solver = BackwardSolver(coeffs, grid, tree)
        rng = np.random.default_rng(config.seed)
        problem = random_backward_problem(coeffs, grid, tree, rng)
        adjoint = solver.solve_adjoint(problem)
        dp = solver.solve_dp(problem)
        rows = []

        self._check_adjoint_dp(report, adjoint, dp, rows)
        self._check_residuals(report, solver, problem, {"adjoint": adjoint, "dp": dp}, rows)
        if self.with_neumann:
            self._check_neumann(report, solver, problem, adjoint, rows)
            self._check_noise_free_neumann(report, grid, tree, problem)
        else:
            report.skip("Neumann", "Neumann route", "disabled in config")
        report.add_table("agreement", rows, ["comparison", "component", "norm", "value"])
        if self.export_fields:
            self._export(report, solver, adjoint)
        return report

    def _check_adjoint_dp(self, report, adjoint, dp, rows):
        provenance = f"adjoint vs dp, seed={self.config.seed}"
        for kind in ("C", "X"):
            value = relative_distance(dp.p, adjoint.p, kind)
            rows.append(["dp-adjoint", "p", f"{kind}0", value])
            report.assert_at_most("Routes", f"p agreement in {kind}0", value, ROUTE_AGREEMENT, provenance)
            for i, (chi_dp, chi_adjoint) in enumerate(zip(dp.chi, adjoint.chi)):
                value = relative_distance(chi_dp, chi_adjoint, kind)
                rows.append(["dp-adjoint", f"chi_{i + 1}", f"{kind}0", value])
                report.assert_at_most("Routes", f"chi_{i + 1} agreement in {kind}0", value, ROUTE_AGREEMENT, provenance)
        report.monitor("Routes", "largest DP residual channel", dp.diagnostics["residual_channel_max"], provenance,
                       detail="zero for N = 1")

    def _check_residuals(self, report, solver, problem, solutions, rows):
        for route, solution in solutions.items():
            residual = solver.equation_residual(solution, problem)
            scale = max(solution.p.max_abs(), 1.0)
            for part in ("p", "chi"):
                value = residual[part] / scale
                rows.append([route, part, "residual", value])
                report.assert_at_most("Residuals", f"{route} {part} equation residual", value, ROUTE_AGREEMENT,
                                      f"{route} route, per-node discrete equation")

    def _check_neumann(self, report, solver, problem, adjoint, rows):
        config = self.config
        provenance = f"neumann route, k_policy={config.k_policy}, tol={config.tol:g}"
        try:
            neumann = solver.solve_neumann(problem, K=config.K, tol=config.tol, max_iter=config.max_iter)
        except ConvergenceError as e:
            logger.error(f"Neumann route failed: {str(e)}")
            report.assert_true("Neumann", "converged", False, provenance, detail=str(e), value=e.residual)
            return
        diagnostics = neumann.diagnostics
        value = relative_distance(neumann.p, adjoint.p, "X")
        rows.append(["neumann-adjoint", "p", "X0", value])
        report.assert_at_most("Neumann", "p matches adjoint route in X0", value, config.tol, provenance)
        chi_value = max(relative_distance(a, b, "X") for a, b in zip(neumann.chi, adjoint.chi))
        rows.append(["neumann-adjoint", "chi", "X0", chi_value])
        report.assert_at_most("Neumann", "chi matches adjoint route in X0", chi_value, config.tol, provenance)
        report.assert_at_most("Neumann", "final increment", diagnostics["residual"], config.tol, provenance,
                              detail=f"{diagnostics['iterations']} iterations, K = {diagnostics['K']:g}")
        estimate = diagnostics["P_star_estimate"]
        rate = diagnostics["observed_rate"]
        report.assert_at_most(
            "Neumann", "observed rate <= 1.1 x ||P*|| estimate", rate,
            RATE_SLACK * estimate, provenance, detail=f"estimate {estimate:.6g}",
        )
        report.monitor("Neumann", "observed rate / ||P*|| estimate", rate / estimate if estimate > 0 else 0.0,
                       provenance, detail="per-iteration increments of a nilpotent P* fall below its norm")
        # P* only reaches strictly later levels, so (P*)^M = 0
        M = solver.tree.M
        report.assert_at_most("Neumann", "series terminates within M + 1 iterations", diagnostics["iterations"],
                              M + 1, provenance, detail=f"{diagnostics['iterations']} iterations, M = {M}")
        for index, residual in enumerate(diagnostics["residual_history"]):
            rows.append(["neumann", f"iteration {index + 1}", "increment X0", residual])

    def _check_noise_free_neumann(self, report, grid, tree, problem):
        """With every B_i = 0 the series stops after one iteration"""
        coeffs = get_preset("heat", tree.N)
        solver = BackwardSolver(coeffs, grid, tree)
        heat_problem = BackwardProblem(coeffs, grid, tree, xi=problem.xi, Psi=problem.Psi)
        solution = solver.solve_neumann(heat_problem, K=0.0, tol=self.config.tol, max_iter=self.config.max_iter)
        iterations = solution.diagnostics["iterations"]
        report.assert_at_most("Neumann", "B_i = 0 converges in one iteration", iterations, 1,
                              "neumann route, heat preset, K = 0")

    def _export(self, report, solver, adjoint):
        """Adjoint-route solution and the level-0 drift operator as extra tables"""
        report.add_frame("p", field_frame(adjoint.p))
        for i, chi in enumerate(adjoint.chi):
            report.add_frame(f"chi_{i + 1}", field_frame(chi))
        report.add_frame("A_level0", matrix_frame(solver.operators.A(0)))
