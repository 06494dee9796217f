import logging
import numpy as np

from spde.backward_solver import BackwardProblem, BackwardSolver
from spde.coefficients import certify, get_perturbation
from spde.grid_norms import spacetime_norm
from spde.noise_tree import AdaptedField, TerminalVariable
from .data import build_setting, delta_Psi, delta_xi, report_parameters, smooth_backward_problem, solve_backward
from .report import ExperimentReport

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

LINEARITY_BAND = (1.5, 2.5)
EXACT_LINEARITY_TOLERANCE = 1e-10


def solution_distance(first, second):
    """||p1 - p2||_Y2 + sum_i ||chi1_i - chi2_i||_X1"""
    distance = spacetime_norm(first.p - second.p, "Y", 2)
    for chi_a, chi_b in zip(first.chi, second.chi):
        distance += spacetime_norm(chi_a - chi_b, "X", 1)
    return distance


class RobustnessExperiment:
    """Perturbs coefficients and data by eps * delta and measures how the solution moves"""

    name = "robustness_experiment"
    description = "distance between solutions for eps-perturbed coefficients and data; d(2eps)/d(eps) in [1.5, 2.5]"
    defaults = {"epsilons": "0.001, 0.002, 0.004", "perturbation": "smooth"}

    # which data a perturbation preset also moves
    DATA_PERTURBED = {"smooth": (True, True), "coefficients": (False, False), "xi_only": (True, False), "data": (True, True)}

    def __init__(self, config):
        self.config = config
        self.epsilons = sorted(config.option_list("epsilons", [1e-3, 2e-3, 4e-3]))
        self.perturbation = str(config.option("perturbation", self.defaults["perturbation"])).strip()

    def run(self):
        config = self.config
        grid, tree, coeffs = build_setting(config)
        delta = get_perturbation(self.perturbation, tree.N)
        report = ExperimentReport(self.name, report_parameters(
            config, coeffs, grid, tree,
            epsilons=" ".join(f"{eps:g}" for eps in self.epsilons), perturbation=self.perturbation,
        ))
        logger.info(f"Running {self.name} on {coeffs.name} with perturbation {self.perturbation}, eps {self.epsilons}")

        if not self._check_margins(report, coeffs, delta, grid, tree):
            return report

        base = smooth_backward_problem(coeffs, grid, tree)
        solver = BackwardSolver(coeffs, grid, tree)
        reference = solve_backward(solver, base, config.solver, config.K, config.tol, config.max_iter)
        rows = []

        move_xi, move_Psi = self.DATA_PERTURBED.get(self.perturbation, (True, True))
        distances = self._series(base, reference, delta, move_xi, move_Psi, rows, "full")
        self._check_zero_epsilon(report, base, reference, delta, move_xi, move_Psi)
        self._check_linearity(report, distances, f"{config.solver} route, perturbation {self.perturbation}")

        xi_only = get_perturbation("xi_only", tree.N)
        exact = self._series(base, reference, xi_only, True, False, rows, "xi_only")
        self._check_exact_linearity(report, exact)
        report.add_table("distances", rows, ["series", "epsilon", "distance"])
        return report

    def _check_margins(self, report, coeffs, delta, grid, tree):
        """Both ends of the perturbation range must keep every margin positive"""
        for eps in [0.0, self.epsilons[-1]]:
            perturbed = coeffs if eps == 0.0 else coeffs.perturbed(delta, eps)
            margins = certify(perturbed, grid, tree)
            for label, margin in (("standard", margins.margin_standard), ("strengthened", margins.margin_strengthened)):
                if margin <= 0:
                    logger.error(f"Robustness run rejected: {label} margin {margin:.4g} at eps = {eps:g}")
                    report.assert_true(
                        "Margins", f"{label} margin at eps = {eps:g}", False, "coefficient certificate",
                        detail="experiment rejected: margin not positive", value=margin,
                    )
                    return False
            report.assert_at_least("Margins", f"strengthened margin at eps = {eps:g}",
                                   margins.margin_strengthened, 0.0, "coefficient certificate")
        return True

    def _perturbed_problem(self, base, delta, eps, move_xi, move_Psi):
        tree, grid = base.tree, base.grid
        coeffs = base.coeffs.perturbed(delta, eps)
        xi, Psi = base.xi, base.Psi
        if move_xi:
            xi = xi + AdaptedField.from_function(tree, grid, delta_xi) * eps
        if move_Psi:
            Psi = Psi + TerminalVariable.from_function(tree, grid, delta_Psi) * eps
        return BackwardProblem(coeffs, grid, tree, xi=xi, Psi=Psi)

    def _solve(self, problem):
        config = self.config
        solver = BackwardSolver(problem.coeffs, problem.grid, problem.tree)
        return solve_backward(solver, problem, config.solver, config.K, config.tol, config.max_iter)

    def _series(self, base, reference, delta, move_xi, move_Psi, rows, label):
        distances = []
        for eps in self.epsilons:
            solution = self._solve(self._perturbed_problem(base, delta, eps, move_xi, move_Psi))
            distance = solution_distance(reference, solution)
            distances.append(distance)
            rows.append([label, eps, distance])
        return distances

    def _check_zero_epsilon(self, report, base, reference, delta, move_xi, move_Psi):
        solution = self._solve(self._perturbed_problem(base, delta, 0.0, move_xi, move_Psi))
        distance = solution_distance(reference, solution)
        report.assert_at_most("Linearity", "d(0)", distance, 0.0, f"{self.config.solver} route, eps = 0")

    def _doubling_ratios(self, distances):
        ratios = []
        for a in range(len(self.epsilons)):
            for b in range(a + 1, len(self.epsilons)):
                if np.isclose(self.epsilons[b], 2.0 * self.epsilons[a], rtol=1e-12, atol=0.0):
                    ratios.append((self.epsilons[a], distances[b] / distances[a] if distances[a] > 0 else np.inf))
        return ratios

    def _check_linearity(self, report, distances, provenance):
        ratios = self._doubling_ratios(distances)
        if not ratios:
            report.skip("Linearity", "d(2eps)/d(eps)", provenance, detail="no doubling pair among the epsilons")
            return
        low, high = LINEARITY_BAND
        for index, (eps, ratio) in enumerate(ratios):
            check = f"d({2 * eps:g})/d({eps:g})"
            if index == 0:
                report.assert_between("Linearity", check, ratio, low, high, provenance)
            else:
                report.monitor("Linearity", check, ratio, provenance, threshold=f"[{low:g}, {high:g}]")

    def _check_exact_linearity(self, report, distances):
        provenance = f"{self.config.solver} route, xi-only perturbation"
        ratios = self._doubling_ratios(distances)
        if not ratios:
            report.skip("Linearity", "xi-only d(2eps)/d(eps)", provenance, detail="no doubling pair among the epsilons")
            return
        for eps, ratio in ratios:
            report.assert_between(
                "Linearity", f"xi-only d({2 * eps:g})/d({eps:g})", ratio,
                2.0 - EXACT_LINEARITY_TOLERANCE, 2.0 + EXACT_LINEARITY_TOLERANCE, provenance,
            )
