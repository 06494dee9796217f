import logging
import numpy as np

from spde.coefficients import (
    certify, constant_set, get_preset, random_constant_set, strengthened_matrices,
)
from utils.csv_export import condition_frame
from .data import report_parameters
from .report import ExperimentReport

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

EXAMPLE_STANDARD = 0.01
EXAMPLE_STRENGTHENED = -0.49


class ConditionsExperiment:
    """Coercivity certificates: the two-dimensional counterexample, a boundary case and random property draws"""

    name = "certify_conditions"
    description = "standard, strengthened and N0 coercivity margins; example b = 0.51 I, beta_i = e_i; random property suite"
    defaults = {"draws": 200, "max_n": 3, "max_n_noise": 3}

    def __init__(self, config):
        self.config = config
        self.draws = config.option_int("draws", self.defaults["draws"])
        self.max_n = config.option_int("max_n", self.defaults["max_n"])
        self.max_N = config.option_int("max_n_noise", self.defaults["max_n_noise"])

    def run(self):
        config = self.config
        report = ExperimentReport(self.name, report_parameters(config, draws=self.draws))
        logger.info(f"Running {self.name}: {self.draws} random draws, n <= {self.max_n}, N <= {self.max_N}")

        self._check_example(report)
        self._check_boundary_case(report)
        self._check_random_draws(report)
        self._write_preset_table(report)
        return report

    def _check_example(self, report):
        coeffs = get_preset("example1", 2)
        margins = certify(coeffs, N0=2)
        provenance = "closed-form constant coefficients, n = 2, N = 2"
        report.assert_at_most("Example", "standard margin = 0.01",
                              abs(margins.margin_standard - EXAMPLE_STANDARD), 1e-12, provenance,
                              detail=f"margin {margins.margin_standard:.17g}")
        report.assert_at_most("Example", "strengthened margin = -0.49",
                              abs(margins.margin_strengthened - EXAMPLE_STRENGTHENED), 1e-10, provenance,
                              detail=f"margin {margins.margin_strengthened:.17g}")
        report.assert_at_most("Example", "N0 = 2 margin = -0.49",
                              abs(margins.margin_N0 - EXAMPLE_STRENGTHENED), 1e-10, provenance,
                              detail=f"margin {margins.margin_N0:.17g}")
        report.assert_true("Example", "standard holds, strengthened fails",
                           margins.standard_holds and not margins.strengthened_holds, provenance)

    def _check_boundary_case(self, report):
        coeffs = constant_set("boundary", b=[[1.0]], beta=[[np.sqrt(2.0)]])
        margin = certify(coeffs).margin_standard
        report.assert_at_most("Example", "b = 1, beta = sqrt(2) has margin 0", abs(margin), 1e-12,
                              "closed-form constant coefficients, n = 1, N = 1")

    def _check_random_draws(self, report):
        rng = np.random.default_rng(self.config.seed)
        worst = {"ordering": -np.inf, "scalar": 0.0, "criterion": -np.inf, "quadratic": 0.0}
        for _ in range(self.draws):
            n = int(rng.integers(1, self.max_n + 1))
            N = int(rng.integers(1, self.max_N + 1))
            N0 = int(rng.integers(1, N + 1))
            coeffs = random_constant_set(rng, n, N, N0=N0)
            margins = certify(coeffs, N0=N0)
            worst["ordering"] = max(worst["ordering"], margins.margin_strengthened - margins.margin_standard)
            if n == 1:
                worst["scalar"] = max(worst["scalar"], abs(margins.margin_strengthened - margins.margin_standard))
            worst["criterion"] = max(worst["criterion"], margins.margin_N0 - margins.margin_strengthened)
            worst["quadratic"] = max(worst["quadratic"], self._quadratic_form_gap(coeffs, rng))

        provenance = f"{self.draws} random constant draws, seed={self.config.seed}"
        report.assert_at_most("Properties", "strengthened margin <= standard margin",
                              worst["ordering"], 1e-10, provenance)
        report.assert_at_most("Properties", "n = 1: strengthened margin = standard margin",
                              worst["scalar"], 1e-10, provenance)
        report.assert_at_most("Properties", "N0 margin <= strengthened margin",
                              worst["criterion"], 1e-10, provenance)
        report.assert_at_most("Properties", "block quadratic form identity",
                              worst["quadratic"], 1e-12, provenance)

    def _quadratic_form_gap(self, coeffs, rng):
        """eta^T (I (x) b - beta beta^T / 2) eta against sum_i eta_i^T b eta_i - (sum_i beta_i . eta_i)^2 / 2"""
        view = None
        b = np.asarray(coeffs.b(None, view), dtype=float)
        beta = np.asarray(coeffs.beta(None, view), dtype=float)
        N, n = beta.shape
        eta = rng.standard_normal((N, n))
        matrix = strengthened_matrices(b[None], beta[None])[0]
        stacked = eta.reshape(-1)
        block = float(stacked @ matrix @ stacked)
        direct = sum(float(eta[i] @ b @ eta[i]) for i in range(N)) - 0.5 * float(np.sum(beta * eta)) ** 2
        scale = sum(float(abs(eta[i] @ b @ eta[i])) for i in range(N)) + 0.5 * float(np.sum(beta * eta)) ** 2
        return abs(block - direct) / scale if scale > 0 else 0.0

    def _write_preset_table(self, report):
        """Margins and argmin samples for the configured preset"""
        config = self.config
        coeffs = config.build_coefficients()
        grid = config.build_grid()
        tree = config.build_tree()
        margins = certify(coeffs, grid, tree)
        report.add_frame("conditions", condition_frame(margins))
        report.monitor("Preset", f"{coeffs.name} standard margin", margins.margin_standard, "grid x tree samples")
        report.monitor("Preset", f"{coeffs.name} strengthened margin", margins.margin_strengthened,
                       "grid x tree samples")
