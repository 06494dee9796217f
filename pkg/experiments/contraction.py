import logging
import numpy as np

from spde.backward_solver import POWER_ITERATIONS, POWER_SEED, BackwardSolver
from spde.coefficients import certify
from .data import build_setting, report_parameters
from .report import ExperimentReport

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-12


class ContractionExperiment:
    """Tabulates the power-iteration estimate of ||P*|| over a sweep of damping constants K"""

    name = "contraction_report"
    description = "estimated ||P*|| in X0 over a K sweep; some K below 1 and a non-increasing sweep when coercive"
    defaults = {"k_list": "0, 5, 10, 20", "assert_margin": 0.05}

    def __init__(self, config):
        self.config = config
        self.K_list = sorted(config.option_list("k_list", [0.0, 5.0, 10.0, 20.0]))
        self.assert_margin = config.option_float("assert_margin", self.defaults["assert_margin"])

    def run(self):
        config = self.config
        grid, tree, coeffs = build_setting(config)
        margins = certify(coeffs, grid, tree)
        report = ExperimentReport(self.name, report_parameters(
            config, coeffs, grid, tree, K_list=" ".join(f"{K:g}" for K in self.K_list),
        ))
        logger.info(f"Running {self.name} on {coeffs.name}: K {self.K_list}")

        solver = BackwardSolver(coeffs, grid, tree)
        rows = []
        estimates = []
        for K in self.K_list:
            estimate, gap = solver.estimate_P_star_norm(K)
            estimates.append(estimate)
            rows.append([K, estimate, gap])
            if gap > 1e-3 * max(estimate, 1.0):
                logger.warning(f"Power iteration for K = {K:g} has not settled (last gap {gap:.2e})")
        report.add_table("contraction", rows, ["K", "estimate", "gap"])

        provenance = f"power iteration, {POWER_ITERATIONS} iterations, seed={POWER_SEED}"
        if self._noise_free(solver):
            report.assert_at_most("Contraction", "estimates with B_i = 0", max(estimates), 0.0, provenance)
            return report

        asserted = margins.margin_strengthened >= self.assert_margin
        best = min(estimates)
        steps = np.diff(estimates)
        rise = float(np.max(steps, initial=0.0))
        detail = "estimates " + ", ".join(f"{value:.6g}" for value in estimates)
        if asserted:
            report.assert_true("Contraction", "some K gives estimate < 1", best < 1.0, provenance,
                               detail=detail, value=best)
            report.assert_at_most("Contraction", "largest rise along the K sweep", rise,
                                  MONOTONE_SLACK * max(estimates), provenance, detail)
        else:
            reason = f"strengthened margin {margins.margin_strengthened:.4g} < {self.assert_margin:g}"
            report.monitor("Contraction", "smallest estimate", best, provenance, detail=f"{detail}; {reason}",
                           threshold="< 1")
            report.monitor("Contraction", "largest rise along the K sweep", rise, provenance, detail=reason)
        return report

    def _noise_free(self, solver):
        tree = solver.tree
        return all(
            solver.operators.B(k, i).max_row_sum() == 0.0
            for k in range(tree.M + 1) for i in range(tree.N)
        )
