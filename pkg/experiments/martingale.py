import logging
import numpy as np

from spde.noise_tree import (
    TerminalVariable, conditional_expectation, ito_integral, martingale_representation,
)
from .data import report_parameters
from .report import ExperimentReport

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

EXACTNESS = 1e-12


class MartingaleExperiment:
    """Exact martingale representation of terminal variables on small trees"""

    name = "martingale_check"
    description = "reconstruction of random terminal variables, residual channel, w(T)^2 closed form, tower property, Ito isometry"
    defaults = {"noise_dimensions": "1, 2", "samples": 20, "levels": 6}

    def __init__(self, config):
        self.config = config
        self.noise_dimensions = config.option_list("noise_dimensions", [1, 2], cast=int)
        self.samples = config.option_int("samples", self.defaults["samples"])
        self.levels = config.option_int("levels", min(config.M, self.defaults["levels"]))

    def run(self):
        config = self.config
        report = ExperimentReport(self.name, report_parameters(
            config, noise_dimensions=" ".join(str(N) for N in self.noise_dimensions),
            samples=self.samples, levels=self.levels,
        ))
        grid = config.build_grid()
        rng = np.random.default_rng(config.seed)
        logger.info(f"Running {self.name}: N in {self.noise_dimensions}, M = {self.levels}, {self.samples} samples")

        for N in self.noise_dimensions:
            tree = config.build_tree(N=N, M=self.levels)
            self._check_reconstruction(report, tree, grid, rng)
            self._check_wiener_square(report, tree, grid)
        return report

    def _check_reconstruction(self, report, tree, grid, rng):
        worst = {"reconstruction": 0.0, "residual": 0.0, "orthogonality": 0.0, "tower": 0.0, "isometry": 0.0}
        for _ in range(self.samples):
            X = TerminalVariable.random(tree, grid, rng)
            representation = martingale_representation(X)
            scale = max(float(np.max(np.abs(X.values))), 1.0)
            worst["reconstruction"] = max(
                worst["reconstruction"], float(np.max(np.abs(representation.reconstruct() - X.values))) / scale
            )
            residual_size = representation.residual.max_abs()
            worst["residual"] = max(worst["residual"], residual_size / scale)
            worst["orthogonality"] = max(worst["orthogonality"], self._residual_orthogonality(tree, representation) / scale)
            worst["tower"] = max(worst["tower"], self._tower_gap(tree, X.values) / scale)
            worst["isometry"] = max(worst["isometry"], self._isometry_gap(tree, representation))

        provenance = f"N = {tree.N}, M = {tree.M}, {self.samples} samples, seed={self.config.seed}"
        category = f"N = {tree.N}"
        report.assert_at_most(category, "reconstruction error", worst["reconstruction"], EXACTNESS, provenance)
        if tree.N == 1:
            report.assert_at_most(category, "residual channel vanishes", worst["residual"], EXACTNESS, provenance)
        else:
            report.monitor(category, "residual channel size", worst["residual"], provenance)
        report.assert_at_most(category, "residual orthogonal to 1 and dw_i", worst["orthogonality"], EXACTNESS,
                              provenance)
        report.assert_at_most(category, "tower property", worst["tower"], EXACTNESS, provenance)
        report.assert_at_most(category, "Ito isometry", worst["isometry"], EXACTNESS, provenance)

    def _residual_orthogonality(self, tree, representation):
        """max |E[r | v]| and |E[r dw_i | v]| over every level and node"""
        gap = 0.0
        for k in range(1, tree.M + 1):
            residual = representation.residual[k]
            mean = conditional_expectation(tree, residual, k - 1)
            gap = max(gap, float(np.max(np.abs(mean))))
            for i in range(tree.N):
                weighted = residual * tree.increments(k)[:, i][:, None]
                gap = max(gap, float(np.max(np.abs(conditional_expectation(tree, weighted, k - 1)))))
        return gap

    def _tower_gap(self, tree, values):
        """E[E[X | F_{k+1}] | F_k] against the direct average over all descendants of each level-k node"""
        gap = 0.0
        current = values
        for k in range(tree.M - 1, -1, -1):
            current = conditional_expectation(tree, current, k)
            direct = values.reshape((tree.branching ** k, -1) + values.shape[1:]).mean(axis=1)
            gap = max(gap, float(np.max(np.abs(current - direct))))
        return gap

    def _isometry_gap(self, tree, representation):
        """E|sum_i int gamma_i dw_i|^2 against sum_i sum_k dt E|gamma_i,k|^2, relative"""
        integral = sum(ito_integral(gamma, i, tree.M) for i, gamma in enumerate(representation.gamma))
        left = float(np.mean(np.sum(integral * integral, axis=1)))
        right = sum(
            tree.dt * float(np.mean(np.sum(gamma[k] * gamma[k], axis=1)))
            for gamma in representation.gamma for k in range(tree.M)
        )
        scale = max(abs(left), abs(right))
        return abs(left - right) / scale if scale > 0 else 0.0

    def _check_wiener_square(self, report, tree, grid):
        """X = w_1(T)^2 has mean T and loadings gamma_1 = 2 w_1(t_k), every other channel zero"""
        w = tree.wiener(tree.M)[:, 0]
        X = TerminalVariable(tree, grid, np.repeat((w * w)[:, None], grid.n_x, axis=1))
        representation = martingale_representation(X)
        mean_error = float(np.max(np.abs(representation.mean - tree.T)))
        gamma_error = 0.0
        for k in range(tree.M):
            expected = 2.0 * tree.wiener(k)[:, :1]
            gamma_error = max(gamma_error, float(np.max(np.abs(representation.gamma[0][k] - expected))))
            for i in range(1, tree.N):
                gamma_error = max(gamma_error, float(np.max(np.abs(representation.gamma[i][k]))))
        provenance = f"N = {tree.N}, M = {tree.M}, closed form"
        category = f"N = {tree.N}"
        report.assert_at_most(category, "w(T)^2 mean equals T", mean_error, EXACTNESS, provenance)
        report.assert_at_most(category, "w(T)^2 loading equals 2w", gamma_error, EXACTNESS, provenance)
        report.assert_at_most(category, "w(T)^2 residual vanishes", representation.residual.max_abs(), EXACTNESS,
                              provenance)
