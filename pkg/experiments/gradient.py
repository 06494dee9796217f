import logging
import numpy as np

from spde.backward_solver import solve_backward_path
from spde.grid_norms import h0_squared, weighted_h1_squared
from spde.noise_tree import PathView
from .data import build_setting, report_parameters
from .report import ExperimentReport

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

RATIO_SLACK = 1.05
SOURCE_MODES = 4


class GradientEstimateExperiment:
    """
    Solves du/dt + (A* - K) u = -h, u(T) = 0 along one deterministic path and
    compares sup_t ||u||^2_wH1 + M_w sup_t ||u||^2_H0 with (1 + eps)/2 * int ||h||^2 dt.
    """

    name = "gradient_estimate_experiment"
    description = "weighted-H1 gradient bound for the K-shifted deterministic backward problem, swept over K and M_w"
    defaults = {"k_list": "5, 10, 20, 50", "m_weights": "1, 5, 10", "epsilon": 0.5, "path_steps": 200}

    def __init__(self, config):
        self.config = config
        self.K_list = sorted(config.option_list("k_list", [5.0, 10.0, 20.0, 50.0]))
        self.M_weights = config.option_list("m_weights", [1.0, 5.0, 10.0])
        self.epsilon = config.option_float("epsilon", self.defaults["epsilon"])
        self.path_steps = config.option_int("path_steps", self.defaults["path_steps"])

    def run(self):
        config = self.config
        grid, tree, coeffs = build_setting(config)
        report = ExperimentReport(self.name, report_parameters(
            config, coeffs, grid, tree,
            K_list=" ".join(f"{K:g}" for K in self.K_list),
            M_weights=" ".join(f"{w:g}" for w in self.M_weights),
            epsilon=self.epsilon, path_steps=self.path_steps,
        ))
        logger.info(f"Running {self.name} on {coeffs.name}: K {self.K_list}, M_w {self.M_weights}")

        rng = np.random.default_rng(config.seed)
        amplitudes = rng.standard_normal(SOURCE_MODES)
        T, steps = config.T, self.path_steps
        dt = T / steps

        def source(x, t):
            modes = np.arange(1, SOURCE_MODES + 1)
            profile = np.sin(np.pi * np.outer(x - grid.x_lo, modes) / (grid.x_hi - grid.x_lo)) @ amplitudes
            return profile * (1.0 + 0.5 * t)

        times = np.arange(steps) * dt
        rhs = 0.5 * (1.0 + self.epsilon) * sum(dt * float(h0_squared(grid, source(grid.nodes, t))) for t in times)
        b_levels = [
            coeffs.evaluate("b", grid.edges, PathView(coeffs.N, k, k * dt))[0, :, 0, 0] for k in range(steps + 1)
        ]

        self._check_zero_source(report, coeffs, grid, steps, b_levels)
        rows = []
        ratios = {weight: [] for weight in self.M_weights}
        for K in self.K_list:
            u = solve_backward_path(coeffs, grid, T, steps, np.zeros(grid.n_x), xi=source, K=K)
            gradient = max(float(weighted_h1_squared(grid, u[k], b_levels[k])) for k in range(steps + 1))
            energy = max(float(h0_squared(grid, u[k])) for k in range(steps + 1))
            for weight in self.M_weights:
                lhs = gradient + weight * energy
                ratio = lhs / rhs
                ratios[weight].append(ratio)
                rows.append([K, weight, lhs, rhs, ratio])
        report.add_table("gradient", rows, ["K", "M_weight", "lhs", "rhs", "ratio"])

        provenance = f"single-path backward solve, {steps} steps, seed={config.seed}"
        largest = self.K_list[-1]
        for weight in self.M_weights:
            report.assert_at_most(
                "Gradient bound", f"ratio at K = {largest:g}, M_w = {weight:g}", ratios[weight][-1], RATIO_SLACK, provenance
            )
            self._check_monotone(report, weight, ratios[weight], provenance)
        return report

    def _check_zero_source(self, report, coeffs, grid, steps, b_levels):
        u = solve_backward_path(coeffs, grid, self.config.T, steps, np.zeros(grid.n_x), xi=None, K=self.K_list[0])
        lhs = max(float(weighted_h1_squared(grid, u[k], b_levels[k])) + float(h0_squared(grid, u[k]))
                  for k in range(steps + 1))
        report.assert_at_most("Gradient bound", "h = 0 gives LHS = 0", lhs, 0.0, "single-path backward solve, h = 0")

    def _check_monotone(self, report, weight, values, provenance):
        if len(values) < 2:
            report.skip("Gradient bound", f"ratio decreasing in K, M_w = {weight:g}", provenance,
                        detail="needs at least two K values")
            return
        steps = np.diff(values)
        report.assert_true(
            "Gradient bound", f"ratio decreasing in K, M_w = {weight:g}", bool(np.all(steps < 0)), provenance,
            detail="ratios " + ", ".join(f"{value:.6g}" for value in values), value=float(np.max(steps)),
        )
