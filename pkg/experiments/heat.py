import logging
import numpy as np

from spde.backward_solver import solve_backward_path
from spde.coefficients import get_preset
from spde.forward_solver import solve_forward_path
from spde.grid_norms import build_grid
from .data import report_parameters
from .report import ExperimentReport

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

TIME_BAND = (1.4, 2.6)
SPACE_BAND = (2.8, 5.2)


def exact_heat(x, t):
    """sin(pi x) exp(-pi^2 t): the heat solution on (0, 1) with zero boundary values"""
    return np.sin(np.pi * x) * np.exp(-np.pi ** 2 * t)


class HeatConvergenceExperiment:
    """Single-path forward and backward heat solves against the analytic solution"""

    name = "heat_convergence"
    description = "first order in dt at fine h and second order in h at fine dt, forward and backward, against sin(pi x) exp(-pi^2 t)"
    defaults = {"horizon": 0.1, "time_n_x": 255, "time_steps": "10, 20", "space_steps": 20000, "space_n_x": "15, 31"}

    def __init__(self, config):
        self.config = config
        self.horizon = config.option_float("horizon", self.defaults["horizon"])
        self.time_n_x = config.option_int("time_n_x", self.defaults["time_n_x"])
        self.time_steps = config.option_list("time_steps", [10, 20], cast=int)
        self.space_steps = config.option_int("space_steps", self.defaults["space_steps"])
        self.space_n_x = config.option_list("space_n_x", [15, 31], cast=int)

    def run(self):
        config = self.config
        report = ExperimentReport(self.name, report_parameters(
            config, horizon=self.horizon, time_n_x=self.time_n_x, space_steps=self.space_steps,
        ))
        coeffs = get_preset("heat", 1)
        if config.preset != "heat":
            logger.info(f"{self.name} always uses the heat preset (config names {config.preset!r})")
        logger.info(f"Running {self.name}: T = {self.horizon}, steps {self.time_steps}, n_x {self.space_n_x}")

        rows = []
        for direction in ("forward", "backward"):
            time_errors = [self._error(coeffs, direction, self.time_n_x, M) for M in self.time_steps]
            for M, error in zip(self.time_steps, time_errors):
                rows.append([direction, "time", M, self.time_n_x, error])
            self._check_ratios(report, direction, "time", time_errors, TIME_BAND,
                               f"single-path {direction} solve, n_x = {self.time_n_x}")
            space_errors = [self._error(coeffs, direction, n_x, self.space_steps) for n_x in self.space_n_x]
            for n_x, error in zip(self.space_n_x, space_errors):
                rows.append([direction, "space", self.space_steps, n_x, error])
            self._check_ratios(report, direction, "space", space_errors, SPACE_BAND,
                               f"single-path {direction} solve, M = {self.space_steps}")
        report.add_table("errors", rows, ["direction", "study", "M", "n_x", "max_error"])
        return report

    def _error(self, coeffs, direction, n_x, M):
        """Max nodal error at the far end of the solve"""
        grid = build_grid(0.0, 1.0, n_x)
        x = grid.nodes
        T = self.horizon
        if direction == "forward":
            u = solve_forward_path(coeffs, grid, T, M, exact_heat(x, 0.0))
            return float(np.max(np.abs(u[M] - exact_heat(x, T))))
        # the backward solve runs from t = T to 0 and decays by the same factor
        u = solve_backward_path(coeffs, grid, T, M, exact_heat(x, 0.0))
        return float(np.max(np.abs(u[0] - exact_heat(x, T))))

    def _check_ratios(self, report, direction, study, errors, band, provenance):
        low, high = band
        for coarse, fine in zip(errors[:-1], errors[1:]):
            ratio = coarse / fine if fine > 0 else np.inf
            report.assert_between("Convergence", f"{direction} {study} error ratio", ratio, low, high, provenance,
                                  detail=f"errors {coarse:.6e} -> {fine:.6e}")
