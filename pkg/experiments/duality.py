import logging
import numpy as np

from spde.backward_solver import BackwardProblem, BackwardSolver
from spde.forward_solver import ForwardSolver
from .data import (
    build_setting, pairing_terminal, random_backward_problem, random_forward_problem,
    report_parameters, zero_backward_problem, zero_forward_problem,
)
from .report import ExperimentReport, pairing_mismatch

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


class DualityExperiment:
    """Pairs random forward data with random backward data and checks the duality identities"""

    name = "verify_duality"
    description = "forward/backward pairing identity and its operator-wise parts (L, M_i, Lambda), Q-family included"
    defaults = {"n_trials": 20, "tolerance": 1e-11}

    def __init__(self, config):
        """
        Initialize the duality experiment

        Args:
            config (RunConfig): Run configuration
        """
        self.config = config
        self.tolerance = config.option_float("tolerance", self.defaults["tolerance"])

    def run(self):
        """
        Run every duality check

        Returns:
            ExperimentReport: Check records and the per-trial table
        """
        config = self.config
        grid, tree, coeffs = build_setting(config)
        report = ExperimentReport(self.name, report_parameters(config, coeffs, grid, tree))
        logger.info(f"Running {self.name} on {coeffs.name} with {tree}, n_x = {grid.n_x}, {config.n_trials} trials")

        forward = ForwardSolver(coeffs, grid, tree)
        backward = BackwardSolver(coeffs, grid, tree, forward.operators)
        rows = []

        self._check_zero_inputs(report, forward, backward)

        rng = np.random.default_rng(config.seed)
        worst = {}
        for trial in range(config.n_trials):
            fp = random_forward_problem(coeffs, grid, tree, rng)
            bp = random_backward_problem(coeffs, grid, tree, rng)
            for identity, left, right in self._pairings(forward, backward, fp, bp):
                mismatch = pairing_mismatch(left, right)
                worst[identity] = max(worst.get(identity, 0.0), mismatch)
                rows.append([trial, identity, sum(left), sum(right), mismatch])

        provenance = f"forward scheme + adjoint route, seed={config.seed}, trials={config.n_trials}"
        for identity, value in worst.items():
            category = "Pairing" if identity == "full" else "Operators"
            report.assert_at_most(category, f"{identity} identity", value, self.tolerance, provenance)

        self._check_q_family(report, forward, backward, coeffs, grid, tree, rows)
        report.add_table("trials", rows, ["trial", "identity", "left", "right", "mismatch"])
        return report

    def _pairings(self, forward, backward, fp, bp):
        """(identity, left terms, right terms) for one random pair"""
        grid, tree = fp.grid, fp.tree
        M = tree.M
        u = forward.solve(fp)
        solution = backward.solve_adjoint(bp)
        yield (
            "full",
            [u.inner(bp.xi), pairing_terminal(grid, u[M], bp.Psi.values)],
            [fp.phi.inner(solution.p_drift)]
            + [fp.h[i].inner(solution.chi[i]) for i in range(tree.N)]
            + [pairing_terminal(grid, fp.Phi, solution.p_initial)],
        )

        coeffs = fp.coeffs
        from_xi = backward.solve_adjoint(BackwardProblem(coeffs, grid, tree, xi=bp.xi))
        from_Psi = backward.solve_adjoint(BackwardProblem(coeffs, grid, tree, Psi=bp.Psi))
        L_phi = forward.apply_L(fp.phi)
        yield "L", [L_phi.inner(bp.xi)], [fp.phi.inner(from_xi.p_drift)]
        yield "I_T L", [pairing_terminal(grid, L_phi[M], bp.Psi.values)], [fp.phi.inner(from_Psi.p_drift)]
        for i in range(tree.N):
            M_h = forward.apply_M(i, fp.h[i])
            yield f"M_{i + 1}", [M_h.inner(bp.xi)], [fp.h[i].inner(from_xi.chi[i])]
        Lambda_Phi = forward.apply_Lambda(fp.Phi)
        yield "Lambda", [Lambda_Phi.inner(bp.xi)], [pairing_terminal(grid, fp.Phi, from_xi.p_initial)]
        yield "I_T Lambda", [pairing_terminal(grid, Lambda_Phi[M], bp.Psi.values)], [
            pairing_terminal(grid, fp.Phi, from_Psi.p_initial)
        ]

    def _check_zero_inputs(self, report, forward, backward):
        coeffs, grid, tree = forward.coeffs, forward.grid, forward.tree
        fp = zero_forward_problem(coeffs, grid, tree)
        bp = zero_backward_problem(coeffs, grid, tree)
        values = []
        for identity, left, right in self._pairings(forward, backward, fp, bp):
            values.extend(left + right)
        largest = max(abs(value) for value in values)
        report.assert_true(
            "Pairing", "zero inputs pair to zero", largest == 0.0, "forward scheme + adjoint route, zero data",
            detail=f"largest pairing term {largest:.3e}", value=largest,
        )

    def _check_q_family(self, report, forward, backward, coeffs, grid, tree, rows):
        """The same pairing with every B_i = 0 on both sides"""
        q_forward = forward.q_family()
        q_backward = backward.with_damping(0.0, include_noise=False)
        rng = np.random.default_rng(self.config.seed + 1)
        worst = 0.0
        for trial in range(self.config.n_trials):
            fp = random_forward_problem(coeffs, grid, tree, rng)
            bp = random_backward_problem(coeffs, grid, tree, rng)
            identity, left, right = next(self._pairings(q_forward, q_backward, fp, bp))
            mismatch = pairing_mismatch(left, right)
            worst = max(worst, mismatch)
            rows.append([trial, "Q full", sum(left), sum(right), mismatch])
        provenance = f"forward scheme B=0 + adjoint route B=0, seed={self.config.seed + 1}"
        report.assert_at_most("Q-family", "full identity with B_i = 0", worst, self.tolerance, provenance)
