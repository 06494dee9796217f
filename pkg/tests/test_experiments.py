import unittest
import sys
import os
import tempfile
from unittest.mock import patch

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from experiments import EXPERIMENTS, create_experiment, list_experiments
from experiments.energy import SERIES
from experiments.report import FAIL, MONITOR, PASS, ExperimentReport, pairing_mismatch, relative_mismatch
from spde.errors import GuardError
from utils.config import OUTPUT_DIR_ENV, RunConfig, load_config

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


def small_config(experiment, **kwargs):
    settings = dict(experiment=experiment, n_x=8, N=1, M=4, T=1.0, preset="transport", n_trials=3, seed=11)
    settings.update(kwargs)
    return RunConfig(**settings).validate()


def checks_by_name(report):
    return {record.check: record for record in report.records}


class TestExperimentReport(unittest.TestCase):
    """Tests for check records and the pass/fail verdict"""

    def test_verdict(self):
        report = ExperimentReport("demo", {})
        report.assert_at_most("A", "small", 1e-13, 1e-12, "here")
        report.monitor("A", "watched", 3.0, "here")
        report.skip("A", "skipped", "here")
        self.assertTrue(report.passed)
        report.assert_between("A", "ratio", 5.0, 1.0, 2.0, "here")
        self.assertFalse(report.passed)
        self.assertEqual([record.check for record in report.failures()], ["ratio"])
        self.assertEqual(report.counts(), {"pass": 1, "fail": 1, "monitor": 1, "skipped": 1})
        with self.assertRaises(ValueError):
            report.record("A", "bad", 0.0, "", "unknown", "here")

    def test_mismatch_helpers(self):
        self.assertEqual(relative_mismatch(0.0, 0.0), 0.0)
        self.assertAlmostEqual(relative_mismatch(2.0, 1.0), 0.5)
        self.assertEqual(pairing_mismatch([0.0], [0.0]), 0.0)
        self.assertAlmostEqual(pairing_mismatch([1.0, -1.0], [0.5]), 0.5 / 2.5)


class TestRegistry(unittest.TestCase):
    """Tests for the experiment registry"""

    def test_every_experiment_listed(self):
        listing = list_experiments().splitlines()
        self.assertEqual(len(listing), len(EXPERIMENTS))
        for name in EXPERIMENTS:
            self.assertTrue(any(line.startswith(f"{name}:") for line in listing))

    def test_create(self):
        experiment = create_experiment(small_config("verify_duality"))
        self.assertEqual(experiment.name, "verify_duality")


class TestVerificationExperiments(unittest.TestCase):
    """Small end-to-end runs of the asserting experiments"""

    def test_duality(self):
        report = create_experiment(small_config("verify_duality")).run()
        self.assertTrue(report.passed, [record.check for record in report.failures()])
        self.assertIn("trials", report.tables)
        self.assertGreaterEqual(len(report.tables["trials"]), 3)

    def test_duality_with_two_noises(self):
        report = create_experiment(small_config("verify_duality", N=2, M=3, n_x=6, n_trials=2)).run()
        self.assertTrue(report.passed, [record.check for record in report.failures()])

    def test_semigroup(self):
        config = small_config("verify_semigroup", options={"windows": "0-3, 1-2"})
        report = create_experiment(config).run()
        self.assertTrue(report.passed, [record.check for record in report.failures()])
        self.assertEqual(set(report.tables["windows"]["tau"]), {0, 1})

    def test_semigroup_rejects_bad_window(self):
        config = small_config("verify_semigroup", options={"windows": "2-4"})
        with self.assertRaises(GuardError):
            create_experiment(config).run()

    def test_solver_agreement(self):
        config = small_config("solver_agreement", solver="neumann", tol=1e-10, max_iter=60)
        report = create_experiment(config).run()
        checks = checks_by_name(report)
        self.assertEqual(checks["series terminates within M + 1 iterations"].status, PASS)
        self.assertLessEqual(checks["series terminates within M + 1 iterations"].value, 5)
        self.assertEqual(checks["observed rate <= 1.1 x ||P*|| estimate"].status, PASS)
        self.assertEqual(checks["observed rate / ||P*|| estimate"].status, MONITOR)
        self.assertTrue(report.passed, [record.check for record in report.failures()])
        self.assertNotIn("p", report.tables)

    def test_solver_agreement_exports_fields(self):
        config = small_config("solver_agreement", N=2, M=2, n_x=5, tol=1e-10, max_iter=60,
                              options={"export_fields": "true"})
        report = create_experiment(config).run()
        for name in ("agreement", "p", "chi_1", "chi_2", "A_level0"):
            self.assertIn(name, report.tables)
        # one row per (level, node, grid point) over levels 0..M
        self.assertEqual(len(report.tables["p"]), (1 + 4 + 16) * 5)
        self.assertEqual(list(report.tables["A_level0"].columns), ["node_index", "row", "col", "value"])

    def test_martingale(self):
        config = small_config("martingale_check", options={"levels": "3", "samples": "3"})
        report = create_experiment(config).run()
        self.assertTrue(report.passed, [record.check for record in report.failures()])

    def test_conditions(self):
        config = small_config("certify_conditions", options={"draws": "20"})
        report = create_experiment(config).run()
        self.assertTrue(report.passed, [record.check for record in report.failures()])
        frame = report.tables["conditions"]
        self.assertIn("margin", frame.columns)

    def test_contraction_on_heat(self):
        config = small_config("contraction_report", preset="heat", options={"k_list": "0, 5"})
        report = create_experiment(config).run()
        self.assertTrue(report.passed)
        self.assertEqual(checks_by_name(report)["estimates with B_i = 0"].status, PASS)
        self.assertEqual(len(report.tables["contraction"]), 2)


class TestMonitoringExperiments(unittest.TestCase):
    """Structural checks for the experiments whose headline values are monitored"""

    def test_energy_ratios(self):
        config = small_config("energy_ratio_report", options={"refinements": "2x4, 4x8"})
        report = create_experiment(config).run()
        table = report.tables["ratios"]
        self.assertEqual(list(table["M"]), [2, 4])
        self.assertEqual(list(table.columns), ["M", "n_x", "rho_f1", "rho_f2", "rho_1", "rho_2"])

    def test_energy_zero_data_skips(self):
        config = small_config("energy_ratio_report", options={"refinements": "2x4", "data": "zero"})
        report = create_experiment(config).run()
        self.assertTrue(report.passed)
        self.assertTrue(all(record.status == "skipped" for record in report.records
                            if record.check.endswith("drift")))
        self.assertTrue(report.tables["ratios"].empty)

    def test_robustness(self):
        config = small_config("robustness_experiment", options={"epsilons": "0.001, 0.002"})
        report = create_experiment(config).run()
        self.assertEqual(checks_by_name(report)["d(0)"].status, PASS)
        self.assertIn("distances", report.tables)

    def test_gradient(self):
        config = small_config("gradient_estimate_experiment", preset="driftful",
                              options={"k_list": "5, 10", "m_weights": "1", "path_steps": "20"})
        report = create_experiment(config).run()
        self.assertEqual(checks_by_name(report)["h = 0 gives LHS = 0"].status, PASS)
        self.assertEqual(len(report.tables["gradient"]), 2)

    def test_heat_convergence_table(self):
        config = small_config("heat_convergence", preset="heat", options={
            "time_n_x": "15", "time_steps": "4, 8", "space_steps": "200", "space_n_x": "3, 7",
        })
        report = create_experiment(config).run()
        table = report.tables["errors"]
        self.assertEqual(len(table), 8)
        self.assertTrue((table["max_error"] > 0).all())
        convergence = [record for record in report.records if record.category == "Convergence"]
        self.assertEqual(len(convergence), 4)
        self.assertTrue(all(record.status in (PASS, FAIL) for record in convergence))


class TestArchivedEnergyConfigs(unittest.TestCase):
    """The energy-ratio runs kept under configs/ pass with their own parameters"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _run(self, name):
        with patch.dict(os.environ, {OUTPUT_DIR_ENV: self.tmp.name}):
            config = load_config(os.path.join(CONFIG_DIR, name))
        return create_experiment(config).run()

    def test_transport_asserts_every_series(self):
        report = self._run("energy_ratio_transport.ini")
        self.assertTrue(report.passed, [(record.check, record.value) for record in report.failures()])
        checks = checks_by_name(report)
        for key in SERIES:
            self.assertEqual(checks[f"{key} drift"].status, PASS, key)
            self.assertLessEqual(checks[f"{key} drift"].value, 2.0)
        self.assertEqual(checks["rho_2 drift over all refinements"].status, MONITOR)

    def test_near_degenerate_monitors_second_inequality(self):
        report = self._run("energy_ratio_near_degenerate.ini")
        self.assertTrue(report.passed, [(record.check, record.value) for record in report.failures()])
        self.assertEqual(checks_by_name(report)["rho_2 drift"].status, MONITOR)


if __name__ == '__main__':
    unittest.main()
