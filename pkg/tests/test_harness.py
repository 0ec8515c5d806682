"""
Tests for the harness: slope fitting, lemma experiments, identity suites,
experiment configuration and report writers.
"""
import json
import os
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from openpyxl import load_workbook

from config import FAIL, PASS
from errors import DegenerateInput, InvalidParameterError, ResolutionError
from harness.experiment import ExperimentConfig, kinked_amplitude, run_experiment, two_mode_profile
from harness.identities import operator_identities
from harness.lemmas import (
    c1_norm,
    decorrelation_test,
    modulated_amplitude,
    mollifier_rate_test,
    normalized_norm,
    packet_sum,
    saturating_pair,
    semigroup_smoothing_test,
    stationary_phase_test,
)
from harness.slopes import SlopeReport, fit_loglog_slope
from output.report_writer import generate_report_workbook, to_json, write_csv, write_json
from spectral.field import GridSpec, ModelParams, SpectralField
from spectral.sampling import random_field

SIGMAS = [4, 8, 16, 32]
KAPPAS = [4, 8, 16, 32]


class TestSlopeFit(unittest.TestCase):
    """Test cases for the log-log fit."""

    def test_exact_power_law(self):
        """y = x^2 fits slope 2 with R^2 = 1."""
        xs = [1, 2, 4, 8]
        report = fit_loglog_slope(xs, [x ** 2 for x in xs], predicted=2.0, tolerance=0.01)
        self.assertAlmostEqual(report.measured, 2.0, places=10)
        self.assertAlmostEqual(report.r_squared, 1.0, places=10)
        self.assertTrue(report.passed)

    def test_negative_exponent_and_intercept(self):
        """y = 3 x^(-1/2) recovers both slope and intercept."""
        xs = [2.0, 4.0, 8.0, 16.0]
        report = fit_loglog_slope(xs, [3.0 * x ** -0.5 for x in xs])
        self.assertAlmostEqual(report.measured, -0.5, places=10)
        self.assertAlmostEqual(report.intercept, np.log(3.0), places=10)

    def test_one_sided_bound(self):
        """An upper bound accepts faster decay that a two-sided check rejects."""
        common = dict(label="bound", measured=-3.0, intercept=0.0, r_squared=1.0, stderr=0.0,
                      confidence=(-3.0, -3.0), predicted=-0.5, tolerance=0.2)
        self.assertTrue(SlopeReport(one_sided=True, **common).passed)
        self.assertFalse(SlopeReport(one_sided=False, **common).passed)
        self.assertFalse(SlopeReport(one_sided=True, **{**common, 'measured': 0.0}).passed)

    def test_bound_survives_dict_round_trip(self):
        """from_dict restores the one-sided flag."""
        report = fit_loglog_slope([1, 2, 4], [1, 0.5, 0.25], predicted=-0.5, tolerance=0.2, one_sided=True)
        restored = SlopeReport.from_dict(report.to_dict())
        self.assertTrue(restored.one_sided)
        self.assertEqual(restored.status, report.status)

    def test_rejects_bad_data(self):
        """Fewer than 3 points or non-positive data raise."""
        with self.assertRaises(InvalidParameterError):
            fit_loglog_slope([1, 2], [1, 2])
        with self.assertRaises(InvalidParameterError):
            fit_loglog_slope([1, 2, 4], [1, -2, 4])
        with self.assertRaises(InvalidParameterError):
            fit_loglog_slope([2, 2, 2], [1, 2, 4])


class TestNorms(unittest.TestCase):
    """Test cases for the quadrature helpers of the decorrelation sweep."""

    def test_normalized_norm(self):
        """sin has normalized L^2 norm 1/sqrt(2) and sup norm 1."""
        x = 2.0 * np.pi * np.arange(1024) / 1024
        self.assertAlmostEqual(normalized_norm(np.sin(x), 2.0), np.sqrt(0.5), places=12)
        self.assertAlmostEqual(normalized_norm(np.sin(x), np.inf), 1.0, places=12)

    def test_c1_norm(self):
        """sup |sin| + sup |cos| = 2 up to the difference error."""
        x = 2.0 * np.pi * np.arange(4096) / 4096
        self.assertAlmostEqual(c1_norm(np.sin(x), 2.0 * np.pi / 4096), 2.0, places=5)


class TestDecorrelation(unittest.TestCase):
    """Test cases for the decorrelation experiment."""

    def test_constant_amplitude_vanishes(self):
        """A constant f decorrelates exactly; the estimate holds trivially."""
        report = decorrelation_test(lambda x: np.full_like(x, 2.0), two_mode_profile, SIGMAS, 2.0)
        self.assertTrue(report.vanishing)
        self.assertTrue(report.passed)
        self.assertIsNone(report.slope)

    def test_kinked_amplitude_decays_at_least_at_rate(self):
        """A C^1 amplitude decays no slower than sigma^(-1/p)."""
        for p in (2.0, 4.0):
            report = decorrelation_test(kinked_amplitude, two_mode_profile, SIGMAS, p)
            self.assertIsNotNone(report.slope)
            self.assertTrue(report.slope.one_sided)
            self.assertLessEqual(report.slope.measured, -1.0 / p + 0.2)
            self.assertTrue(report.bounded)
            self.assertEqual(report.status, PASS)

    def test_rows_carry_both_sides(self):
        """One row per sigma with LHS, RHS and their ratio."""
        report = decorrelation_test(kinked_amplitude, two_mode_profile, SIGMAS, 2.0)
        rows = report.rows()
        self.assertEqual([row['sigma'] for row in rows], [4.0, 8.0, 16.0, 32.0])
        for row in rows:
            self.assertAlmostEqual(row['ratio'], row['lhs'] / row['rhs'])

    def test_non_integer_sigma(self):
        """sigma must be an integer."""
        with self.assertRaises(InvalidParameterError):
            decorrelation_test(kinked_amplitude, two_mode_profile, [4.5, 8, 16], 2.0)

    def test_nodes_must_divide(self):
        """The grid must hold whole periods of g(sigma .)."""
        with self.assertRaises(InvalidParameterError):
            decorrelation_test(kinked_amplitude, two_mode_profile, [4, 8, 16], 2.0, nodes=1000)

    def test_under_resolved(self):
        """Fewer than 8 points per period is a resolution error."""
        with self.assertRaises(ResolutionError) as ctx:
            decorrelation_test(kinked_amplitude, two_mode_profile, [4, 8, 16], 2.0, nodes=64)
        self.assertEqual(ctx.exception.required, 128)

    def test_degenerate_input(self):
        """f = 0 leaves nothing to compare."""
        with self.assertRaises(DegenerateInput):
            decorrelation_test(np.zeros_like, two_mode_profile, SIGMAS, 2.0)

    def test_too_few_sigmas(self):
        """Two sigmas cannot be fitted."""
        with self.assertRaises(InvalidParameterError):
            decorrelation_test(kinked_amplitude, two_mode_profile, [4, 8], 2.0)

    def test_saturating_pair_hits_rate(self):
        """The sawtooth pair decays exactly at sigma^(-1/p), checked on both sides."""
        for p in (2.0, 4.0):
            report = decorrelation_test(*saturating_pair(p), SIGMAS, p, saturating=True)
            self.assertIsNotNone(report.sharp)
            self.assertFalse(report.sharp.one_sided)
            self.assertLessEqual(abs(report.sharp.measured + 1.0 / p), 0.2)
            self.assertAlmostEqual(report.sharp.measured, -1.0 / p, places=6)
            expected = [(4.0 * np.pi * s) ** (-1.0 / p) for s in SIGMAS]
            np.testing.assert_allclose(report.details['power_gap'], expected, rtol=1e-8)
            self.assertEqual(report.status, PASS)

    def test_power_gap_dominates_literal_side(self):
        """| ||f g||_p - ||f||_p ||g||_p | never exceeds the p-th power gap."""
        report = decorrelation_test(*saturating_pair(2.0), SIGMAS, 2.0, saturating=True)
        for left, gap in zip(report.lhs, report.details['power_gap']):
            self.assertLessEqual(left, gap)

    def test_fast_decay_fails_two_sided_fit(self):
        """A pair decaying faster than sigma^(-1/p) is not mistaken for a saturating one."""
        report = decorrelation_test(kinked_amplitude, lambda x: 1.0 + 0.5 * np.sin(x), SIGMAS, 4.0, saturating=True)
        self.assertFalse(report.sharp.passed)
        self.assertEqual(report.status, FAIL)

    def test_constant_amplitude_power_gap_vanishes(self):
        """A constant f leaves only rounding in the p-th power gap, so no saturating fit exists."""
        constant = lambda x: np.full_like(x, 2.0)
        report = decorrelation_test(constant, two_mode_profile, SIGMAS, 2.0)
        self.assertLess(max(report.details['power_gap']), 1e-6)
        with self.assertRaises(DegenerateInput):
            decorrelation_test(constant, two_mode_profile, SIGMAS, 2.0, saturating=True)

    def test_saturating_needs_finite_p(self):
        """p = inf has no p-th power gap."""
        with self.assertRaises(InvalidParameterError):
            saturating_pair(np.inf)
        with self.assertRaises(InvalidParameterError):
            decorrelation_test(kinked_amplitude, two_mode_profile, SIGMAS, np.inf, saturating=True)


class TestStationaryPhase(unittest.TestCase):
    """Test cases for the stationary-phase experiment."""

    @classmethod
    def setUpClass(cls):
        cls.grid = GridSpec(96)
        cls.f = packet_sum(cls.grid, KAPPAS)

    def test_modulated_amplitude(self):
        """A smooth amplitude keeps the kappa^(-1) gain."""
        report = stationary_phase_test(modulated_amplitude(self.grid), self.f, KAPPAS, 2.0)
        self.assertIsNotNone(report.slope)
        self.assertLess(abs(report.slope.measured + 1.0), 0.2)
        self.assertEqual(report.status, PASS)

    def test_constant_amplitude(self):
        """A constant amplitude still gains through |grad|^(-1)."""
        a = SpectralField.from_physical(np.ones(self.grid.physical_shape), self.grid)
        report = stationary_phase_test(a, self.f, KAPPAS, 2.0)
        self.assertTrue(report.passed)

    def test_no_high_frequencies(self):
        """f = 0 has no energy above any kappa."""
        with self.assertRaises(DegenerateInput):
            stationary_phase_test(modulated_amplitude(self.grid), SpectralField.zeros(self.grid), KAPPAS, 2.0)

    def test_kappa_beyond_grid(self):
        """kappa at or past N/2 is rejected."""
        with self.assertRaises(InvalidParameterError):
            stationary_phase_test(modulated_amplitude(self.grid), self.f, [4, 8, 48], 2.0)

    def test_vector_input(self):
        """Only scalar fields are accepted."""
        v = random_field(self.grid, 1, band=2, seed=1)
        with self.assertRaises(InvalidParameterError):
            stationary_phase_test(modulated_amplitude(self.grid), v, KAPPAS, 2.0)


class TestSmoothing(unittest.TestCase):
    """Test cases for the semigroup and mollifier experiments."""

    def test_semigroup_rate(self):
        """The smoothing norm follows t^(-s/(2 alpha)) with the sharp constant."""
        grid = GridSpec(32)
        model = ModelParams(nu=1.0, alpha=1.25)
        report = semigroup_smoothing_test(grid, model, 1.0, [1e-3, 4e-3, 1.6e-2, 6.4e-2])
        self.assertTrue(report.passed)
        self.assertLess(abs(report.slope.measured + 0.4), 0.05)
        for ratio in report.ratios:
            self.assertLessEqual(ratio, 1.0 + 1e-12)

    def test_semigroup_rejects_zero_order(self):
        """s must be positive."""
        with self.assertRaises(InvalidParameterError):
            semigroup_smoothing_test(GridSpec(8), ModelParams(nu=1.0, alpha=1.25), 0.0, [0.1, 0.2, 0.4])

    def test_mollifier_rate(self):
        """A symmetric mollifier converges at second order."""
        f = random_field(GridSpec(32), 0, band=2, seed=3)
        report = mollifier_rate_test(f, [1 / 4, 1 / 8, 1 / 16, 1 / 32])
        self.assertTrue(report.passed)
        self.assertLess(abs(report.slope.measured - 2.0), 0.2)

    def test_mollifier_constant(self):
        """A constant field is already smooth."""
        grid = GridSpec(8)
        with self.assertRaises(DegenerateInput):
            mollifier_rate_test(SpectralField.zeros(grid), [1 / 4, 1 / 8, 1 / 16])


class TestOperatorIdentities(unittest.TestCase):
    """Test cases for the randomized operator identities."""

    def test_all_pass(self):
        """Every operator identity holds to operator tolerance."""
        reports = operator_identities(GridSpec(16), count=4, seed=7)
        self.assertEqual(len(reports), 6)
        for report in reports:
            self.assertTrue(report.passed, f"{report.name}: {report.residual:.3e}")

    def test_needs_a_field(self):
        """count=0 is rejected."""
        with self.assertRaises(InvalidParameterError):
            operator_identities(GridSpec(8), count=0)


class TestExperimentConfig(unittest.TestCase):
    """Test cases for experiment configuration."""

    def test_defaults(self):
        """Unset sweep and exponents take the experiment defaults."""
        config = ExperimentConfig("decorrelation")
        self.assertEqual(config.sweep, [4.0, 8.0, 16.0, 32.0])
        self.assertEqual(config.exponents, [2.0, 4.0])
        self.assertEqual(len(config.seeds), 1)

    def test_unknown_experiment(self):
        """Unknown names are rejected."""
        with self.assertRaises(InvalidParameterError):
            ExperimentConfig("turbulence")

    def test_short_sweep(self):
        """A sweep needs three distinct values."""
        with self.assertRaises(InvalidParameterError):
            ExperimentConfig("mollifier", sweep=[0.25, 0.25, 0.125])

    def test_from_preset(self):
        """A preset supplies alpha and the lambda sweep."""
        config = ExperimentConfig.from_preset("A2", "blocks_scaling")
        self.assertEqual(config.sweep, [8.0, 16.0, 32.0])
        self.assertEqual(config.alpha, 1.5)
        self.assertEqual(config.regime, "A2")
        self.assertEqual(config.preset, "A2")

    def test_preset_overrides(self):
        """Explicit values win over the preset."""
        config = ExperimentConfig.from_preset("A1", "semigroup", grid=16, report=None)
        self.assertEqual(config.grid, 16)
        self.assertEqual(config.alpha, 1.25)


class TestRunExperiment(unittest.TestCase):
    """Test cases for running experiments end to end."""

    def test_semigroup_experiment(self):
        """Both smoothing orders pass and produce one row per time."""
        result = run_experiment(ExperimentConfig("semigroup", grid=32), write=False)
        self.assertEqual(result.status, PASS)
        self.assertEqual(len(result.reports), 2)
        self.assertEqual(len(result.rows), 8)

    def test_decorrelation_writes_outputs(self):
        """JSON and CSV land where the config points."""
        with tempfile.TemporaryDirectory() as tmp:
            config = ExperimentConfig("decorrelation", exponents=[2.0],
                                      report=os.path.join(tmp, "out", "decorrelation.json"),
                                      csv=os.path.join(tmp, "decorrelation.csv"))
            result = run_experiment(config)
            self.assertTrue(result.passed)
            with open(config.report, encoding='utf-8') as fh:
                data = json.load(fh)
            self.assertEqual(data['status'], PASS)
            with open(config.csv, encoding='utf-8') as fh:
                lines = fh.read().strip().splitlines()
            self.assertEqual(len(lines), 9)
            self.assertIn('sigma', lines[0])


class TestReportWriter(unittest.TestCase):
    """Test cases for JSON, CSV and workbook output."""

    def test_json_is_sorted_and_stable(self):
        """Keys are sorted and numpy values serialize."""
        data = {'b': np.float64(1.5), 'a': np.arange(3), 'c': {'z': 1, 'y': np.int64(2)}}
        text = to_json(data)
        self.assertEqual(text, to_json(dict(reversed(list(data.items())))))
        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertEqual(json.loads(text)['a'], [0, 1, 2])

    def test_json_uses_to_dict(self):
        """Objects with to_dict are serialized through it."""
        report = fit_loglog_slope([1, 2, 4], [1, 2, 4])
        data = json.loads(to_json({'slope': report}))
        self.assertAlmostEqual(data['slope']['measured_slope'], 1.0)

    def test_write_json_and_csv(self):
        """Files are created along with missing parent directories."""
        with tempfile.TemporaryDirectory() as tmp:
            path = write_json({'status': PASS}, os.path.join(tmp, "a", "b.json"))
            self.assertTrue(path.exists())
            self.assertTrue(path.read_text(encoding='utf-8').endswith("\n"))
            csv_path = write_csv([{'x': 1, 'y': 2.0}, {'x': 2, 'y': 4.0}], os.path.join(tmp, "rows.csv"))
            self.assertEqual(csv_path.read_text(encoding='utf-8').splitlines()[0], "x,y")

    def test_workbook_sheets(self):
        """Summary, one sheet per table and the tolerance block."""
        report = {'certify': {'status': PASS}, 'glue': {'status': FAIL}, 'status': FAIL}
        tables = {'blocks_scaling': [{'family': 'jet', 'measured_slope': 1.0, 'status': PASS}],
                  'empty': []}
        with tempfile.TemporaryDirectory() as tmp:
            path = generate_report_workbook(report, os.path.join(tmp, "run.xlsx"), tables)
            wb = load_workbook(path)
            self.assertEqual(wb.sheetnames, ["Summary", "blocks_scaling", "Tolerances"])
            summary = wb["Summary"]
            self.assertEqual(summary.cell(row=5, column=1).value, "certify")
            self.assertEqual(summary.cell(row=7, column=1).value, "overall")
            self.assertEqual(summary.cell(row=7, column=2).value, FAIL)


if __name__ == '__main__':
    unittest.main()
