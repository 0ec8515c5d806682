"""
Tests for the amplitudes, the assembled perturbation, its identities and
the next-level Reynolds stress.
"""
import json
import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from blocks.jets import build_blocks
from blocks.params import BlockParams
from blocks.profiles import make_profiles
from errors import InvalidParameterError, OutOfDomainError, PreconditionViolation, ResolutionError
from geometry.lemma import build_axis_lambda
from gluing.initial import nsr_residual
from gluing.state import synthetic_state
from harness.slopes import fit_loglog_slope
from perturbation.amplitudes import (
    AmplitudeInputs,
    build_amplitudes,
    build_rho,
    stress_magnitude,
    temporal_cutoff,
)
from perturbation.assemble import assemble_perturbation, double_curl, expand_double_curl, temporal_support_ok
from perturbation.decay import DecayReport, measure_decay, strictly_decreasing
from perturbation.identities import verify_cancellation
from perturbation.stage import StageConfig, build_stage, iterate_once, shear_amplitude
from spectral.field import GridSpec, ModelParams, SpectralField, sum_fields
from spectral.operators import dealias, multiply, relative_residual, traceless


def random_stress(grid, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((grid.time_samples, 3, 3) + grid.physical_shape)
    values = 0.5 * scale * (values + np.swapaxes(values, 1, 2))
    return SpectralField.from_physical(values, grid, 2, True)


class TestRho(unittest.TestCase):
    """The stress bound rho."""

    @classmethod
    def setUpClass(cls):
        cls.grid = GridSpec(8, 5)

    def inputs(self, stress, cutoff=None):
        cutoff = np.ones(self.grid.time_samples) if cutoff is None else cutoff
        return AmplitudeInputs(stress, cutoff, epsilon_u=0.2, lambda_q=16.0, delta_next=0.01, epsilon_r=0.01)

    def test_zero_stress_constant(self):
        """A vanishing stress gives rho = 2 epsilon_u^{-1} lambda_q^{-epsilon_R/4} delta."""
        inputs = self.inputs(SpectralField.zeros(self.grid, 2, True))
        expected = 2.0 / 0.2 * 16.0 ** (-0.01 / 4.0) * 0.01
        np.testing.assert_allclose(build_rho(inputs).physical(), expected, rtol=1e-12)

    def test_ratio_bounded_by_epsilon_u(self):
        """|R/rho| <= epsilon_u pointwise for a random stress."""
        stress = random_stress(self.grid, seed=3)
        inputs = self.inputs(stress)
        rho = build_rho(inputs).physical()
        ratio = stress_magnitude(traceless(stress)) / rho
        self.assertLessEqual(float(ratio.max()), 0.2 * (1.0 + 1e-12))

    def test_large_stress_linear_branch(self):
        """Where |R| >= 2 s, rho = 2 |R| / epsilon_u exactly."""
        stress = random_stress(self.grid, seed=5, scale=10.0)
        inputs = self.inputs(stress)
        magnitude = stress_magnitude(traceless(stress))
        rho = build_rho(inputs).physical()
        large = magnitude >= 2.0 * inputs.scale
        self.assertTrue(np.any(large))
        np.testing.assert_allclose(rho[large], 2.0 * magnitude[large] / 0.2, rtol=1e-12)

    def test_invalid_inputs(self):
        """Static stresses, wrong cutoff lengths and non-positive scalars are rejected."""
        with self.assertRaises(InvalidParameterError):
            AmplitudeInputs(SpectralField.zeros(self.grid, 2), np.ones(5), 0.2, 16.0, 0.01, 0.01)
        with self.assertRaises(InvalidParameterError):
            self.inputs(SpectralField.zeros(self.grid, 2, True), np.ones(3))
        with self.assertRaises(InvalidParameterError):
            AmplitudeInputs(SpectralField.zeros(self.grid, 2, True), np.ones(5), 0.2, 16.0, -1.0, 0.01)


class TestTemporalCutoff(unittest.TestCase):
    """The cutoff f on the time grid."""

    def setUp(self):
        self.grid = GridSpec(8, 33)
        values = np.zeros((33, 3, 3) + self.grid.physical_shape)
        values[15:18, 0, 1] = values[15:18, 1, 0] = 1.0
        self.stress = SpectralField.from_physical(values, self.grid, 2, True)

    def test_one_on_support(self):
        """f = 1 wherever the stress is nonzero."""
        f = temporal_cutoff(self.stress, 0.25)
        np.testing.assert_array_equal(f[15:18], 1.0)

    def test_vanishes_away_from_support(self):
        """f = 0 at distance >= 3 theta / 8 from the support."""
        f = temporal_cutoff(self.stress, 0.25)
        times = self.grid.times()
        far = np.abs(times - 0.5) > 0.0625 + 3 * 0.25 / 8
        self.assertTrue(np.any(far))
        np.testing.assert_array_equal(f[far], 0.0)
        self.assertTrue(np.all((f >= 0) & (f <= 1)))

    def test_zero_stress(self):
        """No support gives f = 0."""
        f = temporal_cutoff(SpectralField.zeros(self.grid, 2, True), 0.25)
        np.testing.assert_array_equal(f, 0.0)

    def test_invalid_theta(self):
        """theta must be positive."""
        with self.assertRaises(InvalidParameterError):
            temporal_cutoff(self.stress, 0.0)


class TestAmplitudes(unittest.TestCase):
    """a_(k) = rho^{1/2} f gamma_(k)(Id - R/rho)."""

    @classmethod
    def setUpClass(cls):
        cls.geom = build_axis_lambda(seed=1, samples=500)
        cls.grid = GridSpec(8, 9)

    def inputs(self, stress, cutoff):
        return AmplitudeInputs(stress, cutoff, self.geom.epsilon_u, 16.0, 0.01, 0.01)

    def test_zero_stress_constant_amplitudes(self):
        """R = 0 and f = 1 give a_(k) = rho^{1/2} for the axis directions."""
        inputs = self.inputs(SpectralField.zeros(self.grid, 2, True), np.ones(9))
        amplitudes = build_amplitudes(inputs, self.geom)
        level = np.sqrt(2.0 / self.geom.epsilon_u * inputs.scale)
        for a in amplitudes.a:
            np.testing.assert_allclose(a.physical(), level, rtol=1e-10)
        self.assertLess(float(np.max(np.abs(amplitudes.defect.physical()))), 1e-12)

    def test_zero_cutoff_zero_amplitudes(self):
        """f = 0 gives a_(k) = 0."""
        amplitudes = build_amplitudes(self.inputs(random_stress(self.grid), np.zeros(9)), self.geom)
        for a in amplitudes.a:
            self.assertEqual(float(np.max(np.abs(a.physical()))), 0.0)

    def test_ratio_within_ball(self):
        """The recorded max |R/rho| stays inside the decomposition ball."""
        amplitudes = build_amplitudes(self.inputs(random_stress(self.grid, seed=9), np.ones(9)), self.geom)
        self.assertLessEqual(amplitudes.max_ratio, self.geom.epsilon_u * (1.0 + 1e-12))
        self.assertEqual(len(amplitudes.rates), len(self.geom))

    def test_small_rho_out_of_domain(self):
        """A rho far below the stress leaves the ball and names the grid point."""
        inputs = self.inputs(random_stress(self.grid, seed=2), np.ones(9))
        tiny = SpectralField.from_physical(np.full((9,) + self.grid.physical_shape, 1e-6), self.grid, 0, True)
        with self.assertRaises(OutOfDomainError) as ctx:
            build_amplitudes(inputs, self.geom, rho=tiny)
        self.assertIn("index", str(ctx.exception))

    def test_too_few_time_samples(self):
        """Amplitude rates need five samples."""
        grid = GridSpec(8, 4)
        inputs = AmplitudeInputs(SpectralField.zeros(grid, 2, True), np.ones(4), self.geom.epsilon_u,
                                 16.0, 0.01, 0.01)
        with self.assertRaises(ResolutionError):
            build_amplitudes(inputs, self.geom)


class TestManufacturedState(unittest.TestCase):
    """The windowed shear used as the glued state."""

    def test_amplitude_rate(self):
        """A'(t) matches a centered difference of A(t)."""
        config = StageConfig()
        times = np.linspace(0.05, 0.95, 37)
        step = 1e-5
        numeric = (shear_amplitude(config, times + step) - shear_amplitude(config, times - step)) / (2 * step)
        np.testing.assert_allclose(shear_amplitude(config, times, 1), numeric, rtol=1e-6, atol=1e-8)

    def test_invalid_config(self):
        """Unknown regimes, short time grids and windows leaving (0, 1) are rejected."""
        with self.assertRaises(InvalidParameterError):
            StageConfig(regime="A3")
        with self.assertRaises(InvalidParameterError):
            StageConfig(time_samples=3)
        with self.assertRaises(InvalidParameterError):
            StageConfig(window_center=0.1, window_width=0.2)

    def test_spanning_default(self):
        """The default direction set spans every symmetric matrix; negative kappa is rejected."""
        self.assertEqual(StageConfig().geometry, "pythagorean")
        with self.assertRaises(InvalidParameterError):
            StageConfig(kappa=-0.1)


class TestStoredState(unittest.TestCase):
    """A stage built on a stored glued velocity."""

    @classmethod
    def setUpClass(cls):
        cls.model = ModelParams(nu=1.0, alpha=1.5)
        cls.source = synthetic_state(GridSpec(8, 17), cls.model, [0.5], 0.1, width=0.1)
        cls.config = StageConfig(regime="A2", lam=4.0, alpha=1.5, epsilon=0.025, time_samples=9, radius_samples=500,
                                 geometry="axis")
        cls.stage = build_stage(cls.config, cls.source.velocity)

    def test_resampled_onto_stage_grid(self):
        """The stored velocity lands on the N = 48 grid at every other time sample."""
        velocity = self.stage.velocity
        self.assertEqual((velocity.grid.n, velocity.grid.time_samples), (48, 9))
        _, x2, _ = velocity.grid.coordinates()
        expected = self.source.velocity.physical()[::2, 0, 0, 1, 0] / np.sin(2.0 * np.pi / 8)
        np.testing.assert_allclose(velocity.physical()[:, 0], expected[:, None, None, None] * np.sin(x2), atol=1e-12)

    def test_stress_solves_the_reynolds_system(self):
        """The paired stress closes the Navier-Stokes-Reynolds system."""
        residual = nsr_residual(self.stage.velocity, self.stage.stress, self.model, self.stage.velocity_rate)
        self.assertLess(residual, 1e-8)

    def test_static_input_rejected(self):
        """A snapshot without time samples cannot stand in for the glued state."""
        with self.assertRaises(InvalidParameterError):
            build_stage(self.config, self.source.velocity.at(0))


class TestCorrectorExpansion(unittest.TestCase):
    """curl curl(a W^c) written out by the product rule for one Mikado block."""

    @classmethod
    def setUpClass(cls):
        geom = build_axis_lambda(seed=1, samples=500)
        params = BlockParams.from_regime("A2", 4.0, 1.5, 0.025, n_lambda=geom.n_lambda)
        grid = GridSpec(48)
        block = build_blocks(geom, params, grid)[0]
        x1, x2, x3 = grid.coordinates()
        cls.a = SpectralField.from_physical(1.0 + 0.3 * np.cos(x2) + 0.2 * np.sin(x1 + x3), grid)
        cls.W = dealias(block.velocity(0.0))
        cls.V = dealias(block.potential(0.0))
        cls.corrector = dealias(block.corrector(0.0))
        cls.target = double_curl(multiply(cls.a, cls.V))
        cls.pieces = expand_double_curl(cls.a, cls.V, cls.corrector)

    def test_product_rule(self):
        """a W plus the transport, swirl and corrector pieces reproduce curl curl(a W^c)."""
        expanded = multiply(self.a, self.W) + sum_fields(self.pieces.values())
        self.assertLess(relative_residual(expanded - self.target, self.target), 1e-10)

    def test_missing_piece_is_detected(self):
        """Dropping the swirl term leaves a visible residual."""
        partial = multiply(self.a, self.W) + self.pieces['transport'] + self.pieces['corrector']
        self.assertGreater(relative_residual(partial - self.target, self.target), 1e-3)


class TestIterationJets(unittest.TestCase):
    """One step with intermittent jets."""

    @classmethod
    def setUpClass(cls):
        cls.config = StageConfig(regime="A1", lam=4.0, alpha=1.25, epsilon=0.025, time_samples=9, radius_samples=500,
                                 geometry="axis", kappa=0.0)
        cls.stage = build_stage(cls.config)
        cls.report = iterate_once(cls.config, cls.stage)
        cls.identities = {r.name: r for r in cls.report.identities}

    def test_cancellation(self):
        """The cancellation identity holds as written, with no tube overlap and no uncancelled stress."""
        report = self.identities['cancellation']
        self.assertTrue(report.passed)
        self.assertEqual(report.breached, [])
        self.assertLessEqual(report.bounds['cross'][0], 1e-6)
        self.assertLessEqual(report.bounds['defect'][0], 1e-6)

    def test_corrector_expansion(self):
        """w_p + w_c expanded by the product rule matches the double-curl form."""
        report = self.identities['corrector_expansion']
        self.assertLessEqual(report.residual, 1e-8)
        self.assertIn('aliasing_gap', report.terms)

    def test_divergence_free(self):
        """w_p + w_c and the full perturbation are divergence free and mean free."""
        for name in ('double_curl_divergence', 'total_divergence', 'total_mean'):
            self.assertTrue(self.identities[name].passed, name)

    def test_corrector_identities(self):
        """The temporal and oscillation corrector identities hold."""
        self.assertTrue(self.identities['temporal_corrector'].passed)
        self.assertTrue(self.identities['oscillation_corrector'].passed)

    def test_reynolds_checks(self):
        """R_{q+1} = R P_H div R_{q+1} and the projected equation closes."""
        checks = {c.name: c for c in self.report.reynolds.checks}
        self.assertTrue(checks['reynolds_identity'].passed)
        self.assertTrue(checks['end_to_end'].passed)

    def test_temporal_support(self):
        """w vanishes wherever f does, and f vanishes somewhere."""
        self.assertTrue(self.report.support_ok)
        self.assertTrue(np.any(self.stage.amplitudes.cutoff == 0))

    def test_temporal_corrector_present(self):
        """Jets carry a nonzero temporal corrector."""
        self.assertGreater(float(np.max(np.abs(self.stage.perturbation.temporal.physical()))), 0.0)

    def test_symmetric_stress(self):
        """R_{q+1} is symmetric."""
        self.assertLess(self.report.reynolds.decomposition.asymmetry(), 1e-10)

    def test_overlapping_tubes_rejected(self):
        """Unshifted axis tubes intersect, so the cancellation check refuses them."""
        geom = self.stage.geom
        unshifted = geom.with_shifts([(0.0, 0.0, 0.0)] * len(geom), *geom.shift_scale)
        with self.assertRaises(PreconditionViolation):
            verify_cancellation(self.stage.perturbation, self.stage.stress, unshifted)

    def test_report_serializes(self):
        """The report is plain JSON with a status."""
        data = json.loads(json.dumps(self.report.to_dict()))
        self.assertIn(data['status'], ("PASS", "FAIL - Review Required"))
        self.assertIn('total', data['reynolds']['norms'])
        self.assertGreater(data['reynolds']['rho'], 1.0)


class TestIterationMikado(unittest.TestCase):
    """One step with Mikado flows."""

    @classmethod
    def setUpClass(cls):
        cls.config = StageConfig(regime="A2", lam=4.0, alpha=1.5, epsilon=0.025, time_samples=9, radius_samples=500,
                                 geometry="axis", kappa=0.0)
        cls.stage = build_stage(cls.config)
        cls.report = iterate_once(cls.config, cls.stage)

    def test_no_temporal_corrector(self):
        """Mikado flows have w_t = 0 and no temporal identity."""
        self.assertEqual(float(np.max(np.abs(self.stage.perturbation.temporal.physical()))), 0.0)
        self.assertNotIn('temporal_corrector', [r.name for r in self.report.identities])

    def test_all_checks_pass(self):
        """Every identity and stress check passes."""
        for check in self.report.identities + self.report.reynolds.checks:
            self.assertTrue(check.passed, f"{check.name}: {check.residual:.3e}")
        self.assertEqual(self.report.status, "PASS")


class TestDecay(unittest.TestCase):
    """The lambda sweep of ||R_{q+1}||."""

    @staticmethod
    def synthetic(totals):
        lambdas = [2.0, 4.0, 8.0]
        norms = [{'total': {'L1': v}} for v in totals]
        return DecayReport("A1", lambdas, norms, [fit_loglog_slope(lambdas, totals, label='total')])

    def test_sweep_structure(self):
        """Three lambdas give three norm records and a total slope."""
        base = StageConfig(regime="A1", time_samples=9, radius_samples=300, geometry="axis", kappa=0.0)
        report = measure_decay([2.0, 3.0, 4.0], base)
        self.assertEqual(len(report.norms), 3)
        self.assertIsNotNone(report.slope('total'))
        self.assertEqual(report.sigmas, [1.0, 1.0, 1.0])
        data = json.loads(json.dumps(report.to_dict()))
        self.assertEqual(data['decreasing'], strictly_decreasing(report.totals) and report.slope('total').measured < 0)

    def test_strict_decrease_passes(self):
        """Norms dropping at every step pass."""
        report = self.synthetic([3.0, 2.0, 1.0])
        self.assertTrue(report.decreasing)
        self.assertEqual(report.status, "PASS")

    def test_negative_slope_with_a_rise_fails(self):
        """A negative fitted slope is not enough when one step grows."""
        report = self.synthetic([3.0, 1.0, 2.0])
        self.assertLess(report.slope('total').measured, 0.0)
        self.assertFalse(report.decreasing)
        self.assertEqual(report.status, "FAIL - Review Required")

    def test_growth_fails(self):
        """Growing norms fail."""
        self.assertFalse(self.synthetic([28415.0, 52786.0, 70216.0]).decreasing)
        self.assertFalse(strictly_decreasing([7.75, 7.82, 7.80]))
        self.assertFalse(strictly_decreasing([1.0]))

    def test_needs_three_lambdas(self):
        """Two lambdas are not enough for a slope."""
        with self.assertRaises(InvalidParameterError):
            measure_decay([4.0, 8.0])


class TestUnspannedStress(unittest.TestCase):
    """Axis directions cannot cancel the shear stress of a kappa > 0 state."""

    @classmethod
    def setUpClass(cls):
        cls.config = StageConfig(regime="A2", lam=4.0, alpha=1.5, epsilon=0.025, time_samples=9, radius_samples=500,
                                 geometry="axis", kappa=0.5)
        cls.stage = build_stage(cls.config)
        cls.report = verify_cancellation(cls.stage.perturbation, cls.stage.stress, cls.stage.geom)

    def test_defect_breaches(self):
        """The uncancelled shear fails the cancellation identity through its defect bound."""
        self.assertIn('defect', self.report.breached)
        self.assertFalse(self.report.passed)
        self.assertGreater(self.report.bounds['defect'][0], 0.1)

    def test_identity_as_written_fails(self):
        """Without the defect on the right side the two sides differ."""
        self.assertGreater(self.report.residual, 1e-3)

    def test_stage_status(self):
        """The step reports FAIL and names its non-spanning direction set."""
        report = iterate_once(self.config, self.stage)
        self.assertEqual(report.status, "FAIL - Review Required")
        self.assertFalse(report.geometry['spans'])
        self.assertEqual(report.to_dict()['geometry']['grid'], 48)


class TestOverlappingTubes(unittest.TestCase):
    """Unshifted Mikado tubes cross at the origin."""

    @classmethod
    def setUpClass(cls):
        config = StageConfig(regime="A2", lam=4.0, alpha=1.5, epsilon=0.025, time_samples=9, radius_samples=500,
                             geometry="axis", kappa=0.0)
        stage = build_stage(config)
        unshifted = stage.geom.with_shifts([(0.0, 0.0, 0.0)] * len(stage.geom), *stage.geom.shift_scale)
        blocks = build_blocks(unshifted, stage.params, stage.grid, make_profiles(stage.grid.period))
        cls.perturbation = assemble_perturbation(stage.amplitudes, blocks, stage.temporal, stage.params)
        cls.stress = stage.stress
        cls.shifted = verify_cancellation(stage.perturbation, stage.stress)

    def test_cross_breaches(self):
        """The tube overlap fails the cancellation identity through its cross bound."""
        report = verify_cancellation(self.perturbation, self.stress)
        self.assertIn('cross', report.breached)
        self.assertFalse(report.passed)

    def test_shifted_tubes_pass(self):
        """The same stage with separated tubes has no overlap."""
        self.assertNotIn('cross', self.shifted.breached)
        self.assertTrue(self.shifted.passed)


if __name__ == '__main__':
    unittest.main()
