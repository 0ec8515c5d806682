"""
Tests for the profiles, block parameters, temporal blocks, jets, Mikado flows
and the scaling sweeps.
"""
import math
import os
import sys
import tempfile
import unittest
from dataclasses import replace
from unittest import mock

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from blocks.jets import (
    build_block,
    build_blocks,
    intermittent_jet,
    mikado_flow,
    remove_parity_sums,
    required_resolution,
)
from blocks.params import BlockParams
from blocks.profiles import chi_cutoff, make_profiles, smooth_step
from blocks.scaling import (
    verify_all_blocks,
    verify_block_scaling,
    verify_synthesized_blocks,
    write_scaling_csv,
)
from blocks.temporal import TemporalBlocks, temporal_blocks
from errors import InvalidParameterError, ResolutionError
from geometry.directions import AXIS_FRAMES, Direction, assemble_geometry
from spectral.field import GridSpec
from spectral.operators import lp_norm, time_derivative_array


def axis_geometry():
    return assemble_geometry(AXIS_FRAMES, "axis", require_span=False)


class TestProfiles(unittest.TestCase):
    """Normalizations and supports of the profile set."""

    @classmethod
    def setUpClass(cls):
        cls.profiles = make_profiles(1.0)

    def test_phi_normalization(self):
        """(1/4 pi^2) int phi^2 = 1 by an independent planar quadrature."""
        nodes = np.linspace(-1.0, 1.0, 1201)
        y1, y2 = np.meshgrid(nodes, nodes, indexing='ij')
        values = self.profiles.phi(y1, y2) ** 2
        integral = trapezoid(trapezoid(values, nodes, axis=1), nodes)
        self.assertAlmostEqual(integral / (4.0 * np.pi ** 2), 1.0, places=6)

    def test_psi_normalization_and_mean(self):
        """(1/2 pi) int psi^2 = 1 and int psi = 0."""
        nodes = np.linspace(-1.0, 1.0, 20001)
        psi = self.profiles.psi(nodes)
        self.assertAlmostEqual(trapezoid(psi ** 2, nodes) / (2.0 * np.pi), 1.0, places=8)
        self.assertAlmostEqual(trapezoid(psi, nodes), 0.0, places=10)

    def test_g_mean_square(self):
        """The mean of g^2 over [0, T] is one."""
        for period in (1.0, 0.5):
            profiles = make_profiles(period)
            nodes = np.linspace(0.0, period, 20001)
            mean = trapezoid(profiles.g(nodes) ** 2, nodes) / period
            self.assertAlmostEqual(mean, 1.0, places=7)

    def test_supports(self):
        """psi vanishes outside [-1, 1] and g outside [T/4, 3T/4]."""
        self.assertEqual(self.profiles.psi(np.array([1.0, -1.5]))[0], 0.0)
        self.assertTrue(np.all(self.profiles.g(np.array([0.0, 0.2, 0.8, 1.0])) == 0.0))
        self.assertTrue(np.all(self.profiles.phi(np.array([1.0, 0.0]), np.array([0.5, 1.0])) == 0.0))

    def test_g_square_primitive_reaches_period(self):
        """G(T) = T."""
        self.assertAlmostEqual(float(self.profiles.g_square_primitive(np.array(1.0))), 1.0, places=12)
        self.assertEqual(float(self.profiles.g_square_primitive(np.array(0.1))), 0.0)

    def test_rejects_non_positive_period(self):
        """A period must be positive."""
        with self.assertRaises(InvalidParameterError):
            make_profiles(0.0)

    def test_smooth_step(self):
        """The ramp is 0 left of 0, 1 right of 1 and monotone between."""
        s = np.linspace(-0.5, 1.5, 401)
        ramp = smooth_step(s)
        self.assertTrue(np.all(ramp[s <= 0] == 0.0))
        self.assertTrue(np.all(ramp[s >= 1] == 1.0))
        self.assertTrue(np.all(np.diff(ramp) >= 0))

    def test_chi_cutoff_bounds(self):
        """chi = 1 below 1, chi = z above 2 and z/2 <= chi <= 2z between."""
        z = np.linspace(0.0, 3.0, 601)
        chi = chi_cutoff(z)
        np.testing.assert_allclose(chi[z <= 1], 1.0)
        np.testing.assert_allclose(chi[z >= 2], z[z >= 2])
        middle = (z > 1) & (z < 2)
        self.assertTrue(np.all(chi[middle] >= z[middle] / 2))
        self.assertTrue(np.all(chi[middle] <= 2 * z[middle]))


class TestBlockParams(unittest.TestCase):
    """Parameter powers and the desk integrality snapping."""

    def test_a1_powers(self):
        """Unsnapped A1 parameters are the substituted powers of lambda."""
        params = BlockParams.from_regime("A1", 16, 1.25, 0.05, snap=False)
        self.assertAlmostEqual(params.r_perp, 16 ** -0.9)
        self.assertAlmostEqual(params.r_par, 16 ** -0.8)
        self.assertAlmostEqual(params.mu, 16 ** 1.6)
        self.assertAlmostEqual(params.tau, 16 ** 0.55)
        self.assertAlmostEqual(params.sigma, 16 ** 0.1)

    def test_snapping(self):
        """Snapping rounds lambda r_perp and sigma to positive integers."""
        params = BlockParams.from_regime("A1", 16, 1.25, 0.05)
        self.assertEqual(params.r_perp, 1.0 / 16.0)
        self.assertEqual(params.sigma, 1.0)
        self.assertEqual(params.lattice_scale, 1.0)
        self.assertTrue(params.snapped)

    def test_a2_has_no_jet_parameters(self):
        """Mikado parameters carry no r_par or mu."""
        params = BlockParams.from_regime("A2", 8, 1.5, 0.05)
        self.assertIsNone(params.r_par)
        self.assertIsNone(params.mu)
        self.assertFalse(params.is_jet)
        self.assertAlmostEqual(params.tau, 8.0 ** 3)

    def test_invalid_inputs(self):
        """Small lambda, non-positive epsilon and unknown regimes are rejected."""
        with self.assertRaises(InvalidParameterError):
            BlockParams.from_regime("A1", 1.0, 1.25, 0.05)
        with self.assertRaises(InvalidParameterError):
            BlockParams.from_regime("A1", 16, 1.25, 0.0)
        with self.assertRaises(InvalidParameterError):
            BlockParams.from_regime("A3", 16, 1.25, 0.05)


class TestTemporalBlocks(unittest.TestCase):
    """Tests for g_(tau) and h_(tau)."""

    def setUp(self):
        self.profiles = make_profiles(1.0)
        self.params = BlockParams.from_regime("A1", 16, 1.25, 0.05)
        self.blocks = TemporalBlocks.from_params(self.params, self.profiles)

    def test_h_starts_at_zero(self):
        """h_(tau)(0) = 0."""
        self.assertEqual(float(self.blocks.h(np.array(0.0))), 0.0)

    def test_h_bounded_by_one(self):
        """|h_(tau)| <= 1 on the sampled grid."""
        signals = temporal_blocks(self.params, self.profiles)
        self.assertLessEqual(signals.summary()['h_sup'], 1.0)

    def test_derivative_identity(self):
        """d/dt (h_(tau) / sigma) = g_(tau)^2 - 1 up to fourth-order FD error."""
        samples = 8 * self.blocks.required_samples()
        signals = temporal_blocks(self.params, self.profiles, samples=samples)
        derivative = time_derivative_array(signals.h, signals.dt) / self.params.sigma
        target = signals.g ** 2 - 1.0
        self.assertLessEqual(np.max(np.abs(derivative - target)), 1e-4 * np.max(np.abs(target)))

    def test_mean_square_is_one(self):
        """The mean of g_(tau)^2 over [0, T] is one."""
        signals = temporal_blocks(self.params, self.profiles, samples=4 * self.blocks.required_samples())
        self.assertAlmostEqual(signals.summary()['g_mean_square'], 1.0, places=6)

    def test_multiple_pulses(self):
        """With sigma = 3 the mean square is still one."""
        blocks = TemporalBlocks(tau=5.0, sigma=3.0, profiles=self.profiles)
        times = np.linspace(0.0, 1.0, 8 * blocks.required_samples())
        self.assertAlmostEqual(trapezoid(blocks.g(times) ** 2, times), 1.0, places=6)
        self.assertLessEqual(np.max(np.abs(blocks.h(times))), 1.0)

    def test_rate_matches_closed_form(self):
        """h_rate equals sigma (g^2 - 1)."""
        t = np.linspace(0.0, 1.0, 33)
        np.testing.assert_allclose(self.blocks.h_rate(t), self.params.sigma * (self.blocks.g(t) ** 2 - 1.0))

    def test_resolution_rule(self):
        """Too few samples raise a resolution error carrying the required count."""
        with self.assertRaises(ResolutionError) as ctx:
            temporal_blocks(self.params, self.profiles, samples=10)
        self.assertEqual(ctx.exception.required, self.blocks.required_samples())

    def test_rejects_small_tau(self):
        """tau below one is rejected."""
        with self.assertRaises(InvalidParameterError):
            TemporalBlocks(tau=0.5, sigma=1.0, profiles=self.profiles)


class TestIntermittentJets(unittest.TestCase):
    """Jet identities on the axis-aligned surrogate."""

    @classmethod
    def setUpClass(cls):
        cls.geom = axis_geometry()
        cls.params = BlockParams.from_regime("A1", 4, 1.25, 0.05)
        cls.grid = GridSpec(48, 5, 1.0)
        cls.blocks = build_blocks(cls.geom, cls.params, cls.grid)

    def test_required_resolution(self):
        """N >= 12 lambda N_Lambda."""
        self.assertEqual(required_resolution(self.params), 48)
        with self.assertRaises(ResolutionError) as ctx:
            build_block(self.geom.directions[0], self.params, GridSpec(32))
        self.assertEqual(ctx.exception.required, 48)

    def test_double_curl_and_divergence(self):
        """curl curl W^c = W + W~^c and div(W + W~^c) = 0 at two times."""
        for block in self.blocks:
            for t in (0.0, 0.3):
                residuals = block.identities(t)
                self.assertLessEqual(residuals['double_curl'], 1e-8)
                self.assertLessEqual(residuals['divergence'], 1e-8)

    def test_l2_mass(self):
        """||W||_{L^2} = (2 pi)^{3/2} after the discrete normalization."""
        for block in self.blocks:
            norm = lp_norm(block.velocity(0.0), 2)
            self.assertAlmostEqual(norm / (2.0 * np.pi) ** 1.5, 1.0, delta=0.05)

    def test_average_is_rank_one(self):
        """The average of W ⊗ W is k1 ⊗ k1."""
        for block in self.blocks:
            np.testing.assert_allclose(block.average, block.direction.rank_one(), atol=1e-12)

    def test_traveling_wave(self):
        """psi_(k1) moves along k1 with speed mu."""
        block = self.blocks[0]
        spacing = 2.0 * np.pi / self.grid.n
        t = 3 * spacing / self.params.mu
        shifted = block.psi(t).physical()
        expected = np.roll(block.psi(0.0).physical(), -3, axis=0)
        np.testing.assert_allclose(shifted, expected, atol=1e-12)

    def test_psi_rate(self):
        """The analytic rate matches a centered difference."""
        block = self.blocks[1]
        delta = 1e-5
        fd = (block.psi(0.2 + delta).physical() - block.psi(0.2 - delta).physical()) / (2 * delta)
        exact = block.psi_rate(0.2).physical()
        self.assertLessEqual(np.max(np.abs(fd - exact)), 1e-6 * np.max(np.abs(exact)))

    def test_time_sampled_velocity(self):
        """Without a time the block is sampled on the grid times."""
        W = self.blocks[2].velocity()
        self.assertTrue(W.time_sampled)
        self.assertEqual(W.coeffs.shape[0], self.grid.time_samples)

    def test_operation_entry_points(self):
        """intermittent_jet returns W = psi phi k1."""
        fields = intermittent_jet(self.geom.directions[0], self.params, self.grid, 0.1)
        product = fields.psi.physical() * fields.phi.physical()
        np.testing.assert_allclose(fields.W.physical()[0], product, atol=1e-12)
        np.testing.assert_allclose(fields.W.physical()[1:], 0.0, atol=1e-12)

    def test_tube_support_follows_shift(self):
        """phi_(k) and W_(k) vanish outside the tube around the shifted line."""
        direction = replace(Direction.from_axes((0, 1, 0), (1, 0, 0)), shift=(0.0, 1.0, 2.0))
        block = build_block(direction, self.params, self.grid)
        _, x2, x3 = self.grid.coordinates()
        wrap = lambda y: np.mod(y + np.pi, 2 * np.pi) - np.pi
        outside = wrap(x2 - 1.0) ** 2 + wrap(x3 - 2.0) ** 2 >= self.params.tube_radius ** 2
        for values in (block.phi.physical(), block.velocity(0.2).physical()[0]):
            self.assertLessEqual(np.max(np.abs(values[outside])), 1e-12 * np.max(np.abs(values)))
            self.assertGreater(np.max(np.abs(values)), 0.0)

    def test_tube_centered_on_grid_point(self):
        """A tube centered on a grid point still keeps a nonzero profile."""
        block = build_block(self.geom.directions[0], self.params, self.grid)
        self.assertAlmostEqual(float(np.mean(block.phi.physical() ** 2)), 1.0, places=10)

    def test_phi_has_no_unresolved_modes(self):
        """The mean and pure Nyquist coefficients of phi_(k) vanish."""
        half = self.grid.n // 2
        for block in self.blocks:
            coeffs = block.phi.coeffs
            for i in (0, half):
                for j in (0, half):
                    for k in (0, half):
                        self.assertLessEqual(abs(coeffs[i, j, k]), 1e-14)

    def test_rejects_mikado_parameters(self):
        """Jets need A1 parameters."""
        params = BlockParams.from_regime("A2", 4, 1.5, 0.05)
        with self.assertRaises(InvalidParameterError):
            intermittent_jet(self.geom.directions[0], params, self.grid)

    def test_direction_scale_mismatch(self):
        """Block parameters must use the direction set's N_Lambda."""
        params = BlockParams.from_regime("A1", 4, 1.25, 0.05, n_lambda=5)
        with self.assertRaises(InvalidParameterError):
            build_blocks(self.geom, params, self.grid)


class TestMikadoFlows(unittest.TestCase):
    """Stationary Mikado flows on the axis-aligned surrogate."""

    @classmethod
    def setUpClass(cls):
        cls.geom = axis_geometry()
        cls.params = BlockParams.from_regime("A2", 4, 1.5, 0.05)
        cls.grid = GridSpec(48, 5, 1.0)
        cls.blocks = build_blocks(cls.geom, cls.params, cls.grid)

    def test_identities(self):
        """div W = 0, div(W ⊗ W) = 0 and curl curl W^c = W."""
        for block in self.blocks:
            residuals = block.identities()
            self.assertLessEqual(residuals['divergence'], 1e-10)
            self.assertLessEqual(residuals['stress_divergence'], 1e-8)
            self.assertLessEqual(residuals['double_curl'], 1e-8)

    def test_stationary(self):
        """The flow is static and has no corrector."""
        fields = mikado_flow(self.geom.directions[1], self.params, self.grid)
        self.assertFalse(fields.W.time_sampled)
        self.assertEqual(float(np.max(np.abs(self.blocks[1].corrector(0.0).coeffs))), 0.0)

    def test_average(self):
        """The average of W ⊗ W is k1 ⊗ k1."""
        for block in self.blocks:
            np.testing.assert_allclose(block.average, block.direction.rank_one(), atol=1e-12)


class TestParitySums(unittest.TestCase):
    """The compact correction that removes unresolved grid modes."""

    def setUp(self):
        rng = np.random.default_rng(5)
        self.n = 8
        self.weight = np.zeros((self.n,) * 3)
        self.weight[1:6, 2:7, 0:5] = rng.uniform(0.5, 1.5, (5, 5, 5))
        self.values = np.where(self.weight > 0, rng.normal(size=self.weight.shape), 0.0)

    def test_class_sums_vanish(self):
        """Every parity class sums to zero afterwards."""
        out = remove_parity_sums(self.values, self.weight)
        for p in np.ndindex(2, 2, 2):
            self.assertAlmostEqual(float(np.sum(out[p[0]::2, p[1]::2, p[2]::2])), 0.0, places=12)

    def test_support_kept(self):
        """Nothing changes where the weight vanishes."""
        out = remove_parity_sums(self.values, self.weight)
        np.testing.assert_array_equal(out[self.weight == 0], 0.0)

    def test_unresolved_coefficients_vanish(self):
        """The spectrum has no mean and no pure Nyquist content."""
        coeffs = np.fft.rfftn(remove_parity_sums(self.values, self.weight))
        half = self.n // 2
        for index in np.ndindex(2, 2, 2):
            self.assertLessEqual(abs(coeffs[tuple(half * i for i in index)]), 1e-12)

    def test_odd_grid_rejected(self):
        with self.assertRaises(InvalidParameterError):
            remove_parity_sums(np.zeros((3, 3, 3)), np.ones((3, 3, 3)))


class TestScaling(unittest.TestCase):
    """Log-log slopes of the block norms against lambda."""

    @classmethod
    def setUpClass(cls):
        cls.results = verify_all_blocks(lambdas=[8, 16, 32], epsilon=0.05)

    def _find(self, family, n, m, p):
        for result in self.results:
            if (result.family, result.derivatives, result.time_derivatives, result.exponent) == (family, n, m, p):
                return result
        self.fail(f"No sweep for {family} {n} {m} {p}")

    def test_psi_l2_is_flat(self):
        """psi_(k1) in L^2 has slope 0."""
        result = self._find("psi", 0, 0, 2.0)
        self.assertLessEqual(abs(result.report.measured), 0.05)

    def test_psi_l1_slope(self):
        """psi_(k1) in L^1 scales like r_par^{1/2}."""
        result = self._find("psi", 0, 0, 1.0)
        self.assertAlmostEqual(result.report.predicted, (-1.0 + 4 * 0.05) / 2)
        self.assertLessEqual(abs(result.report.measured - result.report.predicted), 0.15)

    def test_g_l1_slope(self):
        """g_(tau) in L^1 scales like tau^{-1/2}."""
        result = self._find("g", 0, 0, 1.0)
        self.assertAlmostEqual(result.report.predicted, -(4 * 1.25 - 5 + 11 * 0.05) / 2)
        self.assertLessEqual(abs(result.report.measured - result.report.predicted), 0.15)

    def test_mikado_l1_slope(self):
        """Mikado flows in L^1 scale like r_perp."""
        result = self._find("mikado", 0, 0, 1.0)
        self.assertAlmostEqual(result.report.predicted, -1.5 + 1.0 - 8 * 0.05)

    def test_every_sweep_passes(self):
        """At least six combinations, all within tolerance."""
        self.assertGreaterEqual(len(self.results), 6)
        for result in self.results:
            self.assertTrue(result.passed, result.to_row())
            self.assertGreater(result.report.r_squared, 0.99)

    def test_csv_columns(self):
        """The CSV carries the documented columns."""
        with tempfile.TemporaryDirectory() as tmp:
            path = write_scaling_csv(self.results, os.path.join(tmp, "scaling.csv"))
            frame = pd.read_csv(path)
        self.assertEqual(list(frame.columns)[:8], ['family', 'N', 'M', 'p_or_gamma', 'lambda_list',
                                                   'measured_slope', 'predicted_slope', 'residual'])
        self.assertEqual(len(frame), len(self.results))

    def test_invalid_requests(self):
        """Unknown families and short sweeps are rejected."""
        with self.assertRaises(InvalidParameterError):
            verify_block_scaling("vortex")
        with self.assertRaises(InvalidParameterError):
            verify_block_scaling("psi", lambdas=[8, 16])
        with self.assertRaises(InvalidParameterError):
            verify_block_scaling("phi", exponent_grid=[(0, 1, 2.0)])

    def test_grid_sweeps_included(self):
        """The grid-built L^2 sweeps run alongside the profile sweeps."""
        families = {result.family for result in self.results}
        self.assertIn("jet_grid", families)
        self.assertIn("mikado_grid", families)


class TestSynthesizedScaling(unittest.TestCase):
    """L^2 slopes of W_(k) measured on the grid-built blocks."""

    @classmethod
    def setUpClass(cls):
        cls.results = verify_synthesized_blocks()

    def test_one_sweep_per_block_type(self):
        """A jet sweep and a Mikado sweep over lambda = 2, 4, 8."""
        self.assertEqual([r.family for r in self.results], ["jet_grid", "mikado_grid"])
        for result in self.results:
            self.assertEqual(result.lambdas, [2.0, 4.0, 8.0])
            self.assertEqual(result.report.predicted, 0.0)

    def test_l2_norm_is_flat(self):
        """||W||_{L^2} stays at (2 pi)^{3/2} and the slope is 0."""
        for result in self.results:
            self.assertTrue(result.passed, result.to_row())
            self.assertLessEqual(abs(result.report.measured), 1e-6)
            for _, norm in result.report.points:
                self.assertAlmostEqual(norm / (2.0 * np.pi) ** 1.5, 1.0, places=8)

    def test_mis_normalized_tube_fails(self):
        """A tube profile left scaled by r_perp shows up as slope -1."""
        def scaled_block(direction, params, grid, profiles=None):
            block = build_block(direction, params, grid, profiles)
            return replace(block, phi=block.phi * params.r_perp)

        with mock.patch("blocks.scaling.build_block", side_effect=scaled_block):
            results = verify_synthesized_blocks()
        for result in results:
            self.assertFalse(result.passed)
            self.assertAlmostEqual(result.report.measured, -1.0, delta=0.05)

    def test_short_sweep_rejected(self):
        with self.assertRaises(InvalidParameterError):
            verify_synthesized_blocks(lambdas=[2, 4])


if __name__ == '__main__':
    unittest.main()
