"""
Tests for direction sets, the matrix decomposition and tube shifts.
"""
import json
import os
import sys
import unittest
from fractions import Fraction

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import ConstructionFailure, NoAdmissibleShifts, OutOfDomainError
from geometry.directions import Direction, GeometrySet, PYTHAGOREAN_FRAMES, assemble_geometry
from geometry.lemma import (
    _random_symmetric_directions,
    build_axis_lambda,
    build_lambda,
    decompose_pointwise,
    estimate_epsilon_u,
    estimate_m_star,
    gamma_decompose,
    reconstruct,
    unspanned_part,
    weights,
)
from geometry.shifts import PairLattice, choose_shifts, pair_separation, tube_overlap


class TestDirectionSet(unittest.TestCase):
    """Tests for the bundled spanning direction set."""

    @classmethod
    def setUpClass(cls):
        cls.geom = build_lambda(seed=7, samples=2000)

    def test_frames_are_exactly_orthonormal(self):
        """Every frame passes the rational orthonormality check."""
        for d in self.geom.directions:
            self.assertTrue(d.is_orthonormal())

    def test_integer_scaling(self):
        """N_Lambda clears every denominator."""
        self.assertEqual(self.geom.n_lambda, 5)
        for d in self.geom.directions:
            self.assertTrue(d.scale_is_integral(self.geom.n_lambda))

    def test_spans_symmetric_matrices(self):
        """Six rank-one tensors span the symmetric matrices."""
        self.assertTrue(self.geom.spans)
        self.assertGreaterEqual(len(self.geom), 6)
        self.assertEqual(np.linalg.matrix_rank(self.geom.span_matrix()), 6)

    def test_golden_weights(self):
        """Each weight at the identity equals one half."""
        np.testing.assert_allclose(self.geom.golden_weights, 0.5, atol=1e-12)

    def test_identity_reconstruction(self):
        """Weights at Id reconstruct Id."""
        S = reconstruct(np.array(self.geom.golden_weights), self.geom)
        self.assertLessEqual(np.max(np.abs(S - np.eye(3))), 1e-12)

    def test_non_orthonormal_frame_rejected(self):
        """A skewed frame fails construction."""
        with self.assertRaises(ConstructionFailure):
            assemble_geometry([((1, 0, 0), (Fraction(1, 2), Fraction(1, 2), 0))], "bad", require_span=False)

    def test_missing_span_rejected(self):
        """Three directions cannot span six dimensions."""
        with self.assertRaises(ConstructionFailure):
            assemble_geometry(PYTHAGOREAN_FRAMES[:3], "partial", require_span=True)

    def test_json_round_trip(self):
        """GeometrySet survives a JSON round trip."""
        text = json.dumps(self.geom.to_dict(), sort_keys=True)
        restored = GeometrySet.from_dict(json.loads(text))
        self.assertEqual(restored.directions, self.geom.directions)
        self.assertEqual(restored.n_lambda, self.geom.n_lambda)
        self.assertAlmostEqual(restored.epsilon_u, self.geom.epsilon_u)
        np.testing.assert_allclose(restored.decomposition, self.geom.decomposition)

    def test_direction_dict_uses_integer_pairs(self):
        """Frame entries serialize as numerator/denominator pairs."""
        data = Direction.from_axes((0, 0, 1), (Fraction(3, 5), Fraction(4, 5), 0)).to_dict()
        self.assertEqual(data['k1'], [[3, 5], [4, 5], [0, 1]])
        self.assertEqual(data['k2'], [[-4, 5], [3, 5], [0, 1]])


class TestDecomposition(unittest.TestCase):
    """Tests for gamma_decompose and the epsilon_u search."""

    @classmethod
    def setUpClass(cls):
        cls.geom = build_lambda(seed=11, samples=4000)

    def test_epsilon_u_positive(self):
        """The sampled radius is positive and halved before use."""
        self.assertGreater(self.geom.epsilon_u, 0.0)
        self.assertAlmostEqual(self.geom.epsilon_u, 0.5 * self.geom.epsilon_u_raw)

    def test_epsilon_u_deterministic(self):
        """Re-running the search with the same seed gives the same radius."""
        again = estimate_epsilon_u(self.geom, seed=11, samples=4000)
        self.assertEqual(again, self.geom.epsilon_u_raw)

    def test_radius_is_tight(self):
        """Just beyond the sampled radius some sample produces a negative weight."""
        directions = _random_symmetric_directions(4000, np.random.default_rng(11))
        radius = 2.0 * self.geom.epsilon_u * 1.001
        w = weights(np.eye(3) + radius * directions, self.geom)
        self.assertTrue(np.any(w < 0))

    def test_identity_weights(self):
        """Weights at Id are the square roots of the golden weights."""
        np.testing.assert_allclose(gamma_decompose(np.eye(3), self.geom), np.sqrt(0.5), atol=1e-12)

    def test_random_matrices_in_half_ball(self):
        """Random S with ||S - Id|| = eps_u/2 reconstruct within 1e-10."""
        rng = np.random.default_rng(3)
        for E in _random_symmetric_directions(1000, rng):
            S = np.eye(3) + 0.5 * self.geom.epsilon_u * E
            gamma = gamma_decompose(S, self.geom)
            self.assertTrue(np.all(gamma > 0))
            residual = np.linalg.norm(S - reconstruct(gamma ** 2, self.geom))
            self.assertLessEqual(residual, 1e-10)

    def test_scaled_identity(self):
        """Weights of (1 + delta) Id scale by sqrt(1 + delta)."""
        delta = self.geom.epsilon_u / 4.0
        gamma = gamma_decompose((1.0 + delta) * np.eye(3), self.geom)
        np.testing.assert_allclose(gamma, np.sqrt(1.0 + delta) * np.sqrt(0.5), rtol=1e-12)

    def test_outside_ball_rejected(self):
        """S beyond the epsilon_u ball is out of domain."""
        S = np.eye(3) + 2.0 * self.geom.epsilon_u * np.diag([1.0, 0.0, 0.0])
        with self.assertRaises(OutOfDomainError):
            gamma_decompose(S, self.geom)

    def test_pointwise_reports_location(self):
        """A single bad grid point is located in the error message."""
        field = np.broadcast_to(np.eye(3), (4, 4, 4, 3, 3)).copy()
        field[1, 2, 3] += np.diag([1.0, 0.0, 0.0])
        with self.assertRaisesRegex(OutOfDomainError, r"\(1, 2, 3\)"):
            decompose_pointwise(field, self.geom)

    def test_pointwise_weights(self):
        """A constant identity field returns the golden weights everywhere."""
        field = np.broadcast_to(np.eye(3), (2, 2, 2, 3, 3))
        w, _ = decompose_pointwise(field, self.geom)
        np.testing.assert_allclose(w, 0.5, atol=1e-12)

    def test_m_star_reproducible(self):
        """M* is finite and fixed by the seed."""
        first = estimate_m_star(self.geom, seed=5)
        second = estimate_m_star(self.geom, seed=5)
        self.assertTrue(np.isfinite(first))
        self.assertGreater(first, 0.0)
        self.assertEqual(first, second)


class TestAxisSurrogate(unittest.TestCase):
    """Tests for the axis-aligned surrogate set."""

    @classmethod
    def setUpClass(cls):
        cls.geom = build_axis_lambda(seed=2, samples=2000)

    def test_flags_missing_span(self):
        """The surrogate is marked as not spanning."""
        self.assertFalse(self.geom.spans)
        self.assertEqual(self.geom.n_lambda, 1)
        self.assertEqual(len(self.geom), 3)

    def test_diagonal_matrices_exact(self):
        """Diagonal matrices decompose with no remainder."""
        S = np.diag([1.05, 0.98, 1.01])
        gamma = gamma_decompose(S, self.geom)
        np.testing.assert_allclose(gamma ** 2, [1.05, 0.98, 1.01], atol=1e-12)
        np.testing.assert_allclose(unspanned_part(S, self.geom), 0.0, atol=1e-12)

    def test_off_diagonal_remainder(self):
        """Off-diagonal entries are left in the unspanned part."""
        S = np.eye(3)
        S[0, 1] = S[1, 0] = 0.05
        remainder = unspanned_part(S, self.geom)
        self.assertAlmostEqual(remainder[0, 1], 0.05)
        self.assertAlmostEqual(remainder[0, 0], 0.0)


class TestShifts(unittest.TestCase):
    """Tests for support-disjoint tube shifts."""

    @classmethod
    def setUpClass(cls):
        cls.geom = build_lambda(seed=7, samples=2000)

    def test_single_direction_trivial(self):
        """|Lambda| = 1 keeps alpha = 0."""
        single = assemble_geometry([((0, 1, 0), (1, 0, 0))], "single", require_span=False)
        shifted = choose_shifts(single, 0.5, 4.0)
        self.assertEqual(shifted.directions[0].shift, (0.0, 0.0, 0.0))

    def test_worst_pair_limit(self):
        """The tightest pair allows r_perp up to pi / (2 sqrt(481))."""
        lattice = PairLattice(self.geom.directions[0], self.geom.directions[2], 5)
        self.assertEqual(lattice.gcd, Fraction(1, 25))
        self.assertAlmostEqual(lattice.max_radius(0.0), np.pi / (2.0 * np.sqrt(481.0)), places=12)

    def test_shifts_found_and_disjoint(self):
        """At lambda = 64, r_perp = 1/64 the tubes are pairwise disjoint."""
        shifted = choose_shifts(self.geom, 1.0 / 64.0, 64.0, seed=1)
        rho0 = 1.0 / (64.0 * 5)
        for separation in pair_separation(shifted, 1.0 / 64.0, 64.0).values():
            self.assertGreaterEqual(separation, 2.0 * rho0)
        self.assertEqual(tube_overlap(shifted, samples=2048, seed=4), 0.0)

    def test_shifts_deterministic(self):
        """The same seed gives the same shifts."""
        first = choose_shifts(self.geom, 1.0 / 64.0, 64.0, seed=9)
        second = choose_shifts(self.geom, 1.0 / 64.0, 64.0, seed=9)
        self.assertEqual([d.shift for d in first.directions], [d.shift for d in second.directions])

    def test_unshifted_tubes_overlap(self):
        """With every alpha = 0 the tube families intersect."""
        unshifted = self.geom.with_shifts([(0.0, 0.0, 0.0)] * len(self.geom), 1.0 / 64.0, 64.0)
        self.assertGreater(tube_overlap(unshifted, samples=2048, seed=4), 0.0)

    def test_thick_tubes_rejected(self):
        """r_perp = 1/2 admits no shifts for the spanning set."""
        with self.assertRaises(NoAdmissibleShifts):
            choose_shifts(self.geom, 0.5, 2.0)

    def test_axis_surrogate_shifts(self):
        """The surrogate separates even fairly thick tubes."""
        axis = build_axis_lambda(seed=2, samples=500)
        shifted = choose_shifts(axis, 0.25, 8.0, seed=3)
        self.assertEqual(tube_overlap(shifted, samples=2048, seed=1), 0.0)


if __name__ == '__main__':
    unittest.main()
