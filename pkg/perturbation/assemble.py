"""
Assembly of the perturbation w = w_p + w_c + w_t + w_o.

Fast factors are differentiated in time from their closed forms (the
travelling jet profile, g_(tau)' and h_(tau)' = sigma (g^2 - 1)); only the
slow amplitudes a_(k) use finite differences on the time grid.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from blocks.jets import SpatialBlock
from blocks.params import BlockParams
from blocks.temporal import TemporalBlocks
from errors import InvalidParameterError
from perturbation.amplitudes import Amplitudes
from spectral.field import GridSpec, SpectralField, sum_fields
from spectral.operators import (
    constant_vector,
    cross,
    differentiate,
    dot,
    freq_project,
    leray_project,
    multiply,
)

logger = logging.getLogger(__name__)


def project(v: SpectralField) -> SpectralField:
    """P_H P_{!=0}: Leray projection after removing every zero-frequency mode."""
    return leray_project(freq_project(v, "nonzero"))


def double_curl(v: SpectralField) -> SpectralField:
    return differentiate(differentiate(v, "curl"), "curl")


def matrix_times(matrix: np.ndarray, v: SpectralField) -> SpectralField:
    """Constant 3x3 matrix applied to a vector field."""
    if v.rank != 1:
        raise InvalidParameterError("matrix_times needs a vector field")
    components = np.moveaxis(v.coeffs, -4, 0)
    product = np.tensordot(np.asarray(matrix, dtype=float), components, axes=(1, 0))
    return v.with_coeffs(np.moveaxis(product, 0, -4))


@dataclass
class BlockSignals:
    """g_(tau), g_(tau)', h_(tau) and h_(tau)' on the field time grid."""
    times: np.ndarray
    g: np.ndarray
    g_rate: np.ndarray
    h: np.ndarray
    h_rate: np.ndarray

    @classmethod
    def sample(cls, temporal: TemporalBlocks, grid: GridSpec) -> "BlockSignals":
        times = grid.times()
        return cls(times, temporal.g(times), temporal.g(times, 1), temporal.h(times), temporal.h_rate(times))


@dataclass
class PerturbationSet:
    """
    The four perturbation pieces with their time derivatives.

    ``rate_pc`` is the time derivative of w_p + w_c, and ``rate_t``/``rate_o``
    those of the temporal and oscillation correctors; ``potential`` is
    sum_k a_(k) g_(tau) W^c_(k). The amplitudes, blocks and signals are kept
    for the stress and identity checks.
    """
    regime: str
    principal: SpectralField
    corrector: SpectralField
    temporal: SpectralField
    oscillation: SpectralField
    rate_pc: SpectralField
    rate_t: SpectralField
    rate_o: SpectralField
    amplitudes: Amplitudes
    blocks: Sequence[SpatialBlock]
    signals: BlockSignals
    params: BlockParams
    velocities: List[SpectralField] = field(default_factory=list)
    potential: Optional[SpectralField] = None

    @property
    def total(self) -> SpectralField:
        return self.principal + self.corrector + self.temporal + self.oscillation

    @property
    def rate(self) -> SpectralField:
        return self.rate_pc + self.rate_t + self.rate_o

    @property
    def grid(self) -> GridSpec:
        return self.principal.grid

    def pieces(self) -> Dict[str, SpectralField]:
        return {
            'principal': self.principal,
            'corrector': self.corrector,
            'temporal': self.temporal,
            'oscillation': self.oscillation,
        }

    def summary(self) -> Dict[str, Any]:
        return {
            'regime': self.regime,
            'directions': len(self.blocks),
            'sup': {name: float(np.max(np.abs(piece.physical()))) for name, piece in self.pieces().items()},
        }


def _squared(a: SpectralField) -> SpectralField:
    return SpectralField.from_physical(a.physical() ** 2, a.grid, 0, a.time_sampled)


def expand_double_curl(a: SpectralField, potential: SpectralField, corrector: SpectralField) -> Dict[str, SpectralField]:
    """
    curl curl(a W^c) - a W by the product rule, for a scalar amplitude a:
    curl(grad a x W^c), grad a x curl W^c and a W~^c.
    """
    gradient = differentiate(a, "grad")
    return {
        'transport': differentiate(cross(gradient, potential), "curl"),
        'swirl': cross(gradient, differentiate(potential, "curl")),
        'corrector': multiply(a, corrector),
    }


def temporal_corrector(
    amplitudes: Amplitudes,
    blocks: Sequence[SpatialBlock],
    signals: BlockSignals,
    params: BlockParams,
) -> SpectralField:
    """w_t = -mu^{-1} sum_k P_H P_{!=0}(a_(k)^2 g_(tau)^2 psi_(k1)^2 phi_(k)^2 k1); zero for Mikado flows."""
    grid = amplitudes.rho.grid
    if not params.is_jet:
        return SpectralField.zeros(grid, 1, True)
    terms = []
    for a, block in zip(amplitudes.a, blocks):
        W = block.velocity(None)
        density = multiply(_squared(a).modulate(signals.g ** 2), dot(W, W))
        terms.append(constant_vector(block.flow_axis, density))
    return project(sum_fields(terms)) * (-1.0 / params.mu)


def oscillation_corrector(
    amplitudes: Amplitudes,
    blocks: Sequence[SpatialBlock],
    signals: BlockSignals,
    params: BlockParams,
) -> SpectralField:
    """w_o = -sigma^{-1} sum_k P_H P_{!=0}(h_(tau) fint(W_(k) ⊗ W_(k)) grad a_(k)^2)."""
    terms = []
    for a, block in zip(amplitudes.a, blocks):
        gradient = differentiate(_squared(a), "grad")
        terms.append(matrix_times(block.average, gradient).modulate(signals.h))
    return project(sum_fields(terms)) * (-1.0 / params.sigma)


def assemble_perturbation(
    amplitudes: Amplitudes,
    blocks: Sequence[SpatialBlock],
    temporal: TemporalBlocks,
    params: BlockParams,
) -> PerturbationSet:
    """
    Build w_p, w_c, w_t, w_o and their time derivatives.

    w_p = sum_k a_(k) g_(tau) W_(k) and w_c = curl curl(sum_k a_(k) g_(tau) W^c_(k)) - w_p,
    so w_p + w_c is a double curl and exactly divergence free on the grid.
    Its product-rule form (see :func:`expand_double_curl`) is checked
    against this one by ``verify_corrector_expansion``.
    """
    if len(blocks) != len(amplitudes.a):
        raise InvalidParameterError(f"{len(blocks)} blocks for {len(amplitudes.a)} amplitudes")
    grid = amplitudes.rho.grid
    signals = BlockSignals.sample(temporal, grid)
    jets = params.is_jet

    principal_terms, potential_terms, potential_rates = [], [], []
    temporal_rates, oscillation_rates, velocities = [], [], []
    for a, a_rate, block in zip(amplitudes.a, amplitudes.rates, blocks):
        W = block.velocity(None if jets else 0.0)
        potential = block.potential(None if jets else 0.0)
        velocities.append(W)
        ag = a.modulate(signals.g)
        principal_terms.append(multiply(ag, W))
        potential_terms.append(multiply(ag, potential))

        slow_rate = a_rate.modulate(signals.g) + a.modulate(signals.g_rate)
        rate = multiply(slow_rate, potential)
        if jets:
            rate = rate + multiply(ag, block.potential_rate(None))
        potential_rates.append(rate)

        a2 = _squared(a)
        a2_rate = multiply(a, a_rate) * 2.0
        if jets:
            # d/dt (a^2 g^2 psi^2 phi^2) k1
            g2_rate = a2_rate.modulate(signals.g ** 2) + a2.modulate(2.0 * signals.g * signals.g_rate)
            transport = dot(W, block.velocity_rate(None)) * 2.0
            density = multiply(g2_rate, dot(W, W)) + multiply(a2.modulate(signals.g ** 2), transport)
            temporal_rates.append(constant_vector(block.flow_axis, density))

        gradient = differentiate(a2, "grad")
        gradient_rate = differentiate(a2_rate, "grad")
        oscillation_rates.append(
            matrix_times(block.average, gradient).modulate(signals.h_rate)
            + matrix_times(block.average, gradient_rate).modulate(signals.h)
        )

    principal = sum_fields(principal_terms)
    potential_sum = sum_fields(potential_terms)
    corrector = double_curl(potential_sum) - principal
    rate_pc = double_curl(sum_fields(potential_rates))
    w_t = temporal_corrector(amplitudes, blocks, signals, params)
    if jets:
        rate_t = project(sum_fields(temporal_rates)) * (-1.0 / params.mu)
    else:
        rate_t = SpectralField.zeros(grid, 1, True)
    w_o = oscillation_corrector(amplitudes, blocks, signals, params)
    rate_o = project(sum_fields(oscillation_rates)) * (-1.0 / params.sigma)

    logger.info("Assembled %s perturbation from %d blocks on N=%d, M=%d",
                params.regime, len(blocks), grid.n, grid.time_samples)
    return PerturbationSet(
        regime=params.regime,
        principal=principal.with_coeffs(principal.coeffs, label="w_p"),
        corrector=corrector.with_coeffs(corrector.coeffs, label="w_c"),
        temporal=w_t.with_coeffs(w_t.coeffs, label="w_t"),
        oscillation=w_o.with_coeffs(w_o.coeffs, label="w_o"),
        rate_pc=rate_pc,
        rate_t=rate_t,
        rate_o=rate_o,
        amplitudes=amplitudes,
        blocks=blocks,
        signals=signals,
        params=params,
        velocities=velocities,
        potential=potential_sum.with_coeffs(potential_sum.coeffs, label="potential"),
    )


def temporal_support_ok(perturbation: PerturbationSet, tol: float = 1e-14) -> bool:
    """True when w vanishes at every sample where the cutoff f does."""
    values = perturbation.total.physical()
    outside = perturbation.amplitudes.cutoff == 0
    if not np.any(outside):
        return True
    return float(np.max(np.abs(values[outside]))) <= tol
