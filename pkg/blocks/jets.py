"""
Spatial building blocks on the grid: intermittent jets and Mikado flows.

Each block is synthesized in physical space from the profile set, then
transformed. The planar factor phi_(k) is the sampled tube profile with the
part the spectral derivatives cannot see removed (the grid mean and the
pure Nyquist alternations), using a correction supported inside the tube.
The potential is then Phi = (lambda N_Lambda)^2 (-Delta)^{-1} phi on the
grid, and both are scaled by one discrete constant so the grid mean of
phi^2 is one. Thus phi keeps the compact support of the tube while
curl curl W^c = W + W~^c and div(W + W~^c) = 0 hold for the sampled fields
themselves, not just for their continuum limits.

The jet profile psi_(k1) is band-limited below N/4 and moved along k1 by an
exact Fourier phase, so the traveling wave is evaluated at any time without
resampling.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from blocks.params import BlockParams
from blocks.profiles import ProfileSet, make_profiles, wrap
from config import RESOLUTION_FACTOR
from errors import InvalidParameterError, ResolutionError
from geometry.directions import Direction, GeometrySet
from spectral.field import GridSpec, SpectralField
from spectral.operators import (
    band_limit,
    constant_vector,
    cross,
    differentiate,
    dot,
    multiply,
    relative_residual,
    tensor_product,
)

logger = logging.getLogger(__name__)

Times = Union[None, float, np.ndarray]

# A corrected tube profile below this fraction of the sampled mean square has lost its shape
TUBE_FLOOR = 1e-6


class JetFields(NamedTuple):
    """W_(k) with its three factors."""
    W: SpectralField
    psi: SpectralField
    phi: SpectralField
    Phi: SpectralField


class CorrectorFields(NamedTuple):
    """Divergence corrector W~^c_(k) and double-curl potential W^c_(k)."""
    corrector: SpectralField
    potential: SpectralField


class MikadoFields(NamedTuple):
    W: SpectralField
    potential: SpectralField


def required_resolution(params: BlockParams) -> int:
    """Smallest even N with N >= RESOLUTION_FACTOR * lambda * N_Lambda."""
    need = int(math.ceil(RESOLUTION_FACTOR * params.lam * params.n_lambda - 1e-9))
    return need + need % 2


def check_resolution(params: BlockParams, grid: GridSpec) -> None:
    required = required_resolution(params)
    if grid.n < required:
        raise ResolutionError(
            f"Grid N = {grid.n} cannot resolve lambda = {params.lam:g} with N_Lambda = "
            f"{params.n_lambda}; need N >= {required}",
            required,
        )


def _projection(vector: np.ndarray, coords, offset: np.ndarray) -> np.ndarray:
    return sum(float(vector[i]) * (coords[i] - float(offset[i])) for i in range(3))


@dataclass(frozen=True, eq=False)
class SpatialBlock:
    """
    One direction's spatial block on a grid.

    ``psi0`` is None for Mikado flows, which are stationary and have no
    corrector. Methods taking ``t`` return a static field for a scalar time
    and a time-sampled field over the grid times when ``t`` is None.
    """
    direction: Direction
    params: BlockParams
    grid: GridSpec
    psi0: Optional[SpectralField]
    phi: SpectralField
    Phi: SpectralField

    @property
    def flow_axis(self) -> np.ndarray:
        return self.direction.flow_axis

    @property
    def frequency(self) -> float:
        """lambda N_Lambda."""
        return self.params.lam * self.params.n_lambda

    @property
    def is_jet(self) -> bool:
        return self.psi0 is not None

    def _axial_wavenumber(self) -> np.ndarray:
        k = self.grid.wavenumbers()
        axis = self.flow_axis
        return axis[0] * k[0] + axis[1] * k[1] + axis[2] * k[2]

    def _times(self, t: Times) -> np.ndarray:
        return self.grid.times() if t is None else np.atleast_1d(np.asarray(t, dtype=float))

    def psi(self, t: Times = None) -> SpectralField:
        """psi_(k1) at time t: the profile translated by mu t along k1."""
        if not self.is_jet:
            raise InvalidParameterError("Mikado flows have no jet profile")
        times = self._times(t)
        phase = np.exp(1j * self._axial_wavenumber()[np.newaxis] * (self.params.mu * times).reshape(-1, 1, 1, 1))
        coeffs = self.psi0.coeffs[np.newaxis] * phase
        if t is not None and np.ndim(t) == 0:
            return self.psi0.with_coeffs(coeffs[0], label="psi")
        return SpectralField(coeffs, self.grid.with_time(len(times)), 0, True, label="psi")

    def psi_rate(self, t: Times = None) -> SpectralField:
        """d/dt psi_(k1) = mu (k1 . grad) psi_(k1)."""
        psi = self.psi(t)
        return psi.with_coeffs(psi.coeffs * 1j * self.params.mu * self._axial_wavenumber(), mean_free=True)

    def velocity(self, t: Times = None) -> SpectralField:
        """W_(k) = psi_(k1) phi_(k) k1, or phi_(k) k1 for a Mikado flow."""
        planar = constant_vector(self.flow_axis, self.phi)
        if not self.is_jet:
            return planar
        return multiply(self.psi(t), planar)

    def velocity_rate(self, t: Times = None) -> SpectralField:
        if not self.is_jet:
            return SpectralField.zeros(self.grid, 1)
        return multiply(self.psi_rate(t), constant_vector(self.flow_axis, self.phi))

    def potential(self, t: Times = None) -> SpectralField:
        """W^c_(k) = psi_(k1) Phi_(k) k1 / (lambda N_Lambda)^2."""
        planar = constant_vector(self.flow_axis, self.Phi) / self.frequency ** 2
        if not self.is_jet:
            return planar
        return multiply(self.psi(t), planar)

    def potential_rate(self, t: Times = None) -> SpectralField:
        if not self.is_jet:
            return SpectralField.zeros(self.grid, 1)
        return multiply(self.psi_rate(t), constant_vector(self.flow_axis, self.Phi) / self.frequency ** 2)

    def corrector(self, t: Times = None) -> SpectralField:
        """W~^c_(k) = grad psi_(k1) x curl(Phi_(k) k1) / (lambda N_Lambda)^2; zero for Mikado flows."""
        if not self.is_jet:
            return SpectralField.zeros(self.grid, 1)
        grad_psi = differentiate(self.psi(t), "grad")
        swirl = differentiate(constant_vector(self.flow_axis, self.Phi), "curl")
        return cross(grad_psi, swirl) / self.frequency ** 2

    @cached_property
    def average(self) -> np.ndarray:
        """The spatial average of W_(k) ⊗ W_(k), a multiple of k1 ⊗ k1."""
        density = self.phi.physical() ** 2
        if self.is_jet:
            density = density * self.psi0.physical() ** 2
        return float(np.mean(density)) * np.outer(self.flow_axis, self.flow_axis)

    def identities(self, t: Times = 0.0) -> Dict[str, float]:
        """
        Relative residuals of the block identities at time t.

        Jets: curl curl W^c = W + W~^c and div(W + W~^c) = 0. Mikado flows:
        curl curl W^c = W, div W = 0 and div(W ⊗ W) = 0.
        """
        W = self.velocity(t)
        corrected = W + self.corrector(t)
        double_curl = differentiate(differentiate(self.potential(t), "curl"), "curl")
        gradient = differentiate(W, "grad")
        out = {
            'double_curl': relative_residual(double_curl - corrected, corrected),
            'divergence': relative_residual(differentiate(corrected, "div"), gradient),
        }
        if not self.is_jet:
            stress = tensor_product(W, W)
            out['stress_divergence'] = relative_residual(
                differentiate(stress, "div"), differentiate(dot(W, W), "grad"))
        return out


# =============================================================================
# Construction
# =============================================================================

def _planar_factors(
    direction: Direction,
    params: BlockParams,
    grid: GridSpec,
    profiles: ProfileSet,
) -> Tuple[SpectralField, SpectralField]:
    coords = grid.coordinates()
    shift = np.asarray(direction.shift, dtype=float)
    scale = params.lattice_scale
    y1 = scale * _projection(direction.array("k"), coords, shift)
    y2 = scale * _projection(direction.array("k2"), coords, shift)
    sampled = profiles.phi_scaled(y1, y2, params.r_perp)
    # positive inside the tube, tilted so mirror-image samples get different weights
    u1 = wrap(y1) / params.r_perp
    u2 = wrap(y2) / params.r_perp
    weight = profiles.Phi_scaled(y1, y2, params.r_perp) * (1.0 + u1 / 2.0 + u2 / 3.0)
    values = remove_parity_sums(sampled, weight)

    mean_square = float(np.mean(values ** 2))
    if mean_square <= TUBE_FLOOR * float(np.mean(sampled ** 2)):
        raise ResolutionError(f"Tube profile has too few samples on the N = {grid.n} grid", 2 * grid.n)
    values = values / math.sqrt(mean_square)
    phi = SpectralField.from_physical(values, grid)
    k_squared = grid.wavenumber_squared()
    safe = np.where(k_squared > 0, k_squared, 1.0)
    Phi_coeffs = np.where(k_squared > 0, phi.coeffs * (params.lam * params.n_lambda) ** 2 / safe, 0.0)
    return phi.with_coeffs(phi.coeffs, mean_free=True, label="phi"), \
        phi.with_coeffs(Phi_coeffs, mean_free=True, label="Phi")


def remove_parity_sums(values: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """
    Subtract a multiple of ``weight`` on each parity class of grid points
    (j mod 2 per axis) so that every class sums to zero.

    A grid field whose eight class sums vanish has no content on the modes
    whose spectral wavenumber is zero (the mean and the pure Nyquist
    alternations). Where ``weight`` is zero nothing changes, so supports
    are kept.
    """
    n = values.shape[-1]
    if n % 2:
        raise InvalidParameterError(f"Parity classes need an even grid, got N={n}")
    totals = _parity_sums(values)
    mass = _parity_sums(weight)
    ratio = np.divide(totals, mass, out=np.zeros_like(totals), where=np.abs(mass) > 0)
    return values - weight * np.tile(ratio, (n // 2, n // 2, n // 2))


def _parity_sums(values: np.ndarray) -> np.ndarray:
    half = values.shape[-1] // 2
    return values.reshape(half, 2, half, 2, half, 2).sum(axis=(0, 2, 4))


def _jet_profile(direction: Direction, params: BlockParams, grid: GridSpec, profiles: ProfileSet) -> SpectralField:
    coords = grid.coordinates()
    argument = params.lattice_scale * _projection(direction.flow_axis, coords, np.zeros(3))
    psi = SpectralField.from_physical(profiles.psi_scaled(argument, params.r_par), grid)
    psi = band_limit(psi, grid.n / 4.0)
    mean_square = float(psi.squared_l2()) / (2.0 * np.pi) ** 3
    if mean_square <= 0:
        raise ResolutionError(f"Jet profile vanishes below the N/4 band on the N = {grid.n} grid",
                              required_resolution(params))
    return psi.with_coeffs(psi.coeffs / math.sqrt(mean_square), mean_free=True, label="psi")


def build_block(
    direction: Direction,
    params: BlockParams,
    grid: GridSpec,
    profiles: Optional[ProfileSet] = None,
) -> SpatialBlock:
    """
    Synthesize the block of one direction.

    Raises:
        ResolutionError: N < RESOLUTION_FACTOR * lambda * N_Lambda
    """
    check_resolution(params, grid)
    profiles = profiles or make_profiles(grid.period)
    phi, Phi = _planar_factors(direction, params, grid, profiles)
    psi0 = _jet_profile(direction, params, grid, profiles) if params.is_jet else None
    logger.debug("Built %s block along k1=%s at lambda=%g on N=%d",
                 "jet" if psi0 is not None else "Mikado", direction.flow_axis, params.lam, grid.n)
    return SpatialBlock(direction, params, grid, psi0, phi, Phi)


def build_blocks(
    geom: GeometrySet,
    params: BlockParams,
    grid: GridSpec,
    profiles: Optional[ProfileSet] = None,
) -> Sequence[SpatialBlock]:
    """One block per direction, in the direction set's order."""
    if geom.n_lambda != params.n_lambda:
        raise InvalidParameterError(
            f"Block parameters use N_Lambda = {params.n_lambda} but the direction set has {geom.n_lambda}"
        )
    profiles = profiles or make_profiles(grid.period)
    blocks = [build_block(d, params, grid, profiles) for d in geom.directions]
    logger.info("Built %d blocks (%s) at lambda=%g, N=%d", len(blocks), params.regime, params.lam, grid.n)
    return blocks


# =============================================================================
# Operation-level entry points
# =============================================================================

def intermittent_jet(
    direction: Direction,
    params: BlockParams,
    grid: GridSpec,
    t: Times = 0.0,
    profiles: Optional[ProfileSet] = None,
) -> JetFields:
    """W_(k), psi_(k1), phi_(k) and Phi_(k) at time t (all grid times when t is None)."""
    if not params.is_jet:
        raise InvalidParameterError("Intermittent jets need A1 block parameters")
    block = build_block(direction, params, grid, profiles)
    return JetFields(block.velocity(t), block.psi(t), block.phi, block.Phi)


def jet_correctors(
    direction: Direction,
    params: BlockParams,
    grid: GridSpec,
    t: Times = 0.0,
    profiles: Optional[ProfileSet] = None,
) -> CorrectorFields:
    if not params.is_jet:
        raise InvalidParameterError("Jet correctors need A1 block parameters")
    block = build_block(direction, params, grid, profiles)
    return CorrectorFields(block.corrector(t), block.potential(t))


def mikado_flow(
    direction: Direction,
    params: BlockParams,
    grid: GridSpec,
    profiles: Optional[ProfileSet] = None,
) -> MikadoFields:
    """The stationary Mikado flow W_(k) and its potential W^c_(k)."""
    if params.is_jet:
        raise InvalidParameterError("Mikado flows need A2 block parameters")
    block = build_block(direction, params, grid, profiles)
    return MikadoFields(block.velocity(), block.potential())


def jet_average(block: SpatialBlock) -> np.ndarray:
    return block.average
