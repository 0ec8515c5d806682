"""
Amplitudes of the perturbation.

rho bounds the stress so that Id - R/rho stays in the ball where the
geometric decomposition is positive, and a_(k) = rho^{1/2} f gamma_(k)(Id - R/rho)
carries the temporal cutoff f.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from blocks.profiles import chi_cutoff, smooth_step
from errors import InvalidParameterError, ResolutionError
from geometry.directions import GeometrySet
from geometry.lemma import decompose_pointwise, unspanned_part
from spectral.field import GridSpec, SpectralField
from spectral.operators import time_derivative, traceless

logger = logging.getLogger(__name__)

# Samples whose stress norm is below this fraction of the peak count as outside the support
SUPPORT_THRESHOLD = 1e-12


def stress_magnitude(stress: SpectralField) -> np.ndarray:
    """Pointwise Frobenius norm, shape ([M,] N, N, N)."""
    values = stress.physical()
    return np.sqrt(np.sum(values ** 2, axis=(-5, -4)))


def temporal_support(stress: SpectralField, threshold: float = SUPPORT_THRESHOLD) -> np.ndarray:
    """Boolean mask of the time samples where the stress does not vanish."""
    if not stress.time_sampled:
        raise InvalidParameterError("Temporal support needs a time-sampled stress")
    peak_per_time = np.max(stress_magnitude(stress), axis=(-3, -2, -1))
    peak = float(np.max(peak_per_time))
    if peak == 0:
        return np.zeros(len(peak_per_time), dtype=bool)
    return peak_per_time > threshold * peak


def temporal_cutoff(stress: SpectralField, theta: float, threshold: float = SUPPORT_THRESHOLD) -> np.ndarray:
    """
    The cutoff f sampled on the stress time grid.

    f is a smooth ramp of the distance d(t) to the temporal support of the
    stress: 1 for d <= theta/8, 0 for d >= 3 theta/8. Hence f = 1 on the
    support and vanishes outside its theta/2 neighborhood.
    """
    if theta <= 0:
        raise InvalidParameterError(f"theta must be positive, got {theta}")
    support = temporal_support(stress, threshold)
    times = stress.grid.times()
    if not np.any(support):
        return np.zeros_like(times)
    distance = np.min(np.abs(times[:, None] - times[None, support]), axis=1)
    return 1.0 - smooth_step((distance - theta / 8.0) / (theta / 4.0))


@dataclass
class AmplitudeInputs:
    """
    Everything the amplitudes depend on.

    ``scale`` = lambda_q^{-epsilon_R/4} delta_{q+1} is the stress level below
    which rho is held constant.
    """
    stress: SpectralField
    cutoff: np.ndarray
    epsilon_u: float
    lambda_q: float
    delta_next: float
    epsilon_r: float

    def __post_init__(self):
        if self.stress.rank != 2 or not self.stress.time_sampled:
            raise InvalidParameterError("The stress must be a time-sampled rank-2 field")
        self.cutoff = np.asarray(self.cutoff, dtype=float)
        if self.cutoff.shape != (self.stress.grid.time_samples,):
            raise InvalidParameterError(
                f"Cutoff has {self.cutoff.shape} samples, stress has {self.stress.grid.time_samples}"
            )
        if np.any(self.cutoff < 0) or np.any(self.cutoff > 1):
            raise InvalidParameterError("The temporal cutoff must take values in [0, 1]")
        for name in ("epsilon_u", "lambda_q", "delta_next", "epsilon_r"):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def scale(self) -> float:
        return self.lambda_q ** (-self.epsilon_r / 4.0) * self.delta_next

    @property
    def grid(self) -> GridSpec:
        return self.stress.grid


@dataclass
class Amplitudes:
    """
    a_(k) per direction with their time derivatives, rho, f and the defect.

    ``defect`` = (1 - f^2) R - rho f^2 U(Id - R/rho), where U is the part of
    a matrix the direction set does not span. It vanishes for a spanning set
    whenever f = 1 on the support of R.
    """
    a: List[SpectralField]
    rates: List[SpectralField]
    rho: SpectralField
    cutoff: np.ndarray
    defect: SpectralField
    max_ratio: float

    def squares(self) -> List[SpectralField]:
        """a_(k)^2 from the grid values."""
        return [SpectralField.from_physical(a.physical() ** 2, a.grid, 0, True) for a in self.a]

    def summary(self) -> Dict[str, Any]:
        return {
            'directions': len(self.a),
            'rho_min': float(np.min(self.rho.physical())),
            'rho_max': float(np.max(self.rho.physical())),
            'max_stress_over_rho': self.max_ratio,
            'cutoff_support_samples': int(np.count_nonzero(self.cutoff > 0)),
            'amplitude_max': [float(np.max(np.abs(a.physical()))) for a in self.a],
        }


def build_rho(inputs: AmplitudeInputs) -> SpectralField:
    """rho = 2 epsilon_u^{-1} s chi(|R| / s) with s = lambda_q^{-epsilon_R/4} delta_{q+1}."""
    scale = inputs.scale
    magnitude = stress_magnitude(traceless(inputs.stress))
    values = 2.0 / inputs.epsilon_u * scale * chi_cutoff(magnitude / scale)
    return SpectralField.from_physical(values, inputs.grid, 0, True, label="rho")


def build_amplitudes(
    inputs: AmplitudeInputs,
    geom: GeometrySet,
    rho: Optional[SpectralField] = None,
) -> Amplitudes:
    """
    a_(k) = rho^{1/2} f gamma_(k)(Id - R/rho) on every grid point and sample.

    Raises:
        OutOfDomainError: Id - R/rho leaves the decomposition ball somewhere
            (the message carries the grid index)
        ResolutionError: Fewer than 5 time samples for the amplitude rates
    """
    grid = inputs.grid
    if grid.time_samples < 5:
        raise ResolutionError(f"Amplitude rates need at least 5 time samples, got {grid.time_samples}", 5)
    rho = build_rho(inputs) if rho is None else rho
    rho_values = rho.physical()
    stress = np.moveaxis(traceless(inputs.stress).physical(), (1, 2), (-2, -1))
    normalized = stress / rho_values[..., None, None]
    max_ratio = float(np.max(np.sqrt(np.sum(normalized ** 2, axis=(-2, -1)))))

    target = np.eye(3) - normalized
    weights, _ = decompose_pointwise(target, geom)
    f = inputs.cutoff.reshape(-1, 1, 1, 1)
    prefactor = np.sqrt(rho_values) * f

    a_fields, rates = [], []
    for k in range(len(geom)):
        values = prefactor * np.sqrt(weights[..., k])
        a = SpectralField.from_physical(values, grid, 0, True, label=f"a_{k}")
        a_fields.append(a)
        rates.append(time_derivative(a))

    remainder = unspanned_part(target, geom)
    f2 = (f ** 2)[..., None, None]
    defect = (1.0 - f2) * stress - (rho_values[..., None, None] * f2) * remainder
    defect_field = SpectralField.from_physical(np.moveaxis(defect, (-2, -1), (1, 2)), grid, 2, True,
                                               label="defect")
    logger.info("Built %d amplitudes: max |R/rho| = %.4g (epsilon_u = %.4g)",
                len(a_fields), max_ratio, inputs.epsilon_u)
    return Amplitudes(a_fields, rates, rho, inputs.cutoff, defect_field, max_ratio)
