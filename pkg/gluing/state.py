"""
Iteration states and the bad-set bookkeeping.

A state (u_q, R_q) is well prepared for a set I_q and a length scale
theta_q when R_q(t) vanishes whenever dist(t, I_q^c) <= theta_q. Bad sets
are finite unions of closed intervals kept sorted and merged.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from blocks.profiles import smooth_step, smooth_step_rate
from errors import InvalidParameterError
from gluing.initial import initial_stress
from spectral.field import GridSpec, ModelParams, SpectralField
from spectral.operators import freq_project, fractional_laplacian, inverse_divergence, time_derivative

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]

# Samples with a stress magnitude below this count as zero
ZERO_STRESS = 1e-14


def merge_intervals(intervals: Sequence[Sequence[float]]) -> List[Interval]:
    """Sorted union of closed intervals; touching intervals are joined."""
    ordered = sorted((float(a), float(b)) for a, b in intervals)
    merged: List[Interval] = []
    for a, b in ordered:
        if b < a:
            raise InvalidParameterError(f"Interval [{a}, {b}] is reversed")
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def distance_to_complement(t: np.ndarray, intervals: Sequence[Interval]) -> np.ndarray:
    """dist(t, I^c): zero outside I, the distance to the nearer endpoint inside."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for a, b in merge_intervals(intervals):
        inside = (t >= a) & (t <= b)
        out = np.where(inside, np.minimum(t - a, b - t), out)
    return out


def contains(outer: Sequence[Interval], inner: Sequence[Interval], tol: float = 1e-12) -> bool:
    """Every interval of ``inner`` lies in one interval of ``outer``."""
    outer = merge_intervals(outer)
    return all(any(a >= c - tol and b <= d + tol for c, d in outer) for a, b in merge_intervals(inner))


def stress_profile(stress: SpectralField) -> np.ndarray:
    """sup_x |R(t, x)| per time sample."""
    values = stress.physical()
    return np.sqrt(np.max(np.sum(values ** 2, axis=(-5, -4)), axis=(-3, -2, -1)))


@dataclass
class IterationState:
    """(u_q, R_q) on a time grid over [0, T] with its bad set."""
    velocity: SpectralField
    stress: SpectralField
    bad_set: List[Interval]
    theta: float
    q: int = 0
    lambda_q: float = 2.0
    velocity_rate: Optional[SpectralField] = None

    def __post_init__(self):
        if not (self.velocity.time_sampled and self.stress.time_sampled):
            raise InvalidParameterError("A state needs time-sampled velocity and stress")
        if self.theta <= 0:
            raise InvalidParameterError(f"theta must be positive, got {self.theta}")
        self.bad_set = merge_intervals(self.bad_set)

    @property
    def grid(self) -> GridSpec:
        return self.velocity.grid

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()

    def to_dict(self) -> Dict[str, Any]:
        return {
            'q': self.q,
            'theta': self.theta,
            'lambda_q': self.lambda_q,
            'bad_set': [list(i) for i in self.bad_set],
            'grid': self.grid.to_dict(),
            'well_prepared': well_prepared(self),
        }


def well_prepared(state: IterationState, margin: Optional[float] = None) -> bool:
    """
    R(t) = 0 at every time sample with dist(t, I^c) <= margin
    (theta by default).
    """
    margin = state.theta if margin is None else margin
    distance = distance_to_complement(state.times, state.bad_set)
    profile = stress_profile(state.stress)
    offending = (distance <= margin) & (profile > ZERO_STRESS)
    if np.any(offending):
        logger.debug("Stress nonzero near the complement at t=%s", state.times[offending][:5])
    return not bool(np.any(offending))


# =============================================================================
# Synthetic shear states
# =============================================================================

@dataclass
class ShearSpec:
    """
    u = A(t) sin(x2) e1 with A(t) = shear e^{-nu t}(1 + kappa sum_j step_j(t)).

    Each step ramps from 0 to 1 over [c_j - w, c_j + w], so A' + nu A (and
    with it the stress) is supported there.
    """
    centers: List[float]
    width: float = 0.04
    shear: float = 1.0
    kappa: float = 0.02
    nu: float = 1.0

    def amplitude(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        ramps = np.zeros_like(t) + sum(smooth_step((t - c + self.width) / (2 * self.width)) for c in self.centers)
        return self.shear * np.exp(-self.nu * t) * (1.0 + self.kappa * ramps)

    def forcing(self, t: np.ndarray) -> np.ndarray:
        """A'(t) + nu A(t)."""
        t = np.asarray(t, dtype=float)
        ramps = np.zeros_like(t) + sum(smooth_step_rate((t - c + self.width) / (2 * self.width)) for c in self.centers)
        return self.shear * np.exp(-self.nu * t) * self.kappa * ramps / (2 * self.width)


def synthetic_state(
    grid: GridSpec,
    model: ModelParams,
    centers: Sequence[float],
    theta: float,
    width: float = 0.04,
    kappa: float = 0.02,
    shear: float = 1.0,
    lambda_q: float = 2.0,
) -> IterationState:
    """
    Well-prepared shear state with stress supported in chosen windows.

    The nonlinearity of a shear vanishes, so R = R(d_t u + nu (-Delta)^alpha u)
    solves the Navier-Stokes-Reynolds system with zero pressure; it vanishes
    wherever A follows the heat decay. The bad set pads each window by
    theta plus one time step.
    """
    if model.nu <= 0 or width <= 0:
        raise InvalidParameterError("Viscosity and window width must be positive")
    shape = ShearSpec(list(centers), width, shear, kappa, model.nu)
    times = grid.times()
    _, x2, _ = grid.coordinates()
    profile = np.zeros((3,) + grid.physical_shape)
    profile[0] = np.sin(x2)
    base = SpectralField.from_physical(profile, grid, 1)
    # Drop transform roundoff outside the |xi| = 1 modes
    base = base.with_coeffs(np.where(np.abs(base.coeffs) > 1e-12, base.coeffs, 0.0),
                            mean_free=True, divergence_free=True)

    velocity = base.broadcast_times(grid).modulate(shape.amplitude(times))
    dissipation = fractional_laplacian(velocity, model.alpha, model.nu)
    # sin(x2) has |xi| = 1, so nu (-Delta)^alpha u = nu u exactly
    rate = base.broadcast_times(grid).modulate(shape.forcing(times)) + velocity * (-model.nu)
    stress = inverse_divergence(freq_project(rate + dissipation, "nonzero"))
    stress = stress.with_coeffs(stress.coeffs, label="R_q")

    pad = theta + grid.dt
    bad_set = [(c - width - pad, c + width + pad) for c in centers]
    state = IterationState(velocity, stress, bad_set, theta, 0, lambda_q, velocity_rate=rate)
    logger.info("Synthetic shear state: %d windows, theta=%g, N=%d, M=%d",
                len(centers), theta, grid.n, grid.time_samples)
    return state


# =============================================================================
# Stored states
# =============================================================================

def stored_state(
    velocity: SpectralField,
    model: ModelParams,
    theta: float,
    stress: Optional[SpectralField] = None,
    lambda_q: float = 2.0,
) -> IterationState:
    """
    State from a stored velocity snapshot.

    Without a stored stress the manufactured R(d_t u + nu (-Delta)^alpha u) + u ⊗̊ u
    is paired with it. The bad set covers the stress support padded by
    theta plus one time step.
    """
    if velocity.rank != 1 or not velocity.time_sampled:
        raise InvalidParameterError("A stored state needs a time-sampled velocity")
    rate = time_derivative(velocity)
    if stress is None:
        stress = initial_stress(velocity, model, rate)
    elif stress.rank != 2 or stress.grid != velocity.grid or not stress.time_sampled:
        raise InvalidParameterError(f"Stored stress on {stress.grid} does not match the velocity on {velocity.grid}")
    grid = velocity.grid
    active = stress_profile(stress) > ZERO_STRESS
    pad = theta + grid.dt
    bad_set = [(t - pad, t + pad) for t in grid.times()[active]]
    logger.info("Stored state: N=%d, M=%d, stress active at %d of %d samples",
                grid.n, grid.time_samples, int(np.count_nonzero(active)), grid.time_samples)
    return IterationState(velocity, stress, bad_set, theta, 0, lambda_q, velocity_rate=rate)
