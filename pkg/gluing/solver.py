"""
Local solves of the hyperdissipative Navier-Stokes equations.

Integrating-factor fourth-order Runge-Kutta (Lawson): the dissipation is
integrated exactly through the semigroup, the Leray-projected and
two-thirds dealiased nonlinearity explicitly. Every step stays divergence
free because the nonlinearity is projected.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import integrate

from config import get_config
from errors import BlowUpError, InvalidParameterError, PreconditionViolation
from spectral.field import ModelParams, SpectralField
from spectral.operators import (
    differentiate,
    fractional_laplacian,
    leray_project,
    relative_residual,
    semigroup_apply,
    sobolev_norm,
    tensor_product,
    time_derivative,
)

logger = logging.getLogger(__name__)

# Advective step limit: dt * max|v| <= CFL * grid spacing
CFL = 0.5


def nonlinearity(v: SpectralField) -> SpectralField:
    """-P_H div(v ⊗ v) with two-thirds truncation of the product."""
    return -leray_project(differentiate(tensor_product(v, v, truncate=True), "div"))


def stable_step(v: SpectralField, dt: float) -> float:
    """dt capped by the advective limit on the dealiased grid."""
    speed = float(np.max(np.abs(v.physical())))
    if speed == 0:
        return dt
    return min(dt, CFL * v.grid.spacing / speed)


def _rk4_step(v: SpectralField, h: float, model: ModelParams) -> SpectralField:
    def semigroup(f: SpectralField, t: float) -> SpectralField:
        return semigroup_apply(f, t, model)

    a = nonlinearity(v)
    b = nonlinearity(semigroup(v + a * (h / 2), h / 2))
    c = nonlinearity(semigroup(v, h / 2) + b * (h / 2))
    d = nonlinearity(semigroup(v, h) + semigroup(c, h / 2) * h)
    increment = semigroup(a, h) + semigroup(b + c, h / 2) * 2.0 + d
    return semigroup(v, h) + increment * (h / 6.0)


@dataclass
class LocalSolution:
    """v on ``samples`` uniform times over [start, start + span]."""
    start: float
    span: float
    velocity: SpectralField
    substeps: int
    h3_growth: float

    @property
    def times(self) -> np.ndarray:
        return self.start + self.velocity.grid.times()

    def rate(self, model: ModelParams) -> SpectralField:
        """d_t v from the equation itself (undealiased product)."""
        v = self.velocity
        return -fractional_laplacian(v, model.alpha, model.nu) - leray_project(
            differentiate(tensor_product(v, v), "div"))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'start': self.start,
            'span': self.span,
            'samples': self.velocity.grid.time_samples,
            'substeps': self.substeps,
            'h3_growth': self.h3_growth,
        }


def local_solve(
    v0: SpectralField,
    t_span: Tuple[float, float],
    model: ModelParams,
    dt: float,
    samples: int = 2,
    blowup_factor: Optional[float] = None,
) -> LocalSolution:
    """
    Solve d_t v + nu (-Delta)^alpha v + P_H div(v ⊗ v) = 0 from v0 at t_span[0].

    Args:
        v0: Static divergence-free mean-free initial velocity
        t_span: (t0, t1) with t1 > t0
        model: Viscosity and dissipation exponent
        dt: Largest step; capped by the advective limit at every output interval
        samples: Output samples including both ends
        blowup_factor: Abort once ||v||_{H^3} exceeds this multiple of ||v0||_{H^3}

    Raises:
        PreconditionViolation: v0 is time-sampled, not mean free or not divergence free
        BlowUpError: The H^3 guard trips
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0 or dt <= 0 or samples < 2:
        raise InvalidParameterError("Need t1 > t0, dt > 0 and at least two output samples")
    if v0.rank != 1 or v0.time_sampled:
        raise PreconditionViolation("Local solves start from a static velocity field")
    config = get_config()
    tol = float(config.get("mean_free_tol"))
    scale = max(float(np.sqrt(v0.squared_l2())), 1e-300)
    if np.max(np.abs(v0.mean())) > tol * max(scale, 1.0):
        raise PreconditionViolation("Initial velocity is not mean free")
    if relative_residual(differentiate(v0, "div"), differentiate(v0, "grad")) > float(config.get("spectral_tol")):
        raise PreconditionViolation("Initial velocity is not divergence free")

    factor = float(config.get("blowup_factor") if blowup_factor is None else blowup_factor)
    h3_start = sobolev_norm(v0, 3.0)
    interval = (t1 - t0) / (samples - 1)
    v = v0
    frames = [v0]
    substeps = 0
    h3_max = h3_start
    for _ in range(samples - 1):
        count = max(1, math.ceil(interval / stable_step(v, dt) - 1e-12))
        h = interval / count
        for _ in range(count):
            v = _rk4_step(v, h, model)
        substeps += count
        h3 = sobolev_norm(v, 3.0)
        h3_max = max(h3_max, h3)
        if not np.isfinite(h3) or (h3_start > 0 and h3 > factor * h3_start):
            raise BlowUpError(f"||v||_H3 grew from {h3_start:.3e} to {h3:.3e} within [{t0}, {t1}]")
        frames.append(v)

    velocity = SpectralField.stack_times(frames, period=t1 - t0)
    growth = h3_max / h3_start if h3_start > 0 else 1.0
    logger.debug("Local solve on [%g, %g]: %d substeps, H3 growth %.3f", t0, t1, substeps, growth)
    return LocalSolution(t0, t1 - t0, velocity.with_coeffs(velocity.coeffs, mean_free=True, divergence_free=True),
                         substeps, growth)


def solve_residual(solution: LocalSolution, model: ModelParams) -> float:
    """
    Leray-projected residual of the equation with fourth-order time
    differences of the output samples (needs five samples).
    """
    v = solution.velocity
    rhs = -fractional_laplacian(v, model.alpha, model.nu) + nonlinearity(v)
    return relative_residual(time_derivative(v) - rhs, rhs)


@dataclass
class EnergyReport:
    """||v(t)||^2 + 2 nu int ||v||^2_{H^alpha} against ||v0||^2."""
    energy: np.ndarray
    dissipation: np.ndarray
    excess: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.excess <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            'initial_energy': float(self.energy[0]),
            'final_energy': float(self.energy[-1]),
            'dissipated': float(self.dissipation[-1]),
            'excess': self.excess,
            'tolerance': self.tolerance,
            'passed': self.passed,
        }


def energy_report(solution: LocalSolution, model: ModelParams) -> EnergyReport:
    """
    The energy inequality on the output samples.

    The cumulative dissipation uses the trapezoidal rule; the tolerance is
    twice its gap to Simpson's rule over the whole span.
    """
    v = solution.velocity
    times = v.grid.times()
    energy = v.squared_l2()
    k2 = v.grid.wavenumber_squared()
    weighted = v.with_coeffs(v.coeffs * np.sqrt(np.where(k2 == 0, 0.0, k2 ** model.alpha)))
    density = 2.0 * model.nu * weighted.squared_l2()
    dissipation = integrate.cumulative_trapezoid(density, times, initial=0.0)
    gap = abs(dissipation[-1] - integrate.simpson(density, x=times)) if len(times) > 2 else 0.0
    excess = float(np.max(energy + dissipation - energy[0]))
    tolerance = 2.0 * gap + 1e-12 * float(energy[0])
    return EnergyReport(energy, dissipation, excess, tolerance)
