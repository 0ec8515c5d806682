"""
Manufactured Reynolds stresses.

For a smooth mean-free divergence-free u the stress
R = R(d_t u + nu (-Delta)^alpha u) + u ⊗̊ u makes (u, R) a solution of the
Navier-Stokes-Reynolds system with pressure -|u|^2/3.
"""
import logging
from typing import Optional

from errors import InvalidParameterError
from spectral.field import ModelParams, SpectralField
from spectral.operators import (
    differentiate,
    fractional_laplacian,
    freq_project,
    inverse_divergence,
    leray_project,
    relative_residual,
    tensor_product,
    time_derivative,
    traceless_product,
)

logger = logging.getLogger(__name__)


def _time_rate(u: SpectralField, du_dt: Optional[SpectralField]) -> SpectralField:
    if du_dt is not None:
        return du_dt
    if not u.time_sampled:
        return SpectralField.zeros(u.grid, 1)
    return time_derivative(u)


def initial_stress(
    u: SpectralField,
    params: ModelParams,
    du_dt: Optional[SpectralField] = None,
) -> SpectralField:
    """
    R = R(d_t u + nu (-Delta)^alpha u) + u ⊗̊ u.

    Args:
        u: Velocity, static (treated as frozen in time) or time-sampled
        params: Viscosity and dissipation exponent
        du_dt: Closed-form time derivative; fourth-order differences of u otherwise
    """
    if u.rank != 1:
        raise InvalidParameterError("initial_stress needs a velocity field")
    linear = _time_rate(u, du_dt) + fractional_laplacian(u, params.alpha, params.nu)
    linear = freq_project(linear, "nonzero")
    stress = inverse_divergence(linear) + traceless_product(u, u)
    return stress.with_coeffs(stress.coeffs, label="R_0")


def nsr_defect(
    u: SpectralField,
    stress: SpectralField,
    params: ModelParams,
    du_dt: Optional[SpectralField] = None,
) -> SpectralField:
    """P_H(d_t u + nu (-Delta)^alpha u + div(u ⊗ u) - div R), the pressure-free defect."""
    nonlinear = differentiate(tensor_product(u, u), "div")
    lhs = _time_rate(u, du_dt) + fractional_laplacian(u, params.alpha, params.nu) + nonlinear
    return leray_project(freq_project(lhs - differentiate(stress, "div"), "nonzero"))


def nsr_residual(
    u: SpectralField,
    stress: SpectralField,
    params: ModelParams,
    du_dt: Optional[SpectralField] = None,
) -> float:
    """Defect relative to P_H div R (or to the nonlinear term when R vanishes)."""
    defect = nsr_defect(u, stress, params, du_dt)
    reference = leray_project(freq_project(differentiate(stress, "div"), "nonzero"))
    if float(reference.squared_l2().sum()) == 0.0:
        reference = differentiate(tensor_product(u, u), "div")
    value = relative_residual(defect, reference)
    logger.debug("NSR residual %.3e", value)
    return value
