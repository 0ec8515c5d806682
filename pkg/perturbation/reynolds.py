"""
The Reynolds stress at the next level.

R_{q+1} = R_lin + R_osc + R_cor, every part of the form R P_H P_{!=0}(...),
with R_osc split into its spatial, temporal and low-frequency pieces and
the grid defect (overlap of the sampled tubes, the unspanned part and
(1 - f^2) R). The pressure never appears: every check is Leray-projected.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from config import get_config
from errors import ToleranceBreach
from gluing.initial import nsr_defect
from perturbation.assemble import PerturbationSet, matrix_times, project
from perturbation.identities import IdentityReport, cancellation_terms, remove_mean
from spectral.field import ModelParams, SpectralField, sum_fields
from spectral.operators import (
    constant_vector,
    differentiate,
    fractional_laplacian,
    inverse_divergence,
    multiply,
    relative_residual,
    spacetime_norm,
    tensor_product,
    time_derivative,
)

logger = logging.getLogger(__name__)


def reynolds_operator(v: SpectralField) -> SpectralField:
    """R P_H P_{!=0} v."""
    return inverse_divergence(project(v))


@dataclass
class ReynoldsDecomp:
    """Components of R_{q+1}; each one symmetric and trace free."""
    linear: SpectralField
    oscillation_spatial: SpectralField
    oscillation_temporal: SpectralField
    oscillation_low: SpectralField
    defect: SpectralField
    corrector: SpectralField

    @property
    def oscillation(self) -> SpectralField:
        return self.oscillation_spatial + self.oscillation_temporal + self.oscillation_low + self.defect

    @property
    def total(self) -> SpectralField:
        return self.linear + self.oscillation + self.corrector

    def components(self) -> Dict[str, SpectralField]:
        return {
            'linear': self.linear,
            'oscillation_spatial': self.oscillation_spatial,
            'oscillation_temporal': self.oscillation_temporal,
            'oscillation_low': self.oscillation_low,
            'defect': self.defect,
            'corrector': self.corrector,
            'oscillation': self.oscillation,
            'total': self.total,
        }

    def norms(self, rho: float) -> Dict[str, Dict[str, float]]:
        """L^1_{t,x} and L^1_t L^rho_x of every component."""
        return {
            name: {'L1': spacetime_norm(part, 1.0, 1.0), 'L1_Lrho': spacetime_norm(part, 1.0, rho)}
            for name, part in self.components().items()
        }

    def asymmetry(self) -> float:
        total = self.total
        return relative_residual(total - total.transpose(), total)


@dataclass
class ReynoldsReport:
    """R_{q+1} with its checks."""
    decomposition: ReynoldsDecomp
    velocity: SpectralField
    checks: List[IdentityReport]

    @property
    def stress(self) -> SpectralField:
        return self.decomposition.total

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def residuals(self) -> Dict[str, float]:
        return {c.name: c.residual for c in self.checks}

    def to_dict(self, rho: Optional[float] = None) -> Dict[str, Any]:
        out = {'checks': [c.to_dict() for c in self.checks], 'asymmetry': self.decomposition.asymmetry()}
        if rho is not None:
            out['rho'] = rho
            out['norms'] = self.decomposition.norms(rho)
        return out


def _squared(a: SpectralField) -> SpectralField:
    return SpectralField.from_physical(a.physical() ** 2, a.grid, 0, a.time_sampled)


def _zero_tensor(like: SpectralField) -> SpectralField:
    return SpectralField.zeros(like.grid, 2, True)


def oscillation_parts(perturbation: PerturbationSet) -> Tuple[SpectralField, SpectralField, SpectralField, SpectralField]:
    """R_osc,x, R_osc,t, R_osc,low and the defect stress."""
    amplitudes = perturbation.amplitudes
    signals = perturbation.signals
    params = perturbation.params
    g2 = signals.g ** 2
    grid = amplitudes.rho.grid

    spatial, temporal, low = [], [], []
    for a, a_rate, block, W in zip(amplitudes.a, amplitudes.rates, perturbation.blocks, perturbation.velocities):
        a2g2 = _squared(a).modulate(g2)
        stress_density = tensor_product(W, W)
        spatial.append(differentiate(multiply(a2g2, remove_mean(stress_density)), "div")
                       - multiply(a2g2, differentiate(stress_density, "div")))
        a2_rate = multiply(a, a_rate) * 2.0
        if params.is_jet:
            rate = a2_rate.modulate(g2) + _squared(a).modulate(2.0 * signals.g * signals.g_rate)
            density = SpectralField.from_physical(np.sum(W.physical() ** 2, axis=-4), grid, 0, True)
            temporal.append(constant_vector(block.flow_axis, multiply(rate, density)))
        low.append(matrix_times(block.average, differentiate(a2_rate, "grad")).modulate(signals.h))

    terms = cancellation_terms(perturbation)
    defect = differentiate(terms['cross'] + terms['defect'], "div")
    return (
        reynolds_operator(sum_fields(spatial)),
        reynolds_operator(sum_fields(temporal)) * (-1.0 / params.mu) if temporal else _zero_tensor(amplitudes.rho),
        reynolds_operator(sum_fields(low)) * (-1.0 / params.sigma),
        reynolds_operator(defect),
    )


def build_reynolds_next(
    u_tilde: SpectralField,
    stress: SpectralField,
    perturbation: PerturbationSet,
    model: ModelParams,
    u_rate: Optional[SpectralField] = None,
    strict: bool = False,
) -> ReynoldsReport:
    """
    u_{q+1} = u~ + w and R_{q+1} with the checks

    - ``reynolds_identity``: R_{q+1} = R P_H div R_{q+1};
    - ``end_to_end``: P_H(d_t u + nu (-Delta)^alpha u + div(u ⊗ u) - div R_{q+1})
      against the defect (u~, R~) already carried, relative to P_H div R_{q+1}.

    Args:
        u_tilde: Glued velocity, time-sampled on the perturbation grid
        stress: Its Reynolds stress R~
        perturbation: Assembled perturbation
        model: Viscosity and dissipation exponent
        u_rate: Closed-form d_t u~; fourth-order differences otherwise
        strict: Raise instead of reporting a missed tolerance

    Raises:
        ToleranceBreach: ``strict`` and some check misses its tolerance
    """
    w = perturbation.total
    rest = w - perturbation.principal
    dissipation = fractional_laplacian(w, model.alpha, model.nu)
    transport = differentiate(tensor_product(u_tilde, w) + tensor_product(w, u_tilde), "div")
    linear = reynolds_operator(perturbation.rate_pc + dissipation + transport)
    corrector = reynolds_operator(differentiate(
        tensor_product(rest, w) + tensor_product(perturbation.principal, rest), "div"))
    spatial, temporal, low, defect = oscillation_parts(perturbation)
    decomposition = ReynoldsDecomp(linear, spatial, temporal, low, defect, corrector)

    total = decomposition.total
    divergence = project(differentiate(total, "div"))
    config = get_config()
    checks = [IdentityReport("reynolds_identity",
                             relative_residual(reynolds_operator(divergence) - total, total),
                             float(config.get("cancellation_tol")))]

    velocity = u_tilde + w
    base_rate = time_derivative(u_tilde) if u_rate is None else u_rate
    defect_next = nsr_defect(velocity, total, model, base_rate + perturbation.rate)
    inherited = nsr_defect(u_tilde, stress, model, base_rate)
    checks.append(IdentityReport("end_to_end", relative_residual(defect_next - inherited, divergence),
                                 float(config.get("fd_tol")),
                                 {'inherited_defect': float(np.sqrt(np.sum(inherited.squared_l2())))}))

    for check in checks:
        logger.info("%s residual %.3e (%s)", check.name, check.residual, check.status)
    report = ReynoldsReport(decomposition, velocity, checks)
    if strict and not report.passed:
        raise ToleranceBreach("Reynolds stress checks failed", report.residuals())
    return report
