"""
Algebraic identities of the perturbation, checked between independently
assembled sides.

Each check returns an :class:`IdentityReport` with the relative residual,
the tolerance it was held to and the norms of the contributing terms.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from blocks.temporal import TemporalBlocks
from config import FAIL, PASS, get_config
from errors import PreconditionViolation
from geometry.directions import GeometrySet
from geometry.shifts import tube_overlap
from perturbation.assemble import PerturbationSet, double_curl, expand_double_curl, matrix_times, project
from spectral.field import SpectralField, sum_fields
from spectral.operators import (
    band_limit,
    constant_tensor,
    constant_vector,
    dealias,
    differentiate,
    freq_project,
    leray_project,
    multiply,
    relative_residual,
    tensor_product,
    traceless,
)

logger = logging.getLogger(__name__)


@dataclass
class IdentityReport:
    """
    Residual of one identity.

    ``bounds`` maps a side quantity the identity needs to be small to its
    measured value and limit; any breached bound fails the report.
    """
    name: str
    residual: float
    tolerance: float
    terms: Dict[str, float] = field(default_factory=dict)
    bounds: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    @property
    def breached(self) -> List[str]:
        return [name for name, (value, limit) in self.bounds.items() if not value <= limit]

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance) and not self.breached

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def to_dict(self) -> Dict[str, Any]:
        return {
            'identity': self.name,
            'residual': self.residual,
            'tolerance': self.tolerance,
            'terms': dict(self.terms),
            'bounds': {name: {'value': value, 'limit': limit} for name, (value, limit) in self.bounds.items()},
            'status': self.status,
        }


def _norm(f: SpectralField) -> float:
    return float(np.sqrt(np.sum(f.squared_l2())))


def remove_mean(f: SpectralField) -> SpectralField:
    """Subtract the spatial mean only (the zero mode), per time sample."""
    c = np.array(f.coeffs)
    c[..., 0, 0, 0] = 0.0
    return f.with_coeffs(c, mean_free=True)


def _squared(a: SpectralField) -> SpectralField:
    return SpectralField.from_physical(a.physical() ** 2, a.grid, 0, a.time_sampled)


def _tolerance(name: str, override: Optional[float]) -> float:
    return float(get_config().get(name)) if override is None else override


def check_disjoint_supports(geom: GeometrySet, samples: int = 4096, seed: int = 0) -> float:
    """
    Tube overlap fraction of a shifted direction set.

    Raises:
        PreconditionViolation: Two tube supports overlap
    """
    overlap = tube_overlap(geom, samples=samples, seed=seed)
    if overlap > 0:
        raise PreconditionViolation(f"Tube supports overlap (fraction {overlap:.3e}); choose shifts first")
    return overlap


# =============================================================================
# Cancellation
# =============================================================================

def cancellation_terms(perturbation: PerturbationSet) -> Dict[str, SpectralField]:
    """
    The pieces of w_p ⊗ w_p + R term by term.

    ``identity``, ``high_frequency`` and ``averaged`` make up the right-hand
    side of the cancellation identity. ``cross`` collects
    a_(k) a_(k') g^2 W_(k) ⊗ W_(k') for k != k' (zero when the sampled tubes
    are disjoint) and ``defect`` is the part the direction set does not span
    together with (1 - f^2) R; both must vanish for the identity to hold.
    """
    amplitudes = perturbation.amplitudes
    g2 = perturbation.signals.g ** 2
    rho = amplitudes.rho
    f2 = amplitudes.cutoff ** 2
    grid = rho.grid
    high = low = cross = SpectralField.zeros(grid, 2, True)

    for k, (a, block, W) in enumerate(zip(amplitudes.a, perturbation.blocks, perturbation.velocities)):
        a2 = _squared(a)
        high = high + multiply(a2.modulate(g2), remove_mean(tensor_product(W, W)))
        low = low + constant_tensor(block.average, a2.modulate(g2 - 1.0))
        for j in range(k + 1, len(amplitudes.a)):
            weight = multiply(a, amplitudes.a[j]).modulate(g2)
            pair = tensor_product(W, perturbation.velocities[j])
            cross = cross + multiply(weight, pair + pair.transpose())

    return {
        'identity': constant_tensor(np.eye(3), rho.modulate(f2)),
        'high_frequency': high,
        'averaged': low,
        'cross': cross,
        'defect': amplitudes.defect,
    }


def verify_cancellation(
    perturbation: PerturbationSet,
    stress: SpectralField,
    geom: Optional[GeometrySet] = None,
    tol: Optional[float] = None,
) -> IdentityReport:
    """
    w_p ⊗ w_p + R = rho f^2 Id + sum a^2 g^2 P_{!=0}(W ⊗ W)
    + sum a^2 (g^2 - 1) fint(W ⊗ W), in L^2_{t,x} relative to ||rho||.

    The right side is assembled from the amplitudes and the block averages
    only. The tube overlap ||cross|| / ||rho|| and the uncancelled stress
    ||defect|| / ||R|| are held to the same tolerance as bounds, so
    overlapping tubes or a stress outside the span fail the identity.

    Raises:
        PreconditionViolation: ``geom`` is given and its tube supports overlap
    """
    if geom is not None:
        check_disjoint_supports(geom)
    tol = _tolerance("cancellation_tol", tol)
    reduced = traceless(stress)
    lhs = tensor_product(perturbation.principal, perturbation.principal) + reduced
    terms = cancellation_terms(perturbation)
    rhs = terms['identity'] + terms['high_frequency'] + terms['averaged']
    rho = perturbation.amplitudes.rho
    residual = relative_residual(lhs - rhs, rho)
    bounds = {
        'cross': (relative_residual(terms['cross'], rho), tol),
        'defect': (relative_residual(terms['defect'], reduced), tol),
    }
    report = IdentityReport("cancellation", residual, tol,
                            {name: _norm(term) for name, term in terms.items()}, bounds)
    logger.info("Cancellation residual %.3e, cross %.3e, defect %.3e (%s)",
                residual, bounds['cross'][0], bounds['defect'][0], report.status)
    return report


# =============================================================================
# Divergence and mean
# =============================================================================

def verify_divergence(perturbation: PerturbationSet, tol: Optional[float] = None) -> List[IdentityReport]:
    """div(w_p + w_c) from the double-curl form, div w for the total and its mean."""
    tol = _tolerance("spectral_tol", tol)
    corrected = perturbation.principal + perturbation.corrector
    total = perturbation.total
    reports = [
        IdentityReport("double_curl_divergence",
                       relative_residual(differentiate(corrected, "div"), differentiate(corrected, "grad")), tol,
                       {'w_p + w_c': _norm(corrected)}),
        IdentityReport("total_divergence",
                       relative_residual(differentiate(total, "div"), differentiate(total, "grad")), tol,
                       {'w': _norm(total)}),
    ]
    mean = np.abs(total.mean())
    scale = max(float(np.max(np.abs(total.physical()))), 1e-300)
    reports.append(IdentityReport("total_mean", float(np.max(mean)) / scale,
                                  _tolerance("mean_free_tol", None) * 1e2, {}))
    return reports


# =============================================================================
# Corrector expansion
# =============================================================================

# Amplitudes are cut below N / AMPLITUDE_BAND so products with two-thirds-rule blocks stay below N/2
AMPLITUDE_BAND = 6.0


def _expanded_pair(perturbation: PerturbationSet, filtered: bool) -> Tuple[SpectralField, SpectralField]:
    """(sum a g W + product-rule w_c, sum a g W^c), optionally from band-limited factors."""
    signals = perturbation.signals
    grid = perturbation.grid
    time = None if perturbation.params.is_jet else 0.0
    expanded = potential = SpectralField.zeros(grid, 1, True)
    for a, block in zip(perturbation.amplitudes.a, perturbation.blocks):
        ag = a.modulate(signals.g)
        W, V, corrector = block.velocity(time), block.potential(time), block.corrector(time)
        if filtered:
            ag = band_limit(ag, grid.n / AMPLITUDE_BAND)
            W, V, corrector = dealias(W), dealias(V), dealias(corrector)
        pieces = expand_double_curl(ag, V, corrector)
        expanded = expanded + multiply(ag, W) + sum_fields(pieces.values())
        potential = potential + multiply(ag, V)
    return expanded, potential


def verify_corrector_expansion(perturbation: PerturbationSet, tol: Optional[float] = None) -> IdentityReport:
    """
    w_p + w_c written out by the product rule,
    sum a g W + curl(grad(a g) x W^c) + grad(a g) x curl W^c + a g W~^c,
    against curl curl(sum a g W^c).

    Both sides use amplitudes cut below N/6 and blocks cut by the
    two-thirds rule, so every product is exact and the sides can only
    differ through the expansion or the block identities. The same
    comparison with collocated full-band factors is reported as
    ``aliasing_gap``.
    """
    expanded, potential = _expanded_pair(perturbation, filtered=True)
    target = double_curl(potential)
    residual = relative_residual(expanded - target, target)
    full, full_potential = _expanded_pair(perturbation, filtered=False)
    full_target = double_curl(full_potential)
    gap = relative_residual(full - full_target, full_target)
    report = IdentityReport("corrector_expansion", residual, _tolerance("spectral_tol", tol),
                            {'w_p + w_c': _norm(target), 'aliasing_gap': gap})
    logger.info("Corrector expansion residual %.3e (aliasing gap %.3e)", residual, gap)
    return report


# =============================================================================
# Temporal and oscillation correctors
# =============================================================================

def verify_temporal_identity(perturbation: PerturbationSet, tol: Optional[float] = None) -> Optional[IdentityReport]:
    """
    d_t w_t + sum P(a^2 g^2 div(W ⊗ W)) against
    (Id - P_H) sum P(a^2 g^2 div(W ⊗ W)) - mu^{-1} sum P_H P(d_t(a^2 g^2) psi^2 phi^2 k1).

    The left side differentiates W ⊗ W spectrally; d_t w_t uses the
    travelling-profile derivative. None for Mikado flows.
    """
    if not perturbation.params.is_jet:
        return None
    amplitudes = perturbation.amplitudes
    signals = perturbation.signals
    g2 = signals.g ** 2
    forcing, slow = [], []
    for a, a_rate, W, block in zip(amplitudes.a, amplitudes.rates, perturbation.velocities, perturbation.blocks):
        a2 = _squared(a)
        forcing.append(multiply(a2.modulate(g2), differentiate(tensor_product(W, W), "div")))
        rate = (multiply(a, a_rate) * 2.0).modulate(g2) + a2.modulate(2.0 * signals.g * signals.g_rate)
        density = multiply(rate, SpectralField.from_physical(np.sum(W.physical() ** 2, axis=-4), W.grid, 0, True))
        slow.append(constant_vector(block.flow_axis, density))
    forcing = freq_project(sum_fields(forcing), "nonzero")
    lhs = perturbation.rate_t + forcing
    rhs = (forcing - leray_project(forcing)) - project(sum_fields(slow)) * (1.0 / perturbation.params.mu)
    residual = relative_residual(lhs - rhs, forcing)
    report = IdentityReport("temporal_corrector", residual, _tolerance("fd_tol", tol),
                            {'d_t w_t': _norm(perturbation.rate_t), 'forcing': _norm(forcing)})
    logger.info("Temporal corrector identity residual %.3e", residual)
    return report


def signal_rate(signal, t: np.ndarray, step: float) -> np.ndarray:
    """Centered five-point derivative of a closed-form signal."""
    return (signal(t - 2 * step) - 8 * signal(t - step) + 8 * signal(t + step) - signal(t + 2 * step)) / (12 * step)


def verify_oscillation_identity(
    perturbation: PerturbationSet,
    temporal: TemporalBlocks,
    tol: Optional[float] = None,
) -> IdentityReport:
    """
    d_t w_o + sum P((g^2 - 1) fint(W ⊗ W) grad a^2) against
    (Id - P_H) sum P(...) - sigma^{-1} sum P_H P(h fint(W ⊗ W) grad d_t a^2).

    d_t h_(tau) on the left comes from differentiating the closed-form h_(tau)
    itself, independently of g_(tau).
    """
    amplitudes = perturbation.amplitudes
    signals = perturbation.signals
    sigma = perturbation.params.sigma
    step = 1e-3 / max(sigma * temporal.tau, 1.0)
    h_rate = signal_rate(temporal.h, signals.times, step)

    forcing, slow, fast = [], [], []
    for a, a_rate, block in zip(amplitudes.a, amplitudes.rates, perturbation.blocks):
        gradient = differentiate(_squared(a), "grad")
        gradient_rate = differentiate(multiply(a, a_rate) * 2.0, "grad")
        forcing.append(matrix_times(block.average, gradient).modulate(signals.g ** 2 - 1.0))
        slow.append(matrix_times(block.average, gradient_rate).modulate(signals.h))
        fast.append(matrix_times(block.average, gradient).modulate(h_rate))
    forcing = freq_project(sum_fields(forcing), "nonzero")
    rate_o = project(sum_fields(fast) + sum_fields(slow)) * (-1.0 / sigma)
    lhs = rate_o + forcing
    rhs = (forcing - leray_project(forcing)) - project(sum_fields(slow)) * (1.0 / sigma)
    residual = relative_residual(lhs - rhs, forcing)
    stored = relative_residual(perturbation.rate_o - rate_o, rate_o)
    report = IdentityReport("oscillation_corrector", max(residual, stored), _tolerance("fd_tol", tol),
                            {'d_t w_o': _norm(rate_o), 'forcing': _norm(forcing), 'stored_rate_mismatch': stored})
    logger.info("Oscillation corrector identity residual %.3e", residual)
    return report


def verify_all(
    perturbation: PerturbationSet,
    stress: SpectralField,
    temporal: TemporalBlocks,
    geom: Optional[GeometrySet] = None,
) -> List[IdentityReport]:
    """Every perturbation identity in a fixed order."""
    reports = [verify_cancellation(perturbation, stress, geom)]
    reports.extend(verify_divergence(perturbation))
    reports.append(verify_corrector_expansion(perturbation))
    temporal_report = verify_temporal_identity(perturbation)
    if temporal_report is not None:
        reports.append(temporal_report)
    reports.append(verify_oscillation_identity(perturbation, temporal))
    return reports
