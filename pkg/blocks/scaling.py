"""
Scaling sweeps for the building blocks.

Each family's norm is measured on the support of one periodic cell: the
profile is sampled on a fine uniform grid of [-r, r] (or [-r, r]^2 for tube
cross-sections) and the chain-rule factors of the lattice scale, the phase
speed and the temporal frequency are applied analytically. The measured
norms are then fitted against lambda and compared with the slope obtained by
substituting the regime's parameter powers into the block estimates.

The L^2 norm of W_(k) is also measured on the grid-built blocks, so the
normalization of the synthesized fields is swept as well.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from blocks.jets import build_block, required_resolution
from blocks.params import BlockParams, block_exponents
from blocks.profiles import ProfileSet, make_profiles
from config import DEFAULT_LAMBDAS, RESOLUTION_FACTOR, tolerance
from errors import InvalidParameterError
from geometry.directions import AXIS_FRAMES, Direction
from harness.slopes import SlopeReport, fit_loglog_slope
from spectral.field import GridSpec
from spectral.operators import lp_norm

logger = logging.getLogger(__name__)

FAMILIES = ("psi", "phi", "jet", "corrector", "mikado", "g")

# Nodes per axis on the support of a profile
SUPPORT_NODES = 4001
PLANAR_NODES = 801

DEFAULT_EPSILON = 0.05
DEFAULT_ALPHA = {"A1": 1.25, "A2": 1.5}

# Dyadic lambdas for the grid-built blocks (N = 24, 48, 96 on one axis direction)
SYNTHESIS_LAMBDAS = [2, 4, 8]
SYNTHESIZED = {"jet": "A1", "mikado": "A2"}

Triple = Tuple[int, int, float]

# (N, M, p) per family; for g the last entry is the time exponent gamma and N is unused
DEFAULT_EXPONENT_GRID: Dict[str, List[Triple]] = {
    "psi": [(0, 0, 2.0), (0, 0, 1.0), (1, 0, 2.0), (0, 1, 2.0)],
    "phi": [(0, 0, 2.0), (0, 0, 4.0), (1, 0, 2.0)],
    "jet": [(0, 0, 2.0), (0, 0, 1.0), (1, 0, 2.0)],
    "corrector": [(0, 0, 2.0)],
    "mikado": [(0, 0, 1.0), (0, 0, 2.0), (1, 0, float("inf"))],
    "g": [(0, 0, 1.0), (0, 1, 2.0)],
}

PROVENANCE = {
    "psi": "r_par^(1/p-1/2) (r_perp lambda/r_par)^N (r_perp lambda mu/r_par)^M",
    "phi": "r_perp^(2/p-1) lambda^N",
    "jet": "r_perp^(2/p-1) r_par^(1/p-1/2) lambda^N (r_perp lambda mu/r_par)^M",
    "corrector": "(r_perp/r_par) r_perp^(2/p-1) r_par^(1/p-1/2) lambda^N (r_perp lambda mu/r_par)^M",
    "mikado": "r_perp^(2/p-1) lambda^N",
    "g": "sigma^M tau^(M+1/2-1/gamma)",
}


def _inverse(p: float) -> float:
    return 0.0 if np.isinf(p) else 1.0 / p


def _norm_1d(values: np.ndarray, nodes: np.ndarray, p: float) -> float:
    magnitude = np.abs(values)
    if np.isinf(p):
        return float(np.max(magnitude))
    return float(trapezoid(magnitude ** p, nodes) ** (1.0 / p))


def _norm_2d(values: np.ndarray, nodes: np.ndarray, p: float) -> float:
    magnitude = np.abs(values)
    if np.isinf(p):
        return float(np.max(magnitude))
    inner = trapezoid(magnitude ** p, nodes, axis=1)
    return float(trapezoid(inner, nodes) ** (1.0 / p))


def _torus_factor(dimensions: int, p: float) -> float:
    """(2 pi)^{d/p}: the L^p norm picked up from directions the factor is constant in."""
    return (2.0 * np.pi) ** (dimensions * _inverse(p))


def _psi_cell_norm(params: BlockParams, profiles: ProfileSet, order: int, p: float) -> float:
    """||psi_{r_par}^{(order)}||_{L^p(T)} on the support [-r_par, r_par]."""
    nodes = np.linspace(-params.r_par, params.r_par, SUPPORT_NODES)
    return _norm_1d(profiles.psi_scaled(nodes, params.r_par, order), nodes, p)


def _planar_cell_norm(params: BlockParams, profiles: ProfileSet, name: str, order: int, p: float) -> float:
    """||D^order phi_{r_perp}||_{L^p(T^2)} (or of Phi) on the support square."""
    r = params.r_perp
    nodes = np.linspace(-r, r, PLANAR_NODES)
    y1, y2 = np.meshgrid(nodes, nodes, indexing='ij')
    values = profiles.planar_magnitude(name, y1 / r, y2 / r, order) * r ** (-1.0 - order)
    return _norm_2d(values, nodes, p)


def measured_norm(
    family: str,
    params: BlockParams,
    derivatives: int,
    time_derivatives: int,
    p: float,
    profiles: Optional[ProfileSet] = None,
) -> float:
    """
    Norm of one family member for one parameter set.

    Raises:
        InvalidParameterError: Unknown family, or a derivative combination
            that does not split into separate tube and jet factors
    """
    profiles = profiles or make_profiles()
    n, m = derivatives, time_derivatives
    scale = params.lattice_scale

    if family == "psi":
        return (_torus_factor(2, p) * scale ** n * (scale * params.mu) ** m
                * _psi_cell_norm(params, profiles, n + m, p))

    if family in ("phi", "mikado"):
        if m:
            raise InvalidParameterError(f"{family} is stationary; time derivatives are zero")
        return _torus_factor(1, p) * scale ** n * _planar_cell_norm(params, profiles, "phi", n, p)

    if family == "jet":
        speed = (scale * params.mu) ** m
        if n == 0:
            return (speed * _psi_cell_norm(params, profiles, m, p)
                    * _planar_cell_norm(params, profiles, "phi", 0, p))
        if n == 1 and m == 0 and p == 2:
            along = _psi_cell_norm(params, profiles, 1, p) * _planar_cell_norm(params, profiles, "phi", 0, p)
            across = _psi_cell_norm(params, profiles, 0, p) * _planar_cell_norm(params, profiles, "phi", 1, p)
            return scale * float(np.hypot(along, across))
        raise InvalidParameterError("Jet norms with spatial derivatives are measured for N = 1, M = 0, p = 2 only")

    if family == "corrector":
        if n:
            raise InvalidParameterError("Corrector norms are measured without spatial derivatives")
        speed = (scale * params.mu) ** m
        return (params.r_perp ** 2 * speed * _psi_cell_norm(params, profiles, 1 + m, p)
                * _planar_cell_norm(params, profiles, "Phi", 1, p))

    if family == "g":
        period = profiles.period
        nodes = np.linspace(period / (4.0 * params.tau), 3.0 * period / (4.0 * params.tau), SUPPORT_NODES)
        values = params.tau ** (0.5 + m) * profiles.g(params.tau * nodes, m)
        return params.sigma ** m * _norm_1d(values, nodes, p)

    raise InvalidParameterError(f"Unknown block family: {family}")


def predicted_slope(family: str, powers: Dict[str, float], derivatives: int, time_derivatives: int, p: float) -> float:
    """Exponent of lambda in the block estimate after substituting the parameter powers."""
    n, m, inv = derivatives, time_derivatives, _inverse(p)
    if family == "g":
        return m * powers['sigma'] + (m + 0.5 - inv) * powers['tau']
    if family in ("phi", "mikado"):
        return (2.0 * inv - 1.0) * powers['r_perp'] + n
    phase = powers['r_perp'] + 1.0 + powers['mu'] - powers['r_par']
    if family == "psi":
        return ((inv - 0.5) * powers['r_par'] + n * (powers['r_perp'] + 1.0 - powers['r_par']) + m * phase)
    jet = (2.0 * inv - 1.0) * powers['r_perp'] + (inv - 0.5) * powers['r_par'] + n + m * phase
    if family == "jet":
        return jet
    if family == "corrector":
        return powers['r_perp'] - powers['r_par'] + jet
    raise InvalidParameterError(f"Unknown block family: {family}")


def _regime_for(family: str, regime: str) -> str:
    if family == "mikado":
        return "A2"
    if family == "g":
        return regime
    return "A1"


@dataclass
class ScalingResult:
    """One (family, N, M, p) sweep with its fit."""
    family: str
    derivatives: int
    time_derivatives: int
    exponent: float
    lambdas: List[float]
    report: SlopeReport
    skipped: List[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.report.passed

    def to_row(self) -> Dict[str, Any]:
        return {
            'family': self.family,
            'N': self.derivatives,
            'M': self.time_derivatives,
            'p_or_gamma': "inf" if np.isinf(self.exponent) else self.exponent,
            'lambda_list': " ".join(f"{lam:g}" for lam in self.lambdas),
            'measured_slope': self.report.measured,
            'predicted_slope': self.report.predicted,
            'residual': self.report.residual,
            'status': self.report.status,
        }

    def to_dict(self) -> Dict[str, Any]:
        data = self.to_row()
        data['skipped'] = list(self.skipped)
        data['report'] = self.report.to_dict()
        return data


def verify_block_scaling(
    family: str,
    exponent_grid: Optional[Sequence[Triple]] = None,
    lambdas: Optional[Sequence[float]] = None,
    alpha: Optional[float] = None,
    epsilon: float = DEFAULT_EPSILON,
    regime: str = "A1",
    slope_tolerance: Optional[float] = None,
    profiles: Optional[ProfileSet] = None,
) -> List[ScalingResult]:
    """
    Fit measured block norms against lambda for every requested (N, M, p).

    Args:
        family: One of psi, phi, jet, corrector, mikado, g
        exponent_grid: (N, M, p or gamma) triples; defaults per family
        lambdas: At least three frequencies (dyadic by default)
        alpha: Dissipation exponent; defaults to 5/4 for A1 and 3/2 for A2
        epsilon: Exponent slack entering every parameter power
        regime: Regime of the temporal family g
        slope_tolerance: Allowed |measured - predicted|
        profiles: Profile set to evaluate

    Returns:
        One ScalingResult per triple

    Raises:
        InvalidParameterError: Unknown family, or fewer than three usable lambdas
    """
    if family not in FAMILIES:
        raise InvalidParameterError(f"Unknown block family: {family}")
    grid = list(exponent_grid or DEFAULT_EXPONENT_GRID[family])
    lambdas = [float(lam) for lam in (lambdas or DEFAULT_LAMBDAS)]
    if len(lambdas) < 3:
        raise InvalidParameterError(f"Scaling sweeps need at least 3 lambdas, got {len(lambdas)}")
    slope_tolerance = tolerance("block_slope") if slope_tolerance is None else slope_tolerance
    profiles = profiles or make_profiles()
    block_regime = _regime_for(family, regime)
    alpha = DEFAULT_ALPHA[block_regime] if alpha is None else alpha

    usable: List[Tuple[float, BlockParams]] = []
    skipped: List[float] = []
    for lam in lambdas:
        try:
            usable.append((lam, BlockParams.from_regime(block_regime, lam, alpha, epsilon, snap=False)))
        except InvalidParameterError as e:
            logger.warning("Skipping lambda=%g for %s: %s", lam, family, e)
            skipped.append(lam)

    powers = block_exponents(block_regime, alpha, epsilon)
    results = []
    for n, m, p in grid:
        norms = [measured_norm(family, params, n, m, p, profiles) for _, params in usable]
        predicted = predicted_slope(family, powers, n, m, p)
        label = f"{family} N={n} M={m} p={p:g}"
        report = fit_loglog_slope(
            [lam for lam, _ in usable], norms,
            predicted=predicted,
            tolerance=slope_tolerance,
            label=label,
            provenance=f"{PROVENANCE[family]} with {block_regime} powers, alpha={alpha:g}, epsilon={epsilon:g}",
        )
        logger.info("%s: measured %.4f, predicted %.4f (%s)", label, report.measured, report.predicted, report.status)
        results.append(ScalingResult(family, n, m, float(p), [lam for lam, _ in usable], report, skipped))
    return results


def _synthesized_norm(regime: str, lam: float, alpha: float, epsilon: float, p: float) -> float:
    params = BlockParams.from_regime(regime, lam, alpha, epsilon)
    direction = Direction.from_axes(*AXIS_FRAMES[0])
    block = build_block(direction, params, GridSpec(required_resolution(params)))
    return lp_norm(block.velocity(0.0), p)


def verify_synthesized_blocks(
    lambdas: Optional[Sequence[float]] = None,
    epsilon: float = DEFAULT_EPSILON,
    alphas: Optional[Dict[str, float]] = None,
    slope_tolerance: Optional[float] = None,
) -> List[ScalingResult]:
    """
    L^2 slope of W_(k) as synthesized on the grid, one sweep per block type.

    Both the tube profile and the jet profile are normalized on the grid, so
    ||W_(k)||_{L^2} stays at (2 pi)^{3/2} and the predicted slope is 0 for
    every regime.
    """
    lambdas = [float(lam) for lam in (lambdas or SYNTHESIS_LAMBDAS)]
    if len(lambdas) < 3:
        raise InvalidParameterError(f"Scaling sweeps need at least 3 lambdas, got {len(lambdas)}")
    alphas = alphas or DEFAULT_ALPHA
    slope_tolerance = tolerance("block_slope") if slope_tolerance is None else slope_tolerance
    results = []
    for family, regime in SYNTHESIZED.items():
        norms = [_synthesized_norm(regime, lam, alphas[regime], epsilon, 2.0) for lam in lambdas]
        label = f"{family}_grid N=0 M=0 p=2"
        report = fit_loglog_slope(
            lambdas, norms,
            predicted=predicted_slope(family, block_exponents(regime, alphas[regime], epsilon), 0, 0, 2.0),
            tolerance=slope_tolerance,
            label=label,
            provenance=f"grid-built W_(k) on N = {RESOLUTION_FACTOR} lambda, {regime} powers",
        )
        logger.info("%s: measured %.4f, predicted %.4f (%s)", label, report.measured, report.predicted, report.status)
        results.append(ScalingResult(f"{family}_grid", 0, 0, 2.0, lambdas, report))
    return results


def verify_all_blocks(
    lambdas: Optional[Sequence[float]] = None,
    epsilon: float = DEFAULT_EPSILON,
    alphas: Optional[Dict[str, float]] = None,
    slope_tolerance: Optional[float] = None,
    synthesized: bool = True,
) -> List[ScalingResult]:
    """Every family with its default exponent grid, then the grid-built L^2 sweeps."""
    alphas = alphas or DEFAULT_ALPHA
    profiles = make_profiles()
    results: List[ScalingResult] = []
    for family in FAMILIES:
        alpha = alphas[_regime_for(family, "A1")]
        results.extend(verify_block_scaling(family, lambdas=lambdas, alpha=alpha, epsilon=epsilon,
                                            slope_tolerance=slope_tolerance, profiles=profiles))
    if synthesized:
        results.extend(verify_synthesized_blocks(epsilon=epsilon, alphas=alphas, slope_tolerance=slope_tolerance))
    return results


def scaling_table(results: Sequence[ScalingResult]) -> pd.DataFrame:
    columns = ['family', 'N', 'M', 'p_or_gamma', 'lambda_list', 'measured_slope',
               'predicted_slope', 'residual', 'status']
    return pd.DataFrame([r.to_row() for r in results], columns=columns)


def write_scaling_csv(results: Sequence[ScalingResult], path: Union[str, Path]) -> Path:
    path = Path(path)
    scaling_table(results).to_csv(path, index=False)
    logger.info("Wrote %d scaling rows to %s", len(results), path)
    return path
