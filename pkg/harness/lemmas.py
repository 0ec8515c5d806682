"""
Desk experiments for the harmonic-analysis lemmas the scheme leans on.

Each experiment sweeps one frequency-like parameter, records the measured
left-hand side next to the right-hand side of the estimate and fits the
decay through :func:`harness.slopes.fit_loglog_slope`:

- decorrelation: | ||f g(sigma .)||_p - ||f||_p ||g||_p | <= C sigma^{-1/p} ||f||_{C^1} ||g||_p
- stationary phase: || |grad|^{-1} P_{!=0}(a P_{>=kappa} f) ||_p <= C kappa^{-1} ||a||_{C^2} ||f||_p
- semigroup smoothing: || |grad|^s e^{-t nu (-Delta)^alpha} ||_{L^2 -> L^2} = C t^{-s / (2 alpha)}
- mollification: ||f - f * phi_l||_p = O(l^2) for a symmetric unit-mass kernel
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import FAIL, PASS, tolerance
from errors import DegenerateInput, InvalidParameterError, ResolutionError
from harness.slopes import SlopeReport, fit_loglog_slope
from spectral.field import GridSpec, ModelParams, SpectralField
from spectral.operators import differentiate, fractional_gradient, freq_project, lp_norm, mollify, multiply

logger = logging.getLogger(__name__)

# Left-hand sides below this multiple of the right-hand scale are rounding noise
ROUNDOFF_FLOOR = 1e-12

# Largest growth of LHS / RHS over a sweep that still counts as bounded
RATIO_SPREAD = 0.2

# Grid points per period of g(sigma .) needed for the quadrature
POINTS_PER_PERIOD = 8

DEFAULT_NODES = {1: 2 ** 14, 2: 1024, 3: 128}

TorusFunction = Callable[..., np.ndarray]


@dataclass
class LemmaReport:
    """One lemma sweep: both sides per parameter and the fitted decay."""
    name: str
    parameter: str
    values: List[float]
    lhs: List[float]
    rhs: List[float]
    slope: Optional[SlopeReport] = None
    spread: float = RATIO_SPREAD
    sharp: Optional[SlopeReport] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def ratios(self) -> List[float]:
        return [left / right if right > 0 else 0.0 for left, right in zip(self.lhs, self.rhs)]

    @property
    def vanishing(self) -> bool:
        """Every left-hand side is rounding noise (the estimate holds trivially)."""
        return all(left <= ROUNDOFF_FLOOR * right for left, right in zip(self.lhs, self.rhs))

    @property
    def bounded(self) -> bool:
        """LHS / RHS never grows by more than ``spread`` over its first resolved value."""
        resolved = [r for r, left, right in zip(self.ratios, self.lhs, self.rhs) if left > ROUNDOFF_FLOOR * right]
        if not resolved:
            return True
        return max(resolved) <= resolved[0] * (1.0 + self.spread)

    @property
    def passed(self) -> bool:
        if self.sharp is not None and not self.sharp.passed:
            return False
        if self.vanishing:
            return True
        return self.bounded and (self.slope is None or self.slope.passed)

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def rows(self) -> List[Dict[str, Any]]:
        """One CSV row per sweep point."""
        return [
            {'experiment': self.name, self.parameter: v, 'lhs': left, 'rhs': right, 'ratio': ratio}
            for v, left, right, ratio in zip(self.values, self.lhs, self.rhs, self.ratios)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'experiment': self.name,
            'parameter': self.parameter,
            'values': self.values,
            'lhs': self.lhs,
            'rhs': self.rhs,
            'ratios': self.ratios,
            'vanishing': self.vanishing,
            'bounded': self.bounded,
            'slope': self.slope.to_dict() if self.slope else None,
            'sharp_slope': self.sharp.to_dict() if self.sharp else None,
            'details': self.details,
            'status': self.status,
        }


def _fit_resolved(
    report: LemmaReport,
    predicted: float,
    tol: float,
    provenance: str,
    one_sided: bool = False,
) -> LemmaReport:
    """Fit the points whose left-hand side rises above rounding noise."""
    points = [(v, left) for v, left, right in zip(report.values, report.lhs, report.rhs)
              if left > ROUNDOFF_FLOOR * right]
    if len(points) < 3:
        if not report.vanishing:
            logger.warning("%s: only %d resolved points, slope not fitted", report.name, len(points))
        return report
    xs, ys = zip(*points)
    report.slope = fit_loglog_slope(xs, ys, predicted=predicted, tolerance=tol, label=report.name,
                                    provenance=provenance, one_sided=one_sided)
    return report


def _check_sweep(values: Sequence[float], name: str) -> List[float]:
    values = [float(v) for v in values]
    if len(set(values)) < 3:
        raise InvalidParameterError(f"{name} sweep needs at least 3 distinct values, got {values}")
    if any(v <= 0 for v in values):
        raise InvalidParameterError(f"{name} values must be positive")
    return sorted(values)


def _check_exponent(p: float) -> float:
    p = float(p)
    if not p >= 1:
        raise InvalidParameterError(f"L^p exponent must lie in [1, inf], got {p}")
    return p


# =============================================================================
# Decorrelation
# =============================================================================

def torus_coordinates(dimension: int, nodes: int) -> List[np.ndarray]:
    """Uniform grid x_j = 2 pi j / nodes on T^d, one array per axis."""
    if dimension not in (1, 2, 3):
        raise InvalidParameterError(f"Torus dimension must be 1, 2 or 3, got {dimension}")
    axis = 2.0 * np.pi * np.arange(nodes) / nodes
    return list(np.meshgrid(*([axis] * dimension), indexing='ij'))


def normalized_norm(values: np.ndarray, p: float) -> float:
    """L^p norm on the torus with normalized measure (rectangle rule)."""
    magnitude = np.abs(values)
    if np.isinf(p):
        return float(np.max(magnitude))
    return float(np.mean(magnitude ** p) ** (1.0 / p))


def c1_norm(values: np.ndarray, spacing: float) -> float:
    """sup |f| + max_i sup |d_i f| with periodic central differences."""
    gradient = 0.0
    for axis in range(values.ndim):
        rate = (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * spacing)
        gradient = max(gradient, float(np.max(np.abs(rate))))
    return float(np.max(np.abs(values))) + gradient


def decorrelation_test(
    f: TorusFunction,
    g: TorusFunction,
    sigmas: Sequence[int],
    p: float,
    dimension: int = 1,
    nodes: Optional[int] = None,
    slope_tolerance: Optional[float] = None,
    saturating: bool = False,
) -> LemmaReport:
    """
    Sweep sigma and compare | ||f g(sigma .)||_p - ||f||_p ||g||_p | with
    sigma^{-1/p} ||f||_{C^1} ||g||_p.

    The estimate is an upper bound: the fitted slope must not exceed
    -1/p + tolerance, and smooth data usually decays much faster (for
    trigonometric polynomials the left side vanishes once sigma clears
    their bandwidth).

    The gap of p-th powers | ||f g(sigma .)||_p^p - ||f||_p^p ||g||_p^p |^{1/p}
    dominates the left side and is recorded for finite p. With
    ``saturating`` set (a pair built by :func:`saturating_pair`) its slope
    must match -1/p within the tolerance on both sides.

    Args:
        f, g: Functions of the d coordinate arrays on [0, 2 pi)^d
        sigmas: Integer frequencies, at least 3 distinct
        p: Exponent in [1, inf]
        dimension: d in {1, 2, 3}
        nodes: Grid points per axis; must be a multiple of every sigma
        saturating: Fit the p-th power gap two-sided against -1/p

    Raises:
        InvalidParameterError: Non-integer sigma, nodes not divisible by sigma,
            or a saturating fit asked for p = inf
        ResolutionError: Fewer than 8 points per period of g(sigma .)
        DegenerateInput: ||f||_p ||g||_p = 0
    """
    p = _check_exponent(p)
    if saturating and np.isinf(p):
        raise InvalidParameterError("The p-th power gap needs a finite p")
    for sigma in sigmas:
        if float(sigma) != int(sigma):
            raise InvalidParameterError(f"sigma must be an integer, got {sigma}")
    sweep = [int(s) for s in _check_sweep(sigmas, "sigma")]
    nodes = nodes or DEFAULT_NODES.get(dimension, 0)
    coords = torus_coordinates(dimension, nodes)
    for sigma in sweep:
        if nodes % sigma:
            raise InvalidParameterError(f"{nodes} grid points are not a multiple of sigma={sigma}")
        if nodes < POINTS_PER_PERIOD * sigma:
            raise ResolutionError(f"sigma={sigma} needs at least {POINTS_PER_PERIOD * sigma} points per axis",
                                  POINTS_PER_PERIOD * sigma)

    f_values = np.broadcast_to(f(*coords), coords[0].shape)
    g_values = np.broadcast_to(g(*coords), coords[0].shape)
    g_norm = normalized_norm(g_values, p)
    f_norm = normalized_norm(f_values, p)
    if f_norm * g_norm == 0:
        raise DegenerateInput("Decorrelation needs ||f||_p ||g||_p > 0")
    f_c1 = c1_norm(f_values, 2.0 * np.pi / nodes)

    lhs, rhs, gaps = [], [], []
    for sigma in sweep:
        product = f_values * g(*(sigma * x for x in coords))
        lhs.append(abs(normalized_norm(product, p) - f_norm * g_norm))
        rhs.append(sigma ** (-_inverse(p)) * f_c1 * g_norm)
        if not np.isinf(p):
            gaps.append(power_gap(product, f_values, g_values, p))
        logger.debug("Decorrelation sigma=%d: lhs %.3e", sigma, lhs[-1])

    report = LemmaReport(
        name=f"decorrelation p={p:g} d={dimension}" + (" saturating" if saturating else ""),
        parameter='sigma',
        values=[float(s) for s in sweep],
        lhs=lhs,
        rhs=rhs,
        details={'p': p, 'dimension': dimension, 'nodes': nodes, 'f_c1': f_c1,
                 'f_norm': f_norm, 'g_norm': g_norm, 'power_gap': gaps, 'saturating': saturating},
    )
    tol = tolerance("lemma_slope") if slope_tolerance is None else slope_tolerance
    report = _fit_resolved(report, -_inverse(p), tol,
                           f"decorrelation bound sigma^(-1/p) with p={_exact(p)}", one_sided=True)
    if saturating:
        resolved = [(s, gap) for s, gap, right in zip(report.values, gaps, rhs)
                    if gap ** p > ROUNDOFF_FLOOR * right ** p]
        if len(resolved) < 3:
            raise DegenerateInput(f"Only {len(resolved)} sigmas resolve the p-th power gap")
        xs, ys = zip(*resolved)
        report.sharp = fit_loglog_slope(xs, ys, predicted=-1.0 / p, tolerance=tol, label=f"{report.name} sharp",
                                        provenance=f"saturated decorrelation rate sigma^(-1/p) with p={_exact(p)}")
    logger.info("%s: %s", report.name, report.status)
    return report


def power_gap(product: np.ndarray, f_values: np.ndarray, g_values: np.ndarray, p: float) -> float:
    """| mean |f g_sigma|^p - mean |f|^p mean |g|^p |^{1/p}."""
    gap = np.mean(np.abs(product) ** p) - np.mean(np.abs(f_values) ** p) * np.mean(np.abs(g_values) ** p)
    return float(abs(gap) ** (1.0 / p))


# Modes of the smoothed sawtooth; saturating sweeps need sigma <= SAWTOOTH_MODES
SAWTOOTH_MODES = 64


def sawtooth_power(x: np.ndarray, modes: int = SAWTOOTH_MODES) -> np.ndarray:
    """3/2 - sum_{k <= modes} sin(k x) / (pi k), a smoothed sawtooth between 0.91 and 2.09."""
    out = np.full(np.shape(x), 1.5)
    for k in range(1, modes + 1):
        out -= np.sin(k * x) / (np.pi * k)
    return out


def saturating_pair(p: float, modes: int = SAWTOOTH_MODES) -> Tuple[TorusFunction, TorusFunction]:
    """
    f and g with |f|^p the smoothed sawtooth and |g|^p = 1 + cos(y)/2 + sin(y)/2.

    For integer sigma <= modes only the sin(sigma x) mode of |f|^p meets
    |g(sigma .)|^p, so ||f g(sigma .)||_p^p = ||f||_p^p ||g||_p^p - 1 / (4 pi sigma)
    and the p-th power gap is (4 pi sigma)^{-1/p} exactly.
    """
    p = _check_exponent(p)
    if np.isinf(p):
        raise InvalidParameterError("A saturating pair needs a finite p")

    def f(x: np.ndarray, *rest: np.ndarray) -> np.ndarray:
        return sawtooth_power(x, modes) ** (1.0 / p)

    def g(y: np.ndarray, *rest: np.ndarray) -> np.ndarray:
        return (1.0 + 0.5 * np.cos(y) + 0.5 * np.sin(y)) ** (1.0 / p)

    return f, g


def _inverse(p: float) -> float:
    return 0.0 if np.isinf(p) else 1.0 / p


def _exact(value: float) -> str:
    return "inf" if np.isinf(value) else str(Fraction(value).limit_denominator(1000))


# =============================================================================
# Stationary phase
# =============================================================================

def c2_norm(a: SpectralField) -> float:
    """sup |a| + sup |grad a| + sup |grad^2 a| (Frobenius) from exact derivatives."""
    gradient = differentiate(a, "grad")
    hessian = differentiate(gradient, "grad")
    return lp_norm(a, np.inf) + lp_norm(gradient, np.inf) + lp_norm(hessian, np.inf)


def stationary_phase_lhs(a: SpectralField, f: SpectralField, kappa: float, p: float) -> float:
    """|| |grad|^{-1} P_{!=0}(a P_{>=kappa} f) ||_{L^p}."""
    high = freq_project(f, "geq", kappa)
    product = freq_project(multiply(a, high), "nonzero")
    return lp_norm(fractional_gradient(product, -1.0), p)


def stationary_phase_test(
    a: SpectralField,
    f: SpectralField,
    kappas: Sequence[float],
    p: float,
    slope_tolerance: Optional[float] = None,
) -> LemmaReport:
    """
    Sweep kappa and fit the decay of the stationary-phase left-hand side
    against the predicted kappa^{-1}.

    The ratio uses the full C^2 norm of ``a`` so that constant amplitudes,
    which still gain kappa^{-1} through |grad|^{-1}, have a finite bound.

    Raises:
        InvalidParameterError: Non-scalar or time-sampled inputs, or kappa beyond the grid
        DegenerateInput: f has no energy at or above the largest kappa
    """
    p = _check_exponent(p)
    if a.rank != 0 or f.rank != 0 or a.time_sampled or f.time_sampled:
        raise InvalidParameterError("Stationary phase needs two static scalar fields")
    if a.grid.n != f.grid.n:
        raise InvalidParameterError("Amplitude and data live on different grids")
    sweep = _check_sweep(kappas, "kappa")
    if sweep[-1] >= f.grid.n / 2:
        raise InvalidParameterError(f"kappa={sweep[-1]:g} is not resolved on N={f.grid.n}")
    if float(np.sum(freq_project(f, "geq", sweep[-1]).squared_l2())) == 0.0:
        raise DegenerateInput(f"f has no energy at or above kappa={sweep[-1]:g}")

    scale = c2_norm(a) * lp_norm(f, p)
    lhs = [stationary_phase_lhs(a, f, kappa, p) for kappa in sweep]
    report = LemmaReport(
        name=f"stationary_phase p={p:g}",
        parameter='kappa',
        values=sweep,
        lhs=lhs,
        rhs=[scale / kappa for kappa in sweep],
        details={'p': p, 'grid': f.grid.n, 'a_c2': c2_norm(a)},
    )
    tol = tolerance("lemma_slope") if slope_tolerance is None else slope_tolerance
    report = _fit_resolved(report, -1.0, tol, "kappa^(-1) gain of |grad|^(-1) on frequencies >= kappa")
    logger.info("%s: %s", report.name, report.status)
    return report


def packet_sum(grid: GridSpec, kappas: Sequence[float]) -> SpectralField:
    """f = sum_j cos(kappa_j x1): energy at each kappa of a sweep."""
    x1 = grid.coordinates()[0]
    values = sum(np.cos(k * x1) for k in kappas)
    return SpectralField.from_physical(np.broadcast_to(values, grid.physical_shape), grid)


def modulated_amplitude(grid: GridSpec, depth: float = 0.5) -> SpectralField:
    """a = 1 + depth sin(x1)."""
    x1 = grid.coordinates()[0]
    return SpectralField.from_physical(np.broadcast_to(1.0 + depth * np.sin(x1), grid.physical_shape), grid)


# =============================================================================
# Semigroup smoothing and mollification
# =============================================================================

def semigroup_smoothing_test(
    grid: GridSpec,
    model: ModelParams,
    s: float,
    times: Sequence[float],
    slope_tolerance: Optional[float] = None,
) -> LemmaReport:
    """
    || |grad|^s e^{-t nu (-Delta)^alpha} ||_{L^2 -> L^2} over t, the largest
    multiplier on the grid, against t^{-s / (2 alpha)}.

    The right-hand side carries the sharp constant
    (s / (2 alpha nu e))^{s / (2 alpha)}, so the ratio is the fitted constant
    relative to it.
    """
    if s <= 0:
        raise InvalidParameterError(f"Smoothing order must be positive, got {s}")
    sweep = _check_sweep(times, "time")
    k2 = grid.wavenumber_squared()
    k2 = k2[k2 > 0]
    exponent = s / (2.0 * model.alpha)
    sharp = (s / (2.0 * model.alpha * model.nu * np.e)) ** exponent
    lhs = [float(np.max(k2 ** (s / 2.0) * np.exp(-t * model.nu * k2 ** model.alpha))) for t in sweep]
    report = LemmaReport(
        name=f"semigroup_smoothing s={s:g} alpha={model.alpha:g}",
        parameter='t',
        values=sweep,
        lhs=lhs,
        rhs=[sharp * t ** (-exponent) for t in sweep],
        details={'s': s, 'alpha': model.alpha, 'nu': model.nu, 'grid': grid.n, 'sharp_constant': sharp},
    )
    tol = tolerance("lemma_slope") if slope_tolerance is None else slope_tolerance
    return _fit_resolved(report, -exponent, tol, f"t^(-s/(2 alpha)) with s={s:g}, alpha={_exact(model.alpha)}")


def mollifier_rate_test(
    f: SpectralField,
    scales: Sequence[float],
    p: float = 2.0,
    slope_tolerance: Optional[float] = None,
) -> LemmaReport:
    """
    ||f - f * phi_l||_p over the mollifier width l against l^2 ||Delta f||_p.

    Raises:
        DegenerateInput: f is constant (nothing to smooth)
    """
    p = _check_exponent(p)
    sweep = _check_sweep(scales, "scale")
    curvature = lp_norm(differentiate(f, "laplacian"), p)
    if curvature == 0:
        raise DegenerateInput("Mollification of a constant field is exact")
    lhs = [lp_norm(f - mollify(f, scale), p) for scale in sweep]
    report = LemmaReport(
        name=f"mollifier_rate p={p:g}",
        parameter='scale',
        values=sweep,
        lhs=lhs,
        rhs=[scale ** 2 * curvature for scale in sweep],
        details={'p': p, 'grid': f.grid.n, 'laplacian_norm': curvature},
    )
    tol = tolerance("lemma_slope") if slope_tolerance is None else slope_tolerance
    return _fit_resolved(report, 2.0, tol, "second moment of a symmetric unit-mass kernel")
