"""
One perturbation step on a manufactured glued state.

The glued velocity is the shear u~ = A(t) sin(x2) e1 with
A(t) = exp(-nu t)(1 + kappa bump((t - t0)/width)), whose nonlinearity
vanishes identically. Its stress R~ = R(d_t u~ + nu (-Delta)^alpha u~) plus a
windowed trace-free gradient stress is supported in the window
[t0 - width, t0 + width], so the temporal cutoff f is nontrivial.

The default direction set is the spanning 3-4-5 family (N_Lambda = 5). Its
tubes need lambda >= 16 to separate, hence N >= 960, so desk runs use the
axis surrogate, which spans diagonal matrices only. With kappa = 0 the
stress is diagonal and can be cancelled; the shear stress of kappa > 0 is
left in the defect and fails the cancellation check.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from blocks.jets import SpatialBlock, build_blocks, required_resolution
from blocks.params import BlockParams
from blocks.profiles import bump, make_profiles
from blocks.temporal import TemporalBlocks
from certify.constraints import rho as rho_exponent
from certify.exponents import parse_exponent
from config import FAIL, PASS, get_config
from errors import InvalidParameterError
from geometry.directions import GeometrySet
from geometry.lemma import build_axis_lambda, build_lambda
from geometry.shifts import choose_shifts
from gluing.initial import initial_stress
from perturbation.amplitudes import AmplitudeInputs, Amplitudes, build_amplitudes, temporal_cutoff
from perturbation.assemble import PerturbationSet, assemble_perturbation, temporal_support_ok
from perturbation.identities import IdentityReport, verify_all
from perturbation.reynolds import ReynoldsReport, build_reynolds_next
from spectral.field import GridSpec, ModelParams, SpectralField
from spectral.operators import (
    fractional_laplacian,
    freq_project,
    inverse_divergence,
    resample,
    time_derivative,
    traceless,
)

logger = logging.getLogger(__name__)

GEOMETRIES = ("axis", "pythagorean")


@dataclass
class StageConfig:
    """
    Desk-scale parameters of one step.

    ``n`` defaults to the resolution rule for the block frequency;
    ``lambda_q`` defaults to lam / 4 (at least 2) and ``epsilon_r`` to
    epsilon / 20.
    """
    regime: str = "A1"
    lam: float = 4.0
    alpha: float = 1.25
    epsilon: float = 0.025
    nu: float = 1.0
    n: Optional[int] = None
    time_samples: int = 17
    theta: float = 0.5
    geometry: str = "pythagorean"
    seed: int = 20240601
    radius_samples: int = 2000
    lambda_q: Optional[float] = None
    delta_next: float = 1e-2
    epsilon_r: Optional[float] = None
    shear: float = 0.1
    kappa: float = 0.5
    stress_amplitude: float = 0.02
    window_center: float = 0.5
    window_width: float = 0.15

    def __post_init__(self):
        if self.regime not in ("A1", "A2"):
            raise InvalidParameterError(f"Unknown regime: {self.regime}")
        if self.geometry not in GEOMETRIES:
            raise InvalidParameterError(f"Unknown geometry: {self.geometry}")
        if self.kappa < 0:
            raise InvalidParameterError(f"kappa must be non-negative, got {self.kappa}")
        if self.time_samples < 5:
            raise InvalidParameterError(f"Need at least 5 time samples, got {self.time_samples}")
        if not 0 < self.window_width < min(self.window_center, 1.0 - self.window_center):
            raise InvalidParameterError("The stress window must lie inside (0, 1)")
        if self.lambda_q is None:
            self.lambda_q = max(2.0, self.lam / 4.0)
        if self.epsilon_r is None:
            self.epsilon_r = self.epsilon / 20.0

    @classmethod
    def from_config(cls, **overrides: Any) -> "StageConfig":
        """The configured seed, then overrides (None values are skipped)."""
        config = get_config()
        values = {'seed': config.get("seed")}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Stage:
    """Everything one step builds, in construction order."""
    config: StageConfig
    grid: GridSpec
    model: ModelParams
    geom: GeometrySet
    params: BlockParams
    blocks: Sequence[SpatialBlock]
    temporal: TemporalBlocks
    velocity: SpectralField
    velocity_rate: SpectralField
    stress: SpectralField
    amplitudes: Amplitudes
    perturbation: PerturbationSet

    @property
    def rho_exponent(self) -> float:
        value = rho_exponent(self.config.regime, parse_exponent(self.config.epsilon),
                             parse_exponent(self.config.alpha))
        return float(value)


def shear_amplitude(config: StageConfig, times: np.ndarray, derivative: int = 0) -> np.ndarray:
    """A(t) or A'(t)."""
    s = (times - config.window_center) / config.window_width
    decay = np.exp(-config.nu * times)
    window = bump(s)
    if derivative == 0:
        return config.shear * decay * (1.0 + config.kappa * window)
    window_rate = bump(s, 1) / config.window_width
    return config.shear * decay * (config.kappa * window_rate - config.nu * (1.0 + config.kappa * window))


def manufactured_state(config: StageConfig, grid: GridSpec, model: ModelParams):
    """(u~, d_t u~, R~) for the windowed shear."""
    times = grid.times()
    x1, x2, x3 = grid.coordinates()
    profile = np.zeros((3,) + grid.physical_shape)
    profile[0] = np.sin(x2)
    base = SpectralField.from_physical(profile, grid, 1)
    amplitude = shear_amplitude(config, times)
    rate = shear_amplitude(config, times, 1)
    velocity = base.broadcast_times(grid).modulate(amplitude)
    velocity_rate = base.broadcast_times(grid).modulate(rate)

    forcing = freq_project(velocity_rate + fractional_laplacian(velocity, model.alpha, model.nu), "nonzero")
    gradient_stress = np.zeros((3, 3) + grid.physical_shape)
    gradient_stress[0, 0], gradient_stress[1, 1], gradient_stress[2, 2] = np.cos(x1), np.cos(x2), np.cos(x3)
    window = bump((times - config.window_center) / config.window_width)
    extra = traceless(SpectralField.from_physical(gradient_stress, grid, 2)).broadcast_times(grid)
    stress = inverse_divergence(forcing) + extra.modulate(config.stress_amplitude * window)
    return velocity, velocity_rate, stress.with_coeffs(stress.coeffs, label="R_tilde")


def loaded_state(velocity: SpectralField, grid: GridSpec, model: ModelParams):
    """(u~, d_t u~, R~) for a stored velocity, with R~ = R(d_t u~ + nu (-Delta)^alpha u~) + u~ ⊗̊ u~."""
    if velocity.rank != 1 or not velocity.time_sampled:
        raise InvalidParameterError("The input state must be a time-sampled velocity")
    if velocity.grid.period != grid.period:
        raise InvalidParameterError(
            f"The input state spans T = {velocity.grid.period:g}, the stage T = {grid.period:g}")
    velocity = resample(velocity, grid.n, grid.time_samples)
    velocity = velocity.with_coeffs(velocity.coeffs, mean_free=velocity.mean_free,
                                    divergence_free=velocity.divergence_free, label="u_tilde")
    rate = time_derivative(velocity)
    stress = initial_stress(velocity, model, rate)
    return velocity, rate, stress.with_coeffs(stress.coeffs, label="R_tilde")


def _geometry(config: StageConfig) -> GeometrySet:
    if config.geometry == "axis":
        logger.warning("Axis surrogate directions: only diagonal stresses are cancelled")
        return build_axis_lambda(seed=config.seed, samples=config.radius_samples)
    return build_lambda(seed=config.seed, samples=config.radius_samples)


def build_stage(config: StageConfig, state: Optional[SpectralField] = None) -> Stage:
    """
    Geometry, blocks, glued state, amplitudes and perturbation.

    The glued state is the windowed shear unless a stored velocity is
    given; that one is resampled onto the stage grid and paired with its
    manufactured stress.

    Raises:
        NoAdmissibleShifts: The tubes cannot be separated at this lambda
        ResolutionError: ``config.n`` is below the resolution rule
        OutOfDomainError: The amplitude decomposition leaves its ball
    """
    geom = _geometry(config)
    params = BlockParams.from_regime(config.regime, config.lam, config.alpha, config.epsilon,
                                     n_lambda=geom.n_lambda)
    geom = choose_shifts(geom, params.r_perp, params.lam, seed=config.seed)
    n = config.n or required_resolution(params)
    grid = GridSpec(n, config.time_samples, 1.0)
    model = ModelParams(nu=config.nu, alpha=config.alpha)

    profiles = make_profiles(grid.period)
    blocks = build_blocks(geom, params, grid, profiles)
    temporal = TemporalBlocks.from_params(params, profiles)

    if state is None:
        velocity, velocity_rate, stress = manufactured_state(config, grid, model)
    else:
        velocity, velocity_rate, stress = loaded_state(state, grid, model)
    cutoff = temporal_cutoff(stress, config.theta)
    inputs = AmplitudeInputs(stress, cutoff, geom.epsilon_u, config.lambda_q, config.delta_next, config.epsilon_r)
    amplitudes = build_amplitudes(inputs, geom)
    perturbation = assemble_perturbation(amplitudes, blocks, temporal, params)
    logger.info("Built %s stage at lambda=%g on N=%d, M=%d", config.regime, config.lam, n, config.time_samples)
    return Stage(config, grid, model, geom, params, blocks, temporal, velocity, velocity_rate, stress,
                 amplitudes, perturbation)


@dataclass
class IterationReport:
    """Identity residuals, support checks and stress norms of one step."""
    config: StageConfig
    identities: List[IdentityReport]
    reynolds: ReynoldsReport
    support_ok: bool
    rho: float
    geometry: Dict[str, Any] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    amplitudes: Dict[str, Any] = field(default_factory=dict)
    perturbation: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.support_ok and all(r.passed for r in self.identities) and self.reynolds.passed

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def to_dict(self) -> Dict[str, Any]:
        return {
            'config': self.config.to_dict(),
            'geometry': self.geometry,
            'block_params': self.params,
            'amplitudes': self.amplitudes,
            'perturbation': self.perturbation,
            'identities': [r.to_dict() for r in self.identities],
            'reynolds': self.reynolds.to_dict(self.rho),
            'temporal_support': PASS if self.support_ok else FAIL,
            'status': self.status,
        }


def iterate_once(config: StageConfig, stage: Optional[Stage] = None,
                 state: Optional[SpectralField] = None) -> IterationReport:
    """Build a stage (unless given, from ``state`` if set), verify every identity and form R_{q+1}."""
    stage = stage or build_stage(config, state)
    identities = verify_all(stage.perturbation, stage.stress, stage.temporal, stage.geom)
    reynolds = build_reynolds_next(stage.velocity, stage.stress, stage.perturbation, stage.model,
                                   u_rate=stage.velocity_rate)
    report = IterationReport(
        config=config,
        identities=identities,
        reynolds=reynolds,
        support_ok=temporal_support_ok(stage.perturbation),
        rho=stage.rho_exponent,
        geometry={'name': stage.geom.name, 'spans': stage.geom.spans, 'grid': stage.grid.n},
        params=stage.params.to_dict(),
        amplitudes=stage.amplitudes.summary(),
        perturbation=stage.perturbation.summary(),
    )
    logger.info("Iteration at lambda=%g: %s", config.lam, report.status)
    return report
