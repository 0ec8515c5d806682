"""
The gluing stage end to end on a synthetic well-prepared state: subdivide,
solve locally, glue, then report stability, energy and covers.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from config import FAIL, PASS, get_config
from errors import InvalidParameterError
from gluing.cover import CoverLevel, CoverReport, cover_report
from gluing.glue import GlueResult, glue, solve_all
from gluing.partition import PartitionOfUnity, subdivide
from gluing.solver import EnergyReport, energy_report
from gluing.stability import StabilitySweep, stability_sweep
from gluing.state import IterationState, synthetic_state, well_prepared
from spectral.field import GridSpec, ModelParams

logger = logging.getLogger(__name__)


@dataclass
class GlueConfig:
    """Desk-scale gluing parameters; m and theta override the subdivision rule."""
    n: int = 8
    time_samples: int = 513
    m: int = 8
    theta: float = 1.0 / 64.0
    theta_q: float = 0.25
    lambda_q: float = 2.0
    eta: float = 0.5
    eta_star: Optional[float] = None
    nu: float = 1.0
    alpha: float = 1.25
    dt: float = 1e-3
    centers: Tuple[float, ...] = (0.3, 0.7)
    width: float = 0.04
    kappa: float = 0.02
    amplitudes: Tuple[float, ...] = (0.01, 0.02, 0.04)

    def __post_init__(self):
        if self.time_samples < 5 or self.n < 4:
            raise InvalidParameterError("Need at least 5 time samples and N >= 4")
        if not all(0 < c - self.width and c + self.width < 1 for c in self.centers):
            raise InvalidParameterError("Stress windows must lie inside (0, 1)")

    @classmethod
    def from_config(cls, **overrides: Any) -> "GlueConfig":
        """Configured m and theta, then overrides (None values are skipped)."""
        config = get_config()
        values = {'m': int(config.get("subdivisions")), 'theta': float(config.get("overlap"))}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def model(self) -> ModelParams:
        return ModelParams(nu=self.nu, alpha=self.alpha)

    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.time_samples, 1.0)

    def state(self, kappa: Optional[float] = None) -> IterationState:
        return synthetic_state(self.grid(), self.model(), self.centers, self.theta_q, self.width,
                               self.kappa if kappa is None else kappa, lambda_q=self.lambda_q)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out['centers'] = list(self.centers)
        out['amplitudes'] = list(self.amplitudes)
        return out


@dataclass
class GlueStageReport:
    """Everything the gluing stage checks."""
    config: GlueConfig
    input_prepared: bool
    result: GlueResult
    stability: StabilitySweep
    energy: List[EnergyReport] = field(default_factory=list)
    cover: Optional[CoverReport] = None

    @property
    def passed(self) -> bool:
        return (self.input_prepared and self.result.passed and self.stability.passed
                and all(e.passed for e in self.energy))

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def to_dict(self) -> Dict[str, Any]:
        return {
            'config': self.config.to_dict(),
            'input_well_prepared': PASS if self.input_prepared else FAIL,
            'glue': self.result.to_dict(),
            'stability': self.stability.to_dict(),
            'energy': [e.to_dict() for e in self.energy],
            'cover': self.cover.to_dict() if self.cover else None,
            'status': self.status,
        }


def run_glue(config: Optional[GlueConfig] = None, state: Optional[IterationState] = None) -> GlueStageReport:
    """
    Glue a state and verify the stage.

    The state defaults to the synthetic two-window shear. The stability
    sweep always runs on the synthetic family, whose stress amplitude can
    be varied.
    """
    config = config or GlueConfig.from_config()
    model = config.model()
    state = state if state is not None else config.state()
    prepared = well_prepared(state)
    if not prepared:
        logger.warning("Input state is not well prepared for theta_q=%g", config.theta_q)

    subdivision = subdivide(config.theta_q, config.lambda_q, config.eta, config.eta_star,
                            period=1.0, m=config.m, theta=config.theta)
    partition = PartitionOfUnity.from_subdivision(subdivision)
    result = glue(state, subdivision, model, dt=config.dt)
    energy = [energy_report(s, model) for s in result.solves]

    sweep = stability_sweep(
        config.state,
        lambda s: solve_all(s, partition, model, config.dt, chained=False),
        partition,
        config.amplitudes,
    )
    cover = cover_report([
        CoverLevel(1, state.theta, state.bad_set),
        CoverLevel(subdivision.m, subdivision.theta, result.state.bad_set),
    ], config.eta_star or config.eta)
    report = GlueStageReport(config, prepared, result, sweep, energy, cover)
    logger.info("Gluing stage: %s", report.status)
    return report
