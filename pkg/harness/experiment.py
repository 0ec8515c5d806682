"""
Named experiments over parameter grids, configured directly or from a preset.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from blocks.scaling import verify_all_blocks
from certify.exponents import parse_exponent
from config import FAIL, PASS, get_config
from errors import InvalidParameterError
from harness.lemmas import (
    SAWTOOTH_MODES,
    LemmaReport,
    decorrelation_test,
    modulated_amplitude,
    mollifier_rate_test,
    packet_sum,
    saturating_pair,
    semigroup_smoothing_test,
    stationary_phase_test,
)
from output.report_writer import write_csv, write_json
from perturbation.decay import DESK_LAMBDAS, DESK_TIME_SAMPLES, measure_decay
from perturbation.stage import StageConfig
from spectral.field import GridSpec, ModelParams
from spectral.sampling import random_field

logger = logging.getLogger(__name__)

# Default sweep and exponent list per experiment
DEFAULT_SWEEPS: Dict[str, List[float]] = {
    "decorrelation": [4, 8, 16, 32],
    "stationary_phase": [4, 8, 16, 32],
    "semigroup": [1e-3, 4e-3, 1.6e-2, 6.4e-2],
    "mollifier": [1 / 4, 1 / 8, 1 / 16, 1 / 32],
    "blocks_scaling": [8, 16, 32],
    "decay": list(DESK_LAMBDAS),
}
DEFAULT_EXPONENTS: Dict[str, List[float]] = {
    "decorrelation": [2.0, 4.0],
    "stationary_phase": [2.0, 4.0],
    "semigroup": [1.0, 2.0],
    "mollifier": [2.0],
    "blocks_scaling": [],
    "decay": [],
}
EXPERIMENTS = tuple(DEFAULT_SWEEPS)


def kinked_amplitude(x: np.ndarray, *rest: np.ndarray) -> np.ndarray:
    """f = 1 + sin(x1) |sin(x1 / 2)| / 2: C^1 but not C^2."""
    return 1.0 + 0.5 * np.sin(x) * np.abs(np.sin(0.5 * x))


def two_mode_profile(x: np.ndarray, *rest: np.ndarray) -> np.ndarray:
    """g = sin(x1) + cos(2 x1)."""
    return np.sin(x) + np.cos(2.0 * x)


@dataclass
class ExperimentConfig:
    """One experiment over a parameter grid."""
    experiment: str
    sweep: List[float] = field(default_factory=list)
    exponents: List[float] = field(default_factory=list)
    seeds: List[int] = field(default_factory=list)
    grid: int = 32
    time_samples: int = 65
    alpha: float = 1.25
    regime: str = "A1"
    report: Optional[str] = None
    csv: Optional[str] = None
    preset: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidParameterError(f"Unknown experiment: {self.experiment}")
        self.sweep = [float(v) for v in (self.sweep or DEFAULT_SWEEPS[self.experiment])]
        if len(set(self.sweep)) < 3:
            raise InvalidParameterError(f"{self.experiment} needs at least 3 sweep values, got {self.sweep}")
        self.exponents = [float(v) for v in (self.exponents or DEFAULT_EXPONENTS[self.experiment])]
        self.seeds = [int(s) for s in (self.seeds or [get_config().get("seed")])]

    @classmethod
    def from_preset(cls, name: str, experiment: str, **overrides: Any) -> "ExperimentConfig":
        """
        Grid, time samples, alpha and regime from a preset; the preset's
        lambda list becomes the sweep of the lambda-indexed experiments.
        """
        preset = get_config().preset(name)
        values: Dict[str, Any] = {
            'experiment': experiment,
            'grid': int(preset['grid']),
            'time_samples': int(preset['time_samples']),
            'alpha': float(parse_exponent(preset.get('alpha', "5/4"))),
            'regime': preset.get('regime', "A1"),
            'preset': name,
        }
        if experiment == "blocks_scaling":
            values['sweep'] = list(preset['lambdas'])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ExperimentResult:
    """Reports of one experiment with their sweep rows."""
    config: ExperimentConfig
    reports: List[Any] = field(default_factory=list)
    rows: List[Dict[str, Any]] = field(default_factory=list)
    error: str = ""

    @property
    def passed(self) -> bool:
        return not self.error and bool(self.reports) and all(_passed(r) for r in self.reports)

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def to_dict(self) -> Dict[str, Any]:
        return {
            'config': self.config.to_dict(),
            'reports': [r.to_dict() for r in self.reports],
            'error': self.error,
            'status': self.status,
        }


def _passed(report: Any) -> bool:
    if hasattr(report, 'passed'):
        return bool(report.passed)
    return report.status == PASS


def _lemma_rows(reports: Sequence[LemmaReport]) -> List[Dict[str, Any]]:
    rows = []
    for report in reports:
        for row in report.rows():
            row['status'] = report.status
            row['measured_slope'] = report.slope.measured if report.slope else None
            row['predicted_slope'] = report.slope.predicted if report.slope else None
            row['sharp_slope'] = report.sharp.measured if report.sharp else None
            rows.append(row)
    return rows


def _run_decorrelation(config: ExperimentConfig) -> List[LemmaReport]:
    reports = []
    for p in config.exponents:
        reports.append(decorrelation_test(kinked_amplitude, two_mode_profile, config.sweep, p))
        if np.isfinite(p) and max(config.sweep) <= SAWTOOTH_MODES:
            reports.append(decorrelation_test(*saturating_pair(p), config.sweep, p, saturating=True))
    return reports


def _run_stationary_phase(config: ExperimentConfig) -> List[LemmaReport]:
    # Room for the largest packet times the amplitude's unit mode below Nyquist
    n = max(config.grid, 2 * (int(3 * max(config.sweep)) // 2))
    grid = GridSpec(n)
    a = modulated_amplitude(grid)
    f = packet_sum(grid, config.sweep)
    return [stationary_phase_test(a, f, config.sweep, p) for p in config.exponents]


def _run_semigroup(config: ExperimentConfig) -> List[LemmaReport]:
    grid = GridSpec(config.grid)
    model = ModelParams(nu=1.0, alpha=config.alpha)
    return [semigroup_smoothing_test(grid, model, s, config.sweep) for s in config.exponents]


def _run_mollifier(config: ExperimentConfig) -> List[LemmaReport]:
    grid = GridSpec(config.grid)
    reports = []
    for seed in config.seeds:
        f = random_field(grid, 0, band=2, seed=seed)
        reports.extend(mollifier_rate_test(f, config.sweep, p) for p in config.exponents)
    return reports


def _run_blocks_scaling(config: ExperimentConfig) -> List[Any]:
    return verify_all_blocks(lambdas=config.sweep)


def _run_decay(config: ExperimentConfig) -> List[Any]:
    return [measure_decay(config.sweep, StageConfig(regime=config.regime, alpha=config.alpha, seed=seed,
                                                    geometry="axis", kappa=0.0, time_samples=DESK_TIME_SAMPLES))
            for seed in config.seeds]


RUNNERS: Dict[str, Callable[[ExperimentConfig], List[Any]]] = {
    "decorrelation": _run_decorrelation,
    "stationary_phase": _run_stationary_phase,
    "semigroup": _run_semigroup,
    "mollifier": _run_mollifier,
    "blocks_scaling": _run_blocks_scaling,
    "decay": _run_decay,
}


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """
    Run one experiment and, with ``write``, emit the configured JSON and
    CSV outputs.
    """
    result = ExperimentResult(config)
    logger.info("Running %s over %s", config.experiment, config.sweep)
    result.reports = RUNNERS[config.experiment](config)
    if config.experiment == "blocks_scaling":
        result.rows = [r.to_row() for r in result.reports]
    elif config.experiment == "decay":
        result.rows = [
            {'seed': seed, 'lambda': lam, 'total_L1': norms['total']['L1']}
            for seed, report in zip(config.seeds, result.reports)
            for lam, norms in zip(report.lambdas, report.norms)
        ]
    else:
        result.rows = _lemma_rows(result.reports)

    if write:
        if config.report:
            write_json(result.to_dict(), config.report)
        if config.csv:
            write_csv(result.rows, config.csv)
    logger.info("%s: %s", config.experiment, result.status)
    return result
