"""
Stability of the local solves against the stress they remove.

w_i = u_q - v_i is driven only by div R_q, so sup_t ||w_i||_{L^rho} is
controlled by int ||grad| R_q||_{L^rho} and sup_t ||R w_i||_{L^rho} by
int ||R_q||_{L^rho}. The constants are fitted per rho and checked for
linear response across stress amplitudes.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import integrate

from config import FAIL, PASS
from gluing.glue import plan_solves
from gluing.partition import PartitionOfUnity
from gluing.solver import LocalSolution
from gluing.state import IterationState
from spectral.field import SpectralField
from spectral.operators import fractional_gradient, inverse_divergence, lp_norm_series

logger = logging.getLogger(__name__)

DEFAULT_RHOS = (1.25, 1.5, 2.0)
DEFAULT_AMPLITUDES = (0.01, 0.02, 0.04)
RATIO_SPREAD = 0.2
# Windows carrying less than this share of the largest stress weight are skipped
SIGNIFICANT = 1e-6


def _window(f: SpectralField, start: int, end: int) -> SpectralField:
    frames = [f.at(j) for j in range(start, end + 1)]
    return SpectralField.stack_times(frames, period=(end - start) * f.grid.dt)


def _integral(series: np.ndarray, times: np.ndarray) -> float:
    if len(times) > 2:
        return float(integrate.simpson(series, x=times))
    return float(integrate.trapezoid(series, x=times))


@dataclass
class StabilityReport:
    """Fitted constants C per rho for the gradient and the stress bounds."""
    gradient: Dict[float, float]
    stress: Dict[float, float]
    max_deviation: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'gradient_constant': {str(k): v for k, v in self.gradient.items()},
            'stress_constant': {str(k): v for k, v in self.stress.items()},
            'max_deviation': self.max_deviation,
        }


def verify_stability(
    state: IterationState,
    solves: Sequence[LocalSolution],
    partition: PartitionOfUnity,
    rhos: Sequence[float] = DEFAULT_RHOS,
) -> StabilityReport:
    """
    max_i sup_t ||w_i||_rho / int ||grad| R_q||_rho and
    max_i sup_t ||R w_i||_rho / int ||R_q||_rho over each solve window.

    The solves must start from u_q(t_i) (unchained). Windows where
    int ||grad| R_q||_2 is below ``SIGNIFICANT`` of the largest one
    contribute only through ``max_deviation``, the largest sup ||w_i||_2
    seen there.
    """
    plan = plan_solves(state, partition)
    last = state.grid.time_samples - 1
    windows = []
    for i, solve in enumerate(solves):
        start, end = plan.starts[i], plan.end(i, last)
        w = _window(state.velocity, start, end) - solve.velocity
        R = _window(state.stress, start, end)
        weight = _integral(lp_norm_series(fractional_gradient(R, 1.0), 2.0), solve.times)
        windows.append((w, R, solve.times, weight))
    largest = max((item[3] for item in windows), default=0.0)

    gradient = {float(r): 0.0 for r in rhos}
    stress_bound = {float(r): 0.0 for r in rhos}
    deviation = 0.0
    for w, R, times, weight in windows:
        if weight <= SIGNIFICANT * largest or largest == 0:
            deviation = max(deviation, float(np.max(lp_norm_series(w, 2.0))))
            continue
        for rho in gradient:
            denominator = _integral(lp_norm_series(fractional_gradient(R, 1.0), rho), times)
            gradient[rho] = max(gradient[rho], float(np.max(lp_norm_series(w, rho))) / denominator)
            stress_denominator = _integral(lp_norm_series(R, rho), times)
            stress_numerator = float(np.max(lp_norm_series(inverse_divergence(w), rho)))
            stress_bound[rho] = max(stress_bound[rho], stress_numerator / stress_denominator)
    report = StabilityReport(gradient, stress_bound, deviation)
    logger.info("Stability constants: %s", {k: round(v, 4) for k, v in gradient.items()})
    return report


@dataclass
class StabilitySweep:
    """Stability constants across stress amplitudes."""
    amplitudes: List[float]
    reports: List[StabilityReport] = field(default_factory=list)
    spread: float = RATIO_SPREAD

    def deviations(self) -> Dict[str, float]:
        """Largest relative deviation from the mean constant, per bound and rho."""
        out = {}
        for kind in ('gradient', 'stress'):
            for rho in getattr(self.reports[0], kind):
                values = np.array([getattr(r, kind)[rho] for r in self.reports])
                mean = float(np.mean(values))
                out[f"{kind}_{rho:g}"] = float(np.max(np.abs(values / mean - 1.0))) if mean > 0 else 0.0
        return out

    @property
    def passed(self) -> bool:
        return all(v <= self.spread for v in self.deviations().values())

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def to_dict(self) -> Dict[str, Any]:
        return {
            'amplitudes': self.amplitudes,
            'reports': [r.to_dict() for r in self.reports],
            'deviations': self.deviations(),
            'spread': self.spread,
            'status': self.status,
        }


def stability_sweep(
    build: Callable[[float], IterationState],
    solve: Callable[[IterationState], List[LocalSolution]],
    partition: PartitionOfUnity,
    amplitudes: Sequence[float] = DEFAULT_AMPLITUDES,
    rhos: Sequence[float] = DEFAULT_RHOS,
    spread: Optional[float] = None,
) -> StabilitySweep:
    """Build a state per amplitude, solve locally and compare the fitted constants."""
    sweep = StabilitySweep([float(a) for a in amplitudes], spread=RATIO_SPREAD if spread is None else spread)
    for amplitude in sweep.amplitudes:
        state = build(amplitude)
        sweep.reports.append(verify_stability(state, solve(state), partition, rhos))
    logger.info("Stability sweep over %s: %s", sweep.amplitudes, sweep.status)
    return sweep
