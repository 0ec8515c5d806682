"""
Temporal building blocks g_(tau) and h_(tau).

g_tau(t) = tau^{1/2} g(tau t) on [0, T/tau], extended T-periodically, and
g_(tau)(t) = g_tau(sigma t). With h_tau(t) = int_0^t (g_tau^2 - 1) and
h_(tau)(t) = h_tau(sigma t) one has d/dt (h_(tau) / sigma) = g_(tau)^2 - 1.
Both signals are evaluated in closed form from the primitive of g^2.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.integrate import trapezoid

from blocks.params import BlockParams
from blocks.profiles import ProfileSet
from errors import InvalidParameterError, ResolutionError

logger = logging.getLogger(__name__)

# Samples per concentrated pulse of g_(tau) on the fine signal grid
SAMPLES_PER_PULSE = 64


@dataclass(frozen=True)
class TemporalBlocks:
    """Closed-form g_(tau), its derivatives and h_(tau)."""
    tau: float
    sigma: float
    profiles: ProfileSet

    def __post_init__(self):
        if self.tau < 1.0:
            raise InvalidParameterError(f"tau must be >= 1, got {self.tau}")
        if self.sigma <= 0:
            raise InvalidParameterError(f"sigma must be positive, got {self.sigma}")

    @property
    def period(self) -> float:
        return self.profiles.period

    def _phase(self, t: np.ndarray) -> np.ndarray:
        """sigma t reduced to [0, T)."""
        return np.mod(self.sigma * np.asarray(t, dtype=float), self.period)

    def g(self, t: np.ndarray, derivative: int = 0) -> np.ndarray:
        """d^M/dt^M g_(tau) = sigma^M tau^{1/2+M} g^{(M)}(tau (sigma t mod T))."""
        factor = self.sigma ** derivative * self.tau ** (0.5 + derivative)
        return factor * self.profiles.g(self.tau * self._phase(t), derivative)

    def h(self, t: np.ndarray) -> np.ndarray:
        phase = self._phase(t)
        primitive = self.profiles.g_square_primitive(np.minimum(self.tau * phase, self.period))
        return primitive - phase

    def h_rate(self, t: np.ndarray) -> np.ndarray:
        """d/dt h_(tau) = sigma (g_(tau)^2 - 1)."""
        return self.sigma * (self.g(t) ** 2 - 1.0)

    def required_samples(self) -> int:
        return SAMPLES_PER_PULSE * int(math.ceil(self.sigma * self.tau)) + 1

    @classmethod
    def from_params(cls, params: BlockParams, profiles: ProfileSet) -> "TemporalBlocks":
        return cls(params.tau, params.sigma, profiles)


@dataclass
class TemporalSignals:
    """g_(tau) and h_(tau) sampled on a uniform grid of [0, T]."""
    times: np.ndarray
    g: np.ndarray
    h: np.ndarray
    tau: float
    sigma: float

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def summary(self) -> Dict[str, Any]:
        period = float(self.times[-1] - self.times[0])
        mean_square = float(trapezoid(self.g ** 2, self.times) / period)
        return {
            'samples': int(len(self.times)),
            'tau': self.tau,
            'sigma': self.sigma,
            'h_sup': float(np.max(np.abs(self.h))),
            'g_mean_square': mean_square,
        }


def temporal_blocks(
    params: BlockParams,
    profiles: ProfileSet,
    samples: Optional[int] = None,
) -> TemporalSignals:
    """
    Sample g_(tau) and h_(tau) on their own fine grid.

    Args:
        params: Block parameters supplying tau and sigma
        profiles: Profile set (fixes T)
        samples: Grid size; defaults to the resolution rule
            SAMPLES_PER_PULSE * ceil(sigma tau) + 1

    Raises:
        ResolutionError: ``samples`` is below the resolution rule
    """
    blocks = TemporalBlocks.from_params(params, profiles)
    required = blocks.required_samples()
    if samples is None:
        samples = required
    elif samples < required:
        raise ResolutionError(
            f"Temporal grid of {samples} samples cannot resolve tau = {params.tau:.4g}, "
            f"sigma = {params.sigma:.4g}; need {required}",
            required,
        )
    times = np.linspace(0.0, profiles.period, samples)
    logger.debug("Sampled temporal blocks on %d points (tau=%.4g, sigma=%.4g)", samples, params.tau, params.sigma)
    return TemporalSignals(times=times, g=blocks.g(times), h=blocks.h(times), tau=params.tau, sigma=params.sigma)
