"""
Subdivision of [0, T] and the partition of unity used for gluing.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from blocks.profiles import smooth_step, smooth_step_rate
from errors import InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Subdivision:
    """Breakpoint count and overlap, with the values the subdivision rule would give."""
    m: int
    theta: float
    period: float
    rule_m: float
    rule_theta: float
    overridden: bool

    @property
    def breakpoints(self) -> np.ndarray:
        return self.period * np.arange(self.m + 1) / self.m

    def to_dict(self) -> Dict[str, Any]:
        return {
            'm': self.m,
            'theta': self.theta,
            'period': self.period,
            'rule_m': self.rule_m,
            'rule_theta': self.rule_theta,
            'overridden': self.overridden,
        }


def subdivide(
    theta_q: float,
    lambda_q: float,
    eta: float,
    eta_star: Optional[float] = None,
    period: float = 1.0,
    m: Optional[int] = None,
    theta: Optional[float] = None,
) -> Subdivision:
    """
    T/m = lambda_q^{-12} and theta = (T/m)^{1/eta}, or desk overrides.

    The rule values are always computed and logged; an override replaces
    them. Both must keep 2 theta < theta_q.

    Raises:
        InvalidParameterError: eta outside (eta_star/2, eta_star), an override
            with 2 theta >= theta_q, or theta >= T/m
    """
    if not 0 < eta < 1:
        raise InvalidParameterError(f"eta must lie in (0, 1), got {eta}")
    if eta_star is not None and not eta_star / 2 < eta < eta_star:
        raise InvalidParameterError(f"eta = {eta} is outside ({eta_star / 2}, {eta_star})")
    if lambda_q <= 1 or theta_q <= 0 or period <= 0:
        raise InvalidParameterError("lambda_q must exceed 1; theta_q and T must be positive")

    rule_m = period * lambda_q ** 12
    rule_theta = (period / rule_m) ** (1.0 / eta)
    logger.info("Subdivision rule: m=%.6g, theta=%.6g", rule_m, rule_theta)
    if not 2 * rule_theta < theta_q:
        logger.warning("Rule theta %.3e does not satisfy 2 theta < theta_q = %.3e", rule_theta, theta_q)

    overridden = m is not None or theta is not None
    if overridden:
        m = int(m if m is not None else round(rule_m))
        theta = float(theta if theta is not None else rule_theta)
        if m < 1:
            raise InvalidParameterError(f"m must be positive, got {m}")
        if not 2 * theta < theta_q:
            raise InvalidParameterError(f"Override theta = {theta} violates 2 theta < theta_q = {theta_q}")
        if not theta < period / m:
            raise InvalidParameterError(f"Override theta = {theta} must be below T/m = {period / m}")
    else:
        m, theta = int(round(rule_m)), rule_theta
    return Subdivision(m, theta, period, rule_m, rule_theta, overridden)


class PartitionOfUnity:
    """
    chi_0, ..., chi_{m-1} on [0, T].

    chi_i = 1 on [t_i + theta, t_{i+1}], 0 for t <= t_i and t >= t_{i+1} + theta,
    with smooth ramps across each overlap. Built as differences of the
    rising ramps s_i(t) = step((t - t_i)/theta), so the sum telescopes to 1.
    """

    def __init__(self, m: int, theta: float, period: float = 1.0):
        if m < 1:
            raise InvalidParameterError(f"m must be positive, got {m}")
        if not 0 < theta < period / m:
            raise InvalidParameterError(f"theta must lie in (0, T/m), got {theta}")
        self.m = m
        self.theta = float(theta)
        self.period = float(period)
        self.breakpoints = self.period * np.arange(m + 1) / m

    @classmethod
    def from_subdivision(cls, sub: Subdivision) -> "PartitionOfUnity":
        return cls(sub.m, sub.theta, sub.period)

    def _rise(self, i: int, t: np.ndarray, derivative: int) -> np.ndarray:
        if i == 0:
            return np.ones_like(t) if derivative == 0 else np.zeros_like(t)
        if i >= self.m:
            return np.zeros_like(t)
        s = (t - self.breakpoints[i]) / self.theta
        return smooth_step(s) if derivative == 0 else smooth_step_rate(s) / self.theta

    def chi(self, i: int, t: np.ndarray, derivative: int = 0) -> np.ndarray:
        """chi_i(t) or its first derivative."""
        if not 0 <= i < self.m:
            raise InvalidParameterError(f"Partition index {i} outside [0, {self.m})")
        if derivative not in (0, 1):
            raise InvalidParameterError("Only chi and its first derivative are available")
        t = np.asarray(t, dtype=float)
        return self._rise(i, t, derivative) - self._rise(i + 1, t, derivative)

    def sum_deviation(self, samples: int = 4001) -> float:
        """max |sum_i chi_i - 1| on a uniform grid."""
        t = np.linspace(0.0, self.period, samples)
        total = sum(self.chi(i, t) for i in range(self.m))
        return float(np.max(np.abs(total - 1.0)))

    def derivative_constant(self, samples: int = 4001) -> float:
        """theta sup_{i,t} |d_t chi_i|, the fitted constant of the theta^{-1} bound."""
        t = np.linspace(0.0, self.period, samples)
        return self.theta * max(float(np.max(np.abs(self.chi(i, t, 1)))) for i in range(self.m))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'm': self.m,
            'theta': self.theta,
            'period': self.period,
            'sum_deviation': self.sum_deviation(),
            'derivative_constant': self.derivative_constant(),
        }
