"""Box-counting bookkeeping of the bad sets across levels."""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from errors import InvalidParameterError
from gluing.state import Interval, merge_intervals

logger = logging.getLogger(__name__)


@dataclass
class CoverLevel:
    """The bad set of one level with its length scale."""
    m: int
    theta: float
    intervals: List[Interval]

    def count(self) -> int:
        """Intervals of length 5 theta needed to cover the bad set."""
        return sum(max(1, math.ceil((b - a) / (5 * self.theta) - 1e-9)) for a, b in merge_intervals(self.intervals))


@dataclass
class CoverReport:
    """N(theta_q) theta_q^s per level and the box-dimension estimates."""
    exponent: float
    levels: List[Dict[str, float]]

    @property
    def decreasing(self) -> Optional[bool]:
        """N theta^s strictly decreases from level to level (None for one level)."""
        if len(self.levels) < 2:
            return None
        weighted = [level['weighted'] for level in self.levels]
        return all(b < a for a, b in zip(weighted, weighted[1:]))

    @property
    def dimension_bound(self) -> float:
        """log N / log(1/theta) at the finest level; 0 for an empty bad set."""
        return self.levels[-1]['dimension']

    def to_dict(self) -> Dict[str, Any]:
        return {
            'exponent': self.exponent,
            'levels': self.levels,
            'decreasing': self.decreasing,
            'dimension_bound': self.dimension_bound,
        }


def cover_report(history: Sequence[CoverLevel], exponent: float) -> CoverReport:
    """
    Count the covers of every recorded level and weight them by theta^s
    with s = ``exponent`` (eta_star).

    Raises:
        InvalidParameterError: Empty history or a non-positive theta
    """
    if not history:
        raise InvalidParameterError("Cover report needs at least one level")
    levels = []
    for level in history:
        if level.theta <= 0 or level.theta >= 1:
            raise InvalidParameterError(f"theta must lie in (0, 1), got {level.theta}")
        count = level.count() if level.intervals else 0
        dimension = math.log(count) / math.log(1.0 / level.theta) if count > 1 else 0.0
        levels.append({
            'm': level.m,
            'theta': level.theta,
            'count': count,
            'weighted': count * level.theta ** exponent,
            'dimension': dimension,
            'count_bound': level.theta ** (-exponent),
        })
    report = CoverReport(float(exponent), levels)
    logger.info("Cover report over %d levels: dimension bound %.4f", len(levels), report.dimension_bound)
    return report
