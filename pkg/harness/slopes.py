"""
Log-log slope fitting.

Every scaling and decay check reduces to fitting log(y) = slope * log(x) + c
over a short dyadic sweep and comparing the slope with a substituted
exponent.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from config import FAIL, PASS
from errors import InvalidParameterError


@dataclass
class SlopeReport:
    """Result of one log-log fit."""
    label: str
    measured: float
    intercept: float
    r_squared: float
    stderr: float
    confidence: Tuple[float, float]
    points: List[Tuple[float, float]] = field(default_factory=list)
    predicted: Optional[float] = None
    tolerance: Optional[float] = None
    provenance: str = ""
    one_sided: bool = False

    @property
    def residual(self) -> Optional[float]:
        if self.predicted is None:
            return None
        return abs(self.measured - self.predicted)

    @property
    def passed(self) -> bool:
        """
        True when there is nothing to compare or the slope is within
        tolerance (at most predicted + tolerance for an upper bound).
        """
        if self.predicted is None or self.tolerance is None:
            return True
        if self.one_sided:
            return self.measured <= self.predicted + self.tolerance
        return self.residual <= self.tolerance

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def to_dict(self) -> Dict[str, Any]:
        return {
            'label': self.label,
            'measured_slope': self.measured,
            'predicted_slope': self.predicted,
            'residual': self.residual,
            'tolerance': self.tolerance,
            'r_squared': self.r_squared,
            'stderr': self.stderr,
            'confidence': list(self.confidence),
            'intercept': self.intercept,
            'points': [list(p) for p in self.points],
            'provenance': self.provenance,
            'bound': "upper" if self.one_sided else "two-sided",
            'status': self.status,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SlopeReport":
        return cls(
            label=data.get('label', ''),
            measured=float(data['measured_slope']),
            intercept=float(data.get('intercept', 0.0)),
            r_squared=float(data.get('r_squared', 1.0)),
            stderr=float(data.get('stderr', 0.0)),
            confidence=tuple(data.get('confidence', (data['measured_slope'], data['measured_slope']))),
            points=[tuple(p) for p in data.get('points', [])],
            predicted=data.get('predicted_slope'),
            tolerance=data.get('tolerance'),
            provenance=data.get('provenance', ''),
            one_sided=data.get('bound') == "upper",
        )


def fit_loglog_slope(
    xs: Sequence[float],
    ys: Sequence[float],
    predicted: Optional[float] = None,
    tolerance: Optional[float] = None,
    label: str = "",
    provenance: str = "",
    level: float = 0.95,
    one_sided: bool = False,
) -> SlopeReport:
    """
    Least-squares slope of log(y) against log(x).

    Args:
        xs: Abscissae (at least 3, positive, not all equal)
        ys: Ordinates (positive)
        predicted: Slope to compare against
        tolerance: Allowed |measured - predicted|
        label: Name used in reports
        provenance: Where the predicted slope comes from
        level: Confidence level of the reported interval
        one_sided: Treat the prediction as an upper bound on the slope

    Returns:
        SlopeReport with R^2 and a Student-t confidence interval

    Raises:
        InvalidParameterError: Too few points or non-positive data
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidParameterError("Slope fit needs two equal-length sequences")
    if len(x) < 3:
        raise InvalidParameterError(f"Slope fit needs at least 3 points, got {len(x)}")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise InvalidParameterError(f"Slope fit needs positive finite data ({label or 'unnamed'})")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise InvalidParameterError("Slope fit needs at least two distinct abscissae")

    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    ssr = float(np.sum((ly - fitted) ** 2))
    sst = float(np.sum((ly - ly.mean()) ** 2))
    # Flat data (slope zero to rounding) counts as a perfect fit
    r_squared = 1.0 - ssr / sst if sst > 1e-20 * max(1.0, float(np.sum(ly ** 2))) else 1.0
    dof = len(x) - 2
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    stderr = float(np.sqrt(ssr / dof / sxx)) if dof > 0 else 0.0
    half = float(stats.t.ppf(0.5 + level / 2.0, dof)) * stderr if dof > 0 else 0.0

    return SlopeReport(
        label=label,
        measured=float(slope),
        intercept=float(intercept),
        r_squared=float(r_squared),
        stderr=stderr,
        confidence=(float(slope) - half, float(slope) + half),
        points=[(float(a), float(b)) for a, b in zip(x, y)],
        predicted=None if predicted is None else float(predicted),
        tolerance=tolerance,
        provenance=provenance,
        one_sided=one_sided,
    )
