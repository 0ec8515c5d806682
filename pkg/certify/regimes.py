"""Membership of an exponent tuple in the supercritical regimes A1 and A2."""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import sympy as sp

from certify.exponents import Exponents, format_exact
from errors import OutOfDomainError

logger = logging.getLogger(__name__)

A1_MIN_ALPHA = sp.Rational(5, 4)


@dataclass(frozen=True)
class RegimeVerdict:
    """
    Strict inequality 0 <= s < bound(alpha, gamma, p), with margin = bound - s.

    ``member`` is False when the margin is not positive, including the
    margin-zero endpoints.
    """
    regime: str
    member: bool
    margin: Optional[sp.Rational]
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            'regime': self.regime,
            'member': self.member,
            'margin': None if self.margin is None else format_exact(self.margin),
            'note': self.note,
        }


def a1_margin(e: Exponents) -> sp.Rational:
    return (4 * e.alpha - 5) * e.inv_gamma + 3 * e.inv_p + 1 - 2 * e.alpha - e.s


def a2_margin(e: Exponents) -> sp.Rational:
    return 2 * e.alpha * e.inv_gamma + (2 * e.alpha - 2) * e.inv_p + 1 - 2 * e.alpha - e.s


def in_A1(e: Exponents) -> RegimeVerdict:
    """
    0 <= s < (4 alpha - 5)/gamma + 3/p + 1 - 2 alpha.

    Raises:
        OutOfDomainError: alpha outside [5/4, 2), where A1 is undefined
    """
    if e.alpha < A1_MIN_ALPHA:
        raise OutOfDomainError(
            f"A1 is defined for alpha in [5/4, 2), got {format_exact(e.alpha)}"
        )
    margin = a1_margin(e)
    return RegimeVerdict("A1", bool(margin > 0), margin)


def in_A2(e: Exponents) -> RegimeVerdict:
    """0 <= s < 2 alpha/gamma + (2 alpha - 2)/p + 1 - 2 alpha."""
    margin = a2_margin(e)
    return RegimeVerdict("A2", bool(margin > 0), margin)


def regime_verdicts(e: Exponents) -> List[RegimeVerdict]:
    """Both gates; A1 is reported as not applicable below alpha = 5/4."""
    verdicts = []
    try:
        verdicts.append(in_A1(e))
    except OutOfDomainError:
        verdicts.append(RegimeVerdict("A1", False, None, note="alpha below 5/4"))
    verdicts.append(in_A2(e))
    for verdict in verdicts:
        logger.debug("Regime %s: member=%s margin=%s", verdict.regime, verdict.member, verdict.margin)
    return verdicts


def select_regime(verdicts: List[RegimeVerdict]) -> Optional[str]:
    """A1 when both hold (the jet construction), otherwise the one that holds."""
    for verdict in verdicts:
        if verdict.member:
            return verdict.regime
    return None
