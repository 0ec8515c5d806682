"""
Exact target-space exponents (alpha, s, gamma, p) and the symbolic
lambda-powers of the scheme parameters.

Every value is a sympy Rational; gamma and p may also be ``sympy.oo``,
for which 1/oo = 0 in every formula.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Union

import sympy as sp

from errors import InvalidParameterError, OutOfDomainError

logger = logging.getLogger(__name__)

ExactValue = Union[sp.Rational, sp.core.numbers.Infinity]

# Symbols the constraint expressions are written in
ALPHA, S, INV_GAMMA, INV_P, EPS = sp.symbols('alpha s inv_gamma inv_p epsilon')

INFINITY_LABELS = ("inf", "infinity", "oo", "∞")


def parse_exponent(value: Any, allow_infinity: bool = False) -> ExactValue:
    """
    Parse ``"7/5"``, ``"1.4"``, ``7``, a Fraction or ``"inf"`` into an exact value.

    Floats are read through their shortest decimal representation, so
    ``1.4`` becomes 7/5 rather than the nearest binary fraction.

    Raises:
        InvalidParameterError: Unparseable text, or infinity where it is not allowed
    """
    if isinstance(value, str) and value.strip().lower() in INFINITY_LABELS:
        if not allow_infinity:
            raise InvalidParameterError(f"Infinity is not allowed here: {value!r}")
        return sp.oo
    if value is sp.oo or (isinstance(value, float) and value == float('inf')):
        if not allow_infinity:
            raise InvalidParameterError("Infinity is not allowed here")
        return sp.oo
    try:
        text = repr(value) if isinstance(value, float) else str(value).strip()
        parsed = sp.Rational(text)
    except (TypeError, ValueError, SyntaxError, sp.SympifyError) as e:
        raise InvalidParameterError(f"Not an exact rational: {value!r}") from e
    return parsed


def format_exact(value: ExactValue) -> str:
    """Canonical text for a rational or infinity (``"3/80"``, ``"inf"``)."""
    if value is sp.oo:
        return "inf"
    return str(sp.Rational(value))


def inverse(value: ExactValue) -> sp.Rational:
    return sp.Integer(0) if value is sp.oo else sp.Rational(1) / value


@dataclass(frozen=True)
class Exponents:
    """
    Target space L^gamma_t W^{s,p}_x for dissipation exponent alpha.

    Raises:
        OutOfDomainError: alpha outside [1, 2), s outside [0, 3), or
            gamma, p below 1
    """
    alpha: sp.Rational
    s: sp.Rational
    gamma: ExactValue
    p: ExactValue

    def __post_init__(self):
        if not (1 <= self.alpha < 2):
            raise OutOfDomainError(f"alpha must lie in [1, 2), got {format_exact(self.alpha)}")
        if not (0 <= self.s < 3):
            raise OutOfDomainError(f"s must lie in [0, 3), got {format_exact(self.s)}")
        for name in ("gamma", "p"):
            value = getattr(self, name)
            if value is not sp.oo and value < 1:
                raise OutOfDomainError(f"{name} must lie in [1, inf], got {format_exact(value)}")

    @classmethod
    def parse(cls, alpha: Any, s: Any, gamma: Any, p: Any) -> "Exponents":
        return cls(
            alpha=parse_exponent(alpha),
            s=parse_exponent(s),
            gamma=parse_exponent(gamma, allow_infinity=True),
            p=parse_exponent(p, allow_infinity=True),
        )

    @property
    def inv_gamma(self) -> sp.Rational:
        return inverse(self.gamma)

    @property
    def inv_p(self) -> sp.Rational:
        return inverse(self.p)

    def substitution(self) -> Dict[sp.Symbol, sp.Rational]:
        """Values for ALPHA, S, INV_GAMMA and INV_P."""
        return {ALPHA: self.alpha, S: self.s, INV_GAMMA: self.inv_gamma, INV_P: self.inv_p}

    def critical_s(self) -> sp.Rational:
        """The s with 2 alpha / gamma + 3 / p = 2 alpha - 1 + s."""
        return 2 * self.alpha * self.inv_gamma + 3 * self.inv_p - 2 * self.alpha + 1

    def to_dict(self) -> Dict[str, str]:
        return {
            'alpha': format_exact(self.alpha),
            's': format_exact(self.s),
            'gamma': format_exact(self.gamma),
            'p': format_exact(self.p),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Exponents":
        return cls.parse(data['alpha'], data['s'], data['gamma'], data['p'])


def scheme_exponents(regime: str) -> Dict[str, sp.Expr]:
    """
    Powers of lambda for each block parameter, symbolic in ALPHA and EPS.

    A1 (intermittent jets): r_perp, r_par, mu, tau, sigma.
    A2 (Mikado flows): r_perp, tau, sigma.
    """
    if regime == "A1":
        return {
            'r_perp': -1 + 2 * EPS,
            'r_par': -1 + 4 * EPS,
            'mu': 2 * ALPHA - 1 + 2 * EPS,
            'tau': 4 * ALPHA - 5 + 11 * EPS,
            'sigma': 2 * EPS,
        }
    if regime == "A2":
        return {
            'r_perp': 1 - ALPHA - 8 * EPS,
            'tau': 2 * ALPHA,
            'sigma': 2 * EPS,
        }
    raise InvalidParameterError(f"Unknown regime: {regime}")
