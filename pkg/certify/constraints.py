"""
Exponent constraints of the scheme as exact lambda-exponents.

Each "X << 1" requirement becomes "lambda-exponent of X < 0" after the
block parameters are replaced by their lambda-powers. Side conditions on
(b, beta, epsilon_R, eta) and the rho identity are checked in the same
record type.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import sympy as sp

from certify.exponents import (
    ALPHA,
    EPS,
    INV_GAMMA,
    INV_P,
    S,
    Exponents,
    format_exact,
    parse_exponent,
    scheme_exponents,
)
from certify.scheme import SchemeParams, b_lower_bound, epsilon_bound, integrality_value
from config import FAIL, PASS
from errors import InvalidParameterError

logger = logging.getLogger(__name__)

LESS_THAN_ZERO = "< 0"
AT_MOST_ZERO = "<= 0"
EQUALS_ZERO = "== 0"
NATURAL = "in N"

RELATIONS = (LESS_THAN_ZERO, AT_MOST_ZERO, EQUALS_ZERO, NATURAL)


@dataclass(frozen=True)
class ConstraintResult:
    """One exact check: ``value`` compared against zero (or membership in N)."""
    constraint_id: str
    controls: str
    value: sp.Rational
    relation: str = LESS_THAN_ZERO
    eps_coefficient: Optional[sp.Rational] = None

    @property
    def passed(self) -> bool:
        if self.relation == LESS_THAN_ZERO:
            return bool(self.value < 0)
        if self.relation == AT_MOST_ZERO:
            return bool(self.value <= 0)
        if self.relation == EQUALS_ZERO:
            return bool(self.value == 0)
        return bool(self.value.is_integer and self.value > 0)

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.constraint_id,
            'controls': self.controls,
            'value': format_exact(self.value),
            'relation': self.relation,
            'eps_coefficient': None if self.eps_coefficient is None else format_exact(self.eps_coefficient),
            'status': self.status,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConstraintResult":
        coefficient = data.get('eps_coefficient')
        return cls(
            constraint_id=data['id'],
            controls=data.get('controls', ''),
            value=parse_exponent(data['value']),
            relation=data.get('relation', LESS_THAN_ZERO),
            eps_coefficient=None if coefficient is None else parse_exponent(coefficient),
        )


def _a1_expressions() -> Dict[str, Dict[str, Any]]:
    x = scheme_exponents("A1")
    r_perp, r_par, mu, tau, sigma = x['r_perp'], x['r_par'], x['mu'], x['tau'], x['sigma']
    return {
        'perturbation_integrability': {
            'controls': "principal part in L^gamma_t W^{s,p}_x",
            'expr': S + (2 * INV_P - 1) * r_perp + (INV_P - sp.Rational(1, 2)) * r_par
                    + (sp.Rational(1, 2) - INV_GAMMA) * tau,
        },
        'time_derivative_error': {
            'controls': "time derivative of the principal part",
            'expr': mu + 2 * r_perp - r_par / 2 - tau / 2,
        },
        'hyperdissipation_principal': {
            'controls': "hyperdissipation of the principal part",
            'expr': 2 * ALPHA - 1 + r_perp + r_par / 2 - tau / 2,
        },
        'hyperdissipation_temporal': {
            'controls': "hyperdissipation of the temporal corrector",
            'expr': 2 * ALPHA - 1 - mu,
        },
        'oscillation_spatial': {
            'controls': "spatial oscillation error",
            'expr': -1 - r_perp,
        },
        'oscillation_temporal': {
            'controls': "oscillation error of the temporal corrector",
            'expr': -mu + sigma + tau,
        },
        'combined_integrability': {
            'controls': "L^gamma_t W^{s,p}_x bound with a 10 epsilon reserve",
            'expr': S + 2 * ALPHA - 1 - 3 * INV_P - (4 * ALPHA - 5) * INV_GAMMA
                    + EPS * (2 + 8 * INV_P - 11 * INV_GAMMA) + 10 * EPS,
        },
    }


def _a2_expressions() -> Dict[str, Dict[str, Any]]:
    x = scheme_exponents("A2")
    r_perp, tau, sigma = x['r_perp'], x['tau'], x['sigma']
    return {
        'perturbation_integrability': {
            'controls': "principal part in L^gamma_t W^{s,p}_x",
            'expr': S + (2 * INV_P - 1) * r_perp + (sp.Rational(1, 2) - INV_GAMMA) * tau,
        },
        'time_derivative_error': {
            'controls': "time derivative of the principal part",
            'expr': sigma - 1 + r_perp + tau / 2,
        },
        'hyperdissipation_principal': {
            'controls': "hyperdissipation of the principal part",
            'expr': 2 * ALPHA - 1 + r_perp - tau / 2,
        },
        'oscillation_spatial': {
            'controls': "spatial oscillation error",
            'expr': -1 - r_perp,
        },
        'combined_integrability': {
            'controls': "L^gamma_t W^{s,p}_x bound with a 10 epsilon reserve",
            'expr': S + 2 * ALPHA - 1 - 2 * ALPHA * INV_GAMMA - (2 * ALPHA - 2) * INV_P
                    + EPS * (9 - 16 * INV_P) + 10 * EPS,
        },
    }


def constraint_expressions(regime: str) -> Dict[str, Dict[str, Any]]:
    """Symbolic lambda-exponent of every constraint of a regime."""
    if regime == "A1":
        return _a1_expressions()
    if regime == "A2":
        return _a2_expressions()
    raise InvalidParameterError(f"Unknown regime: {regime}")


def rho(regime: str, epsilon: sp.Rational, alpha: sp.Rational) -> sp.Rational:
    """Integrability exponent of the Reynolds stress estimates."""
    if regime == "A1":
        return (3 - 8 * epsilon) / (3 - 9 * epsilon)
    return (2 * alpha - 2 + 16 * epsilon) / (2 * alpha - 2 + 14 * epsilon)


def rho_identity(regime: str, epsilon: sp.Rational, alpha: sp.Rational) -> sp.Rational:
    """
    Defect of the identity fixing rho (zero when it holds).

    A1: (3 - 8 eps)(1 - 1/rho) = eps.
    A2: r_perp^(2/rho - 1) = lambda^(1 - alpha - 6 eps), compared as exponents.
    """
    value = rho(regime, epsilon, alpha)
    if regime == "A1":
        return (3 - 8 * epsilon) * (1 - 1 / value) - epsilon
    r_perp = scheme_exponents("A2")['r_perp'].subs({ALPHA: alpha, EPS: epsilon})
    return sp.Rational(r_perp * (2 / value - 1) - (1 - alpha - 6 * epsilon))


def evaluate_constraints(scheme: SchemeParams, e: Exponents) -> List[ConstraintResult]:
    """Substitute the exponents and epsilon into every regime constraint."""
    values = e.substitution()
    results = []
    for constraint_id, entry in constraint_expressions(scheme.regime).items():
        expr = sp.expand(entry['expr'].subs(values))
        value = sp.Rational(expr.subs(EPS, scheme.epsilon))
        coefficient = sp.Rational(expr.coeff(EPS, 1))
        results.append(ConstraintResult(constraint_id, entry['controls'], value, LESS_THAN_ZERO, coefficient))
        logger.debug("%s %s: %s", scheme.regime, constraint_id, value)
    return results


def side_conditions(scheme: SchemeParams, e: Exponents) -> List[ConstraintResult]:
    """Admissibility of (epsilon, b, beta, epsilon_R, eta) and the rho identity."""
    eps = scheme.epsilon
    value = rho(scheme.regime, eps, e.alpha)
    return [
        ConstraintResult('epsilon_bound', "epsilon below (1/20) min{2 - alpha, regime margin}",
                         eps - epsilon_bound(e, scheme.regime), AT_MOST_ZERO),
        ConstraintResult('b_integrality', "integrality side condition on b and epsilon",
                         integrality_value(e, scheme.b, eps, scheme.regime), NATURAL),
        ConstraintResult('b_even', "b is even", sp.Rational(scheme.b, 2), NATURAL),
        ConstraintResult('b_lower_bound', "b > 1000/(epsilon eta*)",
                         b_lower_bound(eps, scheme.eta_star) - scheme.b, LESS_THAN_ZERO),
        ConstraintResult('beta_range', "beta < 1/(100 b^2)",
                         scheme.beta - sp.Rational(1, 100 * scheme.b ** 2), LESS_THAN_ZERO),
        ConstraintResult('epsilon_r_range', "epsilon_R < epsilon/10",
                         scheme.epsilon_r - eps / 10, LESS_THAN_ZERO),
        ConstraintResult('eta_range', "eta*/2 < eta < eta*",
                         sp.Max(scheme.eta_star / 2 - scheme.eta, scheme.eta - scheme.eta_star),
                         LESS_THAN_ZERO),
        ConstraintResult('rho_range', "1 < rho < 2",
                         sp.Max(1 - value, value - 2), LESS_THAN_ZERO),
        ConstraintResult('rho_identity', "identity fixing rho",
                         rho_identity(scheme.regime, eps, e.alpha), EQUALS_ZERO),
    ]


def check_constraints(scheme: SchemeParams, e: Exponents) -> List[ConstraintResult]:
    return evaluate_constraints(scheme, e) + side_conditions(scheme, e)
