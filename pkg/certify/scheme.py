"""
Scheme parameters: epsilon, b, beta, epsilon_R, eta and the frequencies
lambda_q = a^(b^q), delta_q = lambda_q^(-2 beta).
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import sympy as sp

from certify.exponents import Exponents, format_exact, parse_exponent
from certify.regimes import A1_MIN_ALPHA, a1_margin, a2_margin
from errors import InfeasibleB, InvalidParameterError, OutOfDomainError

logger = logging.getLogger(__name__)

# Rounds of the b <-> epsilon fixpoint before the closed-form fallback
B_FIXPOINT_ROUNDS = 3
B_CONSTANT = 1000


def epsilon_bound(e: Exponents, regime: str) -> sp.Rational:
    """(1/20) min{2 - alpha, regime margin}, the upper bound on epsilon."""
    if regime == "A1":
        if e.alpha < A1_MIN_ALPHA:
            raise OutOfDomainError("A1 is defined for alpha in [5/4, 2)")
        margin = a1_margin(e)
    elif regime == "A2":
        margin = a2_margin(e)
    else:
        raise InvalidParameterError(f"Unknown regime: {regime}")
    return sp.Min(2 - e.alpha, margin) / 20


def pick_epsilon(e: Exponents, b: int, regime: str = "A1") -> sp.Rational:
    """
    Largest epsilon below the bound meeting the integrality side condition.

    A1: b epsilon in N. A2: b (2 - alpha - 8 epsilon) in N.

    Raises:
        InfeasibleB: No positive epsilon is admissible for this b
    """
    if b < 1:
        raise InvalidParameterError(f"b must be a positive integer, got {b}")
    bound = epsilon_bound(e, regime)
    if bound <= 0:
        raise InfeasibleB(f"epsilon bound {format_exact(bound)} is not positive ({regime} fails)")
    b = sp.Integer(b)
    if regime == "A1":
        epsilon = sp.floor(b * bound) / b
    else:
        top = b * (2 - e.alpha)
        n = sp.ceiling(top - 8 * b * bound)
        epsilon = (top - n) / (8 * b)
    epsilon = sp.Rational(epsilon)
    if epsilon <= 0:
        raise InfeasibleB(
            f"No positive epsilon <= {format_exact(bound)} satisfies the {regime} "
            f"integrality condition for b = {b}"
        )
    return epsilon


def integrality_value(e: Exponents, b: int, epsilon: sp.Rational, regime: str) -> sp.Rational:
    """The quantity that must be a natural number (b eps, or b (2 - alpha - 8 eps))."""
    if regime == "A1":
        return b * epsilon
    return b * (2 - e.alpha - 8 * epsilon)


def even_above(x: sp.Rational) -> int:
    """Smallest even integer strictly greater than x."""
    n = int(sp.floor(x)) + 1
    return n if n % 2 == 0 else n + 1


def b_lower_bound(epsilon: sp.Rational, eta_star: sp.Rational) -> sp.Rational:
    return B_CONSTANT / (epsilon * eta_star)


def choose_b(e: Exponents, eta_star: sp.Rational, regime: str) -> Tuple[int, sp.Rational, int]:
    """
    Even b > 1000/(epsilon eta*) from the fixpoint
    b -> pick_epsilon(b) -> even_above(1000/(epsilon eta*)).

    Returns:
        (b, epsilon, rounds); rounds is B_FIXPOINT_ROUNDS + 1 when the
        closed-form sufficient b was used instead.
    """
    bound = epsilon_bound(e, regime)
    if bound <= 0:
        raise InfeasibleB(f"epsilon bound {format_exact(bound)} is not positive ({regime} fails)")
    b = even_above(b_lower_bound(bound, eta_star))
    for rounds in range(1, B_FIXPOINT_ROUNDS + 1):
        epsilon = pick_epsilon(e, b, regime)
        if b > b_lower_bound(epsilon, eta_star):
            logger.debug("b fixpoint reached after %d rounds: b=%d", rounds, b)
            return b, epsilon, rounds
        b = even_above(b_lower_bound(epsilon, eta_star))

    # b epsilon > 1000/eta* follows from b bound >= K (A1) or 8 b bound > 8000/eta* + 1 (A2)
    threshold = B_CONSTANT / eta_star
    if regime == "A1":
        b = int(sp.ceiling((sp.floor(threshold) + 1) / bound))
        b += b % 2
    else:
        b = even_above((8 * threshold + 1) / (8 * bound))
    epsilon = pick_epsilon(e, b, regime)
    logger.info("b fixpoint did not settle in %d rounds; using b=%d", B_FIXPOINT_ROUNDS, b)
    return b, epsilon, B_FIXPOINT_ROUNDS + 1


@dataclass(frozen=True)
class SchemeParams:
    """
    Exact parameters of the iteration.

    Defaults follow beta = 1/(200 b^2), epsilon_R = epsilon/20 and
    eta = 3 eta*/4. ``a`` is recorded as given; no lower bound a_0 is checked.
    """
    a: int
    b: int
    epsilon: sp.Rational
    beta: sp.Rational
    epsilon_r: sp.Rational
    eta: sp.Rational
    eta_star: sp.Rational
    regime: str
    b_rounds: int = 0

    @classmethod
    def build(
        cls,
        e: Exponents,
        regime: str,
        eta_star: Any = "1/2",
        a: int = 2,
        b: Optional[int] = None,
    ) -> "SchemeParams":
        """
        Choose epsilon (and b when not given) and derive the rest.

        Raises:
            InvalidParameterError: a < 2, or eta* outside (0, 1)
            InfeasibleB: No positive epsilon exists for the given b
        """
        eta_star = parse_exponent(eta_star)
        if not (0 < eta_star < 1):
            raise InvalidParameterError(f"eta* must lie in (0, 1), got {format_exact(eta_star)}")
        if int(a) < 2:
            raise InvalidParameterError(f"a must be an integer >= 2, got {a}")
        if b is None:
            b, epsilon, rounds = choose_b(e, eta_star, regime)
        else:
            epsilon, rounds = pick_epsilon(e, int(b), regime), 0
        b = int(b)
        return cls(
            a=int(a),
            b=b,
            epsilon=epsilon,
            beta=sp.Rational(1, 200 * b * b),
            epsilon_r=epsilon / 20,
            eta=sp.Rational(3, 4) * eta_star,
            eta_star=eta_star,
            regime=regime,
            b_rounds=rounds,
        )

    def lambda_q(self, q: int) -> sp.Pow:
        """a^(b^q), kept unevaluated."""
        return sp.Pow(sp.Integer(self.a), sp.Integer(self.b) ** q, evaluate=False)

    def delta_q(self, q: int) -> sp.Pow:
        """lambda_q^(-2 beta), kept unevaluated."""
        return sp.Pow(self.lambda_q(q), -2 * self.beta, evaluate=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'regime': self.regime,
            'a': self.a,
            'b': self.b,
            'epsilon': format_exact(self.epsilon),
            'beta': format_exact(self.beta),
            'epsilon_r': format_exact(self.epsilon_r),
            'eta': format_exact(self.eta),
            'eta_star': format_exact(self.eta_star),
            'b_rounds': self.b_rounds,
            'lambda_1': str(self.lambda_q(1)),
            'delta_1': str(self.delta_q(1)),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SchemeParams":
        return cls(
            a=int(data['a']),
            b=int(data['b']),
            epsilon=parse_exponent(data['epsilon']),
            beta=parse_exponent(data['beta']),
            epsilon_r=parse_exponent(data['epsilon_r']),
            eta=parse_exponent(data['eta']),
            eta_star=parse_exponent(data['eta_star']),
            regime=data['regime'],
            b_rounds=int(data.get('b_rounds', 0)),
        )
