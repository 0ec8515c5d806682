"""
Regime certificates.

A certificate records the input exponents, both regime verdicts, the
chosen scheme parameters and every constraint as an exact rational. It
serializes deterministically, and :func:`verify_certificate` re-derives
every value from the recorded inputs.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from certify.constraints import ConstraintResult, check_constraints
from certify.exponents import Exponents, format_exact
from certify.regimes import RegimeVerdict, regime_verdicts, select_regime
from certify.scheme import SchemeParams
from config import FAIL, PASS, get_config
from errors import InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass
class Certificate:
    """Outcome of certifying one exponent tuple."""
    exponents: Exponents
    verdicts: List[RegimeVerdict]
    regime: Optional[str] = None
    scheme: Optional[SchemeParams] = None
    constraints: List[ConstraintResult] = field(default_factory=list)
    failure: str = ""

    @property
    def passed(self) -> bool:
        return self.regime is not None and bool(self.constraints) and all(c.passed for c in self.constraints)

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    @property
    def failed_constraints(self) -> List[str]:
        return [c.constraint_id for c in self.constraints if not c.passed]

    def monotonicity(self) -> Dict[str, str]:
        """Sign of each scheme constraint's epsilon coefficient."""
        signs = {}
        for c in self.constraints:
            if c.eps_coefficient is None:
                continue
            signs[c.constraint_id] = "+" if c.eps_coefficient > 0 else ("-" if c.eps_coefficient < 0 else "0")
        return signs

    def to_dict(self) -> Dict[str, Any]:
        e = self.exponents
        return {
            'exponents': e.to_dict(),
            'critical_s': format_exact(e.critical_s()),
            'distance_to_critical_line': format_exact(e.critical_s() - e.s),
            'regimes': [v.to_dict() for v in self.verdicts],
            'regime': self.regime,
            'scheme': None if self.scheme is None else self.scheme.to_dict(),
            'constraints': [c.to_dict() for c in self.constraints],
            'monotonicity': self.monotonicity(),
            'failure': self.failure,
            'status': self.status,
        }

    def to_json(self) -> str:
        """Byte-identical for identical inputs."""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n", encoding='utf-8')
        return path

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Certificate":
        e = Exponents.from_dict(data['exponents'])
        verdicts = regime_verdicts(e)
        scheme = None if data.get('scheme') is None else SchemeParams.from_dict(data['scheme'])
        return cls(
            exponents=e,
            verdicts=verdicts,
            regime=data.get('regime'),
            scheme=scheme,
            constraints=[ConstraintResult.from_dict(c) for c in data.get('constraints', [])],
            failure=data.get('failure', ''),
        )


def _certificate_for(scheme: SchemeParams, e: Exponents) -> Certificate:
    return Certificate(
        exponents=e,
        verdicts=regime_verdicts(e),
        regime=scheme.regime,
        scheme=scheme,
        constraints=check_constraints(scheme, e),
    )


def check_constraints_A1(scheme: SchemeParams, e: Exponents) -> Certificate:
    """Every A1 constraint after substituting the jet parameter powers."""
    if scheme.regime != "A1":
        raise InvalidParameterError(f"Scheme was built for {scheme.regime}, not A1")
    return _certificate_for(scheme, e)


def check_constraints_A2(scheme: SchemeParams, e: Exponents) -> Certificate:
    """Every A2 constraint after substituting the Mikado parameter powers."""
    if scheme.regime != "A2":
        raise InvalidParameterError(f"Scheme was built for {scheme.regime}, not A2")
    return _certificate_for(scheme, e)


def certify(
    e: Exponents,
    eta_star: Any = None,
    a: Optional[int] = None,
    b: Optional[int] = None,
    regime: Optional[str] = None,
) -> Certificate:
    """
    Gate on regime membership, choose the scheme parameters and check
    every constraint.

    Args:
        e: Target exponents
        eta_star: Defaults to the configured eta*
        a: Base of lambda_q; defaults to the configured a (not validated against a_0)
        b: Fixes b instead of running the b/epsilon fixpoint
        regime: Forces "A1" or "A2"; by default A1 is preferred when both hold

    Raises:
        InfeasibleB: A fixed b admits no positive epsilon
    """
    config = get_config()
    eta_star = config.get("eta_star") if eta_star is None else eta_star
    a = config.get("a") if a is None else a

    verdicts = regime_verdicts(e)
    if regime is None:
        regime = select_regime(verdicts)
    elif regime not in ("A1", "A2"):
        raise InvalidParameterError(f"Unknown regime: {regime}")
    else:
        forced = next(v for v in verdicts if v.regime == regime)
        if not forced.member:
            regime = None

    if regime is None:
        logger.info("Exponents %s lie in neither regime", e.to_dict())
        return Certificate(exponents=e, verdicts=verdicts, failure="regime gate")

    scheme = SchemeParams.build(e, regime, eta_star=eta_star, a=a, b=b)
    certificate = _certificate_for(scheme, e)
    if not certificate.passed:
        certificate.failure = "constraints: " + ", ".join(certificate.failed_constraints)
    logger.info("Certified %s in %s: epsilon=%s b=%d status=%s",
                e.to_dict(), regime, scheme.epsilon, scheme.b, certificate.status)
    return certificate


def verify_certificate(certificate: Certificate) -> bool:
    """
    Re-derive every constraint value from the recorded exponents and scheme.

    True when the recomputed rationals and verdicts match the recorded ones.
    """
    if certificate.scheme is None:
        return not certificate.constraints
    recomputed = check_constraints(certificate.scheme, certificate.exponents)
    if len(recomputed) != len(certificate.constraints):
        return False
    for fresh, recorded in zip(recomputed, certificate.constraints):
        if fresh.constraint_id != recorded.constraint_id or fresh.value != recorded.value:
            logger.warning("Constraint %s does not re-derive: %s != %s",
                           recorded.constraint_id, fresh.value, recorded.value)
            return False
    return True
