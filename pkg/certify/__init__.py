"""Exact certification of regime membership, scheme parameters and exponent constraints."""
from certify.certificate import (
    Certificate,
    certify,
    check_constraints_A1,
    check_constraints_A2,
    verify_certificate,
)
from certify.constraints import ConstraintResult, constraint_expressions, rho, rho_identity
from certify.exponents import Exponents, parse_exponent, scheme_exponents
from certify.regimes import RegimeVerdict, in_A1, in_A2
from certify.scheme import SchemeParams, choose_b, epsilon_bound, pick_epsilon

__all__ = [
    "Certificate",
    "certify",
    "check_constraints_A1",
    "check_constraints_A2",
    "verify_certificate",
    "ConstraintResult",
    "constraint_expressions",
    "rho",
    "rho_identity",
    "Exponents",
    "parse_exponent",
    "scheme_exponents",
    "RegimeVerdict",
    "in_A1",
    "in_A2",
    "SchemeParams",
    "choose_b",
    "epsilon_bound",
    "pick_epsilon",
]
