"""
Identity suites: Fourier operators on randomized fields, the building-block
identities and the perturbation identities of one manufactured stage.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from config import FAIL, PASS, tolerance
from errors import InvalidParameterError
from perturbation.identities import IdentityReport, verify_all
from perturbation.stage import Stage, StageConfig, build_stage
from spectral.field import GridSpec
from spectral.operators import differentiate, inverse_divergence, leray_project, relative_residual, trace
from spectral.sampling import random_field

logger = logging.getLogger(__name__)


def operator_identities(grid: GridSpec, count: int = 10, seed: int = 0) -> List[IdentityReport]:
    """
    div R v = v, R v symmetric and trace free, P_H idempotent, P_H grad = 0
    and div P_H v = 0, each the worst relative residual over ``count``
    seeded random fields.
    """
    if count < 1:
        raise InvalidParameterError(f"Need at least one random field, got {count}")
    rng = np.random.default_rng(seed)
    band = max(1, grid.n // 4)
    worst: Dict[str, float] = {
        'div_inverse_divergence': 0.0,
        'inverse_divergence_symmetric': 0.0,
        'inverse_divergence_trace_free': 0.0,
        'leray_idempotent': 0.0,
        'leray_annihilates_gradients': 0.0,
        'leray_divergence_free': 0.0,
    }
    for _ in range(count):
        v = random_field(grid, 1, band=band, rng=rng)
        potential = random_field(grid, 0, band=band, rng=rng)
        R = inverse_divergence(v)
        P = leray_project(v)
        gradient = differentiate(potential, "grad")
        residuals = {
            'div_inverse_divergence': relative_residual(differentiate(R, "div") - v, v),
            'inverse_divergence_symmetric': relative_residual(R - R.transpose(), R),
            'inverse_divergence_trace_free': relative_residual(trace(R), R),
            'leray_idempotent': relative_residual(leray_project(P) - P, P),
            'leray_annihilates_gradients': relative_residual(leray_project(gradient), gradient),
            'leray_divergence_free': relative_residual(differentiate(P, "div"), differentiate(P, "grad")),
        }
        for name, value in residuals.items():
            worst[name] = max(worst[name], value)
    tol = tolerance("operator")
    reports = [IdentityReport(name, value, tol) for name, value in worst.items()]
    logger.info("Operator identities on %d fields at N=%d: worst %.3e", count, grid.n, max(worst.values()))
    return reports


def block_identities(stage: Stage, t: float = 0.0) -> List[IdentityReport]:
    """Every block identity of a stage at time t, worst residual per identity."""
    worst: Dict[str, float] = {}
    for block in stage.blocks:
        for name, value in block.identities(t).items():
            worst[name] = max(worst.get(name, 0.0), value)
    tol = tolerance("spectral")
    return [IdentityReport(f"block_{name}", value, tol) for name, value in worst.items()]


@dataclass
class IdentitySuite:
    """Operator, block and perturbation identity reports."""
    operators: List[IdentityReport] = field(default_factory=list)
    blocks: List[IdentityReport] = field(default_factory=list)
    perturbation: List[IdentityReport] = field(default_factory=list)
    stage: Optional[Dict[str, Any]] = None

    @property
    def reports(self) -> List[IdentityReport]:
        return self.operators + self.blocks + self.perturbation

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {'group': group, 'identity': r.name, 'residual': r.residual, 'tolerance': r.tolerance,
             'status': r.status}
            for group, items in (('operators', self.operators), ('blocks', self.blocks),
                                 ('perturbation', self.perturbation))
            for r in items
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'stage': self.stage,
            'operators': [r.to_dict() for r in self.operators],
            'blocks': [r.to_dict() for r in self.blocks],
            'perturbation': [r.to_dict() for r in self.perturbation],
            'status': self.status,
        }


def identity_suite(
    config: StageConfig,
    operator_grid: Optional[GridSpec] = None,
    count: int = 10,
) -> IdentitySuite:
    """Run the operator suite, then build one stage and check its blocks and perturbation."""
    grid = operator_grid or GridSpec(16)
    suite = IdentitySuite(operators=operator_identities(grid, count, config.seed))
    stage = build_stage(config)
    suite.blocks = block_identities(stage)
    suite.perturbation = verify_all(stage.perturbation, stage.stress, stage.temporal, stage.geom)
    suite.stage = {'config': config.to_dict(), 'grid': stage.grid.to_dict(), 'params': stage.params.to_dict()}
    logger.info("Identity suite: %s", suite.status)
    return suite
