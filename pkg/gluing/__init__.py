"""
Gluing stage: local solves of the hyperdissipative equations glued with a
partition of unity so that the Reynolds stress concentrates near finitely
many times, plus the manufactured stresses used to feed the iteration.
"""

from gluing.cover import CoverLevel, CoverReport, cover_report
from gluing.glue import GlueResult, glue, solve_all
from gluing.initial import initial_stress, nsr_defect, nsr_residual
from gluing.partition import PartitionOfUnity, Subdivision, subdivide
from gluing.run import GlueConfig, GlueStageReport, run_glue
from gluing.solver import EnergyReport, LocalSolution, energy_report, local_solve
from gluing.stability import StabilityReport, StabilitySweep, stability_sweep, verify_stability
from gluing.state import IterationState, stored_state, synthetic_state, well_prepared

__all__ = [
    "CoverLevel",
    "CoverReport",
    "cover_report",
    "GlueResult",
    "glue",
    "solve_all",
    "initial_stress",
    "nsr_defect",
    "nsr_residual",
    "PartitionOfUnity",
    "Subdivision",
    "subdivide",
    "GlueConfig",
    "GlueStageReport",
    "run_glue",
    "EnergyReport",
    "LocalSolution",
    "energy_report",
    "local_solve",
    "StabilityReport",
    "StabilitySweep",
    "stability_sweep",
    "verify_stability",
    "IterationState",
    "synthetic_state",
    "well_prepared",
]
