"""Amplitudes, perturbation pieces, their identities and the next-level Reynolds stress."""
from perturbation.amplitudes import AmplitudeInputs, Amplitudes, build_amplitudes, build_rho, temporal_cutoff
from perturbation.assemble import PerturbationSet, assemble_perturbation
from perturbation.decay import DecayReport, measure_decay
from perturbation.identities import (
    IdentityReport,
    verify_cancellation,
    verify_corrector_expansion,
    verify_divergence,
    verify_oscillation_identity,
    verify_temporal_identity,
)
from perturbation.reynolds import ReynoldsDecomp, ReynoldsReport, build_reynolds_next
from perturbation.stage import IterationReport, StageConfig, build_stage, iterate_once

__all__ = [
    "AmplitudeInputs",
    "Amplitudes",
    "build_amplitudes",
    "build_rho",
    "temporal_cutoff",
    "PerturbationSet",
    "assemble_perturbation",
    "DecayReport",
    "measure_decay",
    "IdentityReport",
    "verify_cancellation",
    "verify_corrector_expansion",
    "verify_divergence",
    "verify_oscillation_identity",
    "verify_temporal_identity",
    "ReynoldsDecomp",
    "ReynoldsReport",
    "build_reynolds_next",
    "IterationReport",
    "StageConfig",
    "build_stage",
    "iterate_once",
]
