"""
Experiment harness: slope fitting, the product and high-frequency lemma
experiments, and the staged pipeline.

``harness.identities``, ``harness.experiment`` and ``harness.pipeline`` are
imported explicitly by the CLI, since they depend on every other package
and the block and perturbation packages import the slope fitter from here.
"""
from harness.lemmas import (
    LemmaReport,
    decorrelation_test,
    modulated_amplitude,
    mollifier_rate_test,
    packet_sum,
    power_gap,
    saturating_pair,
    semigroup_smoothing_test,
    stationary_phase_lhs,
    stationary_phase_test,
)
from harness.slopes import SlopeReport, fit_loglog_slope

__all__ = [
    "LemmaReport",
    "SlopeReport",
    "decorrelation_test",
    "fit_loglog_slope",
    "modulated_amplitude",
    "mollifier_rate_test",
    "packet_sum",
    "power_gap",
    "saturating_pair",
    "semigroup_smoothing_test",
    "stationary_phase_lhs",
    "stationary_phase_test",
]
