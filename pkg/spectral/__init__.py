"""Periodic field arithmetic on the three-dimensional torus."""
from spectral.field import GridSpec, ModelParams, SpectralField, sum_fields
from spectral.operators import (
    differentiate,
    fractional_laplacian,
    freq_project,
    inverse_divergence,
    leray_project,
    lp_norm,
    mollify,
    semigroup_apply,
    spacetime_norm,
    time_derivative,
)
from spectral.snapshot import load_snapshot, save_snapshot

__all__ = [
    "GridSpec",
    "ModelParams",
    "SpectralField",
    "sum_fields",
    "differentiate",
    "fractional_laplacian",
    "freq_project",
    "inverse_divergence",
    "leray_project",
    "lp_norm",
    "mollify",
    "semigroup_apply",
    "spacetime_norm",
    "time_derivative",
    "load_snapshot",
    "save_snapshot",
]
