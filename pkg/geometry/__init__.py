"""Direction sets, the decomposition of matrices near the identity, and tube shifts."""
from geometry.directions import Direction, GeometrySet, assemble_geometry
from geometry.lemma import (
    build_axis_lambda,
    build_lambda,
    decompose_pointwise,
    estimate_epsilon_u,
    estimate_m_star,
    gamma_decompose,
    reconstruct,
    unspanned_part,
)
from geometry.shifts import choose_shifts, pair_separation, snap_scale, tube_overlap

__all__ = [
    "Direction",
    "GeometrySet",
    "assemble_geometry",
    "build_axis_lambda",
    "build_lambda",
    "decompose_pointwise",
    "estimate_epsilon_u",
    "estimate_m_star",
    "gamma_decompose",
    "reconstruct",
    "unspanned_part",
    "choose_shifts",
    "pair_separation",
    "snap_scale",
    "tube_overlap",
]
