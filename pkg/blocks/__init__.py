"""Spatial and temporal building blocks, their profiles, parameters and scaling sweeps."""
from blocks.jets import (
    SpatialBlock,
    build_block,
    build_blocks,
    check_resolution,
    intermittent_jet,
    jet_average,
    jet_correctors,
    mikado_flow,
    remove_parity_sums,
    required_resolution,
)
from blocks.params import BlockParams, block_exponents
from blocks.profiles import ProfileSet, chi_cutoff, make_profiles, smooth_step, smooth_step_rate
from blocks.scaling import (
    ScalingResult,
    scaling_table,
    verify_all_blocks,
    verify_block_scaling,
    verify_synthesized_blocks,
    write_scaling_csv,
)
from blocks.temporal import TemporalBlocks, TemporalSignals, temporal_blocks

__all__ = [
    "SpatialBlock",
    "build_block",
    "build_blocks",
    "check_resolution",
    "intermittent_jet",
    "jet_average",
    "jet_correctors",
    "mikado_flow",
    "remove_parity_sums",
    "required_resolution",
    "BlockParams",
    "block_exponents",
    "ProfileSet",
    "chi_cutoff",
    "make_profiles",
    "smooth_step",
    "smooth_step_rate",
    "ScalingResult",
    "scaling_table",
    "verify_all_blocks",
    "verify_block_scaling",
    "verify_synthesized_blocks",
    "write_scaling_csv",
    "TemporalBlocks",
    "TemporalSignals",
    "temporal_blocks",
]
