"""Exact certificates for randomized smoothing of sparse discrete data."""

from .certify import certify_l0, certify_point, certify_table, margin, max_radius_frontier, rho
from .confidence import binary_bounds, multiclass_bounds, two_stage_estimate
from .core import (
    BINARY_CLASS,
    MULTI_CLASS,
    CertError,
    CertResult,
    ClassBounds,
    NoiseSpec,
    RadiiSpec,
    Region,
    RegionTable,
    VoteRecord,
    sphere_radii,
    validate_noise_spec,
)
from .exactmath import PBParams, clopper_pearson_lower, clopper_pearson_upper, pb_pmf
from .regions import binary_regions, build_table, discrete_regions, joint_regions, special_regions

__version__ = "0.1.0"

__all__ = [
    "BINARY_CLASS", "MULTI_CLASS", "CertError", "CertResult", "ClassBounds", "NoiseSpec", "PBParams",
    "RadiiSpec", "Region", "RegionTable", "VoteRecord", "binary_bounds", "binary_regions", "build_table",
    "certify_l0", "certify_point", "certify_table", "clopper_pearson_lower", "clopper_pearson_upper",
    "discrete_regions", "joint_regions", "margin", "max_radius_frontier", "multiclass_bounds", "pb_pmf",
    "rho", "special_regions", "sphere_radii", "two_stage_estimate", "validate_noise_spec",
]
