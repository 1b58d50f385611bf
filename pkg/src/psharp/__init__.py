"""Component-substitution and high-pass-filter pansharpening with a three-resolution validation harness."""

from .errors import InvalidArgument, InvalidInput, PsharpError
from .filters import FilterSpec, degrade, lowpass, realize_kernel
from .fusion import (
    CORRECTIONS,
    METHODS,
    FusionConfig,
    FusionResult,
    applicable,
    fuse,
    fuse_detailed,
    parse_correction,
    parse_method,
)
from .metrics import PROTOCOLS, QualityRecord, ergas, pearson, rmse, sam
from .raster import Raster, band_stats, decimate, shift_image, upsample_bicubic
from .spectral import SensorProfile, bvls, estimate_shift, estimate_weights, get_profile, intensity
from .validate import cross_scale_correlation, make_synthetic, run_matrix

__version__ = "0.1.0"

__all__ = [
    "CORRECTIONS", "METHODS", "PROTOCOLS",
    "FilterSpec", "FusionConfig", "FusionResult", "InvalidArgument", "InvalidInput",
    "PsharpError", "QualityRecord", "Raster", "SensorProfile",
    "applicable", "band_stats", "bvls", "cross_scale_correlation", "decimate", "degrade",
    "ergas", "estimate_shift", "estimate_weights", "fuse", "fuse_detailed", "get_profile",
    "intensity", "lowpass", "make_synthetic", "parse_correction", "parse_method", "pearson",
    "realize_kernel", "rmse", "run_matrix", "sam", "shift_image", "upsample_bicubic",
]
