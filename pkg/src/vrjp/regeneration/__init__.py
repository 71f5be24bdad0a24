"""Cut-level regeneration: blocks, speed/variance estimation, diagnostics."""

from .cuts import DEFAULT_BUFFER, CutRecord, RegenBlock, block_arrays, blocks, cut_paths, detect_cuts, verify_cut
from .diagnostics import (
    AD_CRITICAL_1PCT,
    CltReport,
    ReturnEstimate,
    TailPoint,
    anderson_darling_normal,
    clt_diagnostic,
    first_cut_level,
    l1_tail,
    return_probability,
    return_probability_from_flags,
    returned,
    returned_in_two_jumps,
)
from .estimator import CutDetector, RegenerationSpeedEstimator, SpeedEstimate, estimate, naive_speed, residuals

__all__ = [
    "AD_CRITICAL_1PCT",
    "DEFAULT_BUFFER",
    "CltReport",
    "CutDetector",
    "CutRecord",
    "RegenBlock",
    "RegenerationSpeedEstimator",
    "ReturnEstimate",
    "SpeedEstimate",
    "TailPoint",
    "anderson_darling_normal",
    "block_arrays",
    "blocks",
    "clt_diagnostic",
    "cut_paths",
    "detect_cuts",
    "estimate",
    "first_cut_level",
    "l1_tail",
    "naive_speed",
    "residuals",
    "return_probability",
    "return_probability_from_flags",
    "returned",
    "returned_in_two_jumps",
    "verify_cut",
]
