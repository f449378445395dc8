"""Synthetic payoff generators, regression payoffs, metrics and experiment drivers."""
from .generators import (
    SPARSE_TRANSFORMS,
    TRANSFORM_SCHEMES,
    GeneratorTruth,
    Transform,
    gen_max_payoffs,
    gen_sparse_payoffs,
    gen_transform_payoffs,
)
from .metrics import affinity, linearity_gap, support_recovery, timing_sweep
from .regression import RegressionDesign, gen_gaussian_design, pseudo_r2_payoffs, r2_payoffs

__all__ = [
    "GeneratorTruth",
    "RegressionDesign",
    "SPARSE_TRANSFORMS",
    "TRANSFORM_SCHEMES",
    "Transform",
    "affinity",
    "gen_gaussian_design",
    "gen_max_payoffs",
    "gen_sparse_payoffs",
    "gen_transform_payoffs",
    "linearity_gap",
    "pseudo_r2_payoffs",
    "r2_payoffs",
    "support_recovery",
    "timing_sweep",
]
