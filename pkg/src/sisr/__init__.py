"""Sparse isotonic Shapley regression.

Attributions for non-additive coalition games: payoffs are mapped through a
learned monotone transform under which a sparse additive model fits best.
"""
__version__ = "0.1.0"

from ._exceptions import (
    CapacityError,
    ConfigurationError,
    DataError,
    DegenerateThresholdError,
    DomainError,
    FlatPayoffError,
    NonInvertibleTransformError,
    NumericalError,
    SISRError,
    StructuralError,
    UnsupportedInputError,
)
from .coalitions import (
    CoalitionMask,
    PayoffTable,
    WeightVector,
    baseline_adjust,
    enumerate_masks,
    incidence_matrix,
    kernel_weights_by_size,
    sample_coalitions,
    shapley_kernel_weight,
    weight_vector,
)
from .engine import (
    ComparisonReport,
    RicResult,
    SisrSolution,
    SolveOptions,
    conventional_and_calibrated,
    inverse_transform,
    recover_beta,
    ric_select,
    solve,
)
from .estimators import ShapleyRegression, SparseIsotonicShapley
from .isotonic import IsotonicFit, OrderPlan, build_order, isotonic_fit, pool_adjacent_violators
from .shapley import ShapleyVector, exact_shapley, wls_shapley
from .sparse import (
    StepContext,
    gamma_solve,
    gamma_step,
    hard_threshold,
    normalized_hard_threshold,
    objective,
    spectral_norm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
