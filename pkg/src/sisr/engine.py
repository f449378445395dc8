"""Alternating solver for sparse isotonic Shapley regression.

The solver alternates two exact block updates of the weighted loss
``0.5 (t - Z gamma)' W (t - Z gamma)``:

* ``gamma`` (sparse, unit norm) by thresholded surrogate descent at fixed ``t``;
* ``t`` (monotone in the payoffs) by weighted isotonic regression at fixed
  ``Z gamma``.

Original-scale attributions are then read off the fitted monotone map by
inverse interpolation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._exceptions import (
    DomainError,
    FlatPayoffError,
    NonInvertibleTransformError,
    NumericalError,
    StructuralError,
)
from .coalitions import DEFAULT_INFINITE_MULTIPLIER, PayoffTable, baseline_adjust, weight_vector
from .isotonic import build_order, isotonic_fit
from .shapley import ShapleyVector, exact_shapley, wls_shapley
from .sparse import (
    DEFAULT_INNER_TOL,
    DEFAULT_MAX_INNER,
    DEFAULT_RHO_INFLATION,
    StepContext,
    gamma_solve,
)

logger = logging.getLogger(__name__)

RIC_FORMULA = "RIC(s) = 2*L(s)/sigma2 + 2*s*log(p); sigma2 = 2*L(s_max)/(N - s_max)"


@dataclass(frozen=True)
class SolveOptions:
    """Tuning knobs of :func:`solve`.

    ``sparsity=None`` means no sparsity constraint (``s = p``).  With
    ``normalize=True`` payoffs are rescaled to max-abs 1 before the initial
    ``t = init_scale * nu``, which makes the result invariant to positive
    rescaling of the payoffs.
    """

    sparsity: int | None = None
    outer_tol: float = 1e-9
    max_outer: int = 500
    inner_tol: float = DEFAULT_INNER_TOL
    max_inner: int = DEFAULT_MAX_INNER
    infinite_multiplier: float = DEFAULT_INFINITE_MULTIPLIER
    rho_inflation: float = DEFAULT_RHO_INFLATION
    init_scale: float = 1e4
    normalize: bool = True

    def __post_init__(self):
        for name in ("outer_tol", "inner_tol", "rho_inflation", "init_scale"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise DomainError("iteration limits must be >= 1")
        if self.sparsity is not None and self.sparsity < 1:
            raise DomainError("sparsity must be >= 1")
        if not self.infinite_multiplier >= 1:
            raise DomainError("infinite_multiplier must be >= 1")

    def resolve_sparsity(self, p: int) -> int:
        s = p if self.sparsity is None else int(self.sparsity)
        if not 1 <= s <= p:
            raise DomainError(f"sparsity s={s} outside 1..{p}")
        return s

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SisrSolution:
    """Result of :func:`solve`.

    Attributes
    ----------
    gamma : ndarray
        Sparse unit-norm attributions on the transformed scale.
    nu, t : ndarray
        Transform samples ``(nu_i, t_i)`` sorted by ``nu`` (baseline-adjusted,
        original units).
    beta : ndarray
        Attributions mapped back to the payoff scale; zero off the support.
    objective : float
        Final weighted loss.
    history : list of float
        Loss after every outer iteration.
    """

    p: int
    s: int
    gamma: np.ndarray
    nu: np.ndarray
    t: np.ndarray
    beta: np.ndarray
    objective: float
    outer_iterations: int
    inner_iterations: int
    converged: bool
    baseline: float = 0.0
    history: list[float] = field(default_factory=list)
    t_entries: np.ndarray | None = None  # t aligned with the table's entries

    @property
    def support(self) -> np.ndarray:
        """1-based ids of the features with nonzero attribution."""
        return np.flatnonzero(self.gamma) + 1

    @property
    def transform_samples(self) -> list[tuple[float, float]]:
        return list(zip(self.nu.tolist(), self.t.tolist()))


def _initial_scale(nu_max: float, options: SolveOptions) -> tuple[float, float]:
    """(divisor applied to nu, multiplier C for t0)."""
    if options.normalize:
        return nu_max, options.init_scale
    return 1.0, options.init_scale if nu_max <= 10 else 1.0


def solve(table: PayoffTable, options: SolveOptions | None = None) -> SisrSolution:
    """Fit sparse isotonic Shapley regression to a payoff table.

    Raises
    ------
    FlatPayoffError
        If every payoff equals the empty-coalition payoff.
    """
    options = options or SolveOptions()
    p = table.p
    if p < 2:
        raise DomainError("solve needs at least two features")
    s = options.resolve_sparsity(p)
    adjusted = baseline_adjust(table)
    nu = adjusted.values
    nu_max = float(np.abs(nu).max())
    if nu_max == 0.0:
        raise FlatPayoffError("all payoffs equal the empty-coalition payoff; nothing to attribute")

    divisor, C = _initial_scale(nu_max, options)
    nu_work = nu / divisor
    plan = build_order(nu_work)
    W = weight_vector(adjusted, options.infinite_multiplier)
    Z = adjusted.incidence

    t = C * nu_work
    ctx = StepContext.build(Z, W, t, options.rho_inflation)
    gamma = None
    history: list[float] = []
    inner_total = 0
    converged = False
    outer = 0
    for outer in range(1, options.max_outer + 1):
        inner = gamma_solve(
            None, ctx, s, init=gamma, tol=options.inner_tol, max_iter=options.max_inner
        )
        inner_total += inner.iterations
        if not np.any(inner.gamma):
            raise NumericalError("attribution update degenerated to zero; payoffs carry no signal")
        if not inner.converged:
            logger.debug("inner loop hit max_iter=%d at outer %d", options.max_inner, outer)
        gamma = inner.gamma
        fit = isotonic_fit(Z @ gamma, W, plan)
        t = fit.t
        history.append(fit.objective)
        # relative change, measured against the first objective once the loss
        # has collapsed toward zero (an exact fit would otherwise never stop)
        if len(history) > 1:
            prev, cur = history[-2], history[-1]
            scale = max(abs(prev), abs(history[0]), np.finfo(float).tiny)
            if abs(prev - cur) <= options.outer_tol * scale:
                converged = True
                break
        if fit.objective == 0.0:
            converged = True
            break
        ctx = ctx.with_target(t)

    perm = plan.permutation
    nu_sorted = nu[perm]
    t_sorted = t[perm]
    beta = recover_beta(gamma, nu_sorted, t_sorted)
    return SisrSolution(
        p=p,
        s=s,
        gamma=gamma,
        nu=nu_sorted,
        t=t_sorted,
        beta=beta,
        objective=history[-1],
        outer_iterations=outer,
        inner_iterations=inner_total,
        converged=converged,
        baseline=float(adjusted.meta.get("baseline", 0.0)),
        history=history,
        t_entries=t,
    )


def inverse_transform(query, nu, t) -> np.ndarray:
    """Evaluate the inverse of the fitted monotone map at ``query``.

    ``nu`` values sharing the same fitted ``t`` are averaged, the inverted
    pairs ``(t, nu)`` are interpolated piecewise linearly, and queries outside
    the fitted range follow the terminal segments.
    """
    nu = np.asarray(nu, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if nu.shape != t.shape or nu.ndim != 1 or nu.size == 0:
        raise StructuralError("transform samples must be two aligned non-empty vectors")
    knots, inv = np.unique(t, return_inverse=True)
    if knots.size < 2:
        raise NonInvertibleTransformError("fitted transform is constant; it has no inverse")
    vals = np.bincount(inv, weights=nu) / np.bincount(inv)
    q = np.asarray(query, dtype=np.float64)
    out = np.interp(q, knots, vals)
    lo = q < knots[0]
    hi = q > knots[-1]
    if np.any(lo):
        slope = (vals[1] - vals[0]) / (knots[1] - knots[0])
        out[lo] = vals[0] + slope * (q[lo] - knots[0])
    if np.any(hi):
        slope = (vals[-1] - vals[-2]) / (knots[-1] - knots[-2])
        out[hi] = vals[-1] + slope * (q[hi] - knots[-1])
    return out


def recover_beta(gamma, nu, t) -> np.ndarray:
    """Map transformed attributions back to the payoff scale; zeros stay exactly zero."""
    gamma = np.asarray(gamma, dtype=np.float64)
    beta = np.atleast_1d(inverse_transform(gamma, nu, t))
    beta[gamma == 0.0] = 0.0
    return beta


@dataclass
class RicResult:
    selected: int
    s_values: np.ndarray
    scores: np.ndarray
    objectives: np.ndarray
    sigma2: float
    solutions: dict[int, SisrSolution]
    formula: str = RIC_FORMULA

    @property
    def solution(self) -> SisrSolution:
        return self.solutions[self.selected]


def ric_select(
    table: PayoffTable, s_min: int, s_max: int, options: SolveOptions | None = None
) -> RicResult:
    """Choose the sparsity level by the risk inflation criterion.

    ``RIC(s) = 2 L(s) / sigma2 + 2 s log p`` where ``L`` is the fitted loss
    and ``sigma2 = 2 L(s_max) / (N - s_max)`` with ``N`` the number of
    finite-weight coalitions.  Ties go to the smaller ``s``.
    """
    options = options or SolveOptions()
    p = table.p
    if not 1 <= s_min <= s_max <= p:
        raise DomainError(f"need 1 <= s_min <= s_max <= p, got {s_min}..{s_max} with p={p}")
    n_finite = table.n - 2
    if s_max >= n_finite:
        raise DomainError(
            f"s_max={s_max} leaves no residual degrees of freedom ({n_finite} finite-weight coalitions)"
        )
    s_values = np.arange(s_min, s_max + 1)
    solutions = {}
    for s in s_values.tolist():
        solutions[s] = solve(table, replace(options, sparsity=s))
    objectives = np.array([solutions[s].objective for s in s_values.tolist()])
    sigma2 = 2.0 * objectives[-1] / (n_finite - s_max)
    floor = max(1e-12 * float(objectives.max()) / n_finite, np.finfo(float).tiny)
    sigma2 = max(sigma2, floor)
    scores = 2.0 * objectives / sigma2 + 2.0 * s_values * math.log(p)
    selected = int(s_values[int(np.argmin(scores))])
    return RicResult(selected, s_values, scores, objectives, sigma2, solutions)


def rank_features(values) -> list[int]:
    """1-based feature ids ordered by decreasing value (stable)."""
    values = np.asarray(values, dtype=np.float64)
    return (np.argsort(-values, kind="stable") + 1).tolist()


@dataclass
class ComparisonReport:
    shapley: ShapleyVector
    solution: SisrSolution
    shapley_ranking: list[int]
    sisr_ranking: list[int]


def conventional_and_calibrated(
    table: PayoffTable, options: SolveOptions | None = None, check_wls: bool = False
) -> ComparisonReport:
    """Exact Shapley values and SISR attributions on the same table."""
    if np.all(table.values == table.values[0]):
        raise FlatPayoffError("all payoffs equal the empty-coalition payoff; nothing to attribute")
    shap = wls_shapley(table) if check_wls else exact_shapley(table)
    sol = solve(table, options)
    return ComparisonReport(shap, sol, rank_features(shap.beta), rank_features(sol.gamma))
