"""Evaluation metrics for synthetic experiments."""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .._exceptions import DomainError, StructuralError
from ..coalitions import PayoffTable, baseline_adjust, weight_vector
from ..engine import SisrSolution, SolveOptions, solve

_UNIT_TOL = 1e-8


def affinity(gamma_hat, gamma_star, absolute: bool = False) -> float:
    """``100 * <gamma_hat, gamma_star>`` for unit vectors (signed unless ``absolute``)."""
    a = np.asarray(gamma_hat, dtype=np.float64)
    b = np.asarray(gamma_star, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise StructuralError(f"shape mismatch: {a.shape} vs {b.shape}")
    for name, v in (("gamma_hat", a), ("gamma_star", b)):
        if abs(np.linalg.norm(v) - 1.0) > _UNIT_TOL:
            raise DomainError(f"{name} must have unit norm, got {np.linalg.norm(v):.6g}")
    score = 100.0 * float(a @ b)
    return abs(score) if absolute else score


def support_recovery(gamma_hat, support_star) -> float:
    """Percentage of the true support (0-based indices) where ``gamma_hat`` is nonzero."""
    support_star = np.unique(np.asarray(support_star, dtype=np.int64))
    if support_star.size == 0:
        raise DomainError("true support must be nonempty")
    gamma_hat = np.asarray(gamma_hat)
    return 100.0 * float(np.mean(gamma_hat[support_star] != 0))


def relative_residual(t, gamma, table: PayoffTable, infinite_multiplier: float = 10.0) -> float:
    """``||t - Z gamma||_W^2 / ||t||_W^2`` over the baseline-adjusted table."""
    adjusted = baseline_adjust(table)
    w = weight_vector(adjusted, infinite_multiplier).weights
    t = np.asarray(t, dtype=np.float64)
    r = t - adjusted.incidence @ np.asarray(gamma, dtype=np.float64)
    return float(np.dot(w * r, r) / np.dot(w * t, t))


def linearity_gap(table: PayoffTable, solution: SisrSolution, infinite_multiplier: float = 10.0):
    """Additive-fit residuals without and with the fitted monotone transform.

    Returns ``(linear, monotone)``: the relative weighted residual of the best
    unconstrained additive fit to the payoffs themselves (identity transform)
    and that of the SISR fit ``t_hat ~ Z gamma_hat``.  A large ratio means the
    game is far from additive on its original scale but close to additive
    after the transform.
    """
    adjusted = baseline_adjust(table)
    w = weight_vector(adjusted, infinite_multiplier).weights
    Z = adjusted.incidence
    nu = adjusted.values
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(Z * sw[:, None], nu * sw, rcond=None)
    linear = relative_residual(nu, coef, adjusted, infinite_multiplier)
    monotone = relative_residual(solution.t_entries, solution.gamma, adjusted, infinite_multiplier)
    return linear, monotone


@dataclass(frozen=True)
class TimingRow:
    s: int
    seconds: float
    outer_iterations: int
    inner_iterations: int


def timing_sweep(table: PayoffTable, s_values, options: SolveOptions | None = None, repeats: int = 3):
    """Median wall time of :func:`solve` at each sparsity level, sorted by ``s``.

    One untimed solve runs first so that loading compiled kernels is not
    charged to the smallest ``s``.
    """
    if repeats < 1:
        raise DomainError("repeats must be >= 1")
    options = options or SolveOptions()
    s_values = sorted(set(int(v) for v in s_values))
    solve(table, replace(options, sparsity=s_values[0], max_outer=1))
    rows = []
    for s in s_values:
        opts = replace(options, sparsity=s)
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            sol = solve(table, opts)
            times.append(time.perf_counter() - start)
        rows.append(TimingRow(s, float(np.median(times)), sol.outer_iterations, sol.inner_iterations))
    return rows
