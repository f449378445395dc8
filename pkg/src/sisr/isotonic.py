"""Weighted isotonic regression along the total preorder induced by a payoff vector.

Entries with equal payoff must receive equal fitted values, so tie groups are
pooled into single weighted points before a stack-based pool-adjacent-violators
pass over the sorted groups.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._exceptions import DataError, DomainError, StructuralError
from ._kernels import pava_kernel
from .coalitions import WeightVector


@dataclass(frozen=True)
class OrderPlan:
    """Sorting permutation of ``nu`` plus its maximal runs of equal values.

    Attributes
    ----------
    permutation : ndarray of int
        ``nu[permutation]`` is non-decreasing; ties keep original index order.
    group_starts : ndarray of int
        Start offsets (into the sorted order) of each tie group, followed by ``n``.
    """

    permutation: np.ndarray
    group_starts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.permutation.size)

    @property
    def n_groups(self) -> int:
        return int(self.group_starts.size - 1)

    @property
    def tie_groups(self) -> list[np.ndarray]:
        """Original indices of each tie group, in ascending ``nu`` order."""
        s = self.group_starts
        return [self.permutation[s[g]:s[g + 1]] for g in range(self.n_groups)]


@dataclass(frozen=True)
class IsotonicFit:
    t: np.ndarray
    objective: float
    block_starts: np.ndarray  # offsets into the sorted order, followed by n

    @property
    def n_blocks(self) -> int:
        return int(self.block_starts.size - 1)


def build_order(nu) -> OrderPlan:
    nu = np.asarray(nu, dtype=np.float64)
    if nu.ndim != 1 or nu.size == 0:
        raise StructuralError("nu must be a non-empty 1-d vector")
    bad = np.flatnonzero(np.isnan(nu))
    if bad.size:
        raise DataError(f"nu contains NaN at index {int(bad[0])}")
    perm = np.argsort(nu, kind="stable")
    sorted_nu = nu[perm]
    breaks = np.flatnonzero(sorted_nu[1:] != sorted_nu[:-1]) + 1
    starts = np.concatenate(([0], breaks, [nu.size])).astype(np.int64)
    perm.setflags(write=False)
    starts.setflags(write=False)
    return OrderPlan(perm, starts)


def pool_adjacent_violators(y, w) -> tuple[np.ndarray, np.ndarray]:
    """Non-decreasing weighted least-squares fit of a chain.

    Returns the fitted levels of each pooled block and the start offset of
    every block (followed by ``len(y)``).
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    levels = np.empty_like(y)
    starts = np.empty(y.size + 1, dtype=np.int64)
    m = pava_kernel(y, w, levels, starts)
    starts[m] = y.size
    return levels[:m].copy(), starts[: m + 1].copy()


def isotonic_fit(delta, weights, plan: OrderPlan) -> IsotonicFit:
    """Minimize ``0.5 * sum w (t - delta)^2`` with ``t`` non-decreasing along ``plan``.

    ``t`` is constant on every tie group of the plan.
    """
    if isinstance(weights, WeightVector):
        weights = weights.weights
    delta = np.asarray(delta, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if delta.shape != w.shape or delta.ndim != 1 or delta.size != plan.n:
        raise StructuralError(
            f"length mismatch: delta {delta.shape}, weights {w.shape}, plan {plan.n}"
        )
    if not np.all(w > 0):
        raise DomainError("isotonic weights must be strictly positive")

    perm, gs = plan.permutation, plan.group_starts[:-1]
    ws = w[perm]
    group_w = np.add.reduceat(ws, gs)
    group_mean = np.add.reduceat(ws * delta[perm], gs) / group_w

    levels, block_groups = pool_adjacent_violators(group_mean, group_w)

    sizes = np.diff(block_groups)
    per_group = np.repeat(levels, sizes)
    per_sorted = np.repeat(per_group, np.diff(plan.group_starts))
    t = np.empty_like(delta)
    t[perm] = per_sorted
    resid = t - delta
    objective = 0.5 * float(np.dot(w * resid, resid))
    block_starts = plan.group_starts[block_groups]
    return IsotonicFit(t, objective, block_starts)
