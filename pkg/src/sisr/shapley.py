"""Conventional Shapley values by two independent routes.

``exact_shapley`` averages marginal contributions over all coalitions;
``wls_shapley`` solves the kernel-weighted least-squares problem with the
efficiency constraint eliminated.  They agree on every full table and each
serves as the other's oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._exceptions import NumericalError, UnsupportedInputError
from .coalitions import PayoffTable, kernel_weights_by_size

MAX_WLS_P = 16


@dataclass(frozen=True)
class ShapleyVector:
    beta: np.ndarray
    baseline: float

    @property
    def total(self) -> float:
        return float(self.beta.sum())


def _require_full(table: PayoffTable, limit: int, what: str) -> None:
    if not table.full_enumeration:
        raise UnsupportedInputError(
            f"{what} needs all 2^p coalitions; table has {table.n} of {1 << table.p}"
        )
    if table.p > limit:
        raise UnsupportedInputError(f"{what} supports p <= {limit}, got p={table.p}")


def exact_shapley(table: PayoffTable) -> ShapleyVector:
    """Shapley values from marginal contributions.

    ``beta_j = sum_{A not containing j} |A|! (p-|A|-1)! / p! * (nu[A+j] - nu[A])``
    with the factorial ratio written as ``1 / (p * C(p-1, |A|))``.
    """
    _require_full(table, 20, "exact_shapley")
    p = table.p
    nu = table.values
    sizes = table.sizes
    coef = np.array([1.0 / (p * math.comb(p - 1, k)) for k in range(p)])
    masks = table.masks
    beta = np.empty(p)
    for j in range(p):
        bit = 1 << j
        without = masks[(masks & bit) == 0]
        beta[j] = np.dot(coef[sizes[without]], nu[without | bit] - nu[without])
    return ShapleyVector(beta, table.empty_value)


def wls_shapley(table: PayoffTable) -> ShapleyVector:
    """Shapley values as the kernel-weighted least-squares fit of the payoffs.

    The intercept is pinned to ``nu_empty`` and efficiency is enforced by
    substituting ``beta_p = total - sum_{j<p} beta_j``.
    """
    _require_full(table, MAX_WLS_P, "wls_shapley")
    p = table.p
    nu = table.values
    total = table.grand_value - table.empty_value
    if p == 1:
        return ShapleyVector(np.array([total]), table.empty_value)

    inner = slice(1, table.n - 1)
    Z = table.incidence[inner]
    w = kernel_weights_by_size(p)[table.sizes[inner]]
    last = Z[:, -1]
    X = Z[:, :-1] - last[:, None]
    y = nu[inner] - table.empty_value - last * total
    sw = np.sqrt(w)
    sol, _, rank, _ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    if rank < p - 1:
        raise NumericalError("weighted least-squares system for Shapley values is singular")
    beta = np.append(sol, total - sol.sum())
    return ShapleyVector(beta, table.empty_value)
