"""scikit-learn style estimators over coalition payoffs.

``X`` is a binary coalition matrix (row ``i`` marks the members of coalition
``i``) and ``y`` holds the payoffs.  The empty and the full coalition must
both appear in the training data.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._exceptions import DataError
from .coalitions import PayoffTable
from .engine import SolveOptions, inverse_transform, solve
from .shapley import exact_shapley, wls_shapley


def _coalition_matrix(X, p: int | None = None) -> np.ndarray:
    if not np.all((X == 0) | (X == 1)):
        raise DataError("X must be a 0/1 coalition matrix")
    if p is not None and X.shape[1] != p:
        raise DataError(f"X has {X.shape[1]} features, expected {p}")
    return X


def _table(X, y) -> PayoffTable:
    X = _coalition_matrix(X)
    p = X.shape[1]
    masks = X.astype(np.int64) @ (np.int64(1) << np.arange(p, dtype=np.int64))
    return PayoffTable.from_pairs(masks, y, p=p)


class SparseIsotonicShapley(RegressorMixin, BaseEstimator):
    """Sparse isotonic Shapley regression.

    Parameters
    ----------
    sparsity : int or None
        Maximum number of nonzero attributions (``None`` for no limit).
    outer_tol, max_outer : float, int
        Stopping rule of the alternating loop.
    infinite_multiplier : float
        Weight of the empty and full coalitions relative to the largest
        finite kernel weight.
    rho_inflation : float
        Relative inflation of the step curvature.

    Attributes
    ----------
    gamma_ : ndarray of shape (n_features,)
        Unit-norm attributions on the transformed scale.
    coef_ : ndarray of shape (n_features,)
        Attributions mapped back to the payoff scale.
    support_ : ndarray of bool
        Features with a nonzero attribution.
    intercept_ : float
        Payoff of the empty coalition.
    transform_nu_, transform_t_ : ndarray
        Samples of the fitted monotone transform, sorted by payoff.
    """

    def __init__(self, sparsity=None, outer_tol=1e-9, max_outer=500, infinite_multiplier=10.0, rho_inflation=1e-6):
        self.sparsity = sparsity
        self.outer_tol = outer_tol
        self.max_outer = max_outer
        self.infinite_multiplier = infinite_multiplier
        self.rho_inflation = rho_inflation

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        options = SolveOptions(
            sparsity=self.sparsity,
            outer_tol=self.outer_tol,
            max_outer=self.max_outer,
            infinite_multiplier=self.infinite_multiplier,
            rho_inflation=self.rho_inflation,
        )
        sol = solve(_table(X, y), options)
        self.solution_ = sol
        self.gamma_ = sol.gamma
        self.coef_ = sol.beta
        self.support_ = sol.gamma != 0
        self.intercept_ = sol.baseline
        self.transform_nu_ = sol.nu
        self.transform_t_ = sol.t
        self.objective_ = sol.objective
        self.n_iter_ = sol.outer_iterations
        self.converged_ = sol.converged
        self.n_features_in_ = X.shape[1]
        return self

    def transform_payoffs(self, X):
        """Additive prediction ``X gamma`` on the transformed scale."""
        check_is_fitted(self)
        X = _coalition_matrix(check_array(X, dtype=np.float64), self.n_features_in_)
        return X @ self.gamma_

    def predict(self, X):
        """Payoffs predicted by inverting the fitted transform at ``X gamma``."""
        z = self.transform_payoffs(X)
        return self.intercept_ + inverse_transform(z, self.transform_nu_, self.transform_t_)


class ShapleyRegression(RegressorMixin, BaseEstimator):
    """Conventional Shapley values as an additive payoff model.

    ``method="exact"`` averages marginal contributions; ``method="wls"`` solves
    the kernel-weighted least-squares problem.  Both need every coalition.
    """

    def __init__(self, method="exact"):
        self.method = method

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if self.method not in ("exact", "wls"):
            raise ValueError(f"method must be 'exact' or 'wls', got {self.method!r}")
        shap = (exact_shapley if self.method == "exact" else wls_shapley)(_table(X, y))
        self.coef_ = shap.beta
        self.intercept_ = shap.baseline
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = _coalition_matrix(check_array(X, dtype=np.float64), self.n_features_in_)
        return self.intercept_ + X @ self.coef_
