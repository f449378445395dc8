"""Regression designs whose subset fits define coalition payoffs.

For a design ``(X, y)`` the payoff of a coalition ``A`` is the in-sample
goodness of fit of a model using only the columns in ``A``: the ordinary
R^2 for a continuous response, the deviance pseudo-R^2 of a logistic fit for
a binary one.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import expit

from .._exceptions import DomainError, NumericalError, UnsupportedInputError
from ..coalitions import PayoffTable, enumerate_masks, popcount
from .generators import standard_normal

logger = logging.getLogger(__name__)

MAX_R2_P = 15
MAX_PSEUDO_P = 12
IRLS_MAX_ITER = 50
IRLS_TOL = 1e-8
IRLS_RIDGE = 1e-8
_MAX_HALVINGS = 30


@dataclass(frozen=True)
class RegressionDesign:
    X: np.ndarray
    y: np.ndarray
    theta: float
    alpha_star: np.ndarray
    task: str  # "continuous" or "binary"
    seed: int = 0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def gen_gaussian_design(
    n: int | None = None,
    p: int = 8,
    theta: float = 0.5,
    alpha_star=None,
    task: str = "continuous",
    seed: int = 0,
) -> RegressionDesign:
    """Draw a design with Toeplitz row covariance ``theta^|i-j|``.

    ``n`` defaults to ``5 p`` and ``alpha_star`` to all threes.  A continuous
    task adds standard normal noise to ``X alpha*``; a binary task draws
    Bernoulli responses with success probability ``logistic(X alpha*)``.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    n = 5 * p if n is None else int(n)
    if not abs(theta) < 1:
        raise DomainError(f"|theta| must be < 1, got {theta}")
    if n < p + 2:
        raise DomainError(f"need n >= p + 2, got n={n}, p={p}")
    if task not in ("continuous", "binary"):
        raise DomainError(f"task must be 'continuous' or 'binary', got {task!r}")
    alpha = np.full(p, 3.0) if alpha_star is None else np.asarray(alpha_star, dtype=np.float64)
    if alpha.shape != (p,):
        raise DomainError(f"alpha_star must have length {p}")

    sigma = toeplitz(theta ** np.arange(p))
    try:
        L = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - |theta| < 1 is positive definite
        raise NumericalError(f"Toeplitz covariance is not positive definite: {exc}") from exc
    rng = np.random.default_rng(seed)
    X = standard_normal(rng, (n, p)) @ L.T
    eta = X @ alpha
    if task == "continuous":
        y = eta + standard_normal(rng, n)
    else:
        y = (rng.random(n) < expit(eta)).astype(np.float64)
    return RegressionDesign(X, y, float(theta), alpha, task, seed)


def _columns(mask: int, p: int) -> list[int]:
    return [j for j in range(p) if mask >> j & 1]


def _map(fn, items, n_jobs):
    if n_jobs is None or n_jobs == 1 or len(items) < 2:
        return [fn(x) for x in items]
    workers = None if n_jobs < 0 else n_jobs
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def r2_payoffs(design: RegressionDesign, n_jobs: int | None = None) -> PayoffTable:
    """Training R^2 of OLS on intercept + ``X_A`` for every subset ``A``.

    Each fit is an SVD least-squares solve on centred columns (equivalent to
    including an intercept).  Rank-deficient subsets receive the minimum-norm
    fit and are listed in ``meta["rank_deficient"]``.
    """
    if design.task != "continuous":
        raise UnsupportedInputError("r2_payoffs needs a continuous response")
    p = design.p
    if p > MAX_R2_P:
        raise UnsupportedInputError(f"r2_payoffs supports p <= {MAX_R2_P}, got {p}")
    Xc = design.X - design.X.mean(axis=0)
    yc = design.y - design.y.mean()
    tss = float(yc @ yc)
    if tss == 0.0:
        raise DomainError("response is constant; R^2 is undefined")
    masks = enumerate_masks(p)

    def fit(mask):
        if mask == 0:
            return 0.0, False
        cols = _columns(int(mask), p)
        XA = Xc[:, cols]
        coef, _, rank, _ = np.linalg.lstsq(XA, yc, rcond=None)
        r = yc - XA @ coef
        return 1.0 - float(r @ r) / tss, rank < len(cols)

    out = _map(fit, masks.tolist(), n_jobs)
    values = np.array([v for v, _ in out])
    flagged = [int(m) for m, (_, bad) in zip(masks, out) if bad]
    meta = {"generator": "r2", "theta": design.theta, "seed": design.seed, "rank_deficient": flagged}
    return PayoffTable.from_values(values, meta=meta)


def _deviance(y, eta) -> float:
    # -2 log-likelihood, with log(1 + e^x) evaluated without overflow
    return 2.0 * float(np.sum(np.logaddexp(0.0, eta) - y * eta))


def _irls(X, y, b0, dev0) -> tuple[np.ndarray, float, bool]:
    """Damped Newton (IRLS) iterations started from ``b0``.

    A step is accepted only if it does not increase the deviance, so the
    returned deviance never exceeds ``dev0``.
    """
    b, dev = b0.copy(), dev0
    ridge = IRLS_RIDGE * np.eye(X.shape[1])
    for _ in range(IRLS_MAX_ITER):
        mu = expit(X @ b)
        w = mu * (1.0 - mu)
        H = (X.T * w) @ X + ridge
        try:
            step = np.linalg.solve(H, X.T @ (y - mu))
        except np.linalg.LinAlgError:
            return b, dev, False
        for _ in range(_MAX_HALVINGS):
            cand = b + step
            new = _deviance(y, X @ cand)
            if new <= dev:
                break
            step *= 0.5
        else:
            # no descent left at working precision
            return b, dev, True
        change = abs(dev - new)
        b, dev = cand, new
        if change / (abs(dev) + 0.1) < IRLS_TOL:
            return b, dev, True
    return b, dev, False


def pseudo_r2_payoffs(design: RegressionDesign, n_jobs: int | None = None) -> PayoffTable:
    """Deviance pseudo-R^2, ``1 - D(A) / D(empty)``, of logistic fits on every subset.

    Subsets are processed by increasing size and each fit is warm-started at
    the best fit among its one-smaller subsets (with the new coefficient at
    zero).  Because accepted IRLS steps never raise the deviance this keeps
    the payoffs monotone along nested subsets even when a fit stops early
    under separation.  Fits that did not meet the tolerance within the
    iteration budget keep their best deviance and are listed in
    ``meta["nonconverged"]``.
    """
    if design.task != "binary":
        raise UnsupportedInputError("pseudo_r2_payoffs needs a binary response")
    p, n = design.p, design.n
    if p > MAX_PSEUDO_P:
        raise UnsupportedInputError(f"pseudo_r2_payoffs supports p <= {MAX_PSEUDO_P}, got {p}")
    y = design.y
    ybar = float(y.mean())
    if ybar in (0.0, 1.0):
        raise DomainError("response has a single class; the null deviance is zero")
    X1 = np.column_stack([np.ones(n), design.X])
    b_null = np.zeros(p + 1)
    b_null[0] = np.log(ybar / (1.0 - ybar))
    dev_null = _deviance(y, X1 @ b_null)

    masks = enumerate_masks(p)
    sizes = popcount(masks, p)
    coefs = np.zeros((masks.size, p + 1))
    devs = np.empty(masks.size)
    ok = np.ones(masks.size, dtype=bool)
    coefs[0], devs[0] = b_null, dev_null

    def fit(mask):
        subs = [mask & ~(1 << j) for j in _columns(mask, p)]
        best = min(subs, key=lambda m: devs[m])
        cols = [0] + [j + 1 for j in _columns(mask, p)]
        b, dev, conv = _irls(X1[:, cols], y, coefs[best, cols], devs[best])
        full = np.zeros(p + 1)
        full[cols] = b
        return full, dev, conv

    for k in range(1, p + 1):
        level = masks[sizes == k].tolist()
        for m, (b, dev, conv) in zip(level, _map(fit, level, n_jobs)):
            coefs[m], devs[m], ok[m] = b, dev, conv

    values = 1.0 - devs / dev_null
    values[0] = 0.0
    flagged = [int(m) for m in masks[~ok]]
    if flagged:
        logger.debug("%d logistic fits stopped before converging", len(flagged))
    meta = {"generator": "pseudo-r2", "theta": design.theta, "seed": design.seed, "nonconverged": flagged}
    return PayoffTable.from_values(values, meta=meta)
