"""Projection onto the sparse unit sphere and the thresholded-gradient attribution update.

For fixed transformed payoffs ``t`` the attribution vector minimizes
``l(g) = 0.5 (Z g - t)' W (Z g - t)`` subject to ``||g||_0 <= s`` and
``||g||_2 = 1``.  Each step majorizes ``l`` with an isotropic quadratic of
curvature ``rho >= ||Z'WZ||_2`` and minimizes the surrogate exactly with the
normalized hard-thresholding operator, so ``l`` never increases.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._exceptions import DegenerateThresholdError, DomainError, StructuralError
from ._kernels import inner_kernel
from .coalitions import WeightVector

DEFAULT_RHO_INFLATION = 1e-6
DEFAULT_INNER_TOL = 1e-10
DEFAULT_MAX_INNER = 10_000


def _weights(W) -> np.ndarray:
    return W.weights if isinstance(W, WeightVector) else np.asarray(W, dtype=np.float64)


def hard_threshold(y, s: int) -> np.ndarray:
    """Keep the ``s`` largest-magnitude entries of ``y``; lower index wins magnitude ties."""
    y = np.asarray(y, dtype=np.float64)
    if not 1 <= s <= y.size:
        raise DomainError(f"sparsity s={s} outside 1..{y.size}")
    out = np.zeros_like(y)
    keep = np.argsort(-np.abs(y), kind="stable")[:s]
    out[keep] = y[keep]
    return out


def normalized_hard_threshold(y, s: int) -> np.ndarray:
    """Unit-norm projection of ``y`` onto ``{b : ||b||_0 <= s, ||b||_2 = 1}``.

    Raises
    ------
    DegenerateThresholdError
        If the thresholded vector is zero (e.g. ``y == 0``).
    """
    h = hard_threshold(y, s)
    norm = np.linalg.norm(h)
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateThresholdError("hard-thresholded vector is zero; cannot normalize")
    return h / norm


def spectral_norm(gram, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix.

    Power iteration from the normalized all-ones vector, stopped when the
    Rayleigh quotient changes by at most ``tol`` relative.  Sizes 1 and 2 use
    the closed form.
    """
    A = np.asarray(gram, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise StructuralError(f"expected a square matrix, got shape {A.shape}")
    scale = np.abs(A).max() if A.size else 0.0
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(scale, 1.0)):
        raise StructuralError("spectral_norm requires a symmetric matrix")
    n = A.shape[0]
    if n == 1:
        return float(abs(A[0, 0]))
    if n == 2:
        a, b, d = A[0, 0], A[0, 1], A[1, 1]
        half_tr = 0.5 * (a + d)
        disc = np.hypot(0.5 * (a - d), b)
        return float(max(abs(half_tr + disc), abs(half_tr - disc)))
    if scale == 0.0:
        return 0.0
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = float(v @ A @ v)
    for _ in range(max_iter):
        u = A @ v
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 0.0
        v = u / norm
        new = float(v @ A @ v)
        if abs(new - lam) <= tol * abs(new):
            return new
        lam = new
    return lam


def objective(gamma, t, Z, W) -> float:
    """Weighted half squared error ``0.5 (Z gamma - t)' W (Z gamma - t)``."""
    Z = np.asarray(Z, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    w = _weights(W)
    if Z.ndim != 2 or Z.shape[1] != gamma.size or Z.shape[0] != t.size or w.size != t.size:
        raise StructuralError(
            f"dimension mismatch: Z {Z.shape}, gamma {gamma.shape}, t {t.shape}, W {w.shape}"
        )
    r = Z @ gamma - t
    return 0.5 * float(np.dot(w * r, r))


@dataclass(frozen=True)
class StepContext:
    """Precomputed quantities for the attribution update at fixed ``t``.

    ``gram = Z'WZ`` and ``rho = (1 + inflation) * ||gram||_2`` depend only on
    the coalitions and weights; ``linear = Z'Wt`` and ``offset = 0.5 t'Wt``
    change with ``t`` (see :meth:`with_target`).
    """

    gram: np.ndarray
    linear: np.ndarray
    rho: float
    inflation: float = DEFAULT_RHO_INFLATION
    offset: float = 0.0
    _ZtW: np.ndarray | None = field(default=None, repr=False, compare=False)
    _w: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def build(cls, Z, W, t, inflation: float = DEFAULT_RHO_INFLATION) -> "StepContext":
        if not inflation > 0:
            raise DomainError("rho inflation must be positive")
        Z = np.asarray(Z, dtype=np.float64)
        w = _weights(W)
        t = np.asarray(t, dtype=np.float64)
        if Z.shape[0] != w.size or w.size != t.size:
            raise StructuralError(f"dimension mismatch: Z {Z.shape}, W {w.shape}, t {t.shape}")
        ZtW = Z.T * w
        gram = ZtW @ Z
        gram = 0.5 * (gram + gram.T)
        rho = (1.0 + inflation) * spectral_norm(gram)
        for a in (ZtW, gram):
            a.setflags(write=False)
        ctx = cls(gram, np.zeros(Z.shape[1]), rho, inflation, 0.0, ZtW, w)
        return ctx.with_target(t)

    def with_target(self, t) -> "StepContext":
        """Same coalitions and weights, new transformed payoffs ``t``."""
        if self._ZtW is None:
            raise StructuralError("context was not built from Z and W; use StepContext.build")
        t = np.asarray(t, dtype=np.float64)
        linear = self._ZtW @ t
        linear.setflags(write=False)
        return replace(self, linear=linear, offset=0.5 * float(np.dot(self._w * t, t)))

    def loss(self, gamma) -> float:
        """``l(gamma)`` evaluated through the Gram form (no pass over coalitions)."""
        gamma = np.asarray(gamma, dtype=np.float64)
        return 0.5 * float(gamma @ self.gram @ gamma) - float(gamma @ self.linear) + self.offset


def gamma_step(gamma, ctx: StepContext, s: int) -> tuple[np.ndarray, bool]:
    """One surrogate-minimization step.

    Returns the new iterate and a flag that is ``True`` when thresholding
    degenerated to zero, in which case the input iterate is returned unchanged.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    y = gamma - (ctx.gram @ gamma - ctx.linear) / ctx.rho
    try:
        return normalized_hard_threshold(y, s), False
    except DegenerateThresholdError:
        return gamma.copy(), True


@dataclass
class InnerResult:
    gamma: np.ndarray
    iterations: int
    objective: float
    converged: bool
    degenerate: bool = False
    history: list[float] | None = None


def gamma_solve(
    t,
    ctx: StepContext,
    s: int,
    init=None,
    tol: float = DEFAULT_INNER_TOL,
    max_iter: int = DEFAULT_MAX_INNER,
    record: bool = False,
) -> InnerResult:
    """Iterate :func:`gamma_step` until successive iterates move by at most ``tol``.

    ``ctx`` must already carry ``Z'Wt`` for the current ``t`` (``t`` itself is
    only checked for length and may be ``None``).  Hitting ``max_iter`` is
    reported through ``converged=False``, not raised.  With ``record=True``
    the loss after every step is kept in ``history``, preceded by the loss at
    ``init`` when ``init`` is a unit vector.
    """
    p = ctx.gram.shape[0]
    if not 1 <= s <= p:
        raise DomainError(f"sparsity s={s} outside 1..{p}")
    if t is not None and ctx._w is not None and np.size(t) != ctx._w.size:
        raise StructuralError("t does not match the step context")
    gamma = np.zeros(p) if init is None else np.array(init, dtype=np.float64)
    if gamma.shape != (p,):
        raise StructuralError(f"init must have length {p}")
    g, k, converged, degenerate, hist = inner_kernel(
        np.ascontiguousarray(ctx.gram),
        np.ascontiguousarray(ctx.linear),
        float(ctx.rho),
        float(ctx.offset),
        gamma,
        int(s),
        float(tol),
        int(max_iter),
        bool(record),
    )
    history = hist.tolist() if record else None
    return InnerResult(g, int(k), ctx.loss(g), bool(converged), bool(degenerate), history)
