"""Compiled inner loops (numba when available, plain Python otherwise)."""
from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

    HAVE_NUMBA = False
else:
    HAVE_NUMBA = True


@njit(cache=True)
def pava_kernel(y, w, levels, starts):
    """Stack-based weighted PAVA over a chain.

    Fills ``levels[:m]`` and ``starts[:m]`` with the fitted value and first
    index of each of the ``m`` pooled blocks and returns ``m``.
    """
    n = y.shape[0]
    sums = np.empty(n)
    wts = np.empty(n)
    m = 0
    for i in range(n):
        s = y[i] * w[i]
        ww = w[i]
        start = i
        level = y[i]
        while m > 0 and levels[m - 1] > level:
            m -= 1
            s += sums[m]
            ww += wts[m]
            start = starts[m]
            level = s / ww
        levels[m] = level
        sums[m] = s
        wts[m] = ww
        starts[m] = start
        m += 1
    return m


@njit(cache=True)
def inner_kernel(gram, linear, rho, offset, gamma, s, tol, max_iter, record):
    """Thresholded surrogate descent at fixed ``t``.

    Returns ``(gamma, iterations, converged, degenerate, history)``.  When
    ``record`` is true the history holds ``l(gamma)`` after every step,
    preceded by the starting loss if the start is feasible (unit norm); the
    zero start lies off the sphere and the descent guarantee does not cover it.
    """
    p = gamma.shape[0]
    g = gamma.copy()
    hist = np.empty(max_iter + 1 if record else 1)
    off = 0
    if record and abs(np.sqrt(g @ g) - 1.0) <= 1e-10:
        hist[0] = 0.5 * (g @ (gram @ g)) - g @ linear + offset
        off = 1
    converged = False
    degenerate = False
    k = 0
    while k < max_iter:
        k += 1
        y = g - (gram @ g - linear) / rho
        if s < p:
            order = np.argsort(-np.abs(y), kind="mergesort")
            for r in range(s, p):
                y[order[r]] = 0.0
        nrm = np.sqrt(y @ y)
        if nrm == 0.0 or not np.isfinite(nrm):
            degenerate = True
            converged = True
            break
        y /= nrm
        d = y - g
        move = np.sqrt(d @ d)
        g = y
        if record:
            hist[k - 1 + off] = 0.5 * (g @ (gram @ g)) - g @ linear + offset
        if move <= tol:
            converged = True
            break
    n_hist = 0
    if record:
        n_hist = (k - 1 if degenerate else k) + off
    return g, k, converged, degenerate, hist[:n_hist]
