"""Synthetic payoff tables with known ground truth.

All generators draw from a single seeded PCG64 stream.  Gaussian variates
are produced by inverse-CDF transformation of uniforms so that a seed maps to
the same table on every platform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from .._exceptions import ConfigurationError, DomainError
from ..coalitions import (
    MAX_ENUMERATION_P,
    PayoffTable,
    enumerate_masks,
    incidence_matrix,
    kernel_weights_by_size,
    popcount,
)

TRANSFORM_SCHEMES = (
    "fifth-root",
    "square-root",
    "exponential",
    "logarithmic",
    "tangent",
    "normal-cdf",
)

_MAX_RESAMPLE = 100


@dataclass(frozen=True)
class Transform:
    """A strictly increasing map ``T*`` with ``T*(0) = 0`` and its inverse.

    ``lower`` is the infimum of the range of ``forward``; transformed draws at
    or below it have no preimage.
    """

    name: str
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    lower: float = -np.inf


def _odd_root(d):
    return lambda x: np.sign(x) * np.abs(x) ** (1.0 / d)


SPARSE_TRANSFORMS = {
    "cube-root": Transform("cube-root", np.cbrt, lambda y: y**3),
    "fifth-root": Transform("fifth-root", _odd_root(5), lambda y: y**5),
    "square-root": Transform("square-root", np.sqrt, np.square, lower=0.0),
    "identity": Transform("identity", lambda x: np.asarray(x, float), lambda y: np.asarray(y, float)),
    "logarithmic": Transform("logarithmic", np.log1p, np.expm1),
    "exponential": Transform("exponential", np.expm1, np.log1p, lower=-1.0),
}


@dataclass
class GeneratorTruth:
    gamma_star: np.ndarray
    transform_name: str
    transform: Transform
    seed: int
    c0: float | None = None
    c1: float | None = None
    c2: float | None = None
    sigma0: float | None = None
    t_star: np.ndarray | None = None  # T*(nu) per table entry
    extras: dict = field(default_factory=dict)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.gamma_star)

    def to_dict(self) -> dict:
        out = {
            "gamma_star": self.gamma_star.tolist(),
            "support": (self.support + 1).tolist(),
            "transform_name": self.transform_name,
            "constants": {"c0": self.c0, "c1": self.c1, "c2": self.c2, "sigma0": self.sigma0},
            "seed": self.seed,
        }
        out.update(self.extras)
        return out


def standard_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normal draws by inverse CDF of open-interval uniforms."""
    k = rng.integers(0, 1 << 53, size=size, dtype=np.int64)
    return ndtri((k + 0.5) / float(1 << 53))


def _check_p(p: int) -> None:
    if not 2 <= p <= MAX_ENUMERATION_P:
        raise DomainError(f"generators need 2 <= p <= {MAX_ENUMERATION_P}, got {p}")


def transform_scheme(scheme: str, u_min: float = 0.0) -> tuple[Transform, float, float]:
    """Return ``(T*, c1, c2)`` for a transform-recovery scheme.

    ``Q`` with ``nu = Q(c1 u)`` is ``T*``'s inverse composed with ``c1``:
    ``T*(nu) = Q^{-1}(nu) / c1``.
    """
    if scheme == "fifth-root":
        return Transform(scheme, lambda v: np.asarray(v, float) ** 0.2, lambda u: np.asarray(u, float) ** 5, 0.0), 1.0, 0.0
    if scheme == "square-root":
        return Transform(scheme, np.sqrt, np.square, 0.0), 1.0, 0.0
    if scheme == "exponential":
        return Transform(scheme, np.expm1, np.log1p, -1.0), 1.0, 0.0
    if scheme == "logarithmic":
        return Transform(scheme, np.log1p, np.expm1), 1.0, 0.0
    if scheme == "tangent":
        c1 = 10.0
        return (
            Transform(scheme, lambda v: np.tan(v) / c1, lambda u: np.arctan(c1 * np.asarray(u, float))),
            c1,
            0.0,
        )
    if scheme == "normal-cdf":
        c1 = 1.0 / math.sqrt(3.0)
        c2 = float(ndtri(c1 * u_min))
        shift = float(ndtr(c2))
        return (
            Transform(
                scheme,
                lambda v: (ndtr(np.asarray(v, float) + c2) - shift) / c1,
                lambda u: ndtri(c1 * np.asarray(u, float) + shift) - c2,
            ),
            c1,
            c2,
        )
    raise ConfigurationError(f"unknown transform scheme {scheme!r}; choose from {TRANSFORM_SCHEMES}")


def gen_transform_payoffs(p: int, scheme: str, seed: int = 0) -> tuple[PayoffTable, GeneratorTruth]:
    """Payoffs whose transform ``T*`` makes them (noisily) additive in ``c0 * 2^(j-1)``.

    Sorted uniforms on ``[0, c0 (2^p - 1)]`` play the role of ``T*(nu)``, so
    entry ``i`` is centred on ``c0 * i`` and ``nu = Q(c1 * sorted(U))``.
    """
    _check_p(p)
    if scheme not in TRANSFORM_SCHEMES:
        raise ConfigurationError(f"unknown transform scheme {scheme!r}; choose from {TRANSFORM_SCHEMES}")
    rng = np.random.default_rng(seed)
    n = 1 << p
    c0 = math.sqrt(3.0 / (4.0**p - 1.0))
    gamma_star = c0 * 2.0 ** np.arange(p)
    u = np.sort(rng.random(n) * c0 * (n - 1))
    transform, c1, c2 = transform_scheme(scheme, float(u[0]))
    if scheme == "normal-cdf":
        nu = ndtri(c1 * u) - c2
        t_star = u - u[0]
    else:
        nu = transform.inverse(u)
        t_star = u
    table = PayoffTable.from_values(nu, meta={"generator": scheme, "seed": seed})
    truth = GeneratorTruth(
        gamma_star=gamma_star,
        transform_name=scheme,
        transform=transform,
        seed=seed,
        c0=c0,
        c1=c1,
        c2=c2 if scheme == "normal-cdf" else None,
        t_star=np.asarray(t_star, dtype=np.float64),
    )
    return table, truth


def default_sparse_gamma(p: int, s_star: int = 3) -> np.ndarray:
    g = np.zeros(p)
    g[:s_star] = 1.0 / math.sqrt(s_star)
    return g


def gen_sparse_payoffs(
    p: int,
    gamma_star=None,
    transform: str | Transform = "cube-root",
    sigma0: float = 1e-3,
    seed: int = 0,
) -> tuple[PayoffTable, GeneratorTruth]:
    """Payoffs with ``T*(nu_A) ~ N(sum_{j in A} gamma*_j, sigma0^2 / w(A))``.

    The empty and grand coalitions have infinite kernel weight, hence zero
    variance, and are emitted at their means.  Draws falling outside the
    range of ``T*`` are redrawn up to 100 times and then clamped; the number
    of clamped entries is stored in ``table.meta["clamped"]``.
    """
    _check_p(p)
    if isinstance(transform, str):
        if transform not in SPARSE_TRANSFORMS:
            raise ConfigurationError(
                f"unknown transform {transform!r}; choose from {sorted(SPARSE_TRANSFORMS)}"
            )
        transform = SPARSE_TRANSFORMS[transform]
    gamma_star = default_sparse_gamma(p) if gamma_star is None else np.asarray(gamma_star, dtype=np.float64)
    if gamma_star.shape != (p,):
        raise DomainError(f"gamma_star must have length {p}")
    if abs(np.linalg.norm(gamma_star) - 1.0) > 1e-12:
        raise DomainError("gamma_star must have unit Euclidean norm")
    if sigma0 < 0:
        raise DomainError("sigma0 must be non-negative")

    rng = np.random.default_rng(seed)
    masks = enumerate_masks(p)
    mean = incidence_matrix(masks, p) @ gamma_star
    sizes = popcount(masks, p)
    n = masks.size
    sd = np.zeros(n)
    inner = slice(1, n - 1)
    sd[inner] = sigma0 / np.sqrt(kernel_weights_by_size(p)[sizes[inner]])
    draw = mean + sd * standard_normal(rng, n)

    clamped = 0
    bad = np.flatnonzero(draw <= transform.lower)
    for _ in range(_MAX_RESAMPLE):
        if bad.size == 0:
            break
        draw[bad] = mean[bad] + sd[bad] * standard_normal(rng, bad.size)
        bad = bad[draw[bad] <= transform.lower]
    if bad.size:
        clamped = int(bad.size)
        draw[bad] = np.nextafter(transform.lower, np.inf)
    nu = transform.inverse(draw)
    nu[0] = 0.0
    meta = {"generator": "sparse", "seed": seed, "clamped": clamped}
    table = PayoffTable.from_values(nu, meta=meta)
    truth = GeneratorTruth(
        gamma_star=gamma_star,
        transform_name=transform.name,
        transform=transform,
        seed=seed,
        sigma0=sigma0,
        t_star=draw,
        extras={"clamped": clamped},
    )
    return table, truth


def gen_max_payoffs(p: int, beta_star=None) -> PayoffTable:
    """Winner-takes-all game ``nu_A = max_{j in A} beta*_j`` with ``nu_empty = 0``."""
    _check_p(p)
    beta_star = np.arange(1.0, p + 1.0) if beta_star is None else np.asarray(beta_star, dtype=np.float64)
    if beta_star.shape != (p,):
        raise DomainError(f"beta_star must have length {p}")
    if np.any(beta_star < 0):
        raise DomainError("beta_star entries must be non-negative")
    masks = enumerate_masks(p)
    nu = np.zeros(masks.size)
    for j in range(p):
        has = ((masks >> j) & 1).astype(bool)
        nu[has] = np.maximum(nu[has], beta_star[j])
    return PayoffTable.from_values(nu, meta={"generator": "max"})
