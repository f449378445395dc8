"""Coalition bookkeeping: masks, payoff tables, incidence rows and Shapley kernel weights.

A coalition ``A`` over features ``1..p`` is stored as a machine integer whose
bit ``j - 1`` is set when feature ``j`` belongs to ``A``.  Under full
enumeration the ``i``-th entry (0-based) of every table is the coalition with
bits ``i``, which is the usual lexicographic binary ordering.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._exceptions import (
    CapacityError,
    DataError,
    DomainError,
    StructuralError,
)

MAX_ENUMERATION_P = 20
MAX_MASK_P = 30
DEFAULT_INFINITE_MULTIPLIER = 10.0


@dataclass(frozen=True)
class CoalitionMask:
    """A feature subset encoded as a bit-set (bit ``j-1`` <=> feature ``j``)."""

    bits: int
    p: int

    def __post_init__(self):
        if not 1 <= self.p <= MAX_MASK_P:
            raise CapacityError(f"p must be in [1, {MAX_MASK_P}], got {self.p}")
        if not 0 <= self.bits < (1 << self.p):
            raise StructuralError(f"mask {self.bits} does not fit in {self.p} features")

    @classmethod
    def from_features(cls, features: Iterable[int], p: int) -> "CoalitionMask":
        """Build a mask from 1-based feature ids."""
        bits = 0
        for j in features:
            if not 1 <= j <= p:
                raise StructuralError(f"feature id {j} outside 1..{p}")
            bits |= 1 << (j - 1)
        return cls(bits, p)

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(j + 1 for j in range(self.p) if self.bits >> j & 1)

    @property
    def size(self) -> int:
        return bin(self.bits).count("1")

    def __contains__(self, feature: int) -> bool:
        return 1 <= feature <= self.p and bool(self.bits >> (feature - 1) & 1)


def full_mask(p: int) -> int:
    return (1 << p) - 1


def popcount(masks, p: int) -> np.ndarray:
    """Coalition sizes of an integer mask array."""
    masks = np.asarray(masks, dtype=np.int64)
    counts = np.zeros(masks.shape, dtype=np.int64)
    for j in range(p):
        counts += (masks >> j) & 1
    return counts


def enumerate_masks(p: int) -> np.ndarray:
    """All ``2**p`` coalitions in lexicographic binary order (position ``i`` has bits ``i``)."""
    if not 1 <= p <= MAX_ENUMERATION_P:
        raise CapacityError(
            f"full enumeration supports 1 <= p <= {MAX_ENUMERATION_P} "
            f"(2^{MAX_ENUMERATION_P} coalitions); got p={p}, use sample_coalitions instead"
        )
    return np.arange(1 << p, dtype=np.int64)


def incidence_matrix(masks, p: int) -> np.ndarray:
    """Binary ``(len(masks), p)`` matrix; entry ``(i, j)`` is 1 iff feature ``j+1`` is in mask ``i``."""
    masks = np.asarray(masks, dtype=np.int64)
    if masks.ndim != 1 or masks.size == 0:
        raise StructuralError("incidence_matrix needs a non-empty 1-d sequence of masks")
    if not 1 <= p <= MAX_MASK_P:
        raise CapacityError(f"p must be in [1, {MAX_MASK_P}], got {p}")
    if masks.min() < 0 or masks.max() >= (1 << p):
        bad = int(np.flatnonzero((masks < 0) | (masks >= (1 << p)))[0])
        raise StructuralError(f"mask at position {bad} ({int(masks[bad])}) is not a subset of {p} features")
    shifts = np.arange(p, dtype=np.int64)
    return ((masks[:, None] >> shifts) & 1).astype(np.float64)


def shapley_kernel_weight(p: int, k: int) -> float:
    """Shapley kernel weight ``(p-1) / (C(p,k) k (p-k))`` for a coalition of size ``k``."""
    if not 1 <= k <= p - 1:
        raise DomainError(
            f"kernel weight is infinite for k={k} with p={p}; "
            "the empty and grand coalitions take the multiplier substitute"
        )
    return (p - 1) / (math.comb(p, k) * k * (p - k))


def kernel_weights_by_size(p: int) -> np.ndarray:
    """Array of length ``p+1``; entries 0 and ``p`` are ``inf``."""
    out = np.full(p + 1, np.inf)
    for k in range(1, p):
        out[k] = shapley_kernel_weight(p, k)
    return out


@dataclass(frozen=True)
class PayoffTable:
    """Coalition payoffs ``nu_A`` keyed by mask, stored in ascending mask order.

    Parameters
    ----------
    p : int
        Number of features.
    masks : array of int
        Coalition bit-sets. Must contain the empty and the grand coalition.
    values : array of float
        Payoff of each coalition, aligned with ``masks``.
    baseline_adjusted : bool
        Whether ``values`` have been shifted so that the empty coalition is 0.
    meta : mapping
        Free-form provenance and diagnostics (e.g. flagged subsets).
    """

    p: int
    masks: np.ndarray
    values: np.ndarray
    baseline_adjusted: bool = False
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        p = int(self.p)
        if not 1 <= p <= MAX_MASK_P:
            raise CapacityError(f"p must be in [1, {MAX_MASK_P}], got {p}")
        masks = np.array(self.masks, dtype=np.int64).ravel()
        values = np.array(self.values, dtype=np.float64).ravel()
        if masks.shape != values.shape:
            raise StructuralError(f"{masks.size} masks but {values.size} values")
        if masks.size < 2:
            raise StructuralError("a payoff table needs at least the empty and grand coalitions")
        nan = np.flatnonzero(~np.isfinite(values))
        if nan.size:
            raise DataError(f"non-finite payoff for mask {int(masks[nan[0]])}")
        if masks.min() < 0 or masks.max() >= (1 << p):
            raise StructuralError(f"masks must lie in [0, 2^{p})")
        order = np.argsort(masks, kind="stable")
        masks, values = masks[order], values[order]
        if np.any(masks[1:] == masks[:-1]):
            dup = int(masks[1:][masks[1:] == masks[:-1]][0])
            raise StructuralError(f"mask {dup} appears more than once")
        if masks[0] != 0:
            raise StructuralError("payoff table is missing the empty coalition (mask 0)")
        if masks[-1] != full_mask(p):
            raise StructuralError(f"payoff table is missing the grand coalition (mask {full_mask(p)})")
        if self.baseline_adjusted and values[0] != 0.0:
            raise StructuralError("baseline_adjusted table must have nu_empty == 0")
        masks.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values: Sequence[float], **kwargs) -> "PayoffTable":
        """Full-enumeration table from ``2**p`` values in lexicographic order."""
        values = np.asarray(values, dtype=np.float64).ravel()
        n = values.size
        p = n.bit_length() - 1
        if n < 2 or n != 1 << p:
            raise StructuralError(f"full enumeration needs 2^p values, got {n}")
        return cls(p, np.arange(n, dtype=np.int64), values, **kwargs)

    @classmethod
    def from_pairs(cls, masks, values, p: int | None = None, **kwargs) -> "PayoffTable":
        """Table from arbitrary (mask, value) pairs; ``p`` defaults to the grand coalition's width."""
        masks = np.asarray(masks, dtype=np.int64).ravel()
        if p is None:
            if masks.size == 0:
                raise StructuralError("empty payoff table")
            p = int(masks.max()).bit_length()
            if p == 0:
                raise StructuralError("payoff table is missing the grand coalition")
        return cls(p, masks, values, **kwargs)

    @property
    def n(self) -> int:
        return int(self.masks.size)

    @property
    def full_enumeration(self) -> bool:
        return self.n == 1 << self.p

    @property
    def empty_value(self) -> float:
        return float(self.values[0])

    @property
    def grand_value(self) -> float:
        return float(self.values[-1])

    @cached_property
    def sizes(self) -> np.ndarray:
        return popcount(self.masks, self.p)

    @cached_property
    def incidence(self) -> np.ndarray:
        Z = incidence_matrix(self.masks, self.p)
        Z.setflags(write=False)
        return Z

    def value_of(self, mask: int) -> float:
        i = int(np.searchsorted(self.masks, mask))
        if i >= self.n or self.masks[i] != mask:
            raise KeyError(mask)
        return float(self.values[i])

    def with_values(self, values, **kwargs) -> "PayoffTable":
        kwargs.setdefault("baseline_adjusted", False)
        kwargs.setdefault("meta", dict(self.meta))
        return PayoffTable(self.p, self.masks, values, **kwargs)


@dataclass(frozen=True)
class WeightVector:
    """Positive per-coalition weights aligned with a :class:`PayoffTable`."""

    weights: np.ndarray
    infinite_multiplier: float = DEFAULT_INFINITE_MULTIPLIER


def weight_vector(table: PayoffTable, infinite_multiplier: float = DEFAULT_INFINITE_MULTIPLIER) -> WeightVector:
    """Shapley kernel weights for every entry of ``table``.

    The empty and grand coalitions (infinite weight in theory) receive
    ``infinite_multiplier`` times the largest finite kernel weight, which is
    ``1/p`` for sizes 1 and ``p-1``.
    """
    p = table.p
    if p < 2:
        raise DomainError("p = 1 has no finite kernel weights")
    if not infinite_multiplier >= 1.0 or not np.isfinite(infinite_multiplier):
        raise DomainError(f"infinite_multiplier must be a finite value >= 1, got {infinite_multiplier}")
    by_size = kernel_weights_by_size(p)
    big = infinite_multiplier * by_size[1:p].max()
    by_size[0] = by_size[p] = big
    w = by_size[table.sizes]
    w.setflags(write=False)
    return WeightVector(w, float(infinite_multiplier))


def baseline_adjust(table: PayoffTable) -> PayoffTable:
    """Shift all payoffs by ``-nu_empty`` so the empty coalition is worth exactly 0."""
    if table.baseline_adjusted:
        return table
    adjusted = table.values - table.values[0]
    adjusted[0] = 0.0
    meta = dict(table.meta)
    meta["baseline"] = table.empty_value
    return table.with_values(adjusted, baseline_adjusted=True, meta=meta)


def sample_coalitions(p: int, m: int, seed: int = 0) -> np.ndarray:
    """Deterministic kernel-weighted sample of ``m`` distinct coalitions.

    The empty and grand coalitions are always included.  Each remaining mask
    is drawn by picking a size ``k`` with probability proportional to
    ``C(p,k) * w(p,k)`` and then a uniform subset of that size, rejecting
    duplicates.  With ``m >= 2**p`` the full enumeration is returned.
    Output is sorted by mask.
    """
    if p < 2:
        raise DomainError("sampling needs p >= 2")
    if m < 2:
        raise DomainError("sample budget m must be >= 2")
    if p > MAX_MASK_P:
        raise CapacityError(f"masks support at most {MAX_MASK_P} features")
    if m >= (1 << p):
        return np.arange(1 << p, dtype=np.int64)

    rng = np.random.default_rng(seed)
    sizes = np.arange(1, p)
    mass = np.array([math.comb(p, k) * shapley_kernel_weight(p, k) for k in sizes])
    remaining = np.array([math.comb(p, k) for k in sizes], dtype=np.int64)
    chosen = {0, full_mask(p)}
    while len(chosen) < m:
        live = remaining > 0
        prob = np.where(live, mass, 0.0)
        k_idx = int(rng.choice(sizes.size, p=prob / prob.sum()))
        members = rng.choice(p, size=int(sizes[k_idx]), replace=False)
        bits = int(np.sum(np.left_shift(1, members.astype(np.int64))))
        if bits not in chosen:
            chosen.add(bits)
            remaining[k_idx] -= 1
    return np.array(sorted(chosen), dtype=np.int64)
