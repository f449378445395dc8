import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import sparse_sphere_bruteforce
from sisr import (
    DegenerateThresholdError,
    DomainError,
    PayoffTable,
    StepContext,
    StructuralError,
    gamma_solve,
    gamma_step,
    hard_threshold,
    normalized_hard_threshold,
    objective,
    spectral_norm,
    weight_vector,
)
from sisr.coalitions import enumerate_masks, incidence_matrix


@pytest.mark.parametrize(
    "y, s, expected",
    [([3, 1, -2], 2, [3, 0, -2]), ([3, 1, -2], 3, [3, 1, -2]), ([1, -1, 0], 1, [1, 0, 0])],
)
def test_hard_threshold(y, s, expected):
    np.testing.assert_array_equal(hard_threshold(y, s), expected)


def test_hard_threshold_domain():
    with pytest.raises(DomainError):
        hard_threshold([1.0, 2.0], 0)
    with pytest.raises(DomainError):
        hard_threshold([1.0, 2.0], 3)


@pytest.mark.parametrize(
    "y, s, expected",
    [
        ([3, 0, -4], 2, [0.6, 0, -0.8]),
        ([0, 0, 5], 1, [0, 0, 1]),
        ([2, 1, 1], 2, np.array([2, 1, 0]) / np.sqrt(5)),
    ],
)
def test_normalized_hard_threshold(y, s, expected):
    np.testing.assert_allclose(normalized_hard_threshold(y, s), expected, atol=1e-15)


def test_normalized_hard_threshold_degenerate():
    with pytest.raises(DegenerateThresholdError):
        normalized_hard_threshold([0.0, 0.0], 1)


@pytest.mark.parametrize("seed", range(30))
def test_projection_matches_support_search(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(2, 9))
    s = int(rng.integers(1, min(4, p) + 1))
    y = rng.normal(size=p)
    b = normalized_hard_threshold(y, s)
    assert np.sum((b - y) ** 2) <= sparse_sphere_bruteforce(y, s) + 1e-12


@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(-1e3, 1e3)), st.floats(1e-3, 1e3))
def test_threshold_scale_equivariant(y, c):
    s = max(1, y.size // 2)
    np.testing.assert_allclose(hard_threshold(c * y, s), c * hard_threshold(y, s), rtol=1e-12)


@pytest.mark.parametrize(
    "A, expected",
    [([[2.0, 1.0], [1.0, 2.0]], 3.0), (np.eye(4), 1.0), (np.diag([4.0, 9.0]), 9.0), ([[5.0]], 5.0)],
)
def test_spectral_norm_examples(A, expected):
    assert spectral_norm(np.asarray(A)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_spectral_norm_vs_eigvalsh(seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(7, 7))
    A = B @ B.T
    lam = spectral_norm(A)
    assert lam == pytest.approx(np.linalg.eigvalsh(A)[-1], rel=1e-8)
    assert np.max(np.diag(A)) <= lam * (1 + 1e-12) <= np.trace(A) * (1 + 1e-12)


def test_spectral_norm_asymmetric():
    with pytest.raises(StructuralError):
        spectral_norm(np.array([[1.0, 2.0], [0.0, 1.0]]))


def _unweighted(p):
    Z = incidence_matrix(enumerate_masks(p), p)
    return Z, np.ones(Z.shape[0])


def test_objective_examples():
    Z, w = _unweighted(2)
    assert objective([1.0, 0.0], np.zeros(4), Z, w) == pytest.approx(1.0)
    assert objective([0.0, 0.0], np.array([1.0, 1.0, 0.0, 0.0]), Z, w) == pytest.approx(1.0)
    g = np.array([0.6, 0.8])
    assert objective(g, Z @ g, Z, w) == 0.0
    with pytest.raises(StructuralError):
        objective([1.0], np.zeros(4), Z, w)


def test_gamma_step_hand_example():
    Z, w = _unweighted(2)
    t = Z @ np.array([0.6, 0.8])
    ctx = StepContext.build(Z, w, t, inflation=1e-12)
    assert ctx.rho == pytest.approx(3.0)
    g, degenerate = gamma_step(np.zeros(2), ctx, 2)
    assert not degenerate
    y = np.array([2.0, 2.2]) / 3
    np.testing.assert_allclose(g, y / np.linalg.norm(y), rtol=1e-9)
    np.testing.assert_allclose(g, [0.67267279, 0.73994007], atol=1e-8)


def test_gamma_step_degenerate_keeps_iterate():
    Z, w = _unweighted(2)
    ctx = StepContext.build(Z, w, np.zeros(4))
    g, degenerate = gamma_step(np.zeros(2), ctx, 1)
    assert degenerate and not np.any(g)


def test_gamma_solve_fixed_point():
    Z, w = _unweighted(3)
    g = np.array([0.0, 0.6, 0.8])
    ctx = StepContext.build(Z, w, Z @ g)
    res = gamma_solve(None, ctx, 2, init=g)
    assert res.iterations <= 1
    np.testing.assert_allclose(res.gamma, g, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_gamma_solve_recovers_additive_truth(seed):
    rng = np.random.default_rng(seed)
    p, s = 8, 3
    gstar = np.zeros(p)
    gstar[rng.choice(p, s, replace=False)] = rng.normal(size=s)
    gstar /= np.linalg.norm(gstar)
    table = PayoffTable.from_values(np.zeros(1 << p))
    Z = table.incidence
    W = weight_vector(table)
    ctx = StepContext.build(Z, W, Z @ gstar)
    res = gamma_solve(None, ctx, s, max_iter=100_000)
    assert res.converged
    np.testing.assert_allclose(res.gamma, gstar, atol=1e-8)


def test_gamma_solve_history_non_increasing():
    rng = np.random.default_rng(0)
    table = PayoffTable.from_values(np.zeros(1 << 6))
    Z, W = table.incidence, weight_vector(table)
    ctx = StepContext.build(Z, W, rng.normal(size=Z.shape[0]))
    res = gamma_solve(None, ctx, 3, record=True)
    h = np.array(res.history)
    assert h.size == res.iterations  # zero start is not on the sphere
    assert np.all(np.diff(h) <= 1e-12 * np.maximum(1.0, np.abs(h[:-1])))
    assert res.objective == pytest.approx(h[-1], rel=1e-12, abs=1e-12)


def test_history_includes_feasible_start():
    table = PayoffTable.from_values(np.zeros(1 << 4))
    Z, W = table.incidence, weight_vector(table)
    ctx = StepContext.build(Z, W, np.arange(16.0))
    res = gamma_solve(None, ctx, 2, init=np.array([1.0, 0, 0, 0]), record=True)
    assert len(res.history) == res.iterations + 1
    assert res.history[0] == pytest.approx(ctx.loss([1.0, 0, 0, 0]))


def test_gamma_solve_reports_nonconvergence():
    rng = np.random.default_rng(1)
    table = PayoffTable.from_values(np.zeros(1 << 5))
    Z, W = table.incidence, weight_vector(table)
    ctx = StepContext.build(Z, W, rng.normal(size=Z.shape[0]))
    res = gamma_solve(None, ctx, 2, max_iter=1)
    assert res.iterations == 1 and not res.converged


def test_kernel_matches_python_step():
    rng = np.random.default_rng(2)
    table = PayoffTable.from_values(np.zeros(1 << 5))
    Z, W = table.incidence, weight_vector(table)
    ctx = StepContext.build(Z, W, rng.normal(size=Z.shape[0]))
    g = np.zeros(5)
    for _ in range(20):
        g, _ = gamma_step(g, ctx, 3)
    res = gamma_solve(None, ctx, 3, max_iter=20, tol=0.0)
    np.testing.assert_allclose(res.gamma, g, atol=1e-13)
