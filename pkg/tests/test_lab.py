import math

import numpy as np
import pytest
from scipy.stats import pearsonr

from sisr import ConfigurationError, DomainError, SolveOptions, UnsupportedInputError, solve
from sisr.coalitions import enumerate_masks, incidence_matrix
from sisr.lab import (
    SPARSE_TRANSFORMS,
    TRANSFORM_SCHEMES,
    affinity,
    gen_gaussian_design,
    gen_max_payoffs,
    gen_sparse_payoffs,
    gen_transform_payoffs,
    pseudo_r2_payoffs,
    r2_payoffs,
    support_recovery,
    timing_sweep,
)
from sisr.lab import experiments
from sisr.lab.generators import standard_normal, transform_scheme


def nested_violation(table):
    v, p = table.values, table.p
    worst = 0.0
    for m in range(1 << p):
        for j in range(p):
            if not m >> j & 1:
                worst = max(worst, v[m] - v[m | 1 << j])
    return worst


def test_c0_small_p():
    _, truth = gen_transform_payoffs(2, "square-root", seed=0)
    assert truth.c0 == pytest.approx(math.sqrt(3 / 15))
    assert np.linalg.norm(truth.gamma_star) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("scheme", TRANSFORM_SCHEMES)
def test_transform_generator_contract(scheme):
    table, truth = gen_transform_payoffs(6, scheme, seed=3)
    assert table.full_enumeration and table.values[0] == pytest.approx(table.values.min())
    ts = truth.transform.forward(table.values)
    assert np.all(np.diff(ts) >= -1e-12)  # sorted draws, monotone Q
    np.testing.assert_allclose(ts, truth.t_star, rtol=1e-8, atol=1e-10)
    assert truth.transform.forward(np.array([0.0]))[0] == pytest.approx(0.0, abs=1e-12)
    again, _ = gen_transform_payoffs(6, scheme, seed=3)
    np.testing.assert_array_equal(again.values, table.values)


def test_transform_scheme_constants():
    _, c1, _ = transform_scheme("tangent")
    assert c1 == 10.0
    _, c1, c2 = transform_scheme("normal-cdf", 0.3)
    assert c1 == pytest.approx(1 / math.sqrt(3))
    from scipy.special import ndtri
    assert c2 == pytest.approx(ndtri(0.3 / math.sqrt(3)))
    with pytest.raises(ConfigurationError):
        gen_transform_payoffs(4, "cubic", 0)


@pytest.mark.parametrize("name", sorted(SPARSE_TRANSFORMS))
def test_sparse_transforms_fix_zero_and_invert(name):
    T = SPARSE_TRANSFORMS[name]
    x = np.linspace(0.0, 3.0, 7)
    assert T.forward(np.array([0.0]))[0] == 0.0
    np.testing.assert_allclose(T.inverse(T.forward(x)), x, rtol=1e-12, atol=1e-12)


def test_sparse_noiseless_is_additive():
    table, truth = gen_sparse_payoffs(6, sigma0=0.0, seed=0)
    Z = incidence_matrix(enumerate_masks(6), 6)
    np.testing.assert_allclose(np.cbrt(table.values), Z @ truth.gamma_star, atol=1e-12)
    sol = solve(table, SolveOptions(sparsity=3))
    assert set(np.flatnonzero(sol.gamma)) == set(truth.support)
    assert affinity(sol.gamma, truth.gamma_star) >= 99.99


def test_sparse_generator_determinism_and_edges():
    a, ta = gen_sparse_payoffs(7, sigma0=0.1, seed=11)
    b, _ = gen_sparse_payoffs(7, sigma0=0.1, seed=11)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.values[0] == 0.0
    assert a.grand_value == pytest.approx(ta.gamma_star.sum() ** 3)
    with pytest.raises(DomainError):
        gen_sparse_payoffs(4, gamma_star=np.ones(4))


def test_sparse_even_root_clamps():
    # square-root inverse needs non-negative draws; huge noise forces clamping
    table, truth = gen_sparse_payoffs(5, transform="square-root", sigma0=50.0, seed=0)
    assert np.all(truth.t_star >= 0)
    assert table.meta["clamped"] == truth.extras["clamped"] >= 0


def test_standard_normal_moments():
    z = standard_normal(np.random.default_rng(0), 200_000)
    assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01


@pytest.mark.parametrize(
    "beta, expected", [([1.0, 2.0], [0, 1, 2, 2]), ([2.0, 2.0], [0, 2, 2, 2])]
)
def test_max_payoffs(beta, expected):
    np.testing.assert_array_equal(gen_max_payoffs(2, beta).values, expected)


def test_max_payoffs_default():
    assert gen_max_payoffs(8).grand_value == 8.0
    with pytest.raises(DomainError):
        gen_max_payoffs(3, [-1.0, 1.0, 2.0])


def test_design_reproducible_and_shaped():
    d = gen_gaussian_design(p=6, seed=1)
    assert d.X.shape == (30, 6)
    e = gen_gaussian_design(p=6, seed=1)
    np.testing.assert_array_equal(d.X, e.X)
    np.testing.assert_array_equal(d.y, e.y)
    with pytest.raises(DomainError):
        gen_gaussian_design(p=4, theta=1.0)
    with pytest.raises(DomainError):
        gen_gaussian_design(n=5, p=4)


def test_design_independent_columns_at_theta_zero():
    d = gen_gaussian_design(n=500, p=5, theta=0.0, seed=0)
    r = np.corrcoef(d.X.T)
    assert np.max(np.abs(r - np.eye(5))) < 0.2


def test_design_correlation_structure():
    d = gen_gaussian_design(n=20000, p=3, theta=0.5, seed=0)
    np.testing.assert_allclose(np.cov(d.X.T), [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]], atol=0.05)


def test_r2_payoffs():
    d = gen_gaussian_design(p=6, seed=2)
    t = r2_payoffs(d)
    assert t.values[0] == 0.0 and t.grand_value > 0.9
    assert nested_violation(t) == 0.0
    # independent check of one subset with an explicit intercept column
    cols = [0, 2]
    X = np.column_stack([np.ones(d.n), d.X[:, cols]])
    coef = np.linalg.lstsq(X, d.y, rcond=None)[0]
    r2 = 1 - np.sum((d.y - X @ coef) ** 2) / np.sum((d.y - d.y.mean()) ** 2)
    assert t.value_of(0b101) == pytest.approx(r2, rel=1e-12)
    np.testing.assert_array_equal(r2_payoffs(d, n_jobs=2).values, t.values)


def test_r2_noise_free_full_model():
    d = gen_gaussian_design(p=4, seed=0)
    exact = type(d)(d.X, d.X @ d.alpha_star, d.theta, d.alpha_star, d.task)
    assert r2_payoffs(exact).grand_value == pytest.approx(1.0, abs=1e-12)


def test_r2_rank_deficient_flagged():
    d = gen_gaussian_design(p=3, seed=0)
    X = d.X.copy()
    X[:, 2] = X[:, 0]
    t = r2_payoffs(type(d)(X, d.y, d.theta, d.alpha_star, d.task))
    assert 0b101 in t.meta["rank_deficient"] and 0b111 in t.meta["rank_deficient"]


def test_pseudo_r2_payoffs():
    d = gen_gaussian_design(p=5, task="binary", seed=3, alpha_star=np.full(5, 0.5))
    t = pseudo_r2_payoffs(d)
    assert t.values[0] == 0.0
    assert np.all((t.values >= 0) & (t.values < 1))
    assert nested_violation(t) <= 1e-8
    # compare a single-feature fit against scipy's optimizer
    from scipy.optimize import minimize

    X = np.column_stack([np.ones(d.n), d.X[:, 1]])

    def dev(b):
        eta = X @ b
        return 2 * np.sum(np.logaddexp(0, eta) - d.y * eta)

    ybar = d.y.mean()
    null = dev(np.array([np.log(ybar / (1 - ybar)), 0.0]))
    best = minimize(dev, np.zeros(2), method="BFGS", options={"gtol": 1e-10}).fun
    assert t.value_of(0b10) == pytest.approx(1 - best / null, abs=1e-7)


def test_pseudo_r2_rejects_wrong_task():
    with pytest.raises(UnsupportedInputError):
        pseudo_r2_payoffs(gen_gaussian_design(p=3, seed=0))
    with pytest.raises(UnsupportedInputError):
        r2_payoffs(gen_gaussian_design(p=3, task="binary", seed=0))


def test_affinity_and_support():
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    assert affinity(e1, e1) == 100.0
    assert affinity(e1, e2) == 0.0
    assert affinity(-e1, e1) == -100.0
    assert affinity(-e1, e1, absolute=True) == 100.0
    with pytest.raises(DomainError):
        affinity(2 * e1, e1)
    assert support_recovery([1, 1, 1, 0], [0, 1]) == 100.0
    assert support_recovery([0, 0, 1, 1], [0, 1]) == 0.0
    assert support_recovery([1, 0, 0], [0, 1]) == 50.0
    with pytest.raises(DomainError):
        support_recovery([1.0], [])


def test_timing_sweep_rows_sorted():
    table, _ = gen_sparse_payoffs(6, sigma0=1e-3, seed=0)
    rows = timing_sweep(table, [4, 2], repeats=1)
    assert [r.s for r in rows] == [2, 4]
    assert len(timing_sweep(table, [3], repeats=1)) == 1


def test_experiment_drivers_small():
    res = experiments.transforms(p=5, schemes=["square-root"])
    assert res.summary["square-root"] > 0.9
    assert res.table.splitlines()[0].split("\t")[3] == "correlation"
    t1 = experiments.table1(p_list=(6,), sigma0_list=(1e-3,), runs=2)
    header, row = t1.table.strip().splitlines()
    assert header.split("\t") == ["p", "Affn[sigma0=0.001]", "Supp[sigma0=0.001]"]
    assert row.split("\t")[0] == "6"
    tm = experiments.timing(p=6, repeats=1)
    assert tm.table.splitlines()[-1].startswith("# trend:")
    grid = experiments.r2_grid(p_list=(5,), tasks=("continuous",))
    assert "curves" in grid.extra
    wta = experiments.winner_takes_all(p=6)
    assert wta.summary["correlation"] > 0.99
