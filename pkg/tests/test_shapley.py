import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import shapley_permutations
from sisr import PayoffTable, UnsupportedInputError, exact_shapley, wls_shapley
from sisr.coalitions import incidence_matrix, enumerate_masks


def test_two_player_example():
    t = PayoffTable.from_values([0.0, 1.0, 2.0, 4.0])
    np.testing.assert_allclose(exact_shapley(t).beta, [1.5, 2.5])
    np.testing.assert_allclose(wls_shapley(t).beta, [1.5, 2.5], atol=1e-10)


@pytest.mark.parametrize("p", range(2, 7))
def test_exact_matches_permutation_average(p):
    rng = np.random.default_rng(p)
    vals = rng.normal(size=1 << p)
    np.testing.assert_allclose(exact_shapley(PayoffTable.from_values(vals)).beta, shapley_permutations(vals, p), atol=1e-12)


@pytest.mark.parametrize("p", range(2, 11))
def test_routes_agree(p):
    rng = np.random.default_rng(100 + p)
    t = PayoffTable.from_values(rng.normal(size=1 << p))
    np.testing.assert_allclose(exact_shapley(t).beta, wls_shapley(t).beta, atol=1e-8)


def test_axioms():
    p = 4
    masks = enumerate_masks(p)
    Z = incidence_matrix(masks, p)
    size = Z.sum(axis=1)
    np.testing.assert_allclose(exact_shapley(PayoffTable.from_values(size)).beta, np.ones(p))
    b = np.array([0.5, -1.0, 2.0, 3.0])
    np.testing.assert_allclose(wls_shapley(PayoffTable.from_values(Z @ b + 7)).beta, b, atol=1e-12)
    # feature 3 is null
    vals = np.where(Z[:, 0] == 1, 1.0, 0.0) + Z[:, 1] * Z[:, 3]
    assert exact_shapley(PayoffTable.from_values(vals)).beta[2] == 0.0


@given(arrays(np.float64, 32, elements=st.floats(-100, 100)), arrays(np.float64, 32, elements=st.floats(-100, 100)))
def test_linearity_and_efficiency(a, b):
    sa = exact_shapley(PayoffTable.from_values(a))
    sb = exact_shapley(PayoffTable.from_values(b))
    sab = exact_shapley(PayoffTable.from_values(a + b))
    np.testing.assert_allclose(sab.beta, sa.beta + sb.beta, atol=1e-10)
    assert sa.total == pytest.approx(a[-1] - a[0], abs=1e-9)


def test_symmetry_under_feature_swap():
    rng = np.random.default_rng(0)
    p = 4
    vals = rng.normal(size=1 << p)
    masks = enumerate_masks(p)
    # swap features 1 and 3 (bits 0 and 2)
    swapped = (masks & ~0b101) | ((masks & 1) << 2) | ((masks >> 2) & 1)
    beta = exact_shapley(PayoffTable.from_values(vals)).beta
    beta_s = exact_shapley(PayoffTable.from_pairs(swapped, vals, p=p)).beta
    np.testing.assert_allclose(beta_s, beta[[2, 1, 0, 3]], atol=1e-12)


def test_sampled_table_rejected():
    t = PayoffTable.from_pairs([0, 1, 3], [0.0, 1.0, 2.0])
    with pytest.raises(UnsupportedInputError):
        exact_shapley(t)
    with pytest.raises(UnsupportedInputError):
        wls_shapley(t)
