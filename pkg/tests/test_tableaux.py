from fractions import Fraction as F
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sperk.tableaux import (
    EmbeddedTableau,
    UnsupportedOrderError,
    WeightSet,
    builtin_pair,
    forward_euler,
    order_residuals,
    ssp_coefficient,
    ssprk33,
    stability_measures,
    stability_polynomial,
    tableau_from_text,
    tableau_to_text,
)

PAIRS = ("pair32", "pair42", "pair75_53")


def test_pair32_coefficients():
    tab = builtin_pair("pair32")
    assert tab.a_matrix[1, 0] == 3 / 8
    np.testing.assert_array_equal(tab.a_matrix[2, :2], [3 / 16, 3 / 16])
    np.testing.assert_allclose(tab.weights("b"), [-1 / 3, 4 / 9, 8 / 9], rtol=0, atol=1e-16)
    np.testing.assert_allclose(tab.weights("bhat"), [-1 / 3, -20 / 9, 32 / 9], rtol=0, atol=1e-15)


def test_pair42_coefficients():
    tab = builtin_pair("pair42")
    np.testing.assert_allclose(tab.weights("bhat"), [1 / 6, 1 / 3, 1 / 3, 1 / 6], rtol=0, atol=1e-16)
    np.testing.assert_allclose(tab.weights("b"), [2 / 125, 17 / 25, 36 / 125, 2 / 125], rtol=0, atol=1e-16)


def test_pair75_53_coefficients():
    tab = builtin_pair("pair75_53")
    assert tab.a_matrix[1, 0] == 0.377268915331368
    assert tab.weights("bhat")[4] == 0.287632146308408
    assert tab.weights("b")[6] == -0.21850836444657
    assert [ws.order for ws in tab.weight_sets] == [5, 3]


def test_unknown_pair_names_valid_options():
    with pytest.raises(KeyError, match="pair75_53"):
        builtin_pair("rk4")


def test_invariants_rejected():
    with pytest.raises(ValueError, match="explicit"):
        EmbeddedTableau(np.eye(2), (WeightSet("b", np.array([0.5, 0.5]), 1),))
    with pytest.raises(ValueError, match="sum"):
        EmbeddedTableau(np.zeros((2, 2)), (WeightSet("b", np.array([0.5, 0.6]), 1),))
    with pytest.raises(ValueError, match="abscissae"):
        EmbeddedTableau(np.array([[0, 0], [1, 0]]), (WeightSet("b", np.array([0.5, 0.5]), 1),),
                        c_nodes=np.array([0.0, 0.5]))


def test_forward_euler_residual():
    assert [v for _, v in order_residuals(forward_euler(), "b", 1)] == [0.0]


def _rk4_conditions(a, b):
    """The eight order-4 conditions written out by hand."""
    c = a.sum(axis=1)
    return [
        b.sum() - 1, b @ c - 1 / 2,
        b @ c**2 - 1 / 3, b @ a @ c - 1 / 6,
        b @ c**3 - 1 / 4, b @ (c * (a @ c)) - 1 / 8, b @ a @ c**2 - 1 / 12, b @ a @ a @ c - 1 / 24,
    ]


def test_rk4_residuals_match_hand_written_conditions():
    tab = builtin_pair("pair42")
    res = order_residuals(tab, "bhat", 4)
    assert len(res) == 8
    oracle = _rk4_conditions(tab.a_matrix, tab.weights("bhat"))
    assert max(abs(v) for v in oracle) < 1e-14
    assert max(abs(v) for _, v in res) < 1e-14


def test_condition_counts():
    tab = builtin_pair("pair75_53")
    assert [len(order_residuals(tab, "b", p)) for p in range(1, 6)] == [1, 2, 4, 8, 17]
    with pytest.raises(UnsupportedOrderError):
        order_residuals(tab, "b", 6)


@pytest.mark.parametrize("name", PAIRS)
def test_declared_orders_hold(name):
    tab = builtin_pair(name)
    for ws in tab.weight_sets:
        res = order_residuals(tab, ws.label, ws.order)
        assert max(abs(v) for _, v in res) < 1e-8, (name, ws.label)


@pytest.mark.parametrize("name,label", [("pair32", "b"), ("pair32", "bhat"), ("pair42", "b"),
                                        ("pair42", "bhat"), ("pair75_53", "bhat")])
def test_declared_orders_are_sharp(name, label):
    tab = builtin_pair(name)
    ws = tab.weight_set(label)
    res = order_residuals(tab, label, ws.order + 1)
    assert max(abs(v) for _, v in res) > 1e-4


def test_blended_weights_keep_min_order():
    tab = builtin_pair("pair75_53")
    for gamma in np.linspace(0, 1, 11):
        w = gamma * tab.weights("b") + (1 - gamma) * tab.weights("bhat")
        res = order_residuals(tab, "b", 3, weights=w)
        assert max(abs(v) for _, v in res) < 1e-8


@given(st.floats(0, 1))
def test_blended_weights_property(gamma):
    tab = builtin_pair("pair42")
    w = gamma * tab.weights("b") + (1 - gamma) * tab.weights("bhat")
    assert max(abs(v) for _, v in order_residuals(tab, "b", 2, weights=w)) < 1e-8


def test_stability_polynomial_examples():
    np.testing.assert_array_equal(stability_polynomial(forward_euler(), "b"), [1, 1])
    np.testing.assert_allclose(stability_polynomial(builtin_pair("pair32"), "bhat"), [1, 1, 1 / 2, 1 / 4],
                               atol=1e-15)


def test_pair42_real_axis_polynomial_against_exact_arithmetic():
    a = [[F(0)] * 4 for _ in range(4)]
    tab = builtin_pair("pair42")
    for j, k in itertools.product(range(4), range(4)):
        a[j][k] = F(tab.a_matrix[j, k]).limit_denominator(1000)
    b = [F(2, 125), F(17, 25), F(36, 125), F(2, 125)]
    c = [sum(row) for row in a]
    ac = [sum(a[j][k] * c[k] for k in range(4)) for j in range(4)]
    a2c = [sum(a[j][k] * ac[k] for k in range(4)) for j in range(4)]
    oracle = [1, sum(b), sum(bi * ci for bi, ci in zip(b, c)), sum(bi * v for bi, v in zip(b, ac)),
              sum(bi * v for bi, v in zip(b, a2c))]
    poly = stability_polynomial(tab, "b")
    np.testing.assert_allclose(poly, [float(v) for v in oracle], atol=1e-15)
    # exact values for the printed coefficients: alpha_3 = 2/25, alpha_4 = 1/250
    assert oracle[3] == F(2, 25) and oracle[4] == F(1, 250)


@pytest.mark.parametrize("name", PAIRS)
def test_polynomial_is_one_at_origin(name):
    tab = builtin_pair(name)
    for label in tab.labels:
        assert np.polynomial.polynomial.polyval(0.0, stability_polynomial(tab, label)) == 1.0


def test_forward_euler_measures():
    m = stability_measures([1, 1], resolution=1e-6)
    assert abs(m.real_axis_extent - 2) <= 1e-6
    assert m.imag_axis_extent <= 1e-6
    assert abs(m.inscribed_disc_radius - 1) <= 1e-6


def test_rk4_imaginary_extent_matches_dense_sampling():
    poly = [1, 1, 1 / 2, 1 / 6, 1 / 24]
    m = stability_measures(poly, resolution=1e-6)
    y = np.linspace(0, 3, 300001)
    r = np.abs(np.polynomial.polynomial.polyval(1j * y, poly))
    oracle = y[np.argmax(r > 1 + 1e-12)]
    assert abs(m.imag_axis_extent - 2 * np.sqrt(2)) <= 1e-5
    assert abs(m.imag_axis_extent - oracle) <= 2e-5


def test_inconsistent_polynomial_warns():
    with pytest.warns(RuntimeWarning):
        m = stability_measures([1, 0.5], resolution=1e-4)
    assert m.inconsistent


def _absolute_monotonicity_oracle(a, b, r):
    s = len(b)
    k = np.zeros((s + 1, s + 1))
    k[:s, :s] = a
    k[s, :s] = b
    inv = np.linalg.inv(np.eye(s + 1) + r * k)
    return (k @ inv >= -1e-12).all() and ((inv.sum(axis=1) >= -1e-12) & (inv.sum(axis=1) <= 1 + 1e-12)).all()


def test_ssp_forward_euler_and_ssprk33():
    assert abs(ssp_coefficient(forward_euler(), "b") - 1) < 1e-6
    tab = ssprk33()
    c = ssp_coefficient(tab, tab.labels[0])
    assert abs(c - 1) < 1e-6
    b = tab.weights(tab.labels[0])
    assert _absolute_monotonicity_oracle(tab.a_matrix, b, 0.999)
    assert not _absolute_monotonicity_oracle(tab.a_matrix, b, 1.001)


def test_ssprk53_coefficient():
    tab = builtin_pair("pair75_53")
    c = ssp_coefficient(tab, "bhat")
    assert abs(c - 2.65) < 0.01
    a5, b5 = tab.a_matrix[:5, :5], tab.weights("bhat")[:5]
    assert _absolute_monotonicity_oracle(a5, b5, c - 1e-4)
    assert not _absolute_monotonicity_oracle(a5, b5, c + 1e-4)


@pytest.mark.parametrize("name", PAIRS)
def test_ssp_invariant_under_weight_permutation(name):
    tab = builtin_pair(name)
    flipped = tab.with_weights(tuple(reversed(tab.weight_sets)))
    for label in tab.labels:
        assert abs(ssp_coefficient(tab, label) - ssp_coefficient(flipped, label)) < 1e-6


@settings(max_examples=25)
@given(st.lists(st.floats(0.05, 2.0), min_size=3, max_size=3))
def test_text_round_trip(raw):
    a = np.zeros((3, 3))
    a[1, 0], a[2, 0], a[2, 1] = raw
    b = np.array([0.25, 0.25, 0.5])
    tab = EmbeddedTableau(a, (WeightSet("x", b, 1), WeightSet("y", np.array([1.0, 0, 0]), 1)))
    back = tableau_from_text(tableau_to_text(tab))
    np.testing.assert_array_equal(back.a_matrix, tab.a_matrix)
    assert back.labels == ["x", "y"]
    np.testing.assert_array_equal(back.weights("x"), b)
