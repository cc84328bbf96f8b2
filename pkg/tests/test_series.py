import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isomon.series import (
    FormMismatchError,
    Jet,
    MatrixLaurent,
    from_json,
    gauge_transform,
    inverse,
    kappa_residue,
    mul,
    polar_decompose,
    residue,
    series_exp,
    series_log,
    to_json,
)

E12 = np.array([[0, 1], [0, 0]], dtype=complex)
E21 = np.array([[0, 0], [1, 0]], dtype=complex)


def rand_series(rng, n, lo, hi, deg=0):
    coeffs = {p: rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for p in range(lo, hi + 1)}
    return MatrixLaurent(n, coeffs, deg)


def test_window_and_zero_bookkeeping():
    a = MatrixLaurent(2, {-2: np.diag([1, -1]), 3: E12}, 1)
    assert a.ord_min == -2 and a.ord_max == 3
    assert np.all(a.coefficient(0) == 0)
    z = MatrixLaurent.zero(2)
    assert z.is_zero() and (a + MatrixLaurent.zero(2, 1)).ord_max == 3


def test_product_window_is_sum_of_windows():
    rng = np.random.default_rng(1)
    a = rand_series(rng, 2, -2, 1)
    b = rand_series(rng, 2, -1, 3)
    c = mul(a, b)
    assert c.ord_min == -3 and c.ord_max == 4


def test_form_mixing_is_an_error():
    a = MatrixLaurent(2, {0: E12}, 0)
    b = MatrixLaurent(2, {0: E21}, 1)
    with pytest.raises(FormMismatchError):
        a + b
    with pytest.raises(FormMismatchError):
        b.derivative()
    with pytest.raises(FormMismatchError):
        mul(b, mul(b, b))


def test_gauge_identity_leaves_connection():
    rng = np.random.default_rng(2)
    a = rand_series(rng, 3, -3, 4, deg=1)
    g = MatrixLaurent.identity(3)
    out = gauge_transform(g, a)
    assert (out - a).is_zero(1e-15)


def test_gauge_scalar_exp_hand_expansion():
    # n=1, A = 0, g = exp(cz): result is c dz
    c = 0.37 - 0.21j
    g = series_exp(MatrixLaurent(1, {1: [[c]]}, 0), ord_max=12)
    a = MatrixLaurent.zero(1, 1)
    out = gauge_transform(g, a, ord_max=8)
    expect = MatrixLaurent(1, {0: [[c]]}, 1)
    assert (out - expect).truncate(hi=8).norm() < 1e-12


def test_gauge_composition_law():
    rng = np.random.default_rng(3)
    a = rand_series(rng, 2, -2, 4, deg=1)
    g = MatrixLaurent(2, {0: np.eye(2) + 0.1 * rng.standard_normal((2, 2)), 1: 0.3 * rng.standard_normal((2, 2))})
    h = MatrixLaurent(2, {0: np.eye(2) + 0.1 * rng.standard_normal((2, 2)), 2: 0.2 * rng.standard_normal((2, 2))})
    lhs = gauge_transform(g, gauge_transform(h, a, ord_max=10), ord_max=6)
    rhs = gauge_transform(mul(g, h, ord_max=12), a, ord_max=6)
    assert (lhs - rhs).truncate(hi=4).norm() < 1e-11


def test_gauge_round_trip():
    rng = np.random.default_rng(4)
    a = rand_series(rng, 2, -2, 3, deg=1)
    g = MatrixLaurent(2, {0: np.eye(2) + 0.2 * rng.standard_normal((2, 2)), 1: 0.4 * rng.standard_normal((2, 2))})
    gi = inverse(g, ord_max=12)
    back = gauge_transform(gi, gauge_transform(g, a, ord_max=10), ord_max=5)
    assert (back - a).truncate(hi=4).norm() < 1e-12


def test_residue_basics():
    c = np.array([[2.0, 1.0], [0.0, -1.0]])
    assert np.allclose(residue(MatrixLaurent(2, {-1: c}, 1)), c)
    assert np.allclose(residue(MatrixLaurent(2, {-2: c}, 1)), 0.0)


def test_residue_of_exact_differential_vanishes():
    rng = np.random.default_rng(5)
    f = rand_series(rng, 3, -4, 6)
    assert np.max(np.abs(residue(f.derivative()))) == 0.0


def test_polar_decompose_bookkeeping():
    a = MatrixLaurent(2, {-2: np.diag([1, -1]), -1: E12, 0: np.eye(2)}, 1)
    parts = polar_decompose(a)
    assert parts["irr"].orders() == [-2]
    assert np.allclose(parts["log_term"], E12)
    assert parts["hol"].orders() == [0]
    # pol = irr + log_term/z exactly
    recon = parts["irr"] + MatrixLaurent(2, {-1: parts["log_term"]}, 1)
    assert (parts["pol"] - recon).is_zero()


def test_polar_decompose_reassembly_random():
    rng = np.random.default_rng(6)
    a = rand_series(rng, 2, -3, 5, deg=1)
    parts = polar_decompose(a)
    assert (parts["pol"] + parts["hol"] - a).is_zero()
    hol = rand_series(rng, 2, 0, 4, deg=1)
    assert polar_decompose(hol)["pol"].is_zero()


def test_trace_paired_residue_convolution():
    rng = np.random.default_rng(7)
    x = rand_series(rng, 2, -3, 3, deg=0)
    y = rand_series(rng, 2, -3, 3, deg=1)
    direct = kappa_residue(x, y)
    brute = sum(
        np.trace(x.coefficient(i) @ y.coefficient(-1 - i)) for i in range(-4, 5)
    )
    assert abs(direct - brute) < 1e-12


def test_log_exp_round_trip():
    rng = np.random.default_rng(8)
    x = MatrixLaurent(2, {1: 0.3 * rng.standard_normal((2, 2)), 2: 0.2 * rng.standard_normal((2, 2))})
    g = series_exp(x, ord_max=10)
    back = series_log(g, ord_max=10)
    assert (back - x).truncate(hi=10).norm() < 1e-12


def test_jet_equality_and_pullback_preserves_polar():
    j1 = Jet(0.0, 2, {4: 0.3})
    j2 = Jet(0.0, 2, {5: -1.0})
    assert j1 == j2  # same center and order: equal as 2-jets
    a = MatrixLaurent(2, {-2: np.diag([1, -1]), -1: E12}, 1)
    pulled = Jet(0.0, 2, {4: 0.25 + 0.1j}).pullback(a, ord_max=1)
    # coordinate changes z + O(z^{k+1}) leave the polar part unchanged
    assert (pulled.truncate(hi=-1) - a.truncate(hi=-1)).norm() < 1e-12


complexes = st.complex_numbers(allow_nan=False, allow_infinity=False, max_magnitude=1e12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-6, 6), complexes), min_size=0, max_size=5), st.integers(0, 2))
def test_json_round_trip_bit_exact(entries, deg):
    coeffs = {}
    for p, z in entries:
        m = np.zeros((2, 2), dtype=complex)
        m[0, 1] = z
        m[1, 0] = 1.0
        coeffs[p] = coeffs.get(p, 0) + m
    a = MatrixLaurent(2, coeffs, deg)
    b = from_json(to_json(a))
    assert b.deg == a.deg and b.orders() == a.orders()
    for p in a.orders():
        assert np.array_equal(a.coefficient(p), b.coefficient(p))
