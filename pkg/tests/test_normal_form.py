import numpy as np
import pytest

from isomon.normal_form import (
    NotGenericError,
    compatible_framing,
    diag_split,
    diag_split_relative,
    formal_type,
)
from isomon.series import MatrixLaurent, gauge_transform, series_log

E12 = np.array([[0, 1], [0, 0]], dtype=complex)


def rand_connection(rng, n, k, hol=4, scale=0.5):
    lead = np.diag(np.arange(1, n + 1) + 1j * rng.standard_normal(n))
    coeffs = {-k: lead}
    for p in range(-k + 1, hol + 1):
        coeffs[p] = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return MatrixLaurent(n, coeffs, 1)


def test_framing_already_diagonal():
    a = MatrixLaurent(2, {-2: np.diag([-1.0, 1.0]), -1: E12}, 1)
    g0, framed = compatible_framing(a)
    assert np.allclose(g0, np.eye(2))


def test_framing_hadamard_case():
    lead = np.array([[0, 1], [1, 0]], dtype=complex)
    a = MatrixLaurent(2, {-2: lead}, 1)
    g0, framed = compatible_framing(a)
    w, v = np.linalg.eig(lead)  # independent oracle
    got = framed.coefficient(-2)
    assert np.allclose(got, np.diag([-1.0, 1.0]), atol=1e-12)
    assert np.max(np.abs(got - np.diag(np.diag(got)))) < 1e-12


def test_framing_rejects_nilpotent():
    a = MatrixLaurent(2, {-2: E12}, 1)
    with pytest.raises(NotGenericError):
        compatible_framing(a)


def test_formal_type_hand_recursion():
    # A = diag(1,-1) z^-2 dz + E12 z^-1 dz: Lambda = 0, ghat = I + E12 z/2 + ...
    a = MatrixLaurent(2, {-2: np.diag([1.0, -1.0]), -1: E12}, 1)
    ft = formal_type(a, order=8)
    assert np.allclose(ft.Lambda, 0.0, atol=1e-14)
    assert np.allclose(ft.irregular[-2], [1.0, -1.0])
    assert np.allclose(ft.ghat.coefficient(0), np.eye(2))
    assert np.allclose(ft.ghat.coefficient(1), E12 / 2, atol=1e-14)


def test_formal_type_diagonal_input_is_fixed():
    a = MatrixLaurent(2, {-3: np.diag([2.0, -2.0]), -1: np.diag([0.3, -0.3])}, 1)
    ft = formal_type(a, order=6)
    assert np.allclose(ft.Lambda, [0.3, -0.3])
    assert (ft.ghat - MatrixLaurent.identity(2)).is_zero(1e-14)


def test_formal_type_gauge_invariance():
    rng = np.random.default_rng(20)
    a = rand_connection(rng, 2, 2)
    h = MatrixLaurent(2, {0: np.eye(2), 1: 0.3 * rng.standard_normal((2, 2)), 2: 0.2 * rng.standard_normal((2, 2))})
    a2 = gauge_transform(h, a, ord_max=16)
    f1, f2 = formal_type(a, order=10), formal_type(a2, order=10)
    assert np.max(np.abs(f1.Lambda - f2.Lambda)) < 1e-10
    for p in f1.irregular:
        assert np.max(np.abs(f1.irregular[p] - f2.irregular[p])) < 1e-10


def test_reconstruction_and_leading_preserved():
    rng = np.random.default_rng(21)
    for k in (2, 3):
        a = rand_connection(rng, 3, k)
        n_budget = 9
        ft = formal_type(a, order=n_budget)
        assert np.array_equal(ft.irregular[-k], np.diag(a.coefficient(-k)))
        rec = gauge_transform(ft.ghat, a, ord_max=n_budget - k - 1)
        defect = (rec - ft.a0()).truncate(hi=n_budget - k - 1)
        assert defect.norm() < 1e-9


def test_uniqueness_bitwise_stability():
    rng = np.random.default_rng(22)
    a = rand_connection(rng, 3, 2)
    f1 = formal_type(a, order=8)
    f2 = formal_type(a, order=8)
    for p in f1.ghat.orders():
        assert np.array_equal(f1.ghat.coefficient(p), f2.ghat.coefficient(p))


def test_diag_split_diagonal_input():
    a = MatrixLaurent(2, {-2: np.diag([1.0, -1.0]), 0: np.diag([0.5, -0.5])}, 1)
    sp = diag_split(a, order=6)
    assert (sp.T - MatrixLaurent.identity(2)).is_zero(1e-14)
    assert (sp.B - a).truncate(hi=6).is_zero(1e-13)


def test_diag_split_invariants_and_substitution_oracle():
    rng = np.random.default_rng(23)
    for k in (2, 3):
        a = rand_connection(rng, 2, k)
        sp = diag_split(a, order=k + 8)
        # B diagonal
        assert sp.B.max_offdiag() < 1e-10
        # diag(log T) = 0 at every computed order
        lg = series_log(sp.T, ord_max=sp.order)
        assert lg.diag_part().norm() < 1e-11
        # T(0) = I
        assert np.allclose(sp.T.coefficient(0), np.eye(2))
        # substitution oracle: gauge(T, B) = A through the reliable window
        rec = gauge_transform(sp.T, sp.B, ord_max=sp.order - k - 1)
        assert (rec - a).truncate(hi=sp.order - k - 1).norm() < 1e-9
        # polar parts of B and of the formal type agree exactly
        ft = formal_type(a, order=k + 8)
        assert (sp.B.truncate(hi=-1) - ft.a0()).norm() < 1e-11


def test_diag_split_k1_log_pole():
    rng = np.random.default_rng(24)
    a = MatrixLaurent(2, {-1: np.diag([0.3, -0.3]), 0: 0.4 * rng.standard_normal((2, 2)), 1: 0.2 * rng.standard_normal((2, 2))}, 1)
    sp = diag_split(a, order=8)
    assert sp.B.max_offdiag() < 1e-10
    rec = gauge_transform(sp.T, sp.B, ord_max=5)
    assert (rec - a).truncate(hi=5).norm() < 1e-10
    ft = formal_type(a, order=8)
    assert np.allclose(ft.Lambda, [0.3, -0.3], atol=1e-12)


def test_diag_split_k1_resonant_rejected():
    a = MatrixLaurent(2, {-1: np.diag([1.5, 0.5]), 0: E12}, 1)
    with pytest.raises(NotGenericError):
        diag_split(a, order=6)


def test_diag_split_relative_first_order_anchoring():
    rng = np.random.default_rng(25)
    a = rand_connection(rng, 2, 3)
    base = diag_split(a, order=11)
    b0 = MatrixLaurent(2, {0: rng.standard_normal((2, 2)), 1: rng.standard_normal((2, 2))}, 1)
    eps = 1e-6
    spl = diag_split_relative(a + b0.scale(eps), base)
    # reproduces the perturbed connection
    rec = gauge_transform(spl.T, spl.B, ord_max=5)
    assert (rec - (a + b0.scale(eps))).truncate(hi=5).norm() < 1e-9
    assert spl.B.max_offdiag() < 1e-10
    # anchoring: S := T_base^{-1} T_new - I is O(eps) with diag(S) = O(eps^2)
    from isomon.series import inverse, mul

    s = mul(inverse(base.T, ord_max=8), spl.T, ord_max=8) - MatrixLaurent.identity(2)
    assert 0 < s.truncate(hi=8).norm() < 1e3 * eps
    assert s.diag_part().truncate(hi=8).norm() < 1e3 * eps ** 2
