import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isomon.lie import (
    RootData,
    TorusElement,
    ad_torus_solve,
    dimension_report,
    invariant_pairing,
    log_nonresonant_check,
    regular_check,
)


def test_root_data_counts():
    for n in range(2, 6):
        rd = RootData(n, "sl")
        assert len(rd.roots) == 2 * rd.r
        assert rd.r == n * (n - 1) // 2
        assert rd.l == n - 1
        assert rd.dimG == n * n - 1
        assert rd.dimG == 2 * rd.r + rd.l
        for (i, j) in rd.roots:
            assert (j, i) in rd.roots
    gl = RootData(3, "gl")
    assert gl.l == 3 and gl.dimG == 9 and gl.dimG == 2 * gl.r + gl.l


def test_torus_element_trace_zero():
    TorusElement([1, -1], "sl")
    with pytest.raises(ValueError):
        TorusElement([1, 1], "sl")
    TorusElement([1, 1], "gl")


def test_regular_check_examples():
    assert regular_check(TorusElement([1, -1]))["regular"]
    out = regular_check(TorusElement([1, 1, -2]))
    assert not out["regular"]
    assert (0, 1) in out["vanishing_roots"]


def test_regular_check_against_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = rng.integers(2, 6)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v -= v.mean()
        tol = 10.0 ** rng.uniform(-12, -1)
        got = regular_check(TorusElement(v), tol)
        brute = all(abs(v[i] - v[j]) > tol for i, j in itertools.permutations(range(n), 2))
        assert got["regular"] == brute


def test_log_nonresonant_check():
    assert log_nonresonant_check([0.3, -0.3])["nonresonant"]
    out = log_nonresonant_check([1.5, 0.5])  # difference exactly 1
    assert not out["nonresonant"]


def test_pairing_examples():
    assert invariant_pairing(np.diag([1, -1]), np.diag([1, -1])) == 2
    e12 = np.array([[0, 1], [0, 0]])
    e21 = np.array([[0, 0], [1, 0]])
    assert invariant_pairing(e12, e21) == 1


def test_pairing_ad_invariance_and_bilinearity():
    rng = np.random.default_rng(12)
    for _ in range(30):
        n = rng.integers(2, 5)
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        y = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        g = np.eye(n) + 0.4 * rng.standard_normal((n, n))
        gi = np.linalg.inv(g)
        assert abs(invariant_pairing(g @ x @ gi, g @ y @ gi) - invariant_pairing(x, y)) < 1e-11
        assert abs(invariant_pairing(x, y) - invariant_pairing(y, x)) < 1e-12
        a, b = rng.standard_normal(2)
        assert abs(invariant_pairing(a * x + b * y, y) - (a * invariant_pairing(x, y) + b * invariant_pairing(y, y))) < 1e-11


def test_ad_torus_solve():
    rng = np.random.default_rng(13)
    lam = np.array([1.0, -0.5, -0.5 + 2j])
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    np.fill_diagonal(m, 0.0)
    x = ad_torus_solve(lam, m)
    br = np.diag(lam) @ x - x @ np.diag(lam)
    assert np.max(np.abs(br - m)) < 1e-13


def test_dimension_report_paper_values():
    rd = RootData(2, "sl")  # dimG=3, r=1, l=1
    rep = dimension_report(2, [3], rd)
    assert rep["dimP"] == 24
    assert rep["dimL_cf_eta"] == 14
    assert rep["dimX"] == 14
    assert rep["dimX_equals_dimL_cf_eta"]
    assert rep["stokes_counts"] == [4]


def test_dimension_identity_exhaustive_scan():
    for n in range(2, 6):
        rd = RootData(n, "sl")
        for g in range(0, 7):
            for m in range(1, 5):
                for orders in itertools.combinations_with_replacement(range(1, 7), m):
                    rep = dimension_report(g, list(orders), rd)
                    assert rep["dimX_equals_dimL_cf_eta"], (n, g, orders)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 8), st.lists(st.integers(1, 8), min_size=1, max_size=5), st.integers(2, 6))
def test_dimension_identity_property(g, orders, n):
    rep = dimension_report(g, orders, RootData(n, "sl"))
    assert rep["dimX"] == rep["dimL_cf_eta"]
    assert rep["dimPT"] == 2 * (rep["dimG"] * (g - 1) + (rep["r"] + rep["l"]) * rep["d"])
