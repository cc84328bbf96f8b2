import numpy as np
import pytest

from isomon.rational import RationalForm
from isomon.series import MatrixLaurent
from isomon.transport import Arc, Line, MarginError, prepare_rhs, transport
from isomon import _kernel_py


def test_tableau_consistency():
    # row sums of the a-table must reproduce the nodes; weights sum to 1
    for i in range(1, 7):
        assert abs(sum(_kernel_py.A_TAB[i]) - _kernel_py.C[i]) < 1e-15
    assert abs(_kernel_py.B5.sum() - 1.0) < 1e-15
    assert abs(_kernel_py.ERR.sum()) < 1e-15


def test_empirical_order_five():
    # integrate y' = A y with known exponential solution at fixed step counts
    a = np.array([[0.3 + 0.2j]])
    rf = RationalForm(1, 1)
    rf.add_poly_term(0, a)
    centers, orders, pcoefs, poly = prepare_rhs(rf)
    seg = np.array([[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]])
    errs = []
    for rtol in (1e-6, 1e-9, 1e-12):
        phi, _, _ = _kernel_py.transport_segments(
            centers, orders, pcoefs, poly, seg, np.eye(1, dtype=complex), rtol, rtol * 1e-3
        )
        errs.append(abs(phi[0, 0] - np.exp(a[0, 0])))
    assert errs[2] < errs[0]
    assert errs[2] < 1e-11


def test_zero_connection_identity():
    rf = RationalForm(2, 1)
    out = transport(rf, [0.0, 1.0 + 1.0j, 2.0])
    assert np.allclose(out, np.eye(2), atol=1e-12)


def test_abelian_exact_segment():
    c = 0.3 + 0.4j
    rf = RationalForm(1, 1)
    rf.add_poly_term(0, [[c]])
    out = transport(rf, [0.0, 1.0], rtol=1e-12, atol=1e-15)
    assert abs(out[0, 0] - np.exp(c)) < 1e-11


def test_abelian_loop_monodromy():
    c = 0.23 - 0.11j
    rf = RationalForm(1, 1)
    rf.add_pole_term(0.0, 1, [[c]])
    out = transport(rf, [Arc(0.0, 1.0, 0.0, 2 * np.pi)], rtol=1e-12, atol=1e-15)
    assert abs(out[0, 0] - np.exp(2j * np.pi * c)) < 1e-10


def test_homotopic_paths_agree():
    rf = RationalForm(2, 1)
    rf.add_pole_term(5.0, 2, np.array([[1.0, 2.0], [3.0, 4.0]]))
    a = transport(rf, [0.0, 1.0 + 1.0j, 2.0], rtol=1e-11)
    b = transport(rf, [0.0, 1.0 - 1.0j, 2.0], rtol=1e-11)
    assert np.max(np.abs(a - b)) < 1e-9


def test_margin_violation_raises():
    rf = RationalForm(1, 1)
    rf.add_pole_term(0.5 + 0.0j, 1, [[1.0]])
    with pytest.raises(MarginError):
        transport(rf, [0.0, 1.0], margin=0.1)


def test_local_laurent_rhs_matches_rational():
    rng = np.random.default_rng(31)
    m2 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    m1 = rng.standard_normal((2, 2))
    ml = MatrixLaurent(2, {-2: m2, -1: m1, 0: np.eye(2)}, 1)
    rf = RationalForm(2, 1)
    rf.add_pole_term(0.0, 2, m2)
    rf.add_pole_term(0.0, 1, m1)
    rf.add_poly_term(0, np.eye(2))
    path = [1.0, 1.0 + 1.0j, 2.0j]
    a = transport(ml, path, rtol=1e-11)
    b = transport(rf, path, rtol=1e-11)
    assert np.max(np.abs(a - b)) < 1e-9


def test_kernel_twins_agree():
    pytest.importorskip("isomon._kernel_cy")
    from isomon import _kernel_cy

    rng = np.random.default_rng(32)
    rf = RationalForm(2, 1)
    rf.add_pole_term(0.0, 2, rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    rf.add_pole_term(1.5, 1, rng.standard_normal((2, 2)))
    centers, orders, pcoefs, poly = prepare_rhs(rf)
    segs = np.array([Line(0.5j, 3.0 + 0.5j).row(), Arc(0.0, 3.05, np.arctan2(0.5, 3.0), 2.0).row()])
    phi0 = np.eye(2, dtype=complex)
    a, _, _ = _kernel_py.transport_segments(centers, orders, pcoefs, poly, segs, phi0, 1e-11, 1e-14)
    b, _, _ = _kernel_cy.transport_segments(centers, orders, pcoefs, poly, segs, phi0, 1e-11, 1e-14)
    assert np.max(np.abs(a - b)) < 1e-12
