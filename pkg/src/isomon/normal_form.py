"""Compatible framings, formal normal forms, and the diagonal splitting (T, B).

The recursion cleans the off-diagonal defect of the connection order by order
with elementary conjugators I + w z^m.  For pole order k >= 2 the correction
at each target order is ad(A_{-k})^{-1} of the defect (invertible off the
torus by regularity); for k = 1 it is (m - ad(A_{-1}))^{-1}, which exists
exactly when no root of the residue lies at a positive integer
(non-resonance).  Pollution from a conjugator lands strictly above its target
order, so the sweep is triangular.

diag_split keeps the surviving diagonal (polar and holomorphic) as B and
normalizes T by diag(log T) = 0.  formal_type integrates away B's holomorphic
diagonal, leaving the polar normal form A0 and the full formal gauge.
"""

from __future__ import annotations

import numpy as np

from .lie import ad_torus_solve, log_nonresonant_check, regular_check
from .series import (
    MatrixLaurent,
    gauge_transform,
    inverse,
    mul,
    series_exp,
    series_log,
)


class NotGenericError(ValueError):
    """Leading coefficient is not regular semisimple (or is resonant)."""


class FormalType:
    """Polar normal form data at one pole.

    irregular: {order: diagonal entries} for orders -k..-2;
    Lambda: diagonal entries of the exponent of formal monodromy;
    ghat: the formal gauge taking A to A0 (ghat(0) = I), through order N.
    """

    def __init__(self, k, irregular, Lambda, ghat, order):
        self.k = int(k)
        self.irregular = {int(p): np.asarray(v, dtype=complex) for p, v in irregular.items()}
        self.Lambda = np.asarray(Lambda, dtype=complex)
        self.ghat = ghat
        self.order = int(order)

    @property
    def n(self):
        return self.Lambda.size

    def a0(self):
        """A0 as a 1-form MatrixLaurent."""
        coeffs = {p: np.diag(v) for p, v in self.irregular.items()}
        if np.any(self.Lambda != 0):
            coeffs[-1] = np.diag(self.Lambda)
        return MatrixLaurent(self.n, coeffs, 1)

    def irregular_series(self):
        """The irregular type A0 - Lambda/z dz."""
        return MatrixLaurent(self.n, {p: np.diag(v) for p, v in self.irregular.items()}, 1)

    def leading(self):
        return self.irregular[-self.k] if self.k >= 2 else self.Lambda

    def to_json(self):
        def pair(v):
            return [[float(c.real), float(c.imag)] for c in v]

        return {
            "k": self.k,
            "A0": [{"order": p, "diag": pair(self.irregular[p])} for p in sorted(self.irregular)],
            "Lambda": pair(self.Lambda),
            "gauge_order": self.order,
        }


class DiagSplit:
    """T with T(0) = I and diag(log T) = 0, and the diagonal 1-form B."""

    def __init__(self, T, B, T_inv, order):
        self.T = T
        self.B = B
        self.T_inv = T_inv
        self.order = int(order)

    @property
    def n(self):
        return self.T.n

    def holomorphic_diag(self, m):
        """Diagonal entries of B_m (holomorphic coefficient, m >= 0)."""
        return np.diag(self.B.coefficient(m)).copy()


def _pole_order(a):
    if not a.coeffs or a.ord_min >= 0:
        raise ValueError("connection has no pole at the expansion point")
    return -a.ord_min


def compatible_framing(a, tol=1e-9):
    """Constant frame change g0 diagonalizing the leading coefficient.

    Eigenvalues are sorted ascending lexicographically by (Re, Im); each
    eigenvector is scaled so its largest entry is 1.  Raises NotGenericError
    for non-diagonalizable or resonant (repeated-eigenvalue) leading terms.
    """
    k = _pole_order(a)
    lead = a.coefficient(-k)
    w, v = np.linalg.eig(lead)
    order = np.lexsort((w.imag, w.real))
    w, v = w[order], v[:, order]
    for i in range(w.size - 1):
        if abs(w[i] - w[i + 1]) <= tol:
            raise NotGenericError("not generic: repeated eigenvalues in the leading coefficient")
    # eig can mis-rank the geometric multiplicity only through conditioning;
    # a defective matrix shows up as a near-singular eigenvector matrix.
    if abs(np.linalg.det(v)) < tol:
        raise NotGenericError("not generic: leading coefficient not diagonalizable")
    for j in range(w.size):
        col = v[:, j]
        pivot = np.argmax(np.abs(col))
        v[:, j] = col / col[pivot]
    g0 = np.linalg.inv(v)
    framed = MatrixLaurent(a.n, {p: g0 @ m @ v for p, m in a.coeffs.items()}, 1)
    return g0, framed


def _check_leading(a, tol):
    k = _pole_order(a)
    lead = a.coefficient(-k)
    if np.max(np.abs(lead - np.diag(np.diag(lead)))) > tol:
        raise NotGenericError("leading coefficient is not diagonal; apply compatible_framing first")
    lam = np.diag(lead)
    if k >= 2:
        chk = regular_check(lam, tol)
        if not chk["regular"]:
            raise NotGenericError(f"leading coefficient not regular: roots {chk['vanishing_roots']} vanish")
    else:
        chk = log_nonresonant_check(lam, tol)
        if not chk["nonresonant"]:
            raise NotGenericError(f"resonant logarithmic pole: roots {chk['resonant_roots']}")
    return k, lam


def _offdiag_sweep(a, work, n_targets, lam, k, tol):
    """Remove off-diagonal defects at orders -k+1 .. -k+n_targets.

    Returns (G, a_clean) with a_clean = gauge(G, a) diagonal through the swept
    window; G is a product of elementary conjugators I + w z^m with w strictly
    off-diagonal.
    """
    n = a.n
    a_cur = a.truncate(hi=work)
    g_acc = MatrixLaurent.identity(n)
    for m in range(1, n_targets + 1):
        p = -k + m
        if p > work:
            break
        defect = a_cur.coefficient(p)
        off = defect - np.diag(np.diag(defect))
        if np.max(np.abs(off)) <= 1e-300:
            continue
        if k >= 2:
            w = ad_torus_solve(lam, off)
        else:
            gaps = lam[:, None] - lam[None, :]
            denom = m - gaps
            w = -off / np.where(np.eye(n, dtype=bool), 1.0, denom)
            np.fill_diagonal(w, 0.0)
        g = MatrixLaurent(n, {0: np.eye(n), m: w}, 0)
        a_cur = gauge_transform(g, a_cur, ord_max=work)
        # the conjugator kills the target's off-part exactly; drop the
        # cancellation noise so it cannot masquerade as Stokes-scale data
        cleaned = a_cur.coefficient(p)
        a_cur.coeffs[p] = np.diag(np.diag(cleaned))
        g_acc = mul(g, g_acc, ord_max=work)
    return g_acc, a_cur


def diag_split(a, order=None, tol=1e-9):
    """Diagonal splitting A = gauge(T, B) with B diagonal-valued.

    Normalization: T(0) = I and diag(log T) = 0 at every computed order; B
    keeps its holomorphic diagonal coefficients.  `order` is the budget N
    (coefficients of T and B are reported through order N); default k + 8.
    """
    k, lam = _check_leading(a, tol)
    if order is None:
        order = k + 8
    if order < 1:
        raise ValueError("order budget must be >= 1")
    work = order + k + 4
    g_acc, b = _offdiag_sweep(a, work, order + k, lam, k, tol)
    # Kill the diagonal of log T order by order; right-multiplying T by a
    # diagonal exp(-d z^m) shifts B by m d z^{m-1} dz and leaves it diagonal.
    t_inv = g_acc
    t = inverse(t_inv, ord_max=work)
    for m in range(1, order + 2):
        lg = series_log(t, ord_max=m)
        d = np.diag(np.diag(lg.coefficient(m)))
        if np.max(np.abs(d)) <= 1e-300:
            continue
        h = series_exp(MatrixLaurent(a.n, {m: -d}, 0), ord_max=work)
        t = mul(t, h, ord_max=work)
        t_inv = mul(series_exp(MatrixLaurent(a.n, {m: d}, 0), ord_max=work), t_inv, ord_max=work)
        b = b + MatrixLaurent(a.n, {m - 1: m * d}, 1)
    return DiagSplit(t.truncate(hi=order), b.truncate(hi=order), t_inv.truncate(hi=order + k + 2), order)


def diag_split_relative(a_new, base):
    """Diagonal splitting of a nearby connection anchored to a base split.

    T_new = T_base (I + S) with every elementary factor of (I + S) strictly
    off-diagonal, so diag(S) = 0 to first order in the perturbation; no log
    renormalization is applied.  This is the splitting used for directional
    derivatives of the beta-Hamiltonian.
    """
    order = base.order
    c = gauge_transform(base.T_inv, a_new, ord_max=order + 2)
    k = _pole_order(c)
    lead = c.coefficient(-k)
    lam = np.diag(lead)
    if np.max(np.abs(lead - np.diag(lam))) > 1e-8:
        raise NotGenericError("base split does not diagonalize the leading term of the new connection")
    work = order + k + 2
    c = gauge_transform(base.T_inv, a_new, ord_max=work)
    u_acc, b = _offdiag_sweep(c, work, order + k, lam, k, tol=1e-9)
    t_inv = mul(u_acc, base.T_inv, ord_max=work)
    t = inverse(t_inv, ord_max=order)
    return DiagSplit(t, b.truncate(hi=order), t_inv, order)


def formal_type(a, order=None, tol=1e-9):
    """The unique polar normal form A0 and formal gauge ghat with ghat(0) = I.

    Built on diag_split: the holomorphic diagonal of B is integrated away by a
    further diagonal gauge exp(phi), phi = -int(hol B), which cannot disturb
    the polar part.
    """
    split = diag_split(a, order=order, tol=tol)
    order = split.order
    k = _pole_order(a)
    n = a.n
    phi_coeffs = {}
    for m in range(1, order + 2):
        bm = split.B.coefficient(m - 1)
        d = np.diag(np.diag(bm))
        if np.max(np.abs(d)) > 0:
            phi_coeffs[m] = -d / m
    ghat = mul(series_exp(MatrixLaurent(n, phi_coeffs, 0), ord_max=order), split.T_inv, ord_max=order)
    irregular = {}
    for p in range(-k, -1):
        irregular[p] = np.diag(split.B.coefficient(p)).copy()
    Lambda = np.diag(split.B.coefficient(-1)).copy()
    return FormalType(k, irregular, Lambda, ghat, order)
