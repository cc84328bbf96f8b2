"""Matrix realizations of the Lie-theoretic scaffolding for sl_n and gl_n.

Roots are ordered index pairs (i, j), i != j, acting on a diagonal torus
element lambda by alpha(lambda) = lambda_i - lambda_j.  The invariant pairing
is the trace form tr(XY) (not the Killing form; they differ by 2n on sl_n and
every downstream Hamiltonian inherits this single normalization).
"""

from __future__ import annotations

import itertools

import numpy as np


class RootData:
    def __init__(self, n, algebra="sl"):
        if algebra not in ("sl", "gl"):
            raise ValueError("algebra must be 'sl' or 'gl'")
        self.n = int(n)
        self.algebra = algebra
        self.roots = [(i, j) for i in range(self.n) for j in range(self.n) if i != j]
        self.r = self.n * (self.n - 1) // 2
        self.l = self.n - 1 if algebra == "sl" else self.n
        self.dimG = self.n * self.n - 1 if algebra == "sl" else self.n * self.n

    def positive_roots(self):
        return [(i, j) for (i, j) in self.roots if i < j]

    def __repr__(self):
        return f"RootData({self.algebra}_{self.n}: r={self.r}, l={self.l}, dimG={self.dimG})"


class TorusElement:
    def __init__(self, entries, algebra="sl"):
        self.entries = np.asarray(entries, dtype=complex)
        self.algebra = algebra
        if algebra == "sl" and abs(self.entries.sum()) > 1e-12:
            raise ValueError("sl torus element must be trace-free")

    @property
    def n(self):
        return self.entries.size

    def matrix(self):
        return np.diag(self.entries)

    def __repr__(self):
        return f"TorusElement({self.entries})"


def regular_check(lam, tol=1e-9):
    """Is lambda regular (all roots nonvanishing beyond tol)?

    lam may be a TorusElement or a vector of diagonal entries.  Returns a dict
    with the verdict and the list of vanishing roots.
    """
    v = lam.entries if isinstance(lam, TorusElement) else np.asarray(lam, dtype=complex)
    vanishing = [
        (i, j)
        for i, j in itertools.permutations(range(v.size), 2)
        if abs(v[i] - v[j]) <= tol
    ]
    return {"regular": not vanishing, "vanishing_roots": vanishing}


def log_nonresonant_check(lam, tol=1e-9):
    """Membership of lambda in t' = t minus the integer root hyperplanes.

    Used for k = 1 poles: alpha(lambda) must stay away from every integer.
    """
    v = lam.entries if isinstance(lam, TorusElement) else np.asarray(lam, dtype=complex)
    bad = []
    for i, j in itertools.permutations(range(v.size), 2):
        a = v[i] - v[j]
        if abs(a - np.round(a.real)) <= tol and abs(a.imag) <= tol:
            bad.append((i, j))
    return {"nonresonant": not bad, "resonant_roots": bad}


def invariant_pairing(x, y):
    """kappa(X, Y) := tr(XY)."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape:
        raise ValueError("size mismatch")
    return complex(np.trace(x @ y))


def ad_torus_solve(lam, m):
    """Solve [diag(lam), X] = M for the off-diagonal part of X.

    Entrywise X_ij = M_ij / (lam_i - lam_j); the diagonal of M is ignored and
    the diagonal of X is zero.  lam must be regular.
    """
    v = lam.entries if isinstance(lam, TorusElement) else np.asarray(lam, dtype=complex)
    n = v.size
    gaps = v[:, None] - v[None, :] + np.eye(n)
    x = np.asarray(m, dtype=complex) / gaps
    np.fill_diagonal(x, 0.0)
    return x


def dimension_report(g, pole_orders, rd):
    """Dimension calculus for the moduli spaces attached to (g, D, G).

    d = sum k_j, m = number of poles.  Returns all the dimension formulas plus
    the per-pole Stokes parameter counts and the equality flag
    dimX == dimL_cf_eta.
    """
    if g < 0 or any(k < 1 for k in pole_orders):
        raise ValueError("need g >= 0 and pole orders >= 1")
    orders = list(pole_orders)
    d = sum(orders)
    m = len(orders)
    dimG, r, l = rd.dimG, rd.r, rd.l
    dim_p = 2 * dimG * (g - 1 + d)
    dim_l = dimG * (2 * (g - 1) + d)
    dim_pt = 2 * (dimG * (g - 1) + (r + l) * d)
    dim_l_cf_eta = 2 * (dimG * (g - 1) + r * d + l * m)
    dim_x = sum(k * dimG - l * (k - 2) for k in orders) + (2 * g - 2) * dimG
    stokes_counts = [2 * r * (k - 1) for k in orders]
    return {
        "g": g,
        "orders": orders,
        "d": d,
        "m": m,
        "dimG": dimG,
        "r": r,
        "l": l,
        "dimP": dim_p,
        "dimL": dim_l,
        "dimPT": dim_pt,
        "dimL_cf_eta": dim_l_cf_eta,
        "dimX": dim_x,
        "stokes_counts": stokes_counts,
        "dimX_equals_dimL_cf_eta": dim_x == dim_l_cf_eta,
    }
