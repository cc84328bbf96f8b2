"""Two-set Cech cover of the sphere and the residue symplectic pairing.

The cover is X0 = P^1 minus small discs, X1 = the union of discs centred at
the divisor support, the Hecke support and the auxiliary point x0.  A
deformation cocycle is (s01, a0, a1): per-disc annulus sections, a global
rational 1-form holomorphic on X0, and per-disc 1-forms; validity is
nabla(s01) = Ad g01^{-1}(a0) - a1 with nabla(sigma) = d(sigma) - [A, sigma].

The pairing carries the symmetrized cup normalization (an overall 1/2
against the bare display formula); without it the Hamiltonian identities of
the isomonodromy module fail by a factor of two once test representatives
are normalized to b1 = 0.  Residues are summed over every disc of the
cover, including x0, which absorbs the auxiliary balancing pole.
"""

from __future__ import annotations

import numpy as np

from .rational import RationalForm
from .series import MatrixLaurent, inverse, kappa_residue, mul


class Disc:
    __slots__ = ("center", "radius", "role", "g01")

    def __init__(self, center, radius, role="D", g01=None):
        self.center = complex(center)
        self.radius = float(radius)
        self.role = role  # 'D', 'D0' or 'x0'
        self.g01 = g01  # None means the identity transition


class CoverData:
    def __init__(self, discs):
        self.discs = list(discs)
        for i, d in enumerate(self.discs):
            for e in self.discs[i + 1:]:
                if abs(d.center - e.center) < d.radius + e.radius:
                    raise ValueError("cover discs must be pairwise disjoint")

    @classmethod
    def around(cls, triple, x0, radius_frac=0.3):
        """Disjoint discs at the divisor support plus the auxiliary point."""
        pts = [x for x, _k in triple.divisor] + [complex(x0)]
        discs = []
        for i, x in enumerate(pts):
            dmin = min(abs(x - y) for y in pts if y != x)
            role = "x0" if i == len(pts) - 1 else "D"
            discs.append(Disc(x, radius_frac * dmin, role))
        return cls(discs)

    def centers(self):
        return [d.center for d in self.discs]

    def d_discs(self):
        return [d for d in self.discs if d.role == "D"]

    def disc_at(self, x):
        for d in self.discs:
            if abs(d.center - complex(x)) < 1e-12:
                return d
        raise KeyError(x)


class CechDeformation:
    """Hypercohomology 1-cocycle (s01, a0, a1) for the two-set cover.

    s01: {center: 0-form annulus Laurent}; a0: rational 1-form holomorphic
    away from the disc centers; a1: {center: 1-form disc Laurent}.  `window`
    bounds the orders at which the stored annulus data is meaningful.
    """

    def __init__(self, n, s01=None, a0=None, a1=None, window=8):
        self.n = int(n)
        self.s01 = {complex(x): v for x, v in (s01 or {}).items()}
        self.a0 = a0 if a0 is not None else RationalForm(n, 1)
        self.a1 = {complex(x): v for x, v in (a1 or {}).items()}
        self.window = int(window)

    def s01_at(self, x):
        return self.s01.get(complex(x), MatrixLaurent.zero(self.n, 0))

    def a1_at(self, x):
        return self.a1.get(complex(x), MatrixLaurent.zero(self.n, 1))

    def scale(self, c):
        return CechDeformation(
            self.n,
            {x: v.scale(c) for x, v in self.s01.items()},
            self.a0.scale(c),
            {x: v.scale(c) for x, v in self.a1.items()},
            self.window,
        )

    def __add__(self, other):
        n, w = self.n, min(self.window, other.window)
        s01 = {x: self.s01_at(x) + other.s01_at(x) for x in set(self.s01) | set(other.s01)}
        a1 = {x: self.a1_at(x) + other.a1_at(x) for x in set(self.a1) | set(other.a1)}
        return CechDeformation(n, s01, self.a0 + other.a0, a1, w)

    def __sub__(self, other):
        return self + other.scale(-1)


def nabla_local(a_local, sigma, hi):
    """nabla(sigma) = d(sigma) - [A, sigma] on a disc/annulus, truncated."""
    br = mul(a_local, sigma, ord_max=hi) - mul(sigma, a_local, ord_max=hi)
    return (sigma.derivative() - br).truncate(hi=hi)


def _ad_g01_inv(disc, form_local, hi):
    if disc.g01 is None:
        return form_local.truncate(hi=hi)
    gi = inverse(disc.g01, ord_max=hi + 4)
    return mul(gi, mul(form_local, disc.g01, ord_max=hi + 4), ord_max=hi)


def cocycle_validate(c, triple, cover, tol=1e-9, hi=None):
    """Coefficientwise check of nabla(s01) = Ad g01^{-1}(a0) - a1 per disc."""
    defects = {}
    ok = True
    for disc in cover.discs:
        x = disc.center
        k = triple.rational.pole_order(x)
        win = c.window if hi is None else hi
        a_loc = triple.local(x, win + k + 2)
        lhs = nabla_local(a_loc, c.s01_at(x), win)
        a0_loc = c.a0.local_expansion(x, win)
        rhs = _ad_g01_inv(disc, a0_loc, win) - c.a1_at(x).truncate(hi=win)
        d = (lhs - rhs).truncate(hi=win)
        defects[x] = d.norm()
        if defects[x] > tol:
            ok = False
    return {"valid": ok, "defect": defects}


def omega_pair(c1, c2, cover, hi=None):
    """Residue symplectic pairing of two cocycles (cup-normalized)."""
    total = 0.0 + 0.0j
    win = min(c1.window, c2.window) if hi is None else hi
    for disc in cover.discs:
        x = disc.center
        s01 = c1.s01_at(x)
        t01 = c2.s01_at(x)
        need = max((-s01.ord_min if s01.coeffs else 0), (-t01.ord_min if t01.coeffs else 0)) + 2
        b_side = _ad_g01_inv(disc, c2.a0.local_expansion(x, need), need) + c2.a1_at(x)
        a_side = _ad_g01_inv(disc, c1.a0.local_expansion(x, need), need) + c1.a1_at(x)
        total += kappa_residue(s01, b_side) - kappa_residue(t01, a_side)
    return 0.5 * total


def coboundary(triple, cover, sigma0_const=None, sigma1=None, window=8):
    """The hyper-coboundary of a 0-cochain (sigma0, sigma1).

    sigma0 is restricted to constant global sections (enough for the test
    surface; general rational sections would need global partial-fraction
    products).  sigma1 maps disc centers to local 0-forms; at the x0 disc it
    must vanish at the center (the framing there is fixed).
    """
    n = triple.n
    sigma1 = {complex(x): v for x, v in (sigma1 or {}).items()}
    for disc in cover.discs:
        if disc.role == "x0":
            vx = sigma1.get(disc.center)
            if vx is not None and vx.coeffs and vx.ord_min < 1:
                raise ValueError("0-cochain at the auxiliary disc must vanish at x0")
    s01 = {}
    a1 = {}
    a0 = RationalForm(n, 1)
    if sigma0_const is not None:
        c0 = np.asarray(sigma0_const, dtype=complex)
        # nabla(sigma0) = -[A, sigma0] as a rational 1-form
        for x, d in triple.rational.poles.items():
            for o, m in d.items():
                a0.add_pole_term(x, o, c0 @ m - m @ c0)
        for mdeg, mcoef in triple.rational.poly.items():
            a0.add_poly_term(mdeg, c0 @ mcoef - mcoef @ c0)
    for disc in cover.discs:
        x = disc.center
        k = triple.rational.pole_order(x)
        sig0_loc = MatrixLaurent(n, {0: sigma0_const}, 0) if sigma0_const is not None else MatrixLaurent.zero(n, 0)
        sig1_loc = sigma1.get(x, MatrixLaurent.zero(n, 0))
        piece = _ad_g01_inv(disc, sig0_loc, window) - sig1_loc
        if piece.coeffs:
            s01[x] = piece
        if sig1_loc.coeffs:
            a_loc = triple.local(x, window + k + 2)
            a1[x] = nabla_local(a_loc, sig1_loc, window)
    return CechDeformation(n, s01, a0, a1, window)


def solve_nabla_disc(a_local, b1, hi, tol=1e-9):
    """Solve nabla(t') = b1 on a disc as a Laurent window.

    Requires the polar part of the local connection to be diagonal (framed
    leaf instances) and, when b1 has a residue, that its diagonal part
    vanishes: the torus residue direction is cohomologically obstructed.
    """
    n = a_local.n
    if a_local.truncate(hi=-1).max_offdiag() > 1e-10:
        # framed solve: conjugate by the constant compatible framing
        from .normal_form import compatible_framing

        g0, framed = compatible_framing(a_local)
        g0inv = np.linalg.inv(g0)
        b_framed = MatrixLaurent(n, {p: g0 @ m @ g0inv for p, m in b1.coeffs.items()}, 1)
        t_framed = solve_nabla_disc(framed, b_framed, hi, tol)
        return MatrixLaurent(n, {p: g0inv @ m @ g0 for p, m in t_framed.coeffs.items()}, 0)
    k = -a_local.ord_min if a_local.coeffs and a_local.ord_min < 0 else 0
    res_diag = np.diag(np.diag(b1.coefficient(-1)))
    if np.max(np.abs(res_diag)) > tol:
        raise ValueError("diagonal residue of b1 is obstructed; cannot normalize to zero")
    lam = np.diag(a_local.coefficient(-k)) if k else np.zeros(n)
    tprime = {}

    def get(m):
        return tprime.get(m, np.zeros((n, n), dtype=complex))

    def put(m, v):
        if np.max(np.abs(v)) > 1e-300:
            tprime[m] = get(m) + v

    lo = (b1.ord_min if b1.coeffs else 0) - 1
    for p in range(lo, hi + 1):
        # level-p equation: (p+1) t'_{p+1} - S - [A_{-k}, t'_{p+k}] = b1_p,
        # S = the bracket contributions from the already determined orders
        s_known = np.zeros((n, n), dtype=complex)
        for j in a_local.orders():
            m = p - j
            if k >= 2 and m == p + k:
                continue  # the ad-solve unknown
            if m in tprime:
                aj = a_local.coefficient(j)
                s_known = s_known + aj @ tprime[m] - tprime[m] @ aj
        rhs = b1.coefficient(p) + s_known
        if k >= 2:
            dg = np.diag(np.diag(rhs))
            if p + 1 != 0:
                put(p + 1, dg / (p + 1))
            elif np.max(np.abs(dg)) > tol:
                raise ValueError("obstructed diagonal residue in the disc solve")
            off_target = (p + 1) * (get(p + 1) - np.diag(np.diag(get(p + 1)))) - (rhs - dg)
            gaps = lam[:, None] - lam[None, :] + np.eye(n)
            w = off_target / gaps
            np.fill_diagonal(w, 0.0)
            put(p + k, w)
        else:
            # k <= 1: (p+1 - ad(lam)) acts at a single order
            gaps = lam[:, None] - lam[None, :]
            denom = (p + 1) - gaps
            if np.min(np.abs(denom)) < tol:
                if np.max(np.abs(rhs)) > tol:
                    raise ValueError("resonant or obstructed logarithmic solve")
                continue
            put(p + 1, rhs / denom)
    out = MatrixLaurent(n, {m: v for m, v in tprime.items() if m <= hi}, 0)
    return out


def normalize_b1(c, triple, cover, tol=1e-9):
    """Shift by a coboundary so a1 = 0 on the D-discs (where unobstructed)."""
    sigma1 = {}
    for disc in cover.d_discs():
        x = disc.center
        b1 = c.a1_at(x)
        if not b1.coeffs:
            continue
        k = triple.rational.pole_order(x)
        a_loc = triple.local(x, c.window + k + 2)
        sigma1[x] = solve_nabla_disc(a_loc, b1, c.window)
    if not sigma1:
        return c
    shift = coboundary(triple, cover, None, sigma1, window=c.window)
    out = c - shift
    for x in sigma1:
        out.a1.pop(complex(x), None)  # analytically zero after the shift
    return out
