"""Global rational matrix forms on the Riemann sphere.

A RationalForm stores a matrix-valued rational function of z times (dz)^deg
as partial fractions: per-pole coefficients of (z - x)^{-j} plus a polynomial
part.  Local expansions at any center (including infinity, via w = 1/z) are
exact binomial re-expansions, so the per-pole Laurent windows always agree
with the global description.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .series import MatrixLaurent


class RationalForm:
    def __init__(self, n, deg=1):
        self.n = int(n)
        self.deg = int(deg)
        self.poles = {}  # center -> {order >= 1 -> matrix coeff of (z-x)^-order}
        self.poly = {}  # m >= 0 -> matrix coeff of z^m

    # -- construction ---------------------------------------------------

    def add_pole_term(self, center, order, mat):
        center = complex(center)
        mat = np.asarray(mat, dtype=complex)
        if order < 1:
            raise ValueError("pole term order must be >= 1")
        d = self.poles.setdefault(center, {})
        d[order] = d.get(order, 0) + mat
        if np.max(np.abs(d[order])) == 0:
            del d[order]
            if not d:
                del self.poles[center]
        return self

    def add_poly_term(self, m, mat):
        mat = np.asarray(mat, dtype=complex)
        if m < 0:
            raise ValueError("polynomial order must be >= 0")
        self.poly[m] = self.poly.get(m, 0) + mat
        if np.max(np.abs(self.poly[m])) == 0:
            del self.poly[m]
        return self

    @classmethod
    def from_polar_laurent(cls, series, center, deg=None):
        """Promote the polar part of a local Laurent expansion at `center`."""
        rf = cls(series.n, series.deg if deg is None else deg)
        for p, m in series.coeffs.items():
            if p < 0:
                rf.add_pole_term(center, -p, m)
            else:
                # re-expand (z - x)^p around 0 into the polynomial part
                for i in range(p + 1):
                    rf.add_poly_term(i, comb(p, i) * ((-center) ** (p - i)) * m)
        return rf

    def copy(self):
        rf = RationalForm(self.n, self.deg)
        rf.poles = {x: {o: m.copy() for o, m in d.items()} for x, d in self.poles.items()}
        rf.poly = {m: c.copy() for m, c in self.poly.items()}
        return rf

    def __add__(self, other):
        if self.n != other.n or self.deg != other.deg:
            raise ValueError("mismatched rational forms")
        rf = self.copy()
        for x, d in other.poles.items():
            for o, m in d.items():
                rf.add_pole_term(x, o, m)
        for m, c in other.poly.items():
            rf.add_poly_term(m, c)
        return rf

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        rf = RationalForm(self.n, self.deg)
        rf.poles = {x: {o: c * m for o, m in d.items()} for x, d in self.poles.items()}
        rf.poly = {m: c * mat for m, mat in self.poly.items()}
        return rf

    def is_zero(self, tol=0.0):
        vals = [m for d in self.poles.values() for m in d.values()] + list(self.poly.values())
        return all(np.max(np.abs(m)) <= tol for m in vals)

    # -- evaluation and expansion ----------------------------------------

    def eval(self, z):
        out = np.zeros((self.n, self.n), dtype=complex)
        for x, d in self.poles.items():
            u = 1.0 / (z - x)
            for o, m in d.items():
                out += m * (u ** o)
        for m, c in self.poly.items():
            out += c * (z ** m)
        return out

    def pole_order(self, center):
        d = self.poles.get(complex(center))
        return max(d) if d else 0

    def residue(self, center):
        d = self.poles.get(complex(center), {})
        m = d.get(1)
        return m.copy() if m is not None else np.zeros((self.n, self.n), dtype=complex)

    def residue_sum(self):
        out = np.zeros((self.n, self.n), dtype=complex)
        for d in self.poles.values():
            if 1 in d:
                out += d[1]
        return out

    def regular_at_infinity(self, tol=1e-12):
        """For a 1-form: no polynomial part and total residue zero."""
        if any(np.max(np.abs(c)) > tol for c in self.poly.values()):
            return False
        return bool(np.max(np.abs(self.residue_sum())) <= tol) if self.poles else True

    def local_expansion(self, center, hi, lo=None):
        """Exact Laurent expansion at `center` through order hi.

        `center` may be the string "inf": then the expansion is in w = 1/z and
        each dz factor contributes -dw/w^2.
        """
        if isinstance(center, str):
            if center != "inf":
                raise ValueError("center must be a point or 'inf'")
            return self._infinity_expansion(hi)
        center = complex(center)
        coeffs = {}

        def put(p, m):
            if p > hi:
                return
            if p in coeffs:
                coeffs[p] = coeffs[p] + m
            else:
                coeffs[p] = np.array(m, dtype=complex)

        for x, d in self.poles.items():
            if x == center:
                for o, m in d.items():
                    put(-o, m)
                continue
            a = x - center  # z - x = zeta - a
            for o, m in d.items():
                base = (-1.0) ** o / a ** o
                for p in range(0, hi + 1):
                    put(p, base * comb(o - 1 + p, p) * (1.0 / a) ** p * m)
        for mdeg, c in self.poly.items():
            for i in range(0, min(mdeg, hi) + 1):
                put(i, comb(mdeg, i) * (center ** (mdeg - i)) * c)
        out = MatrixLaurent(self.n, coeffs, self.deg)
        if lo is not None:
            out = out.truncate(lo=lo)
        return out

    def _infinity_expansion(self, hi):
        coeffs = {}

        def put(p, m):
            if p > hi:
                return
            if p in coeffs:
                coeffs[p] = coeffs[p] + m
            else:
                coeffs[p] = np.array(m, dtype=complex)

        jac = (-1.0) ** self.deg  # (dz)^deg = (-w^-2 dw)^deg
        for x, d in self.poles.items():
            for o, m in d.items():
                # (z - x)^-o = w^o (1 - x w)^-o
                for p in range(0, hi + 2 * self.deg + 1):
                    q = o + p - 2 * self.deg
                    put(q, jac * comb(o - 1 + p, p) * (x ** p) * m)
        for mdeg, c in self.poly.items():
            put(-mdeg - 2 * self.deg, jac * c)
        return MatrixLaurent(self.n, coeffs, self.deg)

    def singular_points(self, tol=0.0):
        return sorted(self.poles, key=lambda z: (z.real, z.imag))

    # -- JSON -------------------------------------------------------------

    def to_json(self):
        from .series import to_json as ml_json

        records = []
        for x in self.singular_points():
            d = self.poles[x]
            k = max(d)
            ml = MatrixLaurent(self.n, {-o: m for o, m in d.items()}, self.deg)
            records.append({"point": [x.real, x.imag], "order": k, "laurent": ml_json(ml)})
        out = {"n": self.n, "form": self.deg, "poles": records}
        if self.poly:
            ml = MatrixLaurent(self.n, dict(self.poly), self.deg)
            out["poly"] = ml_json(ml)
        return out

    @classmethod
    def from_json(cls, obj):
        from .series import from_json as ml_from

        rf = cls(int(obj["n"]), int(obj.get("form", 1)))
        for rec in obj.get("poles", []):
            pt = rec["point"]
            if pt == "inf" or pt == ["inf"]:
                raise ValueError("poles at infinity are not supported in global rational data")
            ml = ml_from(rec["laurent"])
            for p, m in ml.coeffs.items():
                if p < 0:
                    rf.add_pole_term(complex(pt[0], pt[1]), -p, m)
        if "poly" in obj:
            ml = ml_from(obj["poly"])
            for p, m in ml.coeffs.items():
                rf.add_poly_term(p, m)
        return rf


def kappa_form(a, b, center, hi):
    """Local expansion of the scalar form kappa(a, b) = tr(a b) at `center`.

    Returns a scalar (n = 1) MatrixLaurent of degree a.deg + b.deg.
    """
    ka = a.local_expansion(center, hi + max(0, -b_min(b, center))) if isinstance(a, RationalForm) else a
    kb = b.local_expansion(center, hi + max(0, -b_min(a, center))) if isinstance(b, RationalForm) else b
    deg = ka.deg + kb.deg
    coeffs = {}
    for p, ma in ka.coeffs.items():
        for q, mb in kb.coeffs.items():
            r = p + q
            if r > hi:
                continue
            v = np.trace(ma @ mb)
            if r in coeffs:
                coeffs[r] = coeffs[r] + np.array([[v]])
            else:
                coeffs[r] = np.array([[v]], dtype=complex)
    return MatrixLaurent(1, coeffs, deg)


def b_min(f, center):
    if isinstance(f, RationalForm):
        return -f.pole_order(center)
    return f.ord_min if f.coeffs else 0
