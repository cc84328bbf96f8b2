"""Truncated matrix-valued Laurent series in a local coordinate.

A MatrixLaurent is an exact Laurent polynomial supported on a finite order
window; absent orders are zero.  A degree tag tracks what the coefficients
multiply: -1 for vector fields (coefficients of d/dz), 0 for functions,
1 for 1-forms (coefficients of dz), 2 for quadratic differentials (dz^2).
Degrees add under multiplication and must agree under addition; mixing is an
error, never a silent coercion.

Series inverses and gauge transforms are infinite series even for polynomial
input, so they truncate at an explicit order budget (default ORDER_CAP).
"""

from __future__ import annotations

import numpy as np

# Backstop truncation for products/inverses when no explicit budget is given.
ORDER_CAP = 40


class FormMismatchError(ValueError):
    """Raised when 0-forms, 1-forms, vector fields etc. are mixed up."""


class MatrixLaurent:
    __slots__ = ("n", "deg", "coeffs")

    def __init__(self, n, coeffs=None, deg=0):
        self.n = int(n)
        self.deg = int(deg)
        self.coeffs = {}
        if coeffs:
            for p, mat in coeffs.items():
                m = np.asarray(mat, dtype=complex)
                if m.shape != (self.n, self.n):
                    raise ValueError(f"coefficient at order {p} has shape {m.shape}, expected {(self.n, self.n)}")
                if np.any(m != 0):
                    self.coeffs[int(p)] = m.copy()

    # -- window ---------------------------------------------------------

    @property
    def ord_min(self):
        return min(self.coeffs) if self.coeffs else 0

    @property
    def ord_max(self):
        return max(self.coeffs) if self.coeffs else -1

    def is_zero(self, tol=0.0):
        if tol == 0.0:
            return not self.coeffs
        return all(np.max(np.abs(m)) <= tol for m in self.coeffs.values())

    def coefficient(self, p):
        m = self.coeffs.get(int(p))
        if m is None:
            return np.zeros((self.n, self.n), dtype=complex)
        return m.copy()

    def orders(self):
        return sorted(self.coeffs)

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, n, deg=0):
        return cls(n, {}, deg)

    @classmethod
    def identity(cls, n):
        return cls(n, {0: np.eye(n)}, 0)

    @classmethod
    def monomial(cls, n, order, mat, deg=0):
        return cls(n, {order: np.asarray(mat, dtype=complex)}, deg)

    @classmethod
    def from_diag(cls, entries_by_order, n=None, deg=0):
        """Build a diagonal-valued series from {order: vector of entries}."""
        coeffs = {}
        for p, v in entries_by_order.items():
            v = np.asarray(v, dtype=complex)
            if n is None:
                n = v.size
            coeffs[p] = np.diag(v)
        return cls(n, coeffs, deg)

    def copy(self):
        return MatrixLaurent(self.n, self.coeffs, self.deg)

    # -- arithmetic -----------------------------------------------------

    def _check_add(self, other):
        if self.n != other.n:
            raise ValueError("size mismatch")
        if self.deg != other.deg:
            raise FormMismatchError(f"cannot add degree {self.deg} and degree {other.deg} objects")

    def __add__(self, other):
        self._check_add(other)
        coeffs = {p: m.copy() for p, m in self.coeffs.items()}
        for p, m in other.coeffs.items():
            coeffs[p] = coeffs[p] + m if p in coeffs else m.copy()
        return MatrixLaurent(self.n, coeffs, self.deg)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return MatrixLaurent(self.n, {p: -m for p, m in self.coeffs.items()}, self.deg)

    def scale(self, c):
        return MatrixLaurent(self.n, {p: c * m for p, m in self.coeffs.items()}, self.deg)

    def __mul__(self, c):
        if isinstance(c, MatrixLaurent):
            raise TypeError("use mul() or @ for series products")
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return mul(self, other)

    def shift(self, p):
        """Multiply by z^p."""
        return MatrixLaurent(self.n, {q + p: m for q, m in self.coeffs.items()}, self.deg)

    def truncate(self, lo=None, hi=None):
        coeffs = {
            p: m
            for p, m in self.coeffs.items()
            if (lo is None or p >= lo) and (hi is None or p <= hi)
        }
        return MatrixLaurent(self.n, coeffs, self.deg)

    def transpose_conj(self):
        return MatrixLaurent(self.n, {p: m.conj().T for p, m in self.coeffs.items()}, self.deg)

    def derivative(self):
        """d/dz of a 0-form, returned as a 1-form."""
        if self.deg != 0:
            raise FormMismatchError("derivative is defined on 0-forms only")
        return MatrixLaurent(self.n, {p - 1: p * m for p, m in self.coeffs.items() if p != 0}, 1)

    def eval(self, z):
        """Value of the Laurent polynomial at a point z != 0."""
        out = np.zeros((self.n, self.n), dtype=complex)
        for p, m in self.coeffs.items():
            out += m * (z ** p)
        return out

    def norm(self):
        return max((np.max(np.abs(m)) for m in self.coeffs.values()), default=0.0)

    def diag_part(self):
        return MatrixLaurent(self.n, {p: np.diag(np.diag(m)) for p, m in self.coeffs.items()}, self.deg)

    def offdiag_part(self):
        return MatrixLaurent(self.n, {p: m - np.diag(np.diag(m)) for p, m in self.coeffs.items()}, self.deg)

    def max_offdiag(self):
        best = 0.0
        for m in self.coeffs.values():
            off = m - np.diag(np.diag(m))
            best = max(best, float(np.max(np.abs(off))))
        return best

    def __repr__(self):
        if not self.coeffs:
            return f"MatrixLaurent(n={self.n}, deg={self.deg}, 0)"
        return (
            f"MatrixLaurent(n={self.n}, deg={self.deg}, "
            f"window=[{self.ord_min},{self.ord_max}], terms={len(self.coeffs)})"
        )


def mul(a, b, ord_max=None):
    """Product of two series; degrees add.  Truncated at ord_max (default: the
    implied window clipped to ORDER_CAP above the product's lowest order)."""
    if a.n != b.n:
        raise ValueError("size mismatch")
    deg = a.deg + b.deg
    if deg > 2:
        raise FormMismatchError("product would exceed quadratic-differential degree")
    if not a.coeffs or not b.coeffs:
        return MatrixLaurent(a.n, {}, deg)
    lo = a.ord_min + b.ord_min
    hi = a.ord_max + b.ord_max
    if ord_max is None:
        ord_max = min(hi, lo + ORDER_CAP)
    coeffs = {}
    for p, ma in a.coeffs.items():
        for q, mb in b.coeffs.items():
            r = p + q
            if r > ord_max:
                continue
            if r in coeffs:
                coeffs[r] = coeffs[r] + ma @ mb
            else:
                coeffs[r] = ma @ mb
    return MatrixLaurent(a.n, coeffs, deg)


def inverse(g, ord_max=None):
    """Series inverse of a 0-form with invertible order-0 coefficient.

    g must have no negative orders; the result is truncated at ord_max
    (default ORDER_CAP).
    """
    if g.deg != 0:
        raise FormMismatchError("inverse is defined on 0-forms only")
    if g.coeffs and g.ord_min < 0:
        raise ValueError("inverse requires ord_min >= 0")
    g0 = g.coefficient(0)
    if abs(np.linalg.det(g0)) < 1e-300:
        raise ValueError("non-invertible leading (order-0) coefficient")
    if ord_max is None:
        ord_max = ORDER_CAP
    g0inv = np.linalg.inv(g0)
    # g = g0 (I + X), X strictly positive orders; (I+X)^-1 = sum (-X)^m.
    x = mul(MatrixLaurent.monomial(g.n, 0, g0inv), g, ord_max=ord_max)
    x.coeffs.pop(0, None)
    acc = MatrixLaurent.identity(g.n)
    term = MatrixLaurent.identity(g.n)
    top = x.ord_min if x.coeffs else ord_max + 1
    power = 0
    while power * top <= ord_max and x.coeffs:
        term = mul(term, -x, ord_max=ord_max)
        if not term.coeffs:
            break
        acc = acc + term
        power += 1
    return mul(acc, MatrixLaurent.monomial(g.n, 0, g0inv), ord_max=ord_max)


def gauge_transform(g, a, ord_max=None):
    """Connection form after the frame change g: g a g^-1 + (dg) g^-1.

    g is a 0-form with invertible order-0 coefficient, a is a 1-form.
    """
    if a.deg != 1:
        raise FormMismatchError("gauge_transform acts on 1-forms")
    if ord_max is None:
        ord_max = min(max(a.ord_max, g.ord_max), a.ord_min + ORDER_CAP) if a.coeffs else g.ord_max
    ginv = inverse(g, ord_max=ord_max + max(0, -a.ord_min) + 1)
    out = mul(mul(g, a), ginv, ord_max=ord_max)
    out = out + mul(g.derivative(), ginv, ord_max=ord_max)
    return out.truncate(hi=ord_max)


def nabla(a_conn, sigma, ord_max=None):
    """Induced connection on ad P: nabla(sigma) = d(sigma) - [A, sigma]."""
    if sigma.deg != 0:
        raise FormMismatchError("nabla acts on 0-form sections")
    br = mul(a_conn, sigma, ord_max=ord_max) - mul(sigma, a_conn, ord_max=ord_max)
    out = sigma.derivative() - br
    if ord_max is not None:
        out = out.truncate(hi=ord_max)
    return out


def residue(a):
    """Order -1 coefficient of a 1-form."""
    if a.deg != 1:
        raise FormMismatchError("residue is defined on 1-forms")
    return a.coefficient(-1)


def polar_decompose(a):
    """Split a 1-form into polar/irregular/logarithmic/holomorphic pieces."""
    if a.deg != 1:
        raise FormMismatchError("polar_decompose acts on 1-forms")
    pol = a.truncate(hi=-1)
    irr = a.truncate(hi=-2)
    log_term = a.coefficient(-1)
    hol = a.truncate(lo=0)
    return {"pol": pol, "irr": irr, "log_term": log_term, "hol": hol}


def kappa_residue(x, y):
    """Residue of kappa(X(z), Y(z)): sum over i+j = -1 of tr(X_i Y_j).

    The degrees of x and y must add to 1 so the integrand is a 1-form.
    """
    if x.deg + y.deg != 1:
        raise FormMismatchError("kappa_residue needs total degree 1")
    total = 0.0 + 0.0j
    for p, mx in x.coeffs.items():
        my = y.coeffs.get(-1 - p)
        if my is not None:
            total += np.trace(mx @ my)
    return total


def series_log(g, ord_max=None):
    """log of a 0-form with g(0) = I, truncated."""
    if g.deg != 0:
        raise FormMismatchError("series_log acts on 0-forms")
    if np.max(np.abs(g.coefficient(0) - np.eye(g.n))) > 1e-12:
        raise ValueError("series_log requires g(0) = I")
    if ord_max is None:
        ord_max = max(g.ord_max, 1)
    x = g - MatrixLaurent.identity(g.n)
    if x.coeffs and x.ord_min < 1:
        x = x.truncate(lo=1)
    acc = MatrixLaurent.zero(g.n)
    term = MatrixLaurent.identity(g.n)
    sign = 1.0
    top = x.ord_min if x.coeffs else ord_max + 1
    power = 0
    while (power + 1) * top <= ord_max and x.coeffs:
        term = mul(term, x, ord_max=ord_max)
        if not term.coeffs:
            break
        power += 1
        acc = acc + term.scale(sign / power)
        sign = -sign
    return acc


def series_exp(x, ord_max=None):
    """exp of a 0-form with strictly positive orders, truncated."""
    if x.deg != 0:
        raise FormMismatchError("series_exp acts on 0-forms")
    if x.coeffs and x.ord_min < 1:
        raise ValueError("series_exp requires strictly positive orders")
    if ord_max is None:
        ord_max = max(x.ord_max, 1) if x.coeffs else 1
    acc = MatrixLaurent.identity(x.n)
    term = MatrixLaurent.identity(x.n)
    top = x.ord_min if x.coeffs else ord_max + 1
    k = 0
    while (k + 1) * top <= ord_max and x.coeffs:
        k += 1
        term = mul(term, x.scale(1.0 / k), ord_max=ord_max)
        if not term.coeffs:
            break
        acc = acc + term
    return acc


# -- jets --------------------------------------------------------------


class Jet:
    """A k-jet of a local coordinate at a point: z' = z + O(z^{k+1}).

    Stored as the coefficients c_m of z' = z + sum_{m > k} c_m z^m.  Two jets
    at the same center are equal iff the coordinates agree through order k.
    """

    def __init__(self, center, order, tail=None):
        self.center = complex(center)
        self.order = int(order)
        self.tail = {}
        if tail:
            for m, c in tail.items():
                if m <= self.order:
                    raise ValueError("jet tail must start above the jet order")
                if c != 0:
                    self.tail[int(m)] = complex(c)

    def __eq__(self, other):
        return (
            isinstance(other, Jet)
            and self.center == other.center
            and self.order == other.order
        )

    def coordinate_map(self, ord_max):
        """Scalar series phi with z' = phi(z), as {order: coeff}."""
        phi = {1: 1.0 + 0.0j}
        for m, c in self.tail.items():
            if m <= ord_max:
                phi[m] = c
        return phi

    def pullback(self, series, ord_max=None):
        """Substitute z = phi(w) into a MatrixLaurent (including the dz factor
        for 1-forms and vector fields), truncated.

        phi(w) = w u(w) with u(0) = 1, so phi^p = w^p u^p for any integer p.
        """
        if ord_max is None:
            ord_max = min(series.ord_max + 2, series.ord_min + ORDER_CAP) if series.coeffs else 0
        n = series.n
        work = ord_max - min(0, series.ord_min) + 2
        phi = self.coordinate_map(work + 1)
        u = MatrixLaurent(1, {p - 1: [[c]] for p, c in phi.items()}, 0)
        u_inv = inverse(u, ord_max=work)
        pow_cache = {0: MatrixLaurent.identity(1)}

        def u_pow(p):
            if p not in pow_cache:
                base = u if p > 0 else u_inv
                prev = u_pow(p - 1 if p > 0 else p + 1)
                pow_cache[p] = mul(prev, base, ord_max=work)
            return pow_cache[p]

        dphi = MatrixLaurent(1, {p - 1: [[p * c]] for p, c in phi.items()}, 0)
        if series.deg == 0:
            jac = MatrixLaurent.identity(1)
        elif series.deg > 0:
            jac = dphi
            for _ in range(series.deg - 1):
                jac = mul(jac, dphi, ord_max=work)
        else:
            jac = inverse(dphi, ord_max=work)
        out = MatrixLaurent.zero(n, series.deg)
        for p, m in series.coeffs.items():
            scalar = mul(u_pow(p), jac, ord_max=work).shift(p)
            for q, s in scalar.coeffs.items():
                if q <= ord_max:
                    out = out + MatrixLaurent.monomial(n, q, s[0, 0] * m, series.deg)
        return out.truncate(hi=ord_max)


# -- JSON --------------------------------------------------------------


def _c2pair(z):
    return [float(np.real(z)), float(np.imag(z))]


def to_json(series):
    """JSON encoding; complex entries are [re, im] pairs."""
    terms = []
    for p in series.orders():
        m = series.coeffs[p]
        terms.append({
            "order": p,
            "matrix": [[_c2pair(m[i, j]) for j in range(series.n)] for i in range(series.n)],
        })
    return {"n": series.n, "form": series.deg, "terms": terms}


def from_json(obj):
    n = int(obj["n"])
    deg = int(obj.get("form", 0))
    coeffs = {}
    for t in obj.get("terms", []):
        m = np.array(
            [[complex(e[0], e[1]) for e in row] for row in t["matrix"]],
            dtype=complex,
        )
        coeffs[int(t["order"])] = m
    return MatrixLaurent(n, coeffs, deg)
