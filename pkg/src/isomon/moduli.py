"""Level structures, the truncated gauge-group actions, residue moment maps,
and symplectic-leaf membership.

The dual of the truncated current algebra is realized concretely: a moment
value at a pole is the polar (or irregular) Laurent polynomial of the
connection in the level frame, paired against algebra elements by trace-form
residues.  No abstract dual type exists.
"""

from __future__ import annotations

import numpy as np

from .lie import regular_check
from .normal_form import NotGenericError
from .rational import RationalForm
from .series import MatrixLaurent, gauge_transform, inverse, mul, polar_decompose


class LevelStructure:
    """Per-pole truncated frames: s_j polynomial through order k_j - 1,
    invertible at order 0."""

    def __init__(self, frames):
        self.frames = {complex(x): s for x, s in frames.items()}

    @classmethod
    def identity(cls, divisor, n):
        return cls({x: MatrixLaurent.identity(n) for x, _k in divisor})

    def frame(self, x):
        return self.frames[complex(x)]

    def validate(self, divisor):
        dd = dict((complex(x), k) for x, k in divisor)
        for x, s in self.frames.items():
            if x not in dd:
                raise ValueError(f"level frame at {x} is not a divisor point")
            k = dd[x]
            if s.coeffs and (s.ord_min < 0 or s.ord_max > k - 1):
                raise ValueError(f"level frame at {x} must be polynomial through order {k - 1}")
            if abs(np.linalg.det(s.coefficient(0))) < 1e-300:
                raise ValueError(f"level frame at {x} is singular at order 0")
        return True


class ConnectionTriple:
    """A rational connection with divisor, level structure and topological
    tag; epsilon is metadata and must be 0 on the sphere at desk scale."""

    def __init__(self, rational, divisor, level=None, epsilon=0):
        self.rational = rational
        self.divisor = [(complex(x), int(k)) for x, k in divisor]
        self.level = level if level is not None else LevelStructure.identity(self.divisor, rational.n)
        self.epsilon = int(epsilon)
        if self.epsilon != 0:
            raise ValueError("topological type must be trivial (epsilon = 0) on the sphere")
        self.level.validate(self.divisor)
        self._check_divisor()

    @property
    def n(self):
        return self.rational.n

    def _check_divisor(self):
        for x, k in self.divisor:
            actual = self.rational.pole_order(x)
            if actual > k:
                raise ValueError(f"connection has a pole of order {actual} > divisor bound {k} at {x}")

    def order(self, x):
        for y, k in self.divisor:
            if y == complex(x):
                return k
        raise KeyError(x)

    def local(self, x, hi):
        """Exact local expansion of the connection at a divisor point."""
        return self.rational.local_expansion(complex(x), hi)

    def with_level(self, level):
        return ConnectionTriple(self.rational, self.divisor, level, self.epsilon)

    def with_rational(self, rational, divisor=None):
        return ConnectionTriple(rational, divisor if divisor is not None else self.divisor,
                                self.level, self.epsilon)

    def to_json(self):
        from .series import to_json as ml_json

        poles = []
        for x, k in self.divisor:
            poles.append({
                "point": [x.real, x.imag],
                "order": k,
                "laurent": ml_json(self.local(x, k + 4)),
            })
        return {
            "n": self.n,
            "epsilon": self.epsilon,
            "rational": self.rational.to_json(),
            "poles": poles,
            "level": {repr(x): ml_json(s) for x, s in self.level.frames.items()},
        }


class LeafSpec:
    """Fixed irregular type eta: per-pole torus-valued orders -k..-2."""

    def __init__(self, eta):
        self.eta = {complex(x): s for x, s in eta.items()}
        for x, s in self.eta.items():
            if s.coeffs and s.ord_max > -2:
                raise ValueError("leaf datum must have orders <= -2 (no logarithmic term)")
            if s.max_offdiag() > 0:
                raise ValueError("leaf datum must be torus-valued")


def subgroup_flags(g):
    """Which truncated subgroups a per-pole gauge element lies in."""
    in_h = np.max(np.abs(g.coefficient(0) - np.eye(g.n))) < 1e-12
    in_t = all(
        np.max(np.abs(m - np.diag(np.diag(m)))) < 1e-12 for m in g.coeffs.values()
    )
    # N_G(T)-valued: permutation times diagonal over the truncated ring
    in_n = _is_monomial(g)
    return {"H_D": bool(in_h), "T_D": bool(in_t), "N_G(T)_D": bool(in_n)}


def _is_monomial(g):
    g0 = g.coefficient(0)
    n = g.n
    perm = np.zeros(n, dtype=int)
    for j in range(n):
        col = np.abs(g0[:, j])
        i = int(np.argmax(col))
        if col[i] < 1e-12 or np.sum(col > 1e-12) != 1:
            return False
        perm[j] = i
    if sorted(perm) != list(range(n)):
        return False
    for m in g.coeffs.values():
        for j in range(n):
            for i in range(n):
                if i != perm[j] and abs(m[i, j]) > 1e-12:
                    return False
    return True


def group_action(g, triple, require=None):
    """The truncated gauge action: level s -> s g^{-1} per pole, connection
    unchanged.  `require` names a subgroup flag that must hold for every
    per-pole element."""
    new_frames = {}
    for x, k in triple.divisor:
        gx = g.get(complex(x))
        if gx is None:
            new_frames[complex(x)] = triple.level.frame(x)
            continue
        if abs(np.linalg.det(gx.coefficient(0))) < 1e-300:
            raise ValueError(f"gauge element at {x} not invertible at order 0")
        if require is not None and not subgroup_flags(gx)[require]:
            raise ValueError(f"gauge element at {x} is not in {require}")
        s = triple.level.frame(x)
        new_frames[complex(x)] = mul(s, inverse(gx, ord_max=k - 1), ord_max=k - 1)
    return triple.with_level(LevelStructure(new_frames))


def moment_map(triple, variant="pol", hi_extra=4):
    """Per-pole polar (or irregular) part of the connection in the level
    frame; the g_D* (resp. h_D*) value under the trace-residue pairing."""
    if variant not in ("pol", "irr"):
        raise ValueError("variant must be 'pol' or 'irr'")
    out = {}
    for x, k in triple.divisor:
        a = triple.local(x, k + hi_extra)
        s = triple.level.frame(x)
        framed = gauge_transform(s, a, ord_max=k + 2)
        out[complex(x)] = framed.truncate(hi=-1 if variant == "pol" else -2)
    return out


def leaf_check(triple, leaf, tol=1e-9):
    """Membership of the triple in the symplectic leaf with datum eta."""
    irr = moment_map(triple, "irr")
    pol = moment_map(triple, "pol")
    defects = {}
    member = True
    for x, k in triple.divisor:
        x = complex(x)
        eta_x = leaf.eta.get(x, MatrixLaurent.zero(triple.n, 1))
        d_irr = (irr[x] - eta_x).norm()
        log_term = pol[x].coefficient(-1)
        d_log = np.max(np.abs(log_term - np.diag(np.diag(log_term))))
        defect = max(d_irr, float(d_log))
        lead = pol[x].coefficient(-k)
        if k >= 2:
            reg = regular_check(np.diag(lead), tol)
            if not reg["regular"] or np.max(np.abs(lead - np.diag(np.diag(lead)))) > tol:
                member = False
                defect = max(defect, 1.0)
        defects[x] = defect
        if defect > tol:
            member = False
    return {"member": member, "defect": defects}
