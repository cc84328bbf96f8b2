"""Isomonodromic deformations in the irregular type and in the modulus, the
Hamiltonians they generate, and numerical verification of the
Hamiltonian-vector-field identities.

Standing trivial-Hecke specialization: the reference bundle is trivial, the
reference connection is d, the Hecke support is empty; the cover keeps the
auxiliary point x0, which receives the balancing simple pole of the global
extension of Ad T(d beta).
"""

from __future__ import annotations

import numpy as np

from .moduli import ConnectionTriple, leaf_check
from .normal_form import diag_split, diag_split_relative
from .rational import RationalForm, kappa_form
from .series import MatrixLaurent, inverse, kappa_residue, mul
from .symplectic import CechDeformation, CoverData, cocycle_validate, normalize_b1, omega_pair


class BetaDeformation:
    """Torus-valued deformation of the irregular type at one pole:
    beta = sum_{j=-k+1}^{-1} beta_j z^j."""

    def __init__(self, pole, coeffs, n=None):
        self.pole = complex(pole)
        self.coeffs = {int(j): np.asarray(v, dtype=complex) for j, v in coeffs.items()}
        if any(j > -1 for j in self.coeffs):
            raise ValueError("beta has orders -k+1 .. -1 only")
        self.n = n if n is not None else next(iter(self.coeffs.values())).size

    def series(self):
        return MatrixLaurent(self.n, {j: np.diag(v) for j, v in self.coeffs.items()}, 0)

    def dseries(self):
        """d(beta): orders -k..-2."""
        return MatrixLaurent(self.n, {j - 1: j * np.diag(v) for j, v in self.coeffs.items()}, 1)


class MuDeformation:
    """Modulus deformation supported at one pole.

    Stored as the sheaf-twisted representative w with effective vector field
    w(z) z^k d/dz on the annulus (vanishing order >= k at the center); the
    lift's behaviour at the auxiliary/Hecke discs is bookkeeping that the
    D-residue Hamiltonian provably never sees.
    """

    def __init__(self, pole, k, w_coeffs, n=1):
        self.pole = complex(pole)
        self.k = int(k)
        self.w = {int(j): complex(v) for j, v in w_coeffs.items()}
        if any(j < 0 for j in self.w):
            raise ValueError("twist coefficients start at order 0 (vanishing order >= k)")
        self.n = n

    def field(self):
        """The effective vector field as a scalar Laurent (degree -1)."""
        return MatrixLaurent(1, {j + self.k: [[v]] for j, v in self.w.items()}, -1)


class HamiltonianReport:
    def __init__(self, kind, H, omega, closed_form, dH_fd, meta):
        self.kind = kind
        self.H = complex(H)
        self.omega = complex(omega)
        self.closed_form = complex(closed_form)
        self.dH_fd = complex(dH_fd)
        self.meta = dict(meta)

    @staticmethod
    def _rel(a, b):
        scale = max(abs(a), abs(b), 1e-300)
        return abs(a - b) / scale

    @property
    def err_omega_vs_closed(self):
        return self._rel(self.omega, self.closed_form)

    @property
    def err_closed_vs_fd(self):
        return self._rel(self.closed_form, self.dH_fd)

    def to_json(self):
        c2 = lambda z: [z.real, z.imag]
        return {
            "kind": self.kind,
            "H": c2(self.H),
            "omega": c2(self.omega),
            "closed_form": c2(self.closed_form),
            "dH_fd": c2(self.dH_fd),
            "rel_err_omega_vs_closed": self.err_omega_vs_closed,
            "rel_err_closed_vs_fd": self.err_closed_vs_fd,
            "meta": self.meta,
        }


def global_extension(target, x, x_aux):
    """Rational 1-form with the prescribed polar part at x and a balancing
    simple pole at x_aux, regular elsewhere including infinity."""
    x, x_aux = complex(x), complex(x_aux)
    if x == x_aux:
        raise ValueError("auxiliary point must differ from the pole")
    rf = RationalForm(target.n, 1)
    for p, m in target.coeffs.items():
        if p <= -1:
            rf.add_pole_term(x, -p, m)
    res = target.coefficient(-1)
    if np.max(np.abs(res)) > 0:
        rf.add_pole_term(x_aux, 1, -res)
    return rf


def ad_t(split, series, ord_max=None):
    """Ad T applied to a local series, truncated."""
    if ord_max is None:
        ord_max = split.order - 2
    return mul(split.T, mul(series, split.T_inv, ord_max=ord_max + 2), ord_max=ord_max)


def iso_deform_beta(triple, beta, split, h, x_aux, leaf=None, tol=1e-8):
    """First-order isomonodromic deformation of the irregular type.

    Returns (deformed triple, jet) where jet is the rational 1-form a with
    polar part Ad T(d beta) at the pole and the balancing pole at x_aux; the
    deformed connection is A + h a.
    """
    if leaf is not None:
        chk = leaf_check(triple, leaf, tol)
        if not chk["member"]:
            raise ValueError(f"triple is not on the leaf: defects {chk['defect']}")
    k = triple.order(beta.pole)
    if split.order < k:
        raise ValueError("diagonal splitting order too small for the pole order")
    adtdb = ad_t(split, beta.dseries(), ord_max=split.order - k - 2)
    jet = global_extension(adtdb.truncate(hi=-1), beta.pole, x_aux)
    new_rational = triple.rational + jet.scale(h)
    divisor = list(triple.divisor)
    if np.max(np.abs(jet.residue(x_aux))) > 0 and all(abs(x - complex(x_aux)) > 1e-12 for x, _ in divisor):
        divisor.append((complex(x_aux), 1))
        level = dict(triple.level.frames)
        level[complex(x_aux)] = MatrixLaurent.identity(triple.n)
        from .moduli import LevelStructure

        return triple.with_rational(new_rational, divisor).with_level(LevelStructure(level)), jet
    return triple.with_rational(new_rational, divisor), jet


def hamiltonian_beta(split, beta):
    """H_beta = sum_j kappa(beta_j, B_{-1-j}): the residue of kappa(beta, B),
    pairing beta against the holomorphic diagonal coefficients of B."""
    k_needed = max(-j for j in beta.coeffs) - 1
    if split.order < k_needed:
        raise ValueError("split order too small: need B_0..B_{k-2}")
    return complex(kappa_residue(beta.series(), split.B))


def _q_local(triple, x, q0_x, hi, nabla0=None):
    """q = kappa(A - A0, A - A0) - q0 at the pole x, as a scalar Laurent."""
    k = triple.order(x)
    a = triple.local(x, hi + 2 * k + 2)
    if nabla0 is not None:
        a = a - nabla0.local_expansion(complex(x), hi + 2 * k + 2)
    q_full = kappa_form(a, a, None, hi)
    if q0_x is not None:
        q_full = q_full - q0_x.truncate(hi=hi)
    return q_full


def canonical_q0(triple, nabla0=None, extra=None):
    """The minimal admissible reference quadratic differential: per pole the
    polar part of kappa(A - A0, A - A0) through order -(k+2), plus optional
    extra coefficients at the free orders."""
    q0 = {}
    for x, k in triple.divisor:
        q = _q_local(triple, x, None, -1, nabla0)
        q0[complex(x)] = q.truncate(hi=-(k + 2))
    if extra:
        for x, ml in extra.items():
            q0[complex(x)] = q0[complex(x)] + ml
    return q0


def check_q0_admissible(triple, q0, nabla0=None, tol=1e-9):
    for x, k in triple.divisor:
        q = _q_local(triple, x, None, -1, nabla0)
        d = (q.truncate(hi=-(k + 2)) - q0[complex(x)].truncate(hi=-(k + 2))).norm()
        if d > tol:
            raise ValueError(f"q0 polar mismatch {d} at {x} (orders <= -(k+2) must match)")


def hamiltonian_mu(triple, mu, nabla0=None, q0=None):
    """H_mu = 1/2 Res_D (mu q), q = kappa(A - A0, A - A0) - q0.

    The residue is summed over the divisor support only, so the value is
    independent of the lift's behaviour near the auxiliary/Hecke discs; its
    dependence on q0's holomorphic tail vanishes identically.
    """
    if q0 is None:
        q0 = canonical_q0(triple, nabla0)
    else:
        check_q0_admissible(triple, q0, nabla0)
    total = 0.0 + 0.0j
    x = mu.pole
    k = triple.order(x)
    v = mu.field()
    hi_needed = max(j for j in v.coeffs) if v.coeffs else 0
    q = _q_local(triple, x, q0.get(complex(x)), hi_needed + 1, nabla0)
    total += kappa_residue(v, q)
    return 0.5 * complex(total)


def iso_diff_cocycle(triple, deformation, cover, split=None, window=None):
    """Difference of the two isomonodromic lifts as a validated cocycle."""
    n = triple.n
    if isinstance(deformation, BetaDeformation):
        if split is None:
            raise ValueError("beta case needs the diagonal splitting")
        x = deformation.pole
        k = triple.order(x)
        win = window if window is not None else split.order - k - 2
        beta_b = ad_t(split, deformation.series(), ord_max=win)
        adtdb = ad_t(split, deformation.dseries(), ord_max=win)
        x0 = next(d.center for d in cover.discs if d.role == "x0")
        a = global_extension(adtdb.truncate(hi=-1), x, x0)
        a1 = {}
        for disc in cover.discs:
            c = disc.center
            loc = a.local_expansion(c, win)
            if c == complex(x):
                loc = loc - adtdb
            if loc.coeffs:
                a1[c] = loc.truncate(hi=win)
        return CechDeformation(n, {complex(x): beta_b}, a, a1, window=win)
    if isinstance(deformation, MuDeformation):
        x = deformation.pole
        k = triple.order(x)
        win = window if window is not None else 2 * k + 4
        v = deformation.field()
        a_loc = triple.local(x, win + k + 2)
        s01 = MatrixLaurent(n, {}, 0)
        for j, vc in v.coeffs.items():
            for p, m in a_loc.coeffs.items():
                if j + p <= win:
                    s01 = s01 + MatrixLaurent.monomial(n, j + p, vc[0, 0] * m, 0)
        f = s01.derivative().truncate(hi=win)
        a1 = {complex(x): -f} if f.coeffs else {}
        return CechDeformation(n, {complex(x): s01}, RationalForm(n, 1), a1, window=win)
    raise TypeError("deformation must be a BetaDeformation or MuDeformation")


def connection_probe(triple, b0, cover, window=8):
    """A connection-only test cocycle: t01 = 0, a0 = b0, a1 = b0-expansion."""
    a1 = {}
    for disc in cover.discs:
        loc = b0.local_expansion(disc.center, window)
        if loc.coeffs:
            a1[disc.center] = loc
    return CechDeformation(triple.n, {}, b0, a1, window=window)


def _fd_hamiltonian(triple, deformation, b0, split, q0, h_fd, anchored=True):
    """Central finite difference of H along the connection probe b0."""
    vals = []
    for sgn in (+1, -1):
        pert = triple.with_rational(triple.rational + b0.scale(sgn * h_fd))
        if isinstance(deformation, BetaDeformation):
            x = deformation.pole
            k = triple.order(x)
            a_loc = pert.local(x, split.order + k + 2)
            spl = (
                diag_split_relative(a_loc, split)
                if anchored
                else diag_split(a_loc, order=split.order)
            )
            vals.append(hamiltonian_beta(spl, deformation))
        else:
            vals.append(hamiltonian_mu(pert, deformation, q0=q0))
    return (vals[0] - vals[1]) / (2 * h_fd)


def verify_identity(triple, deformation, test, cover, split=None, tol=1e-9,
                    h_fd=1e-5, q0=None, b0_probe=None):
    """LHS = Omega(X_iso, test); RHS the closed residue form and the central
    finite difference of the Hamiltonian along the test deformation.

    `test` may be given directly as a CechDeformation, or built from a
    rational 1-form `b0_probe` (connection-only probe).  Beta-case probes are
    normalized to b1 = 0 on the D-discs; mu-case probes keep the obstructed
    torus-residue part of b1 as is.
    """
    is_beta = isinstance(deformation, BetaDeformation)
    if test is None:
        test = connection_probe(triple, b0_probe, cover, window=split.order - 2 if split else 10)
    c = iso_diff_cocycle(triple, deformation, cover, split)
    chk = cocycle_validate(c, triple, cover, tol=max(tol, 1e-7), hi=min(c.window, 4))
    if not chk["valid"]:
        raise ValueError(f"iso cocycle failed validation: {chk['defect']}")
    if is_beta:
        test_n = normalize_b1(test, triple, cover)
    else:
        test_n = test
    omega = omega_pair(c, test_n, cover)

    x = deformation.pole
    k = triple.order(x)
    need = 2 * k + 6
    b0_loc = test_n.a0.local_expansion(x, need)
    if is_beta:
        beta_b = c.s01_at(x)
        closed = kappa_residue(beta_b, b0_loc)
    else:
        closed = kappa_residue(c.s01_at(x), b0_loc)
    dh = _fd_hamiltonian(triple, deformation, test_n.a0, split, q0, h_fd)
    h_val = hamiltonian_beta(split, deformation) if is_beta else hamiltonian_mu(triple, deformation, q0=q0)
    meta = {
        "h_fd": h_fd,
        "tol": tol,
        "window": c.window,
        "pole": [x.real, x.imag],
        "kind": "beta" if is_beta else "mu",
    }
    if is_beta:
        # renormalized (non-anchored) FD variant, reported as a diagnostic
        meta["dH_fd_renormalized"] = str(_fd_hamiltonian(triple, deformation, test_n.a0, split, q0, h_fd, anchored=False))
    return HamiltonianReport(meta["kind"], h_val, omega, closed, dh, meta)


# -- flows ---------------------------------------------------------------


def schlesinger_rhs(residues, positions, velocities):
    """Schlesinger vector field: dA_r = - sum_{s != r} [A_r, A_s]
    (v_r - v_s)/(x_r - x_s)."""
    m = len(residues)
    out = [np.zeros_like(residues[0]) for _ in range(m)]
    for r in range(m):
        for s in range(m):
            if s == r:
                continue
            br = residues[r] @ residues[s] - residues[s] @ residues[r]
            out[r] = out[r] - br * (velocities[r] - velocities[s]) / (positions[r] - positions[s])
    return out


def schlesinger_flow(triple, velocities, time=1.0, steps=200):
    """Integrate the Schlesinger system for a Fuchsian connection, moving the
    poles with the given constant velocities.

    Classical fixed-increment RK4 with one halving retry built into the step
    count; returns the transported triple.
    """
    divisor = triple.divisor
    if any(k != 1 for _x, k in divisor):
        raise ValueError("pole-motion flow needs a Fuchsian connection (all simple poles)")
    pos = [complex(x) for x, _ in divisor]
    vel = [complex(velocities[i]) for i in range(len(pos))]
    res = [triple.rational.residue(x) for x in pos]
    if not triple.rational.regular_at_infinity(1e-9):
        raise ValueError("pole-motion flow keeps infinity regular; residues must sum to zero")

    h = time / steps
    t = 0.0
    for _ in range(steps):
        min_gap = min(abs(a - b) for i, a in enumerate(pos) for b in pos[i + 1:])
        if min_gap < 1e-3:
            raise ValueError("pole collision during the Schlesinger flow")
        k1 = schlesinger_rhs(res, pos, vel)
        p2 = [x + 0.5 * h * v for x, v in zip(pos, vel)]
        k2 = schlesinger_rhs([a + 0.5 * h * b for a, b in zip(res, k1)], p2, vel)
        k3 = schlesinger_rhs([a + 0.5 * h * b for a, b in zip(res, k2)], p2, vel)
        p4 = [x + h * v for x, v in zip(pos, vel)]
        k4 = schlesinger_rhs([a + h * b for a, b in zip(res, k3)], p4, vel)
        res = [a + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(res, k1, k2, k3, k4)]
        pos = p4
        t += h
    rf = RationalForm(triple.n, 1)
    for x, a in zip(pos, res):
        rf.add_pole_term(x, 1, a)
    new_divisor = [(x, 1) for x in pos]
    from .moduli import LevelStructure

    return ConnectionTriple(rf, new_divisor, LevelStructure.identity(new_divisor, triple.n))


def isoflow_step(triple, direction, h, split=None, x_aux=None, tol=1e-9):
    """Advance the deformation parameter by h.

    direction: a BetaDeformation (irregular-type motion, first-order jet) or
    ("poles", velocities) for the classical Schlesinger specialization.
    """
    if h == 0:
        return triple, {"drift": 0.0}
    if isinstance(direction, BetaDeformation):
        if split is None:
            x = direction.pole
            k = triple.order(x)
            split = diag_split(triple.local(x, k + 12), order=k + 8)
        if x_aux is None:
            x_aux = _default_aux(triple)
        new_triple, jet = iso_deform_beta(triple, direction, split, h, x_aux)
        return new_triple, {"jet": jet}
    kind, velocities = direction
    if kind != "poles":
        raise ValueError("direction must be a BetaDeformation or ('poles', velocities)")
    return schlesinger_flow(triple, velocities, time=h), {}


def _default_aux(triple):
    pts = [x for x, _ in triple.divisor]
    span = max((abs(a - b) for a in pts for b in pts if a != b), default=1.0)
    cand = sum(pts) / len(pts) + (1.7 + 0.9j) * (span + 1.0)
    return cand
