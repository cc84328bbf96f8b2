"""Anti-Stokes geometry, sectorial canonical solutions, Stokes data.

Rays are the directions of maximal decay of the exponential differences
e^{Q_i - Q_j}, Q = termwise antiderivative of the irregular type: for the
root (i, j) these are the k-1 angles with (lambda_i - lambda_j) e^{-i(k-1)
theta} real positive.  Sectors are the gaps between consecutive rays;
canonical solutions are seeded at sector midpoints with the optimally
truncated formal solution ghat^{-1}(z) z^Lambda e^{Q(z)} and matched at the
rays by numerical transport (radially out to a conditioning-friendly radius,
then along arcs).  Per-ray factors are grouped into the 2(k-1) half-period
Stokes matrices, alternately upper and lower unipotent in the dominance
order sigma.
"""

from __future__ import annotations

import numpy as np

from .rational import RationalForm
from .series import MatrixLaurent, inverse
from .transport import Arc, Line, transport


class StokesError(RuntimeError):
    pass


class AntiStokesRay:
    __slots__ = ("angle", "roots")

    def __init__(self, angle, roots):
        self.angle = float(angle)
        self.roots = list(roots)

    def __repr__(self):
        return f"AntiStokesRay(angle={self.angle:.6f}, roots={self.roots})"


class StokesFactor:
    """One of the 2(k-1) grouped Stokes matrices.

    K carries the reported (unit-diagonal-projected) matrix; K_raw retains
    the unprojected extraction for diagnostics and exact factorizations.
    """

    __slots__ = ("sector_index", "K", "K_raw", "parity", "support", "defect")

    def __init__(self, sector_index, K, K_raw, parity, support, defect):
        self.sector_index = int(sector_index)
        self.K = np.asarray(K, dtype=complex)
        self.K_raw = np.asarray(K_raw, dtype=complex)
        self.parity = parity
        self.support = list(support)
        self.defect = float(defect)


class CanonicalSolution:
    __slots__ = ("sector_index", "anchor", "theta", "radius", "value", "trunc_order", "trunc_error")

    def __init__(self, sector_index, anchor, theta, radius, value, trunc_order, trunc_error):
        self.sector_index = int(sector_index)
        self.anchor = complex(anchor)
        self.theta = float(theta)
        self.radius = float(radius)
        self.value = np.asarray(value, dtype=complex)
        self.trunc_order = int(trunc_order)
        self.trunc_error = float(trunc_error)


class StokesData:
    def __init__(self, factors, ray_factors, rays, Lambda, sigma, chart, diagnostics):
        self.factors = factors
        self.ray_factors = ray_factors
        self.rays = rays
        self.Lambda = Lambda
        self.sigma = sigma
        self.chart = chart
        self.diagnostics = diagnostics

    def factored_monodromy(self):
        """e^{2 pi i Lambda} K_R ... K_1 in the initial canonical frame.

        Uses the raw (unprojected) factors: the product then telescopes to
        the transported loop exactly, whatever the seeding depth.
        """
        n = self.Lambda.size
        m = np.diag(np.exp(2j * np.pi * self.Lambda))
        for _K, K_raw, _angle, _roots in reversed(self.ray_factors):
            m = m @ K_raw
        return m

    def free_parameter_count(self):
        """Number of independent off-diagonal Stokes parameters (2 r (k-1)):
        one per supporting root of each crossed ray."""
        return sum(len(roots) for _K, _Kr, _angle, roots in self.ray_factors)


def anti_stokes_directions(ft):
    """Sorted rays in [0, 2pi); coincident rays merged with unioned roots."""
    if ft.k < 2:
        raise ValueError("anti-Stokes directions need pole order k >= 2")
    lam = ft.irregular[-ft.k]
    n = lam.size
    k = ft.k
    raw = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            diff = lam[i] - lam[j]
            base = np.angle(diff)
            for t in range(k - 1):
                ang = (base + 2 * np.pi * t) / (k - 1) % (2 * np.pi)
                raw.append((ang, (i, j)))
    raw.sort(key=lambda x: x[0])
    rays = []
    for ang, root in raw:
        if rays and min(abs(ang - rays[-1].angle), 2 * np.pi - abs(ang - rays[-1].angle)) < 1e-9:
            rays[-1].roots.append(root)
        else:
            rays.append(AntiStokesRay(ang, [root]))
    if len(rays) > 1 and (2 * np.pi - rays[-1].angle + rays[0].angle) < 1e-9:
        rays[0].roots.extend(rays[-1].roots)
        rays.pop()
    return rays


class SectorChart:
    """Continuous-angle sector bookkeeping around one irregular pole.

    d[0..R] are the unwrapped ray angles with d[0] <= anchor < d[1] shifted so
    the anchor direction lies in sector 1; mids[i] is the seed direction of
    sector i+1.
    """

    def __init__(self, rays, anchor_angle):
        self.rays = rays
        R = len(rays)
        if R == 0:
            self.d = np.array([anchor_angle - np.pi, anchor_angle + np.pi])
            self.mids = np.array([anchor_angle])
            self.ray_roots = []
            return
        angles = np.array([r.angle for r in rays])
        a = anchor_angle % (2 * np.pi)
        idx = int(np.searchsorted(angles, a)) - 1  # sector left of the anchor
        shift = anchor_angle - a
        d = []
        roots = []
        for t in range(R + 1):
            q, rr = divmod(idx + t, R)
            d.append(angles[rr] + shift + 2 * np.pi * q + (0.0 if rr or not t or idx + t < R else 0.0))
            roots.append(rays[rr].roots)
        d = np.array(d)
        # unwrap so the sequence ascends
        for t in range(1, R + 1):
            while d[t] <= d[t - 1]:
                d[t] += 2 * np.pi
        self.d = d
        self.mids = (d[:-1] + d[1:]) / 2.0
        self.ray_roots = roots[1:]  # roots of the crossing rays d[1..R]

    @property
    def nsectors(self):
        return len(self.mids)


def _formal_seed(ft, ghat_inv, z0, theta, trunc_order):
    """ghat^{-1}(z0) z0^Lambda e^{Q(z0)} with an explicit branch angle."""
    n = ft.n
    rho = abs(z0)
    g = np.zeros((n, n), dtype=complex)
    for p, m in ghat_inv.coeffs.items():
        if p <= trunc_order:
            g += m * (z0 ** p)
    logz = np.log(rho) + 1j * theta
    zlam = np.exp(ft.Lambda * logz)
    q = _q_eval(ft, z0)
    return g @ np.diag(zlam * np.exp(q))


def _q_eval(ft, z):
    q = np.zeros(ft.n, dtype=complex)
    for p, v in ft.irregular.items():
        q += v * z ** (p + 1) / (p + 1)
    return q


def _dominance_scale(ft, theta):
    """max over roots of |Re Q_i - Re Q_j| at angle theta, times r^{k-1}.

    Measures how unbalanced the exponentials are along the direction theta;
    the seed contamination is the formal truncation error amplified by
    exp(scale * r^{1-k}).
    """
    k = ft.k
    lam = ft.irregular[-k]
    w = 0.0
    for i in range(lam.size):
        for j in range(i + 1, lam.size):
            d = lam[i] - lam[j]
            w = max(w, abs((d * np.exp(-1j * (k - 1) * theta)).real) / (k - 1))
    return w


def _best_seed_angle(ft, lo, hi):
    """Angle in (lo, hi) minimizing the dominance scale (least contamination)."""
    grid = np.linspace(lo, hi, 41)[1:-1]
    scores = [_dominance_scale(ft, th) for th in grid]
    return float(grid[int(np.argmin(scores))])


def _pick_radius(ft, ghat_inv, w_max, radius=None, target=1e-11):
    """Seeding radius and optimal truncation order.

    Picks the largest radius at which (optimally truncated formal remainder)
    x (dominance amplification e^{w_max r^{1-k}}) meets `target`, or the
    overall minimizer if the order budget cannot reach it.
    """
    k = ft.k
    lam = ft.irregular[-k]
    gaps = [abs(a - b) for ia, a in enumerate(lam) for b in lam[ia + 1:]]
    c = max(gaps, default=0.0) / (k - 1)
    if c == 0.0:
        return (radius if radius is not None else 0.5), max(ghat_inv.coeffs, default=0), 0.0
    terms = {p: np.max(np.abs(m)) for p, m in ghat_inv.coeffs.items() if p > 0}

    def est(rho):
        best, m_star = 1.0, 0
        for p, t in sorted(terms.items()):
            v = t * rho ** p
            if v < best:
                best, m_star = v, p
        amp = np.exp(min(w_max * rho ** (1 - k), 600.0))
        return best, m_star, best * amp

    if radius is not None:
        terr, m_star, _ = est(radius)
        return radius, m_star, terr
    rho_hi = c ** (1.0 / (k - 1))
    grid = 0.7 * rho_hi * np.logspace(-1.8, 0.0, 60)
    # below this radius the dominance amplification outruns what double
    # precision can resolve, whatever the truncation error claims
    grid = [rho for rho in grid if w_max * rho ** (1 - k) <= 28.0] or [rho_hi]
    scored = [(rho,) + est(rho) for rho in grid]
    meeting = [s for s in scored if s[3] <= target]
    if meeting:
        rho, terr, m_star, _ = max(meeting, key=lambda s: s[0])
        return rho, m_star, terr
    rho, terr, m_star, _ = min(scored, key=lambda s: s[3])
    return rho, m_star, terr


def _cond_radius(ft, seed_radius, r_geom_max):
    """Radius where the exponential range is mild, for arcs and matching."""
    k = ft.k
    lam = ft.irregular[-k]
    gaps = [abs(a - b) for ia, a in enumerate(lam) for b in lam[ia + 1:]]
    c = max(gaps, default=0.0) / (k - 1)
    if c == 0.0:
        return max(seed_radius, min(1.0, r_geom_max))
    r_cond = (c / 2.0) ** (1.0 / (k - 1))
    return float(min(max(r_cond, 2 * seed_radius), r_geom_max))


class _PoleFrame:
    """Transport plumbing around one pole, in local or global coordinates."""

    def __init__(self, rhs, center=0.0):
        self.rhs = rhs
        self.center = complex(center)

    def transport(self, segments, frame0, rtol, atol):
        if self.center != 0:
            segments = [self._offset(s) for s in segments]
        return transport(self.rhs, segments, frame0, rtol=rtol, atol=atol)

    def _offset(self, s):
        if isinstance(s, Line):
            return Line(s.z0 + self.center, s.z1 + self.center)
        return Arc(s.center + self.center, s.radius, s.phi0, s.phi1)


def _prepare(a, ft, radius, order, anchor_angle, tol=1e-10):
    if ft.k < 2:
        raise ValueError("no Stokes data for a logarithmic pole (k = 1)")
    budget = ft.order if order is None else min(order, ft.order)
    ghat_inv = inverse(ft.ghat, ord_max=budget)
    rays = anti_stokes_directions(ft)
    chart = SectorChart(rays, anchor_angle if anchor_angle is not None else _default_anchor(rays))
    attach_seeds(chart, ft)
    w_max = max((_dominance_scale(ft, th) for th in chart.seeds), default=0.0)
    r_seed, m_star, trunc_err = _pick_radius(ft, ghat_inv, w_max, radius, target=0.1 * tol)
    return ghat_inv, r_seed, m_star, trunc_err, rays, chart


def attach_seeds(chart, ft):
    """Per-sector seed directions minimizing the dominance amplification."""
    seeds = []
    for i in range(chart.nsectors):
        lo, hi = chart.d[i], chart.d[i + 1]
        w = hi - lo
        seeds.append(_best_seed_angle(ft, lo + 0.05 * w, hi - 0.05 * w))
    chart.seeds = seeds
    return chart


def _default_anchor(rays):
    """Bisector of the widest ray gap (the best-conditioned sector)."""
    if not rays:
        return 0.0
    if len(rays) == 1:
        return rays[0].angle + np.pi
    angles = np.array([r.angle for r in rays])
    gaps = np.diff(np.append(angles, angles[0] + 2 * np.pi))
    i = int(np.argmax(gaps))
    return float(angles[i] + gaps[i] / 2.0)


def canonical_solution(a, ft, sector_index, radius=None, order=None, tol=1e-10,
                       anchor_angle=None, center=0.0):
    """Canonical fundamental solution record for one sector.

    `a` is the local Laurent connection (or a global RationalForm together
    with `center`); the value is the truncated formal solution at the seed
    point, whose branch angle is recorded.
    """
    ghat_inv, r_seed, m_star, trunc_err, rays, chart = _prepare(a, ft, radius, order, anchor_angle, tol)
    if not 1 <= sector_index <= chart.nsectors:
        raise ValueError(f"sector index out of range 1..{chart.nsectors}")
    theta = chart.seeds[sector_index - 1]
    z0 = r_seed * np.exp(1j * theta)
    val = _formal_seed(ft, ghat_inv, z0, theta, m_star)
    return CanonicalSolution(sector_index, z0, theta, r_seed, val, m_star, trunc_err)


def stokes_factors(a, ft, radius=None, order=None, tol=1e-10, anchor_angle=None, center=0.0, frame=None):
    """All Stokes data at one pole.

    Returns a StokesData with the 2(k-1) grouped factors (spec's K_1..K_{2(k-1)}),
    the per-ray raw factors, the dominance order sigma, and diagnostics.
    `frame` is the constant compatible-framing matrix when `a` is expressed
    in an unframed chart: seeds are pulled back through it (the extracted
    factors themselves are frame-invariant).
    """
    f_inv = None if frame is None else np.linalg.inv(frame)
    ghat_inv, r_seed, m_star, trunc_err, rays, chart = _prepare(a, ft, radius, order, anchor_angle, tol)
    n = ft.n
    k = ft.k
    period = np.pi / (k - 1)
    frame = _PoleFrame(a, center)
    rtol, atol = tol, tol * 1e-3

    R = chart.nsectors if rays else 0
    ray_factors = []
    diagnostics = {"seed_radius": r_seed, "trunc_order": m_star, "trunc_error": trunc_err,
                   "unipotency": 0.0, "support_leak": 0.0}
    if rays:
        r_big = _cond_radius(ft, r_seed, r_geom_max=_geom_cap(a, center))
        diagnostics["match_radius"] = r_big
        # transported canonical frames at the matching points (radius r_big,
        # angles d[1..R]); fwd[i] also carries sector i's frame to d[i+1].
        values_fwd = []
        values_bwd = []
        for i in range(R):
            theta = chart.seeds[i]
            z0 = r_seed * np.exp(1j * theta)
            seed = _formal_seed(ft, ghat_inv, z0, theta, m_star)
            if f_inv is not None:
                seed = f_inv @ seed
            out = [Line(z0, r_big * np.exp(1j * theta))]
            fwd = out + [Arc(0.0, r_big, theta, chart.d[i + 1])]
            bwd = out + [Arc(0.0, r_big, theta, chart.d[i])]
            values_fwd.append(frame.transport(fwd, seed, rtol, atol))
            values_bwd.append(frame.transport(bwd, seed, rtol, atol))
        # wrap-around: sector R+1 is sector 1 on the next branch sheet
        theta = chart.seeds[0] + 2 * np.pi
        z0 = r_seed * np.exp(1j * theta)
        seed = _formal_seed(ft, ghat_inv, z0, theta, m_star)
        if f_inv is not None:
            seed = f_inv @ seed
        bwd = [Line(z0, r_big * np.exp(1j * theta)), Arc(0.0, r_big, theta, chart.d[R])]
        values_bwd.append(frame.transport(bwd, seed, rtol, atol))

        for i in range(R):
            left = values_fwd[i]
            right = values_bwd[i + 1]
            K = np.linalg.solve(right, left)
            roots = chart.ray_roots[i]
            diag_defect = np.max(np.abs(np.diag(K) - 1.0))
            mask = np.zeros((n, n), dtype=bool)
            for (ii, jj) in roots:
                mask[ii, jj] = True
            leak = float(np.max(np.abs(np.where(mask | np.eye(n, dtype=bool), 0.0, K))))
            diagnostics["unipotency"] = max(diagnostics["unipotency"], float(diag_defect))
            diagnostics["support_leak"] = max(diagnostics["support_leak"], leak)
            Kp = K.copy()
            np.fill_diagonal(Kp, 1.0)
            ray_factors.append((Kp, K, chart.d[i + 1], roots))
    # dominance order from the first grouping window
    b1 = chart.mids[0]
    lam = ft.irregular[-k]
    eta = np.imag(lam * np.exp(-1j * (k - 1) * b1))
    sigma = list(np.argsort(-eta, kind="stable"))
    pos = np.argsort(sigma)

    factors = []
    nwin = 2 * (k - 1)
    for l in range(nwin):
        lo, hi = b1 + l * period, b1 + (l + 1) * period
        K_raw = np.eye(n, dtype=complex)
        support = []
        for _Kp, Kr, ang, roots in ray_factors:
            if lo < ang <= hi:
                K_raw = Kr @ K_raw
                support.extend(roots)
        parity = "upper" if l % 2 == 0 else "lower"
        K = K_raw.copy()
        np.fill_diagonal(K, 1.0)
        defect = _triangularity_defect(K, pos, parity)
        factors.append(StokesFactor(l + 1, K, K_raw, parity, support, defect))
    Lambda = ft.Lambda.copy()
    return StokesData(factors, ray_factors, rays, Lambda, sigma, chart, diagnostics)


def _triangularity_defect(K, pos, parity):
    n = K.shape[0]
    worst = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            is_upper = pos[i] < pos[j]
            if (parity == "upper") != is_upper:
                worst = max(worst, abs(K[i, j]))
    return worst


def _geom_cap(a, center):
    """Largest safe arc radius around the pole."""
    if isinstance(a, RationalForm):
        others = [abs(x - center) for x in a.poles if x != center]
        return 0.45 * min(others) if others else 4.0
    return 4.0


def local_monodromy(a, ft, radius=None, order=None, tol=1e-10, anchor_angle=None, center=0.0, frame=None):
    """Transported vs factored monodromy around the pole, both in the
    canonical frame of the initial sector.

    Extraction happens at a moderate seeding depth: the truncation part of
    the seed contamination cancels exactly between the two sides (the wrap
    seed differs by the exact branch factor e^{2 pi i Lambda}), so only
    integration noise survives, amplified by the dominance scale at the seed
    radius.  Keeping that exponent small beats deeper seeding here.
    """
    if radius is None:
        rays_probe = anti_stokes_directions(ft)
        chart_probe = SectorChart(rays_probe, _default_anchor(rays_probe))
        w_probe = 0.0
        for i in range(chart_probe.nsectors):
            lo, hi = chart_probe.d[i], chart_probe.d[i + 1]
            wdt = hi - lo
            th = _best_seed_angle(ft, lo + 0.05 * wdt, hi - 0.05 * wdt)
            w_probe = max(w_probe, _dominance_scale(ft, th))
        if w_probe > 0:
            r_shallow = (w_probe / 9.0) ** (1.0 / (ft.k - 1))
            ghat_inv = inverse(ft.ghat, ord_max=ft.order)
            r_deep, _, _ = _pick_radius(ft, ghat_inv, w_probe, None, target=0.1 * tol)
            radius = max(r_deep, min(r_shallow, 0.8 * _geom_cap(a, center)))
    data = stokes_factors(a, ft, radius, order, tol, anchor_angle, center, frame=frame)
    ghat_inv = inverse(ft.ghat, ord_max=ft.order)
    r_seed = data.diagnostics["seed_radius"]
    m_star = data.diagnostics["trunc_order"]
    r_big = data.diagnostics.get("match_radius", _cond_radius(ft, r_seed, _geom_cap(a, center)))
    theta = data.chart.seeds[0]
    pole_frame = _PoleFrame(a, center)
    z0 = r_seed * np.exp(1j * theta)
    seed = _formal_seed(ft, ghat_inv, z0, theta, m_star)
    if frame is not None:
        seed = np.linalg.inv(frame) @ seed
    base = pole_frame.transport([Line(z0, r_big * np.exp(1j * theta))], seed, tol, tol * 1e-3)
    loop = pole_frame.transport([Arc(0.0, r_big, theta, theta + 2 * np.pi)], base, tol, tol * 1e-3)
    numeric = np.linalg.solve(base, loop)
    factored = data.factored_monodromy()
    return {"numeric": numeric, "factored": factored, "stokes": data}
