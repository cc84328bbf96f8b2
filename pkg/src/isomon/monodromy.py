"""Global transport on the sphere, tentacles, and monodromy data assembly.

Tentacle paths are polylines from a base point to per-pole anchors with a
pole-avoidance margin; local monodromies are conjugated transports around
the pole circles, ordered counterclockwise by departure angle so the
concatenated loop is contractible through a regular point at infinity.
"""

from __future__ import annotations

import numpy as np

from .normal_form import compatible_framing, formal_type
from .series import MatrixLaurent, inverse
from .stokes import (
    SectorChart,
    _default_anchor,
    _formal_seed,
    _pick_radius,
    _dominance_scale,
    anti_stokes_directions,
    attach_seeds,
    stokes_factors,
)
from .transport import Arc, Line, check_margin, polyline, transport


class Tentacles:
    def __init__(self, base, anchors, paths, loop_radii, order):
        self.base = complex(base)
        self.anchors = {complex(x): complex(y) for x, y in anchors.items()}
        self.paths = {complex(x): [complex(p) for p in pts] for x, pts in paths.items()}
        self.loop_radii = {complex(x): float(r) for x, r in loop_radii.items()}
        self.order = [complex(x) for x in order]

    def anchor_angle(self, x):
        x = complex(x)
        return float(np.angle(self.anchors[x] - x))


class MonodromyPoint:
    """Per-pole (g_j, Stokes factors, Lambda_j); handles empty at genus 0."""

    def __init__(self, poles, data, handles=(), normalized=True):
        self.poles = list(poles)
        self.data = data  # {pole: {"g": matrix, "stokes": [StokesFactor]|None, "Lambda": vector}}
        self.handles = list(handles)
        self.normalized = bool(normalized)

    def distance(self, other):
        """Sup-distance over the shared comparable fields."""
        worst = 0.0
        for x in self.poles:
            a, b = self.data[complex(x)], other.data[complex(x)]
            worst = max(worst, float(np.max(np.abs(a["g"] - b["g"]))))
            worst = max(worst, float(np.max(np.abs(a["Lambda"] - b["Lambda"]))))
            if a["stokes"] is not None and b["stokes"] is not None:
                for f, g in zip(a["stokes"], b["stokes"]):
                    worst = max(worst, float(np.max(np.abs(f.K - g.K))))
        return worst


def default_tentacles(conn, margin_frac=0.1, base=None):
    """Straight tentacles from a far base point, with single-detour fixes."""
    poles = [x for x, _k in conn.divisor]
    if len(poles) == 1:
        span = 1.0
    else:
        span = max(abs(a - b) for a in poles for b in poles if a != b)
    centroid = sum(poles) / len(poles)
    y = complex(base) if base is not None else centroid - (2.5 * span + 2.0)
    dmin = min(
        [abs(a - b) for a in poles for b in poles if a != b] or [2.0 * span or 2.0]
    )
    margin = margin_frac * dmin
    anchors, paths, radii = {}, {}, {}
    for x in poles:
        rho = 0.35 * dmin
        direction = (y - x) / abs(y - x)
        anchors[x] = x + rho * direction
        radii[x] = rho
        pts = [y, anchors[x]]
        pts = _avoid(pts, [p for p in poles if p != x], margin)
        paths[x] = pts
    order = sorted(poles, key=lambda x: np.angle(x - y))
    return Tentacles(y, anchors, paths, radii, order)


def _avoid(pts, obstacles, margin):
    """Insert detour waypoints so segments clear the obstacles."""
    for _round in range(4):
        moved = False
        out = [pts[0]]
        for a, b in zip(pts[:-1], pts[1:]):
            d = b - a
            L2 = abs(d) ** 2
            for x in obstacles:
                t = ((x - a) * d.conjugate()).real / L2
                if 0.05 < t < 0.95:
                    foot = a + t * d
                    gap = abs(foot - x)
                    if gap < margin:
                        perp = (foot - x) / gap if gap > 1e-12 else 1j * d / abs(d)
                        out.append(x + 2.5 * margin * perp)
                        moved = True
                        break
            out.append(b)
        pts = out
        if not moved:
            break
    return pts


def _loop_segments(x, rho, start_angle):
    return [Arc(x, rho, start_angle, start_angle + 2 * np.pi)]


def transport_frame(conn, path, frame0=None, tol=1e-10, margin=None):
    """Spec transport op: fundamental-solution value along a polyline."""
    return transport(conn.rational, path, frame0, rtol=tol, atol=tol * 1e-3, margin=margin)


def _canonical_value_at(conn, x, ft, anchor_angle, point, tol, frame=None):
    """Canonical sector-1 frame of pole x evaluated at `point` (global)."""
    rel = point - x
    rho_pt, th_pt = abs(rel), anchor_angle
    budget = ft.order
    ghat_inv = inverse(ft.ghat, ord_max=budget)
    if ft.k >= 2:
        rays = anti_stokes_directions(ft)
        chart = attach_seeds(SectorChart(rays, anchor_angle), ft)
        w_max = max((_dominance_scale(ft, t) for t in chart.seeds), default=0.0)
        r_seed, m_star, _ = _pick_radius(ft, ghat_inv, w_max, None, target=1e-12)
        theta0 = chart.seeds[0]
    else:
        r_seed, m_star, theta0 = min(0.3 * rho_pt, 0.2), budget, anchor_angle
    r_seed = min(r_seed, 0.9 * rho_pt)
    z0 = r_seed * np.exp(1j * theta0)
    seed = _formal_seed(ft, ghat_inv, z0, theta0, m_star)
    if frame is not None:
        seed = np.linalg.inv(frame) @ seed
    segs = [Line(x + z0, x + rho_pt * np.exp(1j * theta0)),
            Arc(x, rho_pt, theta0, th_pt)]
    val = transport(conn.rational, segs, seed, rtol=tol, atol=tol * 1e-3)
    return val


def monodromy_data(conn, tentacles, fts=None, tol=1e-10, order=None):
    """Assemble the monodromy point: transports the base frame along each
    tentacle, matches the canonical sectorial solution to extract g_j, and
    collects Stokes factors and formal-monodromy exponents."""
    if fts is None:
        fts = {}
        frames = {}
        for x, k in conn.divisor:
            n_budget = order if order is not None else max(k + 8, 24 if k >= 2 else 8)
            local = conn.local(x, n_budget + k + 2)
            if local.truncate(hi=-1).max_offdiag() > 1e-13:
                g0, local = compatible_framing(local)
                frames[complex(x)] = np.linalg.inv(g0)  # frame matrix: framed = g0 A g0^{-1}
            else:
                frames[complex(x)] = None
            fts[complex(x)] = formal_type(local, order=n_budget)
    else:
        frames = {complex(x): None for x, _k in conn.divisor}
    data = {}
    for x, k in conn.divisor:
        x = complex(x)
        ft = fts[x]
        aa = tentacles.anchor_angle(x)
        u = transport_frame(conn, tentacles.paths[x], tol=tol)
        fr = frames.get(x)
        v = _canonical_value_at(conn, x, ft, aa, tentacles.anchors[x], tol, frame=fr)
        g = np.linalg.solve(v, u)
        if ft.k >= 2:
            sd = stokes_factors(conn.rational, ft, tol=tol, anchor_angle=aa, center=x, frame=fr)
            stokes = sd.factors
        else:
            stokes = None
        data[x] = {"g": g, "stokes": stokes, "Lambda": ft.Lambda.copy()}
    # overall conjugation quotient: normalize g at the first tentacle pole to I
    first = tentacles.order[0]
    g1 = data[first]["g"]
    g1inv = np.linalg.inv(g1)
    for x in data:
        data[x]["g"] = data[x]["g"] @ g1inv
    return MonodromyPoint([x for x, _ in conn.divisor], data)


def local_monodromies(conn, tentacles, tol=1e-10):
    """Numerically transported full local monodromies in the base frame."""
    out = {}
    for x, _k in conn.divisor:
        x = complex(x)
        u = transport_frame(conn, tentacles.paths[x], tol=tol)
        rho = tentacles.loop_radii[x]
        start = tentacles.anchor_angle(x)
        loop = transport(conn.rational, _loop_segments(x, rho, start), u, rtol=tol, atol=tol * 1e-3)
        out[x] = np.linalg.solve(u, loop)  # U_gamma^{-1} U_loop U_gamma acting at y
    return out


def relation_residual(conn, tentacles=None, tol=1e-10):
    """|| product of full local monodromies - I || in the tentacle order.

    The product over the counterclockwise-ordered loops is contractible
    through infinity, which must be a regular point of the connection.
    """
    if not conn.rational.regular_at_infinity(1e-10):
        raise ValueError("relation residual requires a regular point at infinity")
    if tentacles is None:
        tentacles = default_tentacles(conn)
    mons = local_monodromies(conn, tentacles, tol)
    total = np.eye(conn.n, dtype=complex)
    for x in tentacles.order:
        total = mons[complex(x)] @ total
    return float(np.max(np.abs(total - np.eye(conn.n))))
