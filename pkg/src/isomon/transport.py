"""Numerical parallel transport of fundamental-solution frames.

Paths are chains of straight segments and circular arcs in the z-plane.  The
right-hand side A(z) comes either from a RationalForm (global transport) or a
local MatrixLaurent (transport inside one pole's disc, in the local
coordinate).  The stepper is an in-module adaptive Dormand-Prince 5(4); the
compiled kernel is preferred and the pure-Python twin is the fallback,
selectable with ISOMON_PURE=1.
"""

from __future__ import annotations

import os

import numpy as np

from .rational import RationalForm
from .series import MatrixLaurent

if os.environ.get("ISOMON_PURE"):
    from . import _kernel_py as _kernel

    KERNEL = "python"
else:
    try:
        from . import _kernel_cy as _kernel

        KERNEL = "cython"
    except ImportError:
        from . import _kernel_py as _kernel

        KERNEL = "python"

from ._kernel_py import IntegrationError


class MarginError(ValueError):
    """A path segment comes too close to a singular point."""


class Line:
    __slots__ = ("z0", "z1")

    def __init__(self, z0, z1):
        self.z0 = complex(z0)
        self.z1 = complex(z1)

    def row(self):
        return [0.0, self.z0.real, self.z0.imag, self.z1.real, self.z1.imag, 0.0, 0.0]

    def endpoint(self):
        return self.z1


class Arc:
    __slots__ = ("center", "radius", "phi0", "phi1")

    def __init__(self, center, radius, phi0, phi1):
        self.center = complex(center)
        self.radius = float(radius)
        self.phi0 = float(phi0)
        self.phi1 = float(phi1)

    def row(self):
        return [1.0, self.center.real, self.center.imag, self.radius, self.phi0, self.phi1, 0.0]

    def endpoint(self):
        return self.center + self.radius * np.exp(1j * self.phi1)


def polyline(points):
    return [Line(a, b) for a, b in zip(points[:-1], points[1:])]


def prepare_rhs(form):
    """Pack a RationalForm or local MatrixLaurent into kernel arrays."""
    if isinstance(form, MatrixLaurent):
        if form.deg != 1:
            raise ValueError("transport needs a 1-form")
        rf = RationalForm.from_polar_laurent(form, 0.0)
        n = form.n
    else:
        rf = form
        n = form.n
    centers = np.array(sorted(rf.poles, key=lambda z: (z.real, z.imag)), dtype=complex)
    kmax = max((max(d) for d in rf.poles.values()), default=0)
    pcoefs = np.zeros((len(centers), max(kmax, 1), n, n), dtype=complex)
    orders = np.zeros(len(centers), dtype=np.int64)
    for i, x in enumerate(centers):
        d = rf.poles[complex(x)]
        orders[i] = max(d)
        for o, m in d.items():
            pcoefs[i, o - 1] = m
    mmax = max(rf.poly, default=-1)
    poly = np.zeros((mmax + 1, n, n), dtype=complex)
    for m, c in rf.poly.items():
        poly[m] = c
    return centers, orders, pcoefs, poly


def _seg_pole_distance(seg, pole):
    if isinstance(seg, Line):
        d = seg.z1 - seg.z0
        L2 = abs(d) ** 2
        if L2 == 0:
            return abs(seg.z0 - pole)
        t = np.clip(((pole - seg.z0) * d.conjugate()).real / L2, 0.0, 1.0)
        return abs(seg.z0 + t * d - pole)
    # arc: conservative radial estimate
    rr = abs(pole - seg.center)
    return abs(rr - seg.radius) if _angle_in_span(np.angle(pole - seg.center), seg.phi0, seg.phi1) else min(
        abs(seg.endpoint() - pole), abs(seg.center + seg.radius * np.exp(1j * seg.phi0) - pole)
    )


def _angle_in_span(a, phi0, phi1):
    lo, hi = min(phi0, phi1), max(phi0, phi1)
    twopi = 2 * np.pi
    for shift in (-twopi, 0.0, twopi, 2 * twopi, -2 * twopi):
        if lo <= a + shift <= hi:
            return True
    return False


def check_margin(segments, poles, margin, skip=()):
    for seg in segments:
        for x in poles:
            if any(abs(x - s) < 1e-12 for s in skip):
                continue
            if _seg_pole_distance(seg, x) < margin:
                raise MarginError(f"path passes within {margin} of the pole at {x}")


def transport(form, segments, frame0=None, rtol=1e-10, atol=1e-13, margin=None, max_steps=400000):
    """Fundamental-solution value at the path end, starting from frame0.

    `segments` is a list of Line/Arc (or a list of waypoints, promoted to a
    polyline).  The path must avoid the poles of `form`; pass `margin` to
    enforce a clearance.
    """
    if segments and not isinstance(segments[0], (Line, Arc)):
        segments = polyline([complex(p) for p in segments])
    centers, orders, pcoefs, poly = prepare_rhs(form)
    if margin is not None:
        check_margin(segments, list(centers), margin)
    n = pcoefs.shape[2] if pcoefs.size else poly.shape[1]
    phi0 = np.eye(n, dtype=complex) if frame0 is None else np.asarray(frame0, dtype=complex)
    segrows = np.array([s.row() for s in segments], dtype=float)
    if segrows.size == 0:
        return phi0.copy()
    phi, _, _ = _kernel.transport_segments(
        centers, orders, pcoefs, poly, segrows, phi0, rtol, atol, max_steps
    )
    return phi
