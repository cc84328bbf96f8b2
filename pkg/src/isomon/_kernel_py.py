"""Pure-Python transport kernel: Dormand-Prince 5(4) with FSAL.

Integrates dPhi/dt = z'(t) A(z(t)) Phi over a chain of path segments, where
A is a matrix rational function given in partial-fraction arrays.  The Cython
twin (_kernel_cy) implements the identical algorithm; tests assert agreement.

Segment encoding (float rows of length 7):
  kind 0 (line): [0, z0.re, z0.im, z1.re, z1.im, 0, 0]
  kind 1 (arc):  [1, c.re, c.im, radius, phi0, phi1, 0]
"""

from __future__ import annotations

import numpy as np

# Dormand-Prince RK5(4)7M tableau (FSAL); order-verified in the test suite.
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A_TAB = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

MIN_STEP = 1e-14


class IntegrationError(RuntimeError):
    pass


def eval_rhs(centers, orders, pcoefs, poly, z):
    """A(z) from partial-fraction data (Horner at each pole and in z)."""
    n = pcoefs.shape[2] if pcoefs.size else poly.shape[1]
    out = np.zeros((n, n), dtype=complex)
    for p in range(centers.shape[0]):
        u = 1.0 / (z - centers[p])
        k = orders[p]
        acc = pcoefs[p, k - 1].copy()
        for j in range(k - 2, -1, -1):
            acc *= u
            acc += pcoefs[p, j]
        out += acc * u
    if poly.shape[0]:
        acc = poly[-1].copy()
        for m in range(poly.shape[0] - 2, -1, -1):
            acc *= z
            acc += poly[m]
        out += acc
    return out


def _seg_point(seg, t):
    if seg[0] == 0.0:
        z0 = complex(seg[1], seg[2])
        z1 = complex(seg[3], seg[4])
        return z0 + t * (z1 - z0), z1 - z0
    c = complex(seg[1], seg[2])
    r, phi0, phi1 = seg[3], seg[4], seg[5]
    phi = phi0 + t * (phi1 - phi0)
    e = r * np.exp(1j * phi)
    return c + e, 1j * (phi1 - phi0) * e


def transport_segments(centers, orders, pcoefs, poly, segs, phi0, rtol, atol, max_steps=200000):
    """Transport phi0 along the chained segments; returns (Phi, nsteps, nrej)."""
    phi = np.array(phi0, dtype=complex)
    nsteps = 0
    nrej = 0

    for seg in segs:

        def f(t, y):
            z, dz = _seg_point(seg, t)
            return dz * (eval_rhs(centers, orders, pcoefs, poly, z) @ y)

        t = 0.0
        k1 = f(t, phi)
        # initial step ~ the local solution time scale; the controller adapts
        d0 = np.max(np.abs(phi))
        d1 = np.max(np.abs(k1))
        h = min(0.1, 0.01 * d0 / d1) if d1 > 0 and d0 > 0 else 0.1

        while t < 1.0:
            if nsteps + nrej > max_steps:
                raise IntegrationError("step budget exhausted")
            h = min(h, 1.0 - t)
            if h < MIN_STEP:
                raise IntegrationError("step underflow")
            ks = [k1]
            for i in range(1, 7):
                yi = phi
                for j, a in enumerate(A_TAB[i]):
                    if a != 0.0:
                        yi = yi + (h * a) * ks[j]
                ks.append(f(t + C[i] * h, yi))
            y5 = phi
            for j in range(7):
                if B5[j] != 0.0:
                    y5 = y5 + (h * B5[j]) * ks[j]
            err = np.zeros_like(phi)
            for j in range(7):
                if ERR[j] != 0.0:
                    err = err + (h * ERR[j]) * ks[j]
            # uniform matrix scale: columns mix exponentially separated
            # solutions, so entrywise control would stall on the small ones
            sc = atol + rtol * max(np.max(np.abs(phi)), np.max(np.abs(y5)))
            enorm = np.sqrt(np.mean(np.abs(err / sc) ** 2))
            if enorm <= 1.0:
                t += h
                phi = y5
                k1 = ks[6]  # FSAL
                nsteps += 1
                fac = 0.9 * (enorm ** -0.2) if enorm > 0 else 5.0
                h *= min(5.0, max(0.2, fac))
            else:
                nrej += 1
                h *= max(0.2, 0.9 * (enorm ** -0.2))
    return phi, nsteps, nrej
