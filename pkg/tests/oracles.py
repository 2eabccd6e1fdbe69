"""Closed-form reference values, written independently of the package.

Nothing here imports stagwave; every formula is derived by hand from the
ODEs the package integrates numerically.
"""
import cmath
import math

import numpy as np


def trivial_closed_form(offset, slope, mu, lam, s):
    """(psi, psi_mu, psi_lambda) for psi'' = -(offset + slope psi), psi(1) = mu, psi'(1) = lam."""
    s = np.asarray(s, dtype=float)
    d = s - 1.0
    if slope == 0.0:
        psi = mu + lam * d - 0.5 * offset * d ** 2
        return psi, np.ones_like(s), d
    # shift p = psi + offset/slope turns the equation into p'' = -slope p
    if slope > 0:
        k = math.sqrt(slope)
        c, sn = np.cos(k * d), np.sin(k * d) / k
    else:
        k = math.sqrt(-slope)
        c, sn = np.cosh(k * d), np.sinh(k * d) / k
    shift = offset / slope
    psi = -shift + (mu + shift) * c + lam * sn
    return psi, c, sn


def v_closed(z):
    """sqrt(z)/tanh(sqrt(z)) through complex arithmetic, 1 at z = 0."""
    if z == 0:
        return 1.0
    r = cmath.sqrt(complex(z))
    return (r * cmath.cosh(r) / cmath.sinh(r)).real


def sigma_closed(z):
    """Continuous branch of arg(cosh sqrt z + i sinh(sqrt z)/sqrt z)."""
    if z == 0:
        return math.pi / 4
    if z > 0:
        r = math.sqrt(z)
        return math.atan2(math.sinh(r) / r, math.cosh(r))
    w = math.sqrt(-z)
    return math.atan2(math.sin(w) / w, math.cos(w)) % math.pi + math.pi * math.floor(w / math.pi)


def constant_bifurcation_lambdas(omega0, kappa, n):
    """Both roots of 1/lambda = omega0/2 +- sqrt((omega0/2)^2 + n kappa / tanh(n kappa))."""
    q = n * kappa / math.tanh(n * kappa)
    root = math.sqrt((omega0 / 2) ** 2 + q)
    return sorted([1.0 / (omega0 / 2 + root), 1.0 / (omega0 / 2 - root)])


def u_closed(shift, s):
    """u(s; z) with u'' = (z - c) u, u(0) = 0, u'(0) = 1, given shift = z - c."""
    s = np.asarray(s, dtype=float)
    if shift == 0:
        return s.copy()
    if shift > 0:
        r = math.sqrt(shift)
        return np.sinh(r * s) / r
    w = math.sqrt(-shift)
    return np.sin(w * s) / w


def kinematic_surface(eta_x, u_rel, v):
    """(-eta_x, 1) . (u - c, v)."""
    return -eta_x * u_rel + v
