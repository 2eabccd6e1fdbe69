"""Physical-space reconstruction of a flattened wave state.

The disturbance is interpolated with its cosine coefficients in x and a
cubic spline in s; the trivial profile is taken from the ODE solution.
The sign convention is ``u - c = -psi_y`` and ``v = psi_x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from ..operator.system import WaveState


class StateInterpolant:
    """psi_hat(x, s) and eta(x) for a WaveState, smooth in both variables."""

    def __init__(self, state: WaveState):
        g = state.grid
        self.state = state
        self.kappa = g.kappa_eff
        self.period = g.period
        self.k = np.arange(g.Nx) * g.kappa_eff
        self.eta_hat = g.Cinv @ state.eta
        self.spline = CubicSpline(g.s, g.Cinv @ state.phi, axis=1)
        self.flow = state.flow
        self.mu = state.flow.mu
        self.upsilon = state.flow.Upsilon
        self._ds = [self.spline.derivative(j) for j in (1, 2)]

    def eta(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        arg = np.multiply.outer(x, self.k)
        if order == 0:
            basis = np.cos(arg)
        elif order == 1:
            basis = -self.k * np.sin(arg)
        else:
            basis = -(self.k ** 2) * np.cos(arg)
        return basis @ self.eta_hat

    def _mesh(self, x, s, dx: int, ds: int):
        """phi_hat derivative on the tensor mesh x (m,) by s (q,)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        A = self.spline(s) if ds == 0 else self._ds[ds - 1](s)
        arg = np.multiply.outer(x, self.k)
        if dx == 0:
            basis = np.cos(arg)
        elif dx == 1:
            basis = -self.k * np.sin(arg)
        else:
            basis = -(self.k ** 2) * np.cos(arg)
        return basis @ A

    def psi_hat_mesh(self, x, s, dx: int = 0, ds: int = 0):
        out = self._mesh(x, s, dx, ds)
        if dx == 0:
            s = np.atleast_1d(np.asarray(s, dtype=float))
            y = self.flow.state(s)
            if ds == 0:
                base = y[0]
            elif ds == 1:
                base = y[1]
            else:
                base = -self.flow.model.gamma(y[0])
            out = out + base[None, :]
        return out

    def derivs(self, x: float, s: float) -> dict:
        """Pointwise psi_hat and its derivatives up to order two."""
        v = {key: float(self.psi_hat_mesh(x, s, dx, ds)[0, 0])
             for key, dx, ds in (("psi", 0, 0), ("x", 1, 0), ("s", 0, 1),
                                 ("xx", 2, 0), ("xs", 1, 1), ("ss", 0, 2))}
        return v


class FunctionInterpolant:
    """Same interface as StateInterpolant for a closed-form psi_hat(x, s)."""

    def __init__(self, psi_hat, period: float, eta=None, mu=None, upsilon=None):
        """``psi_hat(x, s, dx, ds)`` must broadcast; ``eta(x, order)`` defaults to 0."""
        self._psi = psi_hat
        self.period = period
        self._eta = eta
        self.mu = mu
        self.upsilon = upsilon
        self.flow = None

    def eta(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x) if self._eta is None else self._eta(x, order)

    def psi_hat_mesh(self, x, s, dx: int = 0, ds: int = 0):
        X, S = np.meshgrid(np.atleast_1d(x), np.atleast_1d(s), indexing="ij")
        return np.asarray(self._psi(X, S, dx, ds), dtype=float) * np.ones_like(X)

    def derivs(self, x: float, s: float) -> dict:
        return {key: float(self._psi(x, s, dx, ds))
                for key, dx, ds in (("psi", 0, 0), ("x", 1, 0), ("s", 0, 1),
                                    ("xx", 2, 0), ("xs", 1, 1), ("ss", 0, 2))}


@dataclass
class PhysicalField:
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    u_rel: tuple
    eta: np.ndarray
    interp: object = field(repr=False)
    p: np.ndarray | None = None

    @property
    def period(self) -> float:
        return self.interp.period

    @property
    def mu(self):
        return self.interp.mu

    @property
    def upsilon(self):
        return self.interp.upsilon


def unflatten(state_or_interp, nx: int | None = None, s=None,
              x_range: tuple | None = None) -> PhysicalField:
    """psi, y = (1 + eta) s and the relative velocity on a full period.

    ``s`` defaults to the state's s-levels and ``nx`` to 2 (Nx - 1) uniform
    columns on [0, period).
    """
    interp = state_or_interp
    if isinstance(state_or_interp, WaveState):
        interp = StateInterpolant(state_or_interp)
        g = state_or_interp.grid
        nx = nx or 2 * (g.Nx - 1)
        s = g.s if s is None else s
    if nx is None or s is None:
        raise ValueError("nx and s are required for closed-form fields")
    s = np.asarray(s, dtype=float)
    if x_range is None:
        x = np.arange(nx) * interp.period / nx
    else:
        x = np.linspace(x_range[0], x_range[1], nx)
    eta = interp.eta(x)
    e = (1.0 + eta)[:, None]
    ex = interp.eta(x, 1)[:, None]
    psi = interp.psi_hat_mesh(x, s)
    ps = interp.psi_hat_mesh(x, s, 0, 1)
    px = interp.psi_hat_mesh(x, s, 1, 0)
    psi_y = ps / e
    psi_x = px - s[None, :] * ex / e * ps
    return PhysicalField(x=x, s=s, y=e * s[None, :], psi=psi, u_rel=(-psi_y, psi_x),
                         eta=eta, interp=interp)


def velocity(field: PhysicalField):
    """(u - c, v) = (-psi_y, psi_x)."""
    return field.u_rel


def pressure(field: PhysicalField, flow) -> np.ndarray:
    """p = Q + 1 + Gamma(mu) - |grad psi|^2/2 - Gamma(psi) - y, zero on the surface."""
    model = flow.model
    u, v = field.u_rel
    p = (flow.Q + 1.0 + float(model.antiderivative(flow.mu)) - 0.5 * (u * u + v * v)
         - model.antiderivative(field.psi) - field.y)
    field.p = p
    return p


def bernoulli_surface_residual(field: PhysicalField, flow) -> np.ndarray:
    """|grad psi|^2/2 + eta - Q on the surface row."""
    u, v = field.u_rel
    return 0.5 * (u[:, -1] ** 2 + v[:, -1] ** 2) + field.eta - flow.Q


def reflatten(field: PhysicalField, s) -> np.ndarray:
    """psi at y = (1 + eta) s, interpolated cubically along each physical column."""
    out = np.empty((field.x.size, len(s)))
    for i in range(field.x.size):
        cs = CubicSpline(field.y[i], field.psi[i])
        out[i] = cs((1.0 + field.eta[i]) * np.asarray(s))
    return out
