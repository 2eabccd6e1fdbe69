"""Collocation grid: even cosine modes on the half-period, uniform levels in s."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError


def _cosine_matrices(nx: int, kappa: float):
    """Cosine synthesis C, its inverse, and the first/second x-derivative maps.

    Nodes are theta_j = pi j/(nx-1) with x_j = theta_j/kappa; the inverse is
    the explicit DCT-I, not a numerical inverse.
    """
    n = nx - 1
    theta = np.pi * np.arange(nx) / n
    k = np.arange(nx)
    C = np.cos(np.outer(theta, k))
    S = np.sin(np.outer(theta, k))
    w = np.ones(nx)
    w[0] = w[-1] = 0.5
    Cinv = (2.0 / n) * (w[:, None] * C.T) * w[None, :]
    D1 = kappa * (S * (-k)[None, :]) @ Cinv
    D2 = -(kappa ** 2) * (C * (k ** 2)[None, :]) @ Cinv
    return C, Cinv, D1, D2


def _s_matrices(ns: int):
    h = 1.0 / (ns - 1)
    D1 = np.zeros((ns, ns))
    D2 = np.zeros((ns, ns))
    i = np.arange(1, ns - 1)
    D1[i, i - 1] = -0.5 / h
    D1[i, i + 1] = 0.5 / h
    D1[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
    D1[-1, -3:] = np.array([1.0, -4.0, 3.0]) / (2 * h)
    D2[i, i - 1] = D2[i, i + 1] = 1.0 / h ** 2
    D2[i, i] = -2.0 / h ** 2
    # one-sided second-order closures; never enter the interior equations
    D2[0, :4] = np.array([2.0, -5.0, 4.0, -1.0]) / h ** 2
    D2[-1, -4:] = np.array([-1.0, 4.0, -5.0, 2.0]) / h ** 2
    return D1, D2


def _s_derivative4(ns: int):
    """Fourth-order first derivative: centred 5-point inside, shifted 5-point stencils at the ends."""
    h = 1.0 / (ns - 1)
    D = np.zeros((ns, ns))
    for i in range(ns):
        lo = min(max(i - 2, 0), ns - 5)
        off = np.arange(lo, lo + 5) - i
        V = np.vander(off.astype(float), 5, increasing=True).T
        rhs = np.zeros(5)
        rhs[1] = 1.0
        D[i, lo:lo + 5] = np.linalg.solve(V, rhs) / h
    return D


@dataclass(frozen=True)
class Grid:
    kappa_eff: float
    Nx: int
    Ns: int
    _ops: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.Nx < 8 or self.Ns < 8:
            raise ParameterError(f"grid needs Nx, Ns >= 8, got {self.Nx}x{self.Ns}")
        if not (self.kappa_eff > 0 and math.isfinite(self.kappa_eff)):
            raise ParameterError("kappa_eff must be positive")
        C, Cinv, D1x, D2x = _cosine_matrices(self.Nx, self.kappa_eff)
        Ds, Dss = _s_matrices(self.Ns)
        self._ops.update(C=C, Cinv=Cinv, D1x=D1x, D2x=D2x, Ds=Ds, Dss=Dss,
                         Ds4=_s_derivative4(self.Ns))

    @property
    def hx(self) -> float:
        return math.pi / (self.kappa_eff * (self.Nx - 1))

    @property
    def hs(self) -> float:
        return 1.0 / (self.Ns - 1)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.kappa_eff

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * self.hx

    @property
    def s(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.Ns)

    @property
    def n_interior(self) -> int:
        return self.Ns - 2

    @property
    def size(self) -> int:
        """Number of unknowns: eta plus interior phi."""
        return self.Nx * (self.Ns - 1)

    def __getattr__(self, name):
        ops = self.__dict__.get("_ops")
        if ops is not None and name in ops:
            return ops[name]
        raise AttributeError(name)

    def cosine_coefficients(self, f):
        """Coefficients a_k with f(x_j) = sum_k a_k cos(k kappa_eff x_j)."""
        return self.Cinv @ np.asarray(f)

    def x_weights(self) -> np.ndarray:
        """Trapezoid weights over one full period for even data on the half-period."""
        w = np.full(self.Nx, 2.0 * self.hx)
        w[0] = w[-1] = self.hx
        return w

    def s_weights(self) -> np.ndarray:
        w = np.full(self.Ns, self.hs)
        w[0] = w[-1] = 0.5 * self.hs
        return w

    def refined(self, factor: int = 2) -> "Grid":
        """Same domain with hs divided by factor."""
        return Grid(self.kappa_eff, self.Nx, (self.Ns - 1) * factor + 1)

    def to_dict(self) -> dict:
        return {"kappa_eff": self.kappa_eff, "Nx": self.Nx, "Ns": self.Ns}
