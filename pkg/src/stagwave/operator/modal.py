"""The trivial-state operator L(Lambda) acting on separable cosine fields.

A field is a list of ``(k, profile)`` pairs meaning ``sum_k cos(k kappa x) a_k(s)``,
where ``profile(s)`` returns ``(a, a_s, a_ss)``. Everything is applied mode
by mode in closed form, and s-integrals use Gauss-Legendre quadrature, so
identities that hold in the continuum can be checked to near round-off
instead of to the O(hs^2) accuracy of the collocation grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dispersion import solve_u
from ..trivial_flow import TrivialFlow


@dataclass
class ModalPair:
    """Surface coefficients and sampled bulk profiles per cosine mode."""
    surface: dict
    bulk: dict


def polynomial_profile(coeffs):
    """a(s) = sum_j c_j s^(j+1), vanishing at the bed."""
    p = np.polynomial.Polynomial(np.concatenate([[0.0], np.asarray(coeffs, float)]))
    dp, d2p = p.deriv(1), p.deriv(2)
    return lambda s: (p(s), dp(s), d2p(s))


def kernel_profile(flow: TrivialFlow, z: float):
    """u(s; z) with u_ss from the ODE itself."""
    sturm = solve_u(flow, z)
    return lambda s: (sturm.u(s), sturm.u_s(s), sturm.u_ss(s))


class ModalOperator:
    def __init__(self, flow: TrivialFlow, kappa: float, nodes: int = 80):
        self.flow = flow
        self.kappa = kappa
        xg, wg = np.polynomial.legendre.leggauss(nodes)
        self.s = 0.5 * (xg + 1.0)
        self.ws = 0.5 * wg
        self._g1 = flow.model.d1(flow.psi_bar(self.s))
        self._gmu = flow.model.eval(flow.mu)

    def _xweight(self, k: int) -> float:
        period = 2 * np.pi / self.kappa
        return period if k == 0 else period / 2

    def L(self, field) -> ModalPair:
        lam = self.flow.lam
        surf, bulk = {}, {}
        for k, prof in field:
            a1, as1, _ = (float(v) for v in prof(1.0))
            a, _, ass = prof(self.s)
            surf[k] = surf.get(k, 0.0) + lam * as1 + (self._gmu - 1.0 / lam) * a1
            b = ass - (k * self.kappa) ** 2 * a + self._g1 * a
            bulk[k] = bulk.get(k, 0.0) + b
        return ModalPair(surf, bulk)

    def T1_embed(self, field) -> ModalPair:
        """(T1 Phi, Phi) as an element of Y."""
        lam = self.flow.lam
        surf, bulk = {}, {}
        for k, prof in field:
            a1 = float(prof(1.0)[0])
            a = prof(self.s)[0]
            surf[k] = surf.get(k, 0.0) - a1 / lam
            bulk[k] = bulk.get(k, 0.0) + a
        return ModalPair(surf, bulk)

    def inner(self, p: ModalPair, q: ModalPair) -> float:
        total = 0.0
        for k in set(p.surface) & set(q.surface):
            total += self._xweight(k) * p.surface[k] * q.surface[k]
        for k in set(p.bulk) & set(q.bulk):
            total += self._xweight(k) * float(np.sum(self.ws * p.bulk[k] * q.bulk[k]))
        return total

    def norm(self, p: ModalPair) -> float:
        return float(np.sqrt(self.inner(p, p)))

    def symmetry_defect(self, Phi, Psi) -> float:
        """|<(T1 Phi, Phi), L Psi> - <L Phi, (T1 Psi, Psi)>| over the Cauchy-Schwarz scale."""
        a, b = self.T1_embed(Phi), self.L(Psi)
        c, d = self.L(Phi), self.T1_embed(Psi)
        lhs, rhs = self.inner(a, b), self.inner(c, d)
        scale = max(self.norm(a) * self.norm(b), self.norm(c) * self.norm(d))
        return abs(lhs - rhs) / scale

    def orthogonality_defect(self, Psi, n: int) -> float:
        """|<L Psi, (T1 Phi_n, Phi_n)>| relative to the norms of both factors."""
        z = (n * self.kappa) ** 2
        Phi_n = [(n, kernel_profile(self.flow, z))]
        a, b = self.L(Psi), self.T1_embed(Phi_n)
        return abs(self.inner(a, b)) / (self.norm(a) * self.norm(b))
