"""The flattened free-boundary system on the collocation grid.

Unknowns are the surface deviation ``eta`` and the disturbance ``phi``
on the interior s-levels; ``psi_hat = psi_bar + phi`` with the trivial
profile and its s-derivatives taken from the ODE solution, so the
discrete residual vanishes identically on the trivial branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, ParameterError, PreconditionError
from ..trivial_flow import FlowParameters, TrivialFlow
from .grid import Grid

SOLUTION_TOL = 1e-8


@dataclass
class WaveState:
    eta: np.ndarray
    phi: np.ndarray
    flow: TrivialFlow = field(repr=False)
    grid: Grid

    def __post_init__(self):
        self.eta = np.asarray(self.eta)
        self.phi = np.asarray(self.phi)
        g = self.grid
        if self.eta.shape != (g.Nx,) or self.phi.shape != (g.Nx, g.Ns):
            raise ParameterError(
                f"state shapes {self.eta.shape}, {self.phi.shape} do not match "
                f"grid {g.Nx}x{g.Ns}")

    @classmethod
    def trivial(cls, flow: TrivialFlow, grid: Grid) -> "WaveState":
        return cls(np.zeros(grid.Nx), np.zeros((grid.Nx, grid.Ns)), flow, grid)

    @property
    def params(self) -> FlowParameters:
        return self.flow.params

    @property
    def model(self):
        return self.flow.model

    def surface_shear(self):
        """psi_hat_s on s = 1."""
        return self.flow.lam + self.phi @ self.grid.Ds[-1]

    def psi_hat(self):
        return self.flow.sampled(self.grid.s)["psi"][None, :] + self.phi

    def check(self):
        """Raise DomainError naming the first violated invariant."""
        if not (np.all(np.isfinite(self.eta)) and np.all(np.isfinite(self.phi))):
            raise DomainError("state has non-finite entries", invariant="finite")
        depth = 1.0 + self.eta
        if np.any(depth <= 0):
            j = int(np.argmin(depth))
            raise DomainError(f"1 + eta <= 0 at x = {self.grid.x[j]:.6g}",
                              invariant="positive-depth", location=j)
        shear = np.sign(self.flow.lam) * self.surface_shear()
        if np.any(shear <= 0):
            j = int(np.argmin(shear))
            raise DomainError(f"surface stagnation at x = {self.grid.x[j]:.6g}",
                              invariant="surface-shear", location=j)
        edge = max(np.max(np.abs(self.phi[:, 0])), np.max(np.abs(self.phi[:, -1])))
        if edge != 0.0:
            raise DomainError("phi must vanish on s = 0 and s = 1",
                              invariant="dirichlet", location=None)
        return self

    def with_flow(self, flow: TrivialFlow) -> "WaveState":
        return WaveState(self.eta, self.phi, flow, self.grid)

    # -- flat vector of unknowns -------------------------------------------
    def vector(self) -> np.ndarray:
        return np.concatenate([self.eta, self.phi[:, 1:-1].ravel()])

    @classmethod
    def from_vector(cls, X, flow: TrivialFlow, grid: Grid) -> "WaveState":
        X = np.asarray(X)
        nx, ni = grid.Nx, grid.n_interior
        phi = np.zeros((nx, grid.Ns), dtype=X.dtype)
        phi[:, 1:-1] = X[nx:].reshape(nx, ni)
        return cls(X[:nx].copy(), phi, flow, grid)

    def half_period_shift(self) -> "WaveState":
        """x -> x + pi/kappa_eff, which on the half-period grid reverses the nodes."""
        return WaveState(self.eta[::-1].copy(), self.phi[::-1].copy(), self.flow, self.grid)


@dataclass
class Residual:
    f1: np.ndarray
    f2: np.ndarray
    grid: Grid = field(repr=False)
    flagged: bool = False

    def vector(self) -> np.ndarray:
        return np.concatenate([self.f1, self.f2[:, 1:-1].ravel()])

    @classmethod
    def from_vector(cls, v, grid: Grid) -> "Residual":
        v = np.asarray(v)
        f2 = np.zeros((grid.Nx, grid.Ns), dtype=v.dtype)
        f2[:, 1:-1] = v[grid.Nx:].reshape(grid.Nx, grid.n_interior)
        return cls(v[:grid.Nx].copy(), f2, grid)

    def norm(self) -> float:
        v = self.vector()
        return float(np.max(np.abs(v))) if v.size else 0.0


# -- shared pointwise quantities --------------------------------------------

def _ops(grid: Grid, dtype):
    if dtype == np.float64:
        return grid.D1x, grid.D2x, grid.Ds, grid.Dss
    return tuple(m.astype(dtype) for m in (grid.D1x, grid.D2x, grid.Ds, grid.Dss))


def _fields(state: WaveState):
    g = state.grid
    eta, phi = state.eta, state.phi
    dtype = np.result_type(eta.dtype, phi.dtype, np.float64)
    D1x, D2x, Ds, Dss = _ops(g, dtype)
    sm = state.flow.sampled(g.s)
    s = g.s.astype(dtype)[None, :]
    phi_s = phi @ Ds.T
    f = {
        "s": s,
        "e": 1.0 + eta,
        "ex": D1x @ eta,
        "exx": D2x @ eta,
        "psi": sm["psi"][None, :] + phi,
        "psi_s": sm["psi_s"][None, :] + phi_s,
        "psi_ss": sm["psi_ss"][None, :] + phi @ Dss.T,
        "psi_xx": D2x @ phi,
        "psi_xs": D1x @ phi_s,
    }
    e = f["e"][:, None]
    ex = f["ex"][:, None]
    f["a"] = s * ex / e
    f["c"] = f["a"] ** 2 + 1.0 / e ** 2
    f["b"] = -s * f["exx"][:, None] / e + 2.0 * s * ex ** 2 / e ** 2
    return f


def residual(state: WaveState, check: bool = True) -> Residual:
    """Bernoulli surface residual f1 and interior elliptic residual f2."""
    if check:
        state.check()
    f = _fields(state)
    g = state.grid
    model = state.model
    top = f["psi_s"][:, -1]
    e, ex = f["e"], f["ex"]
    f1 = (1.0 + ex ** 2) / (2.0 * e ** 2) * top ** 2 + state.eta - state.flow.Q
    f2_all = (f["psi_xx"] - 2.0 * f["a"] * f["psi_xs"] + f["c"] * f["psi_ss"]
              + f["b"] * f["psi_s"] + model.gamma(f["psi"]))
    f2 = np.zeros_like(f2_all)
    f2[:, 1:-1] = f2_all[:, 1:-1]
    return Residual(f1, f2, g)


def residual_vector(state: WaveState, check: bool = True) -> np.ndarray:
    return residual(state, check).vector()


def jacobian(state: WaveState, check: bool = True) -> np.ndarray:
    """Dense derivative of :func:`residual_vector` with respect to ``state.vector()``."""
    if check:
        state.check()
    g = state.grid
    nx, ni = g.Nx, g.n_interior
    f = _fields(state)
    D1x, D2x, Ds, Dss = g.D1x, g.D2x, g.Ds, g.Dss
    sl = slice(1, -1)
    s = f["s"][:, sl]
    e = f["e"][:, None]
    ex, exx = f["ex"][:, None], f["exx"][:, None]
    a = f["a"][:, sl]
    psi_s, psi_ss, psi_xs = f["psi_s"][:, sl], f["psi_ss"][:, sl], f["psi_xs"][:, sl]

    J = np.zeros((nx + nx * ni, nx + nx * ni))

    # surface row block
    top = f["psi_s"][:, -1]
    e1, ex1 = f["e"], f["ex"]
    A = (1.0 + ex1 ** 2) / (2.0 * e1 ** 2)
    dA_de = -(1.0 + ex1 ** 2) / e1 ** 3
    dA_dex = ex1 / e1 ** 2
    J[:nx, :nx] = np.diag(1.0 + dA_de * top ** 2) + (dA_dex * top ** 2)[:, None] * D1x
    dtop = Ds[-1, sl]
    J1p = np.zeros((nx, nx, ni))
    J1p[np.arange(nx), np.arange(nx), :] = (2.0 * A * top)[:, None] * dtop[None, :]
    J[:nx, nx:] = J1p.reshape(nx, nx * ni)

    # interior rows, eta columns
    a_e = -s * ex / e ** 2
    a_ex = s / e
    c_e = 2.0 * a * a_e - 2.0 / e ** 3
    c_ex = 2.0 * a * a_ex
    b_e = s * exx / e ** 2 - 4.0 * s * ex ** 2 / e ** 3
    b_ex = 4.0 * s * ex / e ** 2
    b_exx = -s / e
    P0 = -2.0 * a_e * psi_xs + c_e * psi_ss + b_e * psi_s
    P1 = -2.0 * a_ex * psi_xs + c_ex * psi_ss + b_ex * psi_s
    P2 = b_exx * psi_s
    J2e = (P1[:, :, None] * D1x[:, None, :] + P2[:, :, None] * D2x[:, None, :])
    J2e[np.arange(nx), :, np.arange(nx)] += P0
    J[nx:, :nx] = J2e.reshape(nx * ni, nx)

    # interior rows, phi columns
    Dsi, Dssi = Ds[sl, sl], Dss[sl, sl]
    c, b = f["c"][:, sl], f["b"][:, sl]
    g1 = state.model.d1(f["psi"][:, sl])
    J4 = D2x[:, None, :, None] * np.eye(ni)[None, :, None, :]
    J4 += (-2.0 * a)[:, :, None, None] * D1x[:, None, :, None] * Dsi[None, :, None, :]
    diag = c[:, :, None] * Dssi[None, :, :] + b[:, :, None] * Dsi[None, :, :]
    diag[:, np.arange(ni), np.arange(ni)] += g1
    J4[np.arange(nx), :, np.arange(nx), :] += diag
    J[nx:, nx:] = J4.reshape(nx * ni, nx * ni)
    return J


def parameter_derivative(state: WaveState, which: str = "mu") -> np.ndarray:
    """d(residual_vector)/d(mu or lambda) at fixed (eta, phi)."""
    if which not in ("mu", "lambda"):
        raise ParameterError(f"unknown parameter {which!r}")
    g = state.grid
    f = _fields(state)
    sm = state.flow.sampled(g.s)
    key = "mu" if which == "mu" else "lam"
    p, p_s, p_ss = sm[key][None, :], sm[key + "_s"][None, :], sm[key + "_ss"][None, :]
    top = f["psi_s"][:, -1]
    A = (1.0 + f["ex"] ** 2) / (2.0 * f["e"] ** 2)
    d1 = 2.0 * A * top * p_s[0, -1]
    if which == "lambda":
        d1 = d1 - state.flow.lam
    d2 = (f["c"] * p_ss + f["b"] * p_s + state.model.d1(f["psi"]) * p)[:, 1:-1]
    return np.concatenate([d1, d2.ravel()])


# -- L operator, T map, kernel mode -----------------------------------------

def _solution_flag(state: WaveState, tol: float) -> bool:
    return residual(state, check=False).norm() > tol


def apply_L(state: WaveState, Phi, solution_tol: float = SOLUTION_TOL) -> Residual:
    """(L1 Phi, L2 Phi); flagged when ``state`` is not a solution."""
    g = state.grid
    Phi = np.asarray(Phi, dtype=float)
    if Phi.shape != (g.Nx, g.Ns):
        raise ParameterError("Phi does not match the grid")
    f = _fields(state)
    D1x, D2x, Ds, Dss = g.D1x, g.D2x, g.Ds, g.Dss
    e, ex = f["e"], f["ex"]
    top = f["psi_s"][:, -1]
    Phi_s = Phi @ Ds.T
    PhiS, PhiS_s = Phi[:, -1], Phi_s[:, -1]
    gmu = state.model.eval(state.flow.mu)
    # d/dx(ex top PhiS / e) by the product rule: the product is odd in x and
    # the cosine differentiation matrix only applies to even data
    flux = (f["exx"] * top * PhiS / e - (ex / e) ** 2 * top * PhiS
            + ex / e * (D1x @ (top * PhiS)))
    L1 = (1.0 + ex ** 2) / e ** 2 * top * PhiS_s + (gmu - e / top) * PhiS - flux
    L2_all = (D2x @ Phi - 2.0 * f["a"] * (D1x @ Phi_s) + f["c"] * (Phi @ Dss.T)
              + f["b"] * Phi_s + state.model.d1(f["psi"]) * Phi)
    L2 = np.zeros_like(L2_all)
    L2[:, 1:-1] = L2_all[:, 1:-1]
    return Residual(L1, L2, g, flagged=_solution_flag(state, solution_tol))


def apply_T(state: WaveState, Phi):
    """(H, Phi_hat) = T(w, Lambda) Phi.

    The profile s psi_hat_s and its surface trace use the fourth-order
    s-derivative. With the second-order pair (centred inside, one-sided at
    s = 1) the two stencils disagree at O(hs^2) next to the surface, and the
    second difference in the Jacobian turns that into an O(1) defect in
    D_wF T - L on the top interior row.
    """
    g = state.grid
    Phi = np.asarray(Phi, dtype=float)
    if np.any(np.sign(state.flow.lam) * state.surface_shear() <= 0):
        raise DomainError("surface stagnation; T is undefined", invariant="surface-shear")
    psi_s = state.flow.sampled(g.s)["psi_s"][None, :] + state.phi @ g.Ds4.T
    top = psi_s[:, -1]
    ratio = Phi[:, -1] / top
    H = -(1.0 + state.eta) * ratio
    Phi_hat = Phi - g.s[None, :] * psi_s * ratio[:, None]
    Phi_hat[:, 0] = 0.0
    Phi_hat[:, -1] = 0.0
    return H, Phi_hat


def pair_vector(H, Phi_hat) -> np.ndarray:
    return np.concatenate([np.asarray(H), np.asarray(Phi_hat)[:, 1:-1].ravel()])


def kernel_mode(flow: TrivialFlow, n: int, kappa: float, grid: Grid,
                kernel_tol: float | None = None) -> np.ndarray:
    """cos(n kappa x) u(s; n^2 kappa^2) on the grid, scaled to max |.| = 1."""
    from .. import dispersion

    ratio = n * kappa / grid.kappa_eff
    if n < 0 or abs(ratio - round(ratio)) > 1e-12:
        raise ParameterError("n kappa must be an integer multiple of the grid wavenumber")
    tol = dispersion.KERNEL_TOL if kernel_tol is None else kernel_tol
    z = (n * kappa) ** 2
    l_value = dispersion.eval_l(flow, z)
    r_value = dispersion.eval_r(flow.model, flow.params)
    if not dispersion._kernel_hit(l_value, r_value, tol):
        raise PreconditionError(f"mode {n} is not in the kernel (l - r = {l_value - r_value:.3e})")
    u = dispersion.solve_u(flow, z).u(grid.s)
    prof = np.cos(n * kappa * grid.x)[:, None] * u[None, :]
    return prof / np.max(np.abs(prof))


def inner_product_Y(a: Residual, b: Residual) -> float:
    """Trapezoid L2 product over one period of the surface plus the strip."""
    if a.grid != b.grid:
        raise ParameterError("inner product of fields on different grids")
    g = a.grid
    wx, ws = g.x_weights(), g.s_weights()
    surf = float(np.sum(wx * a.f1 * b.f1))
    bulk = float(np.sum(wx[:, None] * ws[None, :] * a.f2 * b.f2))
    return surf + bulk


def inner_product_Y_pair(a: tuple, b: tuple, grid: Grid) -> float:
    return inner_product_Y(Residual(np.asarray(a[0]), np.asarray(a[1]), grid),
                           Residual(np.asarray(b[0]), np.asarray(b[1]), grid))


# -- discrete bifurcation at trivial states ---------------------------------

def mode_matrix(flow: TrivialFlow, grid: Grid, m: int) -> np.ndarray:
    """Trivial-state Jacobian restricted to cos(m kappa_eff x), on (h, phi_interior)."""
    sl = slice(1, -1)
    sm = flow.sampled(grid.s)
    s = grid.s[sl]
    k2 = (m * grid.kappa_eff) ** 2
    ni = grid.n_interior
    lam = flow.lam
    Jm = np.zeros((ni + 1, ni + 1))
    Jm[0, 0] = 1.0 - lam ** 2
    Jm[0, 1:] = lam * grid.Ds[-1, sl]
    Jm[1:, 0] = -2.0 * sm["psi_ss"][sl] + s * k2 * sm["psi_s"][sl]
    Jm[1:, 1:] = grid.Dss[sl, sl] + np.diag(flow.model.d1(sm["psi"][sl]) - k2)
    return Jm


def mode_dispersion(flow: TrivialFlow, grid: Grid, m: int) -> float:
    """Schur complement of :func:`mode_matrix`; zero exactly at discrete bifurcation."""
    Jm = mode_matrix(flow, grid, m)
    y = np.linalg.solve(Jm[1:, 1:], Jm[1:, 0])
    return float(Jm[0, 0] - Jm[0, 1:] @ y)


def mode_null_vector(flow: TrivialFlow, grid: Grid, m: int):
    """(h, phi profile) spanning the null space of the mode matrix, h = 1."""
    Jm = mode_matrix(flow, grid, m)
    y = np.linalg.solve(Jm[1:, 1:], Jm[1:, 0])
    prof = np.zeros(grid.Ns)
    prof[1:-1] = -y
    return 1.0, prof


def mode_field(grid: Grid, m: int, h: float, prof) -> tuple[np.ndarray, np.ndarray]:
    c = np.cos(m * grid.kappa_eff * grid.x)
    return h * c, c[:, None] * np.asarray(prof)[None, :]
