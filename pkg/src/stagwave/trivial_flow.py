"""Parallel shear flows under a flat surface and their parameter sensitivities.

The trivial stream function solves ``psi'' + gamma(psi) = 0`` on [0, 1]
with terminal data ``psi(1) = mu``, ``psi'(1) = lambda``. We integrate it
backwards together with the two variational equations

    zeta'' + gamma'(psi) zeta = 0,   (zeta, zeta')(1) = (1, 0) or (0, 1)

which give ``psi_mu`` and ``psi_lambda``. All six components share one
adaptive Runge-Kutta 5(4) dense output.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericalError, ParameterError
from .vorticity import VorticityModel

DEFAULT_TOL = 1e-12
MAX_ABS_SLOPE = 200.0
# growth factor beyond which roughly four digits are lost downstream
GROWTH_WARN = 1e4


class ConditioningWarning(UserWarning):
    """The trivial flow grows so fast that downstream solves lose digits."""


@dataclass(frozen=True)
class FlowParameters:
    mu: float
    lam: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.lam)):
            raise ParameterError("flow parameters must be finite")
        if self.lam == 0.0:
            raise ParameterError("surface shear lambda must be nonzero")

    def replace(self, **kw) -> "FlowParameters":
        return FlowParameters(kw.get("mu", self.mu), kw.get("lam", self.lam))


@dataclass(frozen=True)
class TrivialFlow:
    params: FlowParameters
    model: VorticityModel
    solution: object = field(repr=False)
    Q: float
    Upsilon: float
    tol: float
    wronskian_defect: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def mu(self):
        return self.params.mu

    @property
    def lam(self):
        return self.params.lam

    def state(self, s):
        """All six components (psi, psi', psi_mu, psi_mu', psi_lam, psi_lam')."""
        return self.solution(np.asarray(s, dtype=float))

    def psi_bar(self, s):
        return self.state(s)[0]

    def psi_bar_s(self, s):
        return self.state(s)[1]

    def psi_mu(self, s):
        return self.state(s)[2]

    def psi_mu_s(self, s):
        return self.state(s)[3]

    def psi_lambda(self, s):
        return self.state(s)[4]

    def psi_lambda_s(self, s):
        return self.state(s)[5]

    def wronskian(self, s):
        y = self.state(s)
        return y[2] * y[5] - y[4] * y[3]

    def psi_bar_ss(self, s):
        return -self.model.gamma(self.psi_bar(s))

    def sampled(self, s: np.ndarray) -> dict:
        """Grid samples of the flow and its sensitivities, cached per grid."""
        s = np.asarray(s, dtype=float)
        key = (s.size, float(s[0]), float(s[-1]))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        y = self.state(s)
        g = self.model.gamma(y[0])
        g1 = self.model.d1(y[0])
        out = {
            "psi": y[0], "psi_s": y[1], "psi_ss": -g,
            "mu": y[2], "mu_s": y[3], "mu_ss": -g1 * y[2],
            "lam": y[4], "lam_s": y[5], "lam_ss": -g1 * y[4],
        }
        self._cache[key] = out
        return out


def _rhs(model: VorticityModel):
    local = model.local

    def f(s, y):
        g, g1, _ = local(y[0])
        return [y[1], -g, y[3], -g1 * y[2], y[5], -g1 * y[4]]

    return f


def solve_trivial(model: VorticityModel, params: FlowParameters,
                  tol: float = DEFAULT_TOL, method: str = "RK45",
                  max_abs_slope: float = MAX_ABS_SLOPE) -> TrivialFlow:
    """Integrate the trivial flow and its mu/lambda variations from s=1 to s=0."""
    if not isinstance(params, FlowParameters):
        params = FlowParameters(*params)
    if not (1e-14 <= tol <= 1e-6):
        raise ParameterError(f"tol must lie in [1e-14, 1e-6], got {tol}")
    rho, R = model.derivative_bounds()
    if max(abs(rho), abs(R)) > max_abs_slope:
        raise ParameterError(
            f"|gamma'| up to {max(abs(rho), abs(R)):g} exceeds the cap {max_abs_slope:g}"
        )
    if rho < 0 and math.cosh(math.sqrt(-rho)) > GROWTH_WARN:
        warnings.warn(
            f"hyperbolic growth ~cosh(sqrt({-rho:g})) in the trivial flow; "
            "expect loss of accuracy", ConditioningWarning, stacklevel=2)

    y1 = [params.mu, params.lam, 1.0, 0.0, 0.0, 1.0]
    sol = solve_ivp(_rhs(model), (1.0, 0.0), y1, method=method, dense_output=True,
                    rtol=tol, atol=tol)
    if not sol.success:
        raise NumericalError(f"trivial-flow integration failed: {sol.message}",
                             achieved_tol=None)
    dense = sol.sol
    probe = np.linspace(0.0, 1.0, 201)
    y = dense(probe)
    defect = float(np.max(np.abs(y[2] * y[5] - y[4] * y[3] - 1.0)))
    if not np.all(np.isfinite(y)):
        raise NumericalError("trivial flow is not finite on [0, 1]", achieved_tol=None)
    upsilon = float(sol.y[0, -1])
    return TrivialFlow(params=params, model=model, solution=dense,
                       Q=0.5 * params.lam ** 2, Upsilon=upsilon, tol=tol,
                       wronskian_defect=defect)


def surface_head(flow: TrivialFlow) -> tuple[float, float]:
    """Bernoulli constant Q and bed stream value Upsilon."""
    return flow.Q, flow.Upsilon

