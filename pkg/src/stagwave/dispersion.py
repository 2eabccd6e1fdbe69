"""Sturm-Liouville shooting for the kernel of the linearised problem.

For a trivial flow we shoot ``u'' + (gamma'(psi_bar) - z) u = 0`` from
``u(0) = 0, u'(0) = 1`` and read off ``l(z) = u'(1)/u(1)``. A mode
``cos(n kappa x)`` lies in the kernel exactly when ``l(n^2 kappa^2)``
equals ``r = 1/lambda^2 - gamma(mu)/lambda``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import NumericalError, ParameterError, PreconditionError
from .trivial_flow import DEFAULT_TOL, FlowParameters, TrivialFlow, solve_trivial
from .vorticity import VorticityModel

log = logging.getLogger(__name__)

POLE = math.inf
POLE_TOL = 1e-10
KERNEL_TOL = 1e-9
TRANSVERSALITY_TOL = 1e-8
N_MAX = 1024
# above this distance from R the growth of u is large; use the Pruefer angle
_PRUFER_SWITCH = 400.0


def is_pole(value) -> bool:
    return value is POLE or (isinstance(value, float) and math.isinf(value))


# -- comparison functions ------------------------------------------------

def comparison_v(z: float) -> float:
    """sqrt(z)/tanh(sqrt(z)), continued through z <= 0; POLE at z = -(k pi)^2."""
    z = float(z)
    if abs(z) < 1e-6:
        return 1.0 + z / 3.0 - z * z / 45.0
    if z > 0:
        r = math.sqrt(z)
        return r / math.tanh(r)
    w = math.sqrt(-z)
    sn = math.sin(w)
    if abs(sn) < 1e-14 * max(1.0, w):
        return POLE
    return w * math.cos(w) / sn


def sigma(z: float) -> float:
    """Continuous arg(cosh sqrt z + i sinh(sqrt z)/sqrt z), with sigma(0) = pi/4."""
    z = float(z)
    if abs(z) < 1e-12:
        return math.pi / 4
    if z > 0:
        r = math.sqrt(z)
        return math.atan(math.tanh(r) / r)
    w = math.sqrt(-z)
    k = math.floor(w / math.pi)
    rem = w - k * math.pi
    if rem == 0.0:
        return k * math.pi
    # cot(sigma) = w cot(w), sigma in (k pi, (k+1) pi)
    return k * math.pi + math.pi / 2 - math.atan(w / math.tan(rem))


def lj_interval(j: int, rho: float, R: float) -> tuple[float, float]:
    """The interval I_j on which l is trapped between v(z - R) and v(z - rho)."""
    if j == 0:
        return R - math.pi ** 2, math.inf
    return R - (j + 1) ** 2 * math.pi ** 2, rho - j ** 2 * math.pi ** 2


def interval_index(z: float, rho: float, R: float, j_max: int = 64):
    """Smallest j with z in I_j, or None."""
    for j in range(j_max + 1):
        lo, hi = lj_interval(j, rho, R)
        if lo < z < hi:
            return j
    return None


# -- shooting ------------------------------------------------------------

@dataclass(frozen=True)
class SturmSolution:
    z: float
    solution: object = field(repr=False)
    flow: TrivialFlow = field(repr=False)

    def __call__(self, s):
        """Rows (u, u_s, u_mu, u_mu_s)."""
        return self.solution(np.asarray(s, dtype=float))

    def u(self, s):
        return self(s)[0]

    def u_s(self, s):
        return self(s)[1]

    def u_mu(self, s):
        return self(s)[2]

    def u_mu_s(self, s):
        return self(s)[3]

    def u_ss(self, s):
        s = np.asarray(s, dtype=float)
        q = self.flow.model.d1(self.flow.psi_bar(s)) - self.z
        return -q * self.u(s)

    def endpoint(self):
        return self.solution(1.0)


def solve_u(flow: TrivialFlow, z: float, tol: float = DEFAULT_TOL) -> SturmSolution:
    """Shoot u(s; z) with its mu-variation u_mu on [0, 1]."""
    if not (1e-14 <= tol <= 1e-6):
        raise ParameterError(f"tol must lie in [1e-14, 1e-6], got {tol}")
    z = float(z)
    base = flow.solution
    local = flow.model.local

    def rhs(s, y):
        p = base(s)
        _, g1, g2 = local(p[0])
        q = g1 - z
        return [y[1], -q * y[0], y[3], -q * y[2] - g2 * p[2] * y[0]]

    sol = solve_ivp(rhs, (0.0, 1.0), [0.0, 1.0, 0.0, 0.0], method="RK45",
                    dense_output=True, rtol=tol, atol=tol)
    if not sol.success:
        raise NumericalError(f"shooting failed at z={z}: {sol.message}")
    return SturmSolution(z=z, solution=sol.sol, flow=flow)


def prufer_angle(flow: TrivialFlow, z: float, tol: float = DEFAULT_TOL,
                 s_end: float = 1.0) -> float:
    """theta(s_end; z) for the continuous branch of arg(u' + i u) with theta(0) = 0."""
    z = float(z)
    base = flow.solution
    local = flow.model.local

    def rhs(s, y):
        _, g1, _ = local(base(s)[0])
        c, sn = math.cos(y[0]), math.sin(y[0])
        return [c * c + (g1 - z) * sn * sn]

    sol = solve_ivp(rhs, (0.0, s_end), [0.0], method="RK45", rtol=tol, atol=tol)
    if not sol.success:
        raise NumericalError(f"Pruefer integration failed at z={z}: {sol.message}")
    return float(sol.y[0, -1])


def eval_l(flow: TrivialFlow, z: float, tol: float = DEFAULT_TOL,
           pole_tol: float = POLE_TOL) -> float:
    """l(z) = u'(1; z)/u(1; z), or POLE when |u(1; z)| < pole_tol."""
    _, R = flow.model.derivative_bounds()
    if z - R > _PRUFER_SWITCH:
        # deep inside I_0: no poles, u overflows, cot(theta) is well conditioned
        return 1.0 / math.tan(prufer_angle(flow, z, tol))
    u1, du1 = solve_u(flow, z, tol).endpoint()[:2]
    if abs(u1) < pole_tol:
        return POLE
    return float(du1 / u1)


def eval_r(model: VorticityModel, params: FlowParameters) -> float:
    lam = params.lam
    if lam == 0:
        raise ParameterError("r is undefined for lambda = 0")
    return 1.0 / lam ** 2 - model.eval(params.mu) / lam


def r_mu(model: VorticityModel, params: FlowParameters) -> float:
    return -model.eval(params.mu, 1) / params.lam


def r_lambda(model: VorticityModel, params: FlowParameters) -> float:
    lam = params.lam
    return -2.0 / lam ** 3 + model.eval(params.mu) / lam ** 2


def _kernel_hit(l_value, r_value, kernel_tol):
    return (not is_pole(l_value)) and abs(l_value - r_value) <= kernel_tol * max(1.0, abs(r_value))


# -- transversality ------------------------------------------------------

def _l_derivative(flow: TrivialFlow, z: float, which: str, tol: float):
    sturm = solve_u(flow, z, tol)
    u1 = float(sturm.u(1.0))
    if abs(u1) < POLE_TOL:
        raise PreconditionError(f"u(1; {z}) vanishes; mode is not in the kernel")
    model = flow.model
    row = 2 if which == "mu" else 4

    def integrand(s):
        base = flow.solution(s)
        u = sturm.solution(s)[0]
        return model.local(base[0])[2] * base[row] * u * u

    if model.terms:
        val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11, limit=200)
    else:
        val = 0.0  # gamma'' vanishes identically
    return -val / u1 ** 2


def transversality(flow: TrivialFlow, n: int, kappa: float,
                   tol: float = TRANSVERSALITY_TOL, ode_tol: float = DEFAULT_TOL):
    """(l_mu, r_mu, holds) for mode n, with l_mu from the gamma'' integral identity."""
    z = (n * kappa) ** 2
    lm = _l_derivative(flow, z, "mu", ode_tol)
    rm = r_mu(flow.model, flow.params)
    return lm, rm, abs(lm - rm) > tol


def transversality_lambda(flow: TrivialFlow, n: int, kappa: float,
                          tol: float = TRANSVERSALITY_TOL, ode_tol: float = DEFAULT_TOL):
    """Same as :func:`transversality` with lambda as the bifurcation parameter."""
    z = (n * kappa) ** 2
    ll = _l_derivative(flow, z, "lam", ode_tol)
    rl = r_lambda(flow.model, flow.params)
    return ll, rl, abs(ll - rl) > tol


# -- kernel --------------------------------------------------------------

@dataclass
class ModeRecord:
    l_value: float
    r_value: float
    in_kernel: bool
    l_mu: float | None = None
    r_mu: float | None = None
    transversal: bool | None = None
    l_lambda: float | None = None
    r_lambda: float | None = None
    transversal_lambda: bool | None = None


@dataclass
class KernelReport:
    params: FlowParameters
    kappa: float
    modes: dict
    M: list
    n_max_scanned: int

    @property
    def one_dimensional(self) -> bool:
        return len(self.M) == 1 and self.M[0] >= 1

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and math.isinf(v):
                return "pole"
            return v

        return {
            "mu": self.params.mu,
            "lambda": self.params.lam,
            "kappa": self.kappa,
            "M": list(self.M),
            "n_max_scanned": self.n_max_scanned,
            "modes": {str(n): {k: clean(v) for k, v in vars(rec).items()}
                      for n, rec in self.modes.items()},
        }


def kernel_set(flow: TrivialFlow, kappa: float, kernel_tol: float = KERNEL_TOL,
               n_cap: int = N_MAX, margin: float = 1.0) -> KernelReport:
    """Scan n = 0, 1, ... for solutions of l(n^2 kappa^2) = r."""
    if kappa <= 0:
        raise ParameterError("kappa must be positive")
    rho, R = flow.model.derivative_bounds()
    r_value = eval_r(flow.model, flow.params)
    modes, M = {}, []
    n = 0
    for n in range(n_cap + 1):
        z = (n * kappa) ** 2
        l_value = eval_l(flow, z)
        hit = _kernel_hit(l_value, r_value, kernel_tol)
        rec = ModeRecord(l_value=l_value, r_value=r_value, in_kernel=hit)
        if hit:
            M.append(n)
            rec.l_mu, rec.r_mu, rec.transversal = transversality(flow, n, kappa)
            (rec.l_lambda, rec.r_lambda,
             rec.transversal_lambda) = transversality_lambda(flow, n, kappa)
        modes[n] = rec
        # l increases on I_0, so once it passes r no later mode can hit
        in_i0 = z > max(R - math.pi ** 2, 0.0) + margin
        if in_i0 and not is_pole(l_value) and l_value > r_value and not hit:
            break
    return KernelReport(params=flow.params, kappa=kappa, modes=modes, M=M,
                        n_max_scanned=n)


# -- bifurcation points --------------------------------------------------

def _candidate_intervals(g_mu: float, v_low: float, lam_max: float):
    """Guaranteed root-bearing lambda intervals, derived from r's shape.

    r(lambda) -> +inf as lambda -> 0, r(1/g) = 0, min r = -g^2/4 at 2/g.
    """
    if v_low <= 0:
        # r climbs back from its minimum towards 0 beyond 2/g: a second root
        if g_mu > 0:
            return [(0.0, 2.0 / g_mu), (2.0 / g_mu, lam_max)]
        return [(-lam_max, 2.0 / g_mu), (2.0 / g_mu, 0.0)]
    if g_mu > 0:
        return [(-lam_max, 0.0), (0.0, 1.0 / g_mu)]
    if g_mu < 0:
        return [(1.0 / g_mu, 0.0), (0.0, lam_max)]
    return [(-lam_max, 0.0), (0.0, lam_max)]


def _sample_points(lo: float, hi: float, n: int, lam_min: float):
    """Samples on (lo, hi) clustered towards zero (geometric in |lambda|)."""
    if hi <= 0:
        a, b = max(-hi, lam_min), -lo
        return -np.geomspace(a, b, n)[::-1][:-1] if a < b else np.zeros(0)
    a, b = max(lo, lam_min), hi
    return np.geomspace(a, b, n)[1:] if a < b else np.zeros(0)


@dataclass
class BifurcationSearch:
    roots: list
    diagnostic: str = ""
    dropped: list = field(default_factory=list)


def dispersion_residual(model: VorticityModel, mu: float, kappa: float, n: int,
                        tol: float = DEFAULT_TOL):
    """lambda -> r(mu, lambda) - l(n^2 kappa^2; mu, lambda)."""
    z = (n * kappa) ** 2

    def g(lam):
        params = FlowParameters(mu, float(lam))
        flow = solve_trivial(model, params, tol)
        l_value = eval_l(flow, z, tol)
        if is_pole(l_value):
            return math.nan
        return eval_r(model, params) - l_value

    return g


def find_bifurcation_lambda(model: VorticityModel, mu: float, kappa: float, n: int,
                            samples: int = 48, lam_min: float = 1e-3,
                            lam_max: float = 1e3, kernel_tol: float = KERNEL_TOL,
                            verify: bool = True, details: bool = False):
    """All lambda != 0 with n in M(mu, lambda), by bracketing then Brent refinement."""
    if n < 1:
        raise ParameterError("mode number must be >= 1")
    rho, R = model.derivative_bounds()
    z = (n * kappa) ** 2
    result = BifurcationSearch(roots=[])
    j = interval_index(z, rho, R)
    v_low = comparison_v(z - R)
    g_mu = float(model.eval(mu))
    if j is None:
        result.diagnostic = f"n^2 kappa^2 = {z:g} lies in no interval I_j"
    elif is_pole(v_low) or not g_mu ** 2 > -4.0 * v_low:
        result.diagnostic = "gamma(mu)^2 > -4 v(n^2 kappa^2 - R) fails"
    if result.diagnostic:
        log.info("bifurcation search skipped: %s", result.diagnostic)
        return result if details else result.roots

    g = dispersion_residual(model, mu, kappa, n)
    found = []
    for lo, hi in _candidate_intervals(g_mu, v_low, lam_max):
        pts = _sample_points(lo, hi, samples, lam_min)
        if pts.size < 2:
            continue
        vals = np.array([g(p) for p in pts])
        for a, b, fa, fb in zip(pts[:-1], pts[1:], vals[:-1], vals[1:]):
            if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
                continue
            if fa == 0.0:
                root = a
            else:
                root = brentq(g, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                              maxiter=200)
            if not found or min(abs(root - f) for f in found) > 1e-10:
                found.append(float(root))

    for lam in sorted(found):
        if not verify:
            result.roots.append(lam)
            continue
        flow = solve_trivial(model, FlowParameters(mu, lam))
        report = kernel_set(flow, kappa, kernel_tol=kernel_tol)
        if n in report.M:
            result.roots.append(lam)
        else:
            log.warning("lambda=%r not confirmed by the kernel scan; dropped", lam)
            result.dropped.append(lam)
    return result if details else result.roots
