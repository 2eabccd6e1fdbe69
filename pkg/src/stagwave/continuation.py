"""Pseudo-arclength continuation of bifurcating wave branches.

The unknown is ``Y = (eta, phi_interior, p)`` where ``p`` is the free
flow parameter (mu by default, lambda when requested). Each corrector
solves the bordered system

    [ J    F_p ] [dX]   [ F      ]
    [ c^T      ] [dp] = [ c.Y - d]

with a dense LU factorisation. Arclength and tangents use a weighted
inner product that approximates the L2 norm of ``w`` on the grid, so the
step size does not depend on the resolution.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import brentq

from . import dispersion
from .errors import (BifurcationValidationError, DomainError, NewtonFailure,
                     NumericalError, ParameterError)
from .operator.grid import Grid
from .operator.system import (WaveState, apply_T, jacobian, kernel_mode, mode_dispersion,
                              mode_field, mode_null_vector, pair_vector,
                              parameter_derivative, residual)
from .trivial_flow import FlowParameters, TrivialFlow, solve_trivial

log = logging.getLogger(__name__)

TERMINATIONS = ("step-budget", "alternative-A-threshold", "newton-failure",
                "closed-loop-detected")


@dataclass
class ContinuationSettings:
    step: float = 0.01
    max_steps: int = 40
    newton_tol: float = 1e-10
    max_iter: int = 12
    min_step: float = 1e-8
    max_step: float | None = None
    grow: float = 1.3
    fast_iters: int = 4
    alt_a_threshold: float = 1e-3
    size_cap: float = 1e3
    loop_tol: float = 1e-6
    flat_tol: float = 1e-8
    parameter: str = "mu"
    direction: int = 1
    adaptive: bool = True
    refine_bifurcation: bool = True

    def __post_init__(self):
        if self.parameter not in ("mu", "lambda"):
            raise ParameterError(f"continuation parameter must be mu or lambda, got "
                                 f"{self.parameter!r}")
        if self.direction not in (1, -1):
            raise ParameterError("direction must be +1 or -1")
        if not (self.step > 0 and self.newton_tol > 0 and self.max_steps >= 0):
            raise ParameterError("step, newton_tol and max_steps must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "ContinuationSettings":
        data = dict(data)
        th = data.pop("thresholds", {}) or {}
        if "alt_a" in th:
            data["alt_a_threshold"] = th["alt_a"]
        if "size_cap" in th:
            data["size_cap"] = th["size_cap"]
        if "loop" in th:
            data["loop_tol"] = th["loop"]
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown continuation settings {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["thresholds"] = {"alt_a": out.pop("alt_a_threshold"),
                             "size_cap": out.pop("size_cap"),
                             "loop": out.pop("loop_tol")}
        return out


@dataclass(frozen=True)
class Monitors:
    inv_size: float
    min_depth: float
    min_shear: float
    eta_max: float
    size: float

    def smallest(self) -> float:
        return min(self.inv_size, self.min_depth, self.min_shear)


@dataclass
class BranchPoint:
    t: float
    state: WaveState
    mu: float
    residual_norm: float
    monitors: Monitors
    newton_iters: int = 0
    events: list = field(default_factory=list)
    tangent: np.ndarray | None = field(default=None, repr=False)

    @property
    def lam(self) -> float:
        return self.state.flow.lam


@dataclass
class Branch:
    points: list
    lambda_star: float
    n: int
    kappa: float
    termination: str = "step-budget"
    parameter: str = "mu"
    events: list = field(default_factory=list)
    settings: ContinuationSettings | None = None
    tangent: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.points)

    @property
    def accepted_steps(self) -> int:
        return max(len(self.points) - 1, 0)


@dataclass(frozen=True)
class LinearConstraint:
    """c . Y = d on the extended unknown Y = (X, p)."""
    c: np.ndarray
    d: float

    def value(self, Y) -> float:
        return float(self.c @ Y - self.d)


# -- weighted geometry -------------------------------------------------------

def state_weights(grid: Grid) -> np.ndarray:
    nx, ni = grid.Nx, grid.n_interior
    return np.concatenate([np.full(nx, 1.0 / nx), np.full(nx * ni, 1.0 / (nx * ni)), [1.0]])


def wnorm(v, w) -> float:
    return float(np.sqrt(np.sum(w * v * v)))


def _param_value(flow: TrivialFlow, which: str) -> float:
    return flow.mu if which == "mu" else flow.lam


def _flow_at(model, params: FlowParameters, which: str, p: float) -> TrivialFlow:
    new = params.replace(mu=p) if which == "mu" else params.replace(lam=p)
    return solve_trivial(model, new)


def extended_vector(state: WaveState, which: str) -> np.ndarray:
    return np.concatenate([state.vector(), [_param_value(state.flow, which)]])


# -- monitors ----------------------------------------------------------------

def monitor(point_or_state, mu: float | None = None) -> Monitors:
    """inv_size, min_depth, min_shear and eta_max for a state or BranchPoint."""
    state = point_or_state.state if isinstance(point_or_state, BranchPoint) else point_or_state
    if mu is None:
        mu = state.flow.mu
    g = state.grid
    eta, phi = state.eta, state.phi
    phi_s = phi @ g.Ds.T
    # C^2 surrogate; the Hoelder seminorm is not represented
    parts = [eta, g.D1x @ eta, g.D2x @ eta, phi, g.D1x @ phi, phi_s,
             g.D2x @ phi, g.D1x @ phi_s, phi @ g.Dss.T]
    size = max(float(np.max(np.abs(p))) for p in parts)
    return Monitors(
        inv_size=1.0 / (1.0 + size + abs(mu)),
        min_depth=float(np.min(1.0 + eta)),
        min_shear=float(np.min(np.abs(state.surface_shear()))),
        eta_max=float(np.max(eta)),
        size=size,
    )


def spectral_purity(eta, grid: Grid, wavenumber: float) -> float:
    """Fraction of the x-energy of eta carried by multiples of ``wavenumber``."""
    a = grid.cosine_coefficients(eta)
    k = np.arange(grid.Nx) * grid.kappa_eff
    wt = np.full(grid.Nx, 0.5)
    wt[0] = 1.0
    wt[-1] = 1.0
    energy = wt * a * a
    total = float(np.sum(energy))
    if total == 0.0:
        return 1.0
    ratio = k / wavenumber
    on = np.abs(ratio - np.round(ratio)) < 1e-9
    return float(np.sum(energy[on]) / total)


# -- Newton corrector ----------------------------------------------------------

def newton_correct(guess, constraint: LinearConstraint, newton_tol: float = 1e-10,
                   max_iter: int = 12, parameter: str = "mu", t: float = 0.0,
                   max_backtracks: int = 6) -> BranchPoint:
    """Damped Newton on [F = 0; constraint] starting from ``guess = (state, p)``."""
    state, p = guess
    if isinstance(state, tuple):
        raise ParameterError("guess must be (WaveState, parameter value)")
    state = state.with_flow(_flow_at(state.model, state.params, parameter, p)) \
        if p != _param_value(state.flow, parameter) else state
    state.check()
    grid = state.grid
    model = state.model
    trace = []
    Y = extended_vector(state, parameter)

    def evaluate(Yv):
        fl = _flow_at(model, state.params, parameter, float(Yv[-1]))
        st = WaveState.from_vector(Yv[:-1], fl, grid)
        st.check()
        F = residual(st, check=False).vector()
        return st, np.concatenate([F, [constraint.value(Yv)]])

    cur, G = evaluate(Y)
    merit = float(np.max(np.abs(G)))
    for it in range(1, max_iter + 1):
        trace.append(merit)
        if merit <= newton_tol:
            return BranchPoint(t=t, state=cur, mu=cur.flow.mu,
                               residual_norm=float(np.max(np.abs(G[:-1]))),
                               monitors=monitor(cur), newton_iters=it)
        J = jacobian(cur, check=False)
        Fp = parameter_derivative(cur, parameter)
        B = np.empty((J.shape[0] + 1, J.shape[1] + 1))
        B[:-1, :-1] = J
        B[:-1, -1] = Fp
        B[-1, :] = constraint.c
        try:
            step = lu_solve(lu_factor(B, check_finite=False), G, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise NewtonFailure(f"singular bordered system: {exc}", trace=trace) from exc
        if not np.all(np.isfinite(step)):
            raise NewtonFailure("non-finite Newton step", trace=trace)
        damping = 1.0
        for _ in range(max_backtracks + 1):
            Yn = Y - damping * step
            try:
                nxt, Gn = evaluate(Yn)
            except (DomainError, NumericalError, ParameterError):
                damping *= 0.5
                continue
            mn = float(np.max(np.abs(Gn)))
            if np.isfinite(mn) and (mn < merit or damping < 1.0 / 2 ** max_backtracks):
                break
            damping *= 0.5
        else:
            raise NewtonFailure("iterate left the admissible set", trace=trace)
        if not np.isfinite(mn) or mn > 1e6 * max(trace[0], 1e-300):
            raise NewtonFailure("Newton iteration diverged", trace=trace + [mn])
        Y, cur, G, merit = Yn, nxt, Gn, mn
    trace.append(merit)
    if merit <= newton_tol:
        return BranchPoint(t=t, state=cur, mu=cur.flow.mu,
                           residual_norm=float(np.max(np.abs(G[:-1]))),
                           monitors=monitor(cur), newton_iters=max_iter + 1)
    raise NewtonFailure(f"no convergence in {max_iter} iterations (merit {merit:.3e})",
                        trace=trace)


# -- bifurcation validation and start ----------------------------------------------

def validate_bifurcation(flow: TrivialFlow, n: int, kappa: float, parameter: str = "mu"):
    report = dispersion.kernel_set(flow, kappa)
    if report.M != [n]:
        raise BifurcationValidationError(
            f"kernel must be one-dimensional with M = {{{n}}}, found M = {report.M}")
    if n < 1:
        raise BifurcationValidationError("mode 0 does not bifurcate into waves")
    rec = report.modes[n]
    ok = rec.transversal if parameter == "mu" else rec.transversal_lambda
    if not ok:
        raise BifurcationValidationError(
            f"transversality fails for parameter {parameter} at mode {n}")
    return report


def local_predictor(flow: TrivialFlow, n: int, kappa: float, t: float, grid: Grid,
                    parameter: str = "mu"):
    """(t T(Lambda*) Phi_n on the grid, mu*), the first-order bifurcation asymptotics."""
    lam = flow.lam
    if abs(t) > 0.1 * min(1.0, lam ** 2):
        raise ParameterError(f"|t| = {abs(t):g} is outside the small-amplitude range")
    validate_bifurcation(flow, n, kappa, parameter)
    trivial = WaveState.trivial(flow, grid)
    if t == 0:
        return trivial, flow.mu
    Phi = kernel_mode(flow, n, kappa, grid)
    H, Phi_hat = apply_T(trivial, Phi)
    return WaveState(t * H, t * Phi_hat, flow, grid), flow.mu


def refine_bifurcation(flow: TrivialFlow, grid: Grid, parameter: str = "mu",
                       mode: int = 1, width: float = 1e-3):
    """Parameter value where the discrete mode matrix is singular, near the continuous one."""
    p0 = _param_value(flow, parameter)
    g = lambda p: mode_dispersion(_flow_at(flow.model, flow.params, parameter, p), grid, mode)
    f0 = g(p0)
    if f0 == 0.0:
        return flow
    scale = max(1.0, abs(p0))
    delta = width * scale
    for _ in range(12):
        lo, hi = p0 - delta, p0 + delta
        if parameter == "lambda" and lo * hi <= 0:
            lo, hi = (p0 / 2, p0 + delta) if p0 > 0 else (p0 - delta, p0 / 2)
        flo, fhi = g(lo), g(hi)
        if flo * f0 <= 0:
            root = brentq(g, lo, p0, xtol=1e-15, rtol=1e-15)
            break
        if fhi * f0 <= 0:
            root = brentq(g, p0, hi, xtol=1e-15, rtol=1e-15)
            break
        delta *= 2.0
    else:
        raise BifurcationValidationError("no discrete bifurcation point near the continuous one")
    return _flow_at(flow.model, flow.params, parameter, root)


def _start(flow: TrivialFlow, n: int, kappa: float, grid: Grid, settings):
    which = settings.parameter
    if settings.refine_bifurcation:
        flow = refine_bifurcation(flow, grid, which)
    h, prof = mode_null_vector(flow, grid, 1)
    eta, phi = mode_field(grid, 1, h, prof)
    w = state_weights(grid)
    tangent = np.concatenate([pair_vector(eta, phi), [0.0]])
    tangent *= settings.direction / wnorm(tangent, w)
    start = WaveState.trivial(flow, grid)
    return start, tangent


# -- main loop -------------------------------------------------------------------

def _loop_key(point: BranchPoint):
    eta = point.state.eta
    return np.array([point.mu, float(np.sqrt(np.mean(eta ** 2))), float(eta[0])])


def continue_branch(flow: TrivialFlow, n: int, kappa: float,
                    config: ContinuationSettings | dict | None = None,
                    grid: Grid | None = None, Nx: int = 64, Ns: int = 33,
                    validate: bool = True, start: BranchPoint | None = None,
                    tangent: np.ndarray | None = None) -> Branch:
    """Trace the branch from (0, Lambda*) or resume it from ``start`` with ``tangent``."""
    if config is None:
        settings = ContinuationSettings()
    elif isinstance(config, dict):
        settings = ContinuationSettings.from_dict(config)
    else:
        settings = config
    which = settings.parameter
    if grid is None:
        grid = Grid(n * kappa, Nx, Ns)
    if validate and start is None:
        validate_bifurcation(flow, n, kappa, which)
    w = state_weights(grid)

    if start is None:
        state0, tau = _start(flow, n, kappa, grid, settings)
        first = BranchPoint(t=0.0, state=state0, mu=state0.flow.mu,
                            residual_norm=residual(state0).norm(),
                            monitors=monitor(state0), newton_iters=0,
                            events=["bifurcation-point"], tangent=tau)
    else:
        first = start
        if tangent is None:
            raise ParameterError("resuming needs the branch tangent")
        tau = np.asarray(tangent, dtype=float)
        tau = tau / wnorm(tau, w)
    branch = Branch(points=[first], lambda_star=first.state.flow.lam, n=n, kappa=kappa,
                    parameter=which, settings=settings)
    ds = settings.step
    max_step = settings.max_step or 4.0 * settings.step
    prev = first
    Yprev = extended_vector(prev.state, which)
    keys = [_loop_key(first)]
    accepted = 0
    while accepted < settings.max_steps:
        Ypred = Yprev + ds * tau
        c = w * tau
        constraint = LinearConstraint(c, float(c @ Yprev + ds))
        guess_flow = _flow_at(prev.state.model, prev.state.params, which, float(Ypred[-1]))
        try:
            guess = WaveState.from_vector(Ypred[:-1], guess_flow, grid)
            point = newton_correct((guess, float(Ypred[-1])), constraint,
                                   settings.newton_tol, settings.max_iter, which,
                                   t=prev.t + ds)
        except (NewtonFailure, DomainError, NumericalError) as exc:
            log.info("step %.3e rejected: %s", ds, exc)
            if not settings.adaptive or ds / 2 < settings.min_step:
                branch.termination = "newton-failure"
                branch.events.append(f"newton failure at t={prev.t + ds:.6g}: {exc}")
                break
            ds /= 2
            continue
        Ynew = extended_vector(point.state, which)
        secant = Ynew - Yprev
        point.t = prev.t + wnorm(secant, w)
        tau = secant / wnorm(secant, w)
        point.tangent = tau
        branch.points.append(point)
        accepted += 1
        mon = point.monitors
        bound = 0.5 * point.state.flow.lam ** 2
        if not mon.eta_max < bound:
            point.events.append("eta-bound-violated")
        eta = point.state.eta
        if np.max(np.abs(eta - np.mean(eta))) < settings.flat_tol:
            point.events.append("flat-surface")
            branch.events.append(f"flat surface at t={point.t:.6g}")
        if mon.smallest() < settings.alt_a_threshold or mon.size + abs(point.mu) > settings.size_cap:
            branch.termination = "alternative-A-threshold"
            break
        key = _loop_key(point)
        if accepted > 10 and any(np.max(np.abs(key - k)) < settings.loop_tol
                                 for k in keys[:-5]):
            branch.termination = "closed-loop-detected"
            break
        keys.append(key)
        prev, Yprev = point, Ynew
        if settings.adaptive and point.newton_iters <= settings.fast_iters:
            ds = min(ds * settings.grow, max_step)
    else:
        branch.termination = "step-budget"
    branch.tangent = tau
    return branch


def solve_at_amplitude(flow: TrivialFlow, n: int, kappa: float, amplitude: float,
                       grid: Grid, parameter: str = "mu", newton_tol: float = 1e-11,
                       max_iter: int = 20, validate: bool = False) -> BranchPoint:
    """Branch point whose eta carries cosine coefficient ``amplitude`` at mode 1.

    Uses the refined discrete bifurcation point and the null vector as the
    guess, so the same physical wave can be computed on different grids.
    """
    if validate:
        validate_bifurcation(flow, n, kappa, parameter)
    settings = ContinuationSettings(parameter=parameter)
    state0, tau = _start(flow, n, kappa, grid, settings)
    nx = grid.Nx
    c_eta = grid.Cinv[1]
    tau_eta = tau[:nx]
    scale = amplitude / float(c_eta @ tau_eta)
    X0 = extended_vector(state0, parameter)
    Ypred = X0 + scale * tau
    c = np.zeros_like(Ypred)
    c[:nx] = c_eta
    constraint = LinearConstraint(c, float(amplitude))
    guess = WaveState.from_vector(Ypred[:-1], state0.flow, grid)
    return newton_correct((guess, float(Ypred[-1])), constraint, newton_tol, max_iter,
                          parameter, t=float(amplitude))
