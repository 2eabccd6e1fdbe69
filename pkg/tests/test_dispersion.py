import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import constant_bifurcation_lambdas, sigma_closed, u_closed, v_closed
from stagwave import FlowParameters, VorticityModel, solve_trivial
from stagwave import dispersion as D
from stagwave.errors import ParameterError


def flow(model, mu=0.0, lam=1.0):
    return solve_trivial(model, FlowParameters(mu, lam))


def test_comparison_v_examples():
    assert D.comparison_v(0.0) == 1.0
    assert D.comparison_v(1.0) == pytest.approx(1 / math.tanh(1.0), abs=1e-14)
    assert D.comparison_v(-math.pi ** 2 / 4) == pytest.approx(0.0, abs=1e-14)
    assert D.is_pole(D.comparison_v(-math.pi ** 2))


@settings(max_examples=60, deadline=None)
@given(st.floats(-200, 200))
def test_v_and_sigma_against_oracle(z):
    v = D.comparison_v(z)
    if D.is_pole(v):
        return
    assert v == pytest.approx(v_closed(z), rel=1e-9, abs=1e-9)
    assert D.sigma(z) == pytest.approx(sigma_closed(z), abs=1e-12)


def test_sigma_values():
    assert D.sigma(0.0) == pytest.approx(math.pi / 4)
    assert D.sigma(-(math.pi ** 2)) == pytest.approx(math.pi)
    z = np.linspace(-80, 80, 801)
    sig = np.array([D.sigma(v) for v in z])
    assert np.all(np.diff(sig) < 0)


def test_u_examples():
    const = flow(VorticityModel.constant(1.7))
    assert D.solve_u(const, 1.0).endpoint()[0] == pytest.approx(math.sinh(1.0), abs=1e-10)
    assert D.solve_u(const, 0.0).endpoint()[0] == pytest.approx(1.0, abs=1e-12)
    aff = flow(VorticityModel.affine(-1.0), 0.3, 0.8)
    assert D.solve_u(aff, 0.0).endpoint()[0] == pytest.approx(math.sinh(1.0), abs=1e-10)
    s = np.linspace(0, 1, 51)
    sturm = D.solve_u(flow(VorticityModel.affine(3.0)), 7.0)
    assert np.max(np.abs(sturm.u(s) - u_closed(4.0, s))) < 1e-10


def test_prufer_examples():
    const = flow(VorticityModel.constant(0.0))
    expect = math.atan2(math.sinh(10) / 10, math.cosh(10))
    assert D.prufer_angle(const, 100.0) == pytest.approx(expect, abs=1e-10)
    assert expect == pytest.approx(0.0997, abs=5e-5)
    assert D.prufer_angle(const, 0.0) == pytest.approx(math.pi / 4, abs=1e-10)
    # slope c: theta(1; z) = sigma(z - c)
    aff = flow(VorticityModel.affine(2.5), 0.1, 0.7)
    for z in (-30.0, 0.0, 4.0):
        assert D.prufer_angle(aff, z) == pytest.approx(sigma_closed(z - 2.5), abs=1e-9)
    zs = np.linspace(-60, 60, 41)
    th = [D.prufer_angle(aff, z) for z in zs]
    assert np.all(np.diff(th) < 0)


def test_eval_l_examples():
    const = flow(VorticityModel.constant(0.0))
    assert D.eval_l(const, 1.0) == pytest.approx(1 / math.tanh(1.0), abs=1e-10)
    assert D.eval_l(const, 0.0) == pytest.approx(1.0, abs=1e-10)
    # l(0) = -psi_mu(0)/psi_lambda(0)
    assert D.eval_l(const, 0.0) == pytest.approx(-const.psi_mu(0.0) / const.psi_lambda(0.0),
                                                 abs=1e-10)
    assert D.is_pole(D.eval_l(const, -(math.pi ** 2)))


def test_eval_l_large_z_branch():
    const = flow(VorticityModel.constant(0.5))
    for z in (350.0, 450.0, 2500.0):
        assert D.eval_l(const, z) == pytest.approx(v_closed(z), rel=1e-9)


def test_eval_r_examples():
    assert D.eval_r(VorticityModel.constant(0.0), FlowParameters(0.3, 2.0)) == 0.25
    assert D.eval_r(VorticityModel.constant(2.0), FlowParameters(5.0, -1.0)) == 3.0
    # the infimum -gamma^2/4 sits at lambda = +2/gamma
    lam = np.linspace(0.05, 10, 20000)
    r = 1 / lam ** 2 - 2.0 / lam
    assert r.min() == pytest.approx(-1.0, abs=1e-6)
    assert lam[np.argmin(r)] == pytest.approx(1.0, abs=1e-3)
    assert D.eval_r(VorticityModel.constant(2.0), FlowParameters(0.0, 1.0)) == -1.0


def test_intervals():
    assert D.lj_interval(0, 0.0, 0.0) == (-math.pi ** 2, math.inf)
    assert D.interval_index(1.0, 0.0, 0.0) == 0
    assert D.interval_index(-20.0, 0.0, 0.0) == 1
    assert D.interval_index(-(math.pi ** 2), 0.0, 0.0) is None


def test_kernel_set_irrotational():
    lam = math.sqrt(math.tanh(1.0))
    rep = D.kernel_set(flow(VorticityModel.constant(0.0), 0.0, lam), 1.0)
    assert rep.M == [1] and rep.one_dimensional
    assert rep.modes[0].l_value == pytest.approx(1.0, abs=1e-10)
    assert rep.modes[0].r_value == pytest.approx(1 / math.tanh(1.0), abs=1e-12)
    assert rep.modes[1].transversal is False
    assert rep.modes[1].transversal_lambda is True
    assert rep.to_dict()["M"] == [1]


@pytest.mark.parametrize("omega0", [1.0, -1.0])
@pytest.mark.parametrize("n", [1, 2])
def test_kernel_set_constant_roots(omega0, n):
    for lam in constant_bifurcation_lambdas(omega0, 1.0, n):
        rep = D.kernel_set(flow(VorticityModel.constant(omega0), 0.0, lam), 1.0)
        assert n in rep.M


def test_kernel_empty():
    # r far below every l value
    rep = D.kernel_set(flow(VorticityModel.constant(0.0), 0.0, 10.0), 1.0)
    assert rep.M == []


def test_find_bifurcation_irrotational():
    roots = D.find_bifurcation_lambda(VorticityModel.constant(0.0), 0.0, 1.0, 1)
    expect = math.sqrt(math.tanh(1.0))
    assert roots == pytest.approx([-expect, expect], abs=1e-10)


def test_find_bifurcation_constant_one():
    roots = D.find_bifurcation_lambda(VorticityModel.constant(1.0), 0.0, 1.0, 1)
    expect = constant_bifurcation_lambdas(1.0, 1.0, 1)
    assert roots == pytest.approx(expect, abs=1e-10)
    assert expect == pytest.approx([-1.332953, 0.571359], abs=1e-6)


def test_find_bifurcation_affine_symmetric_at_mu_zero():
    roots = D.find_bifurcation_lambda(VorticityModel.affine(3.0), 0.0, 1.0, 1)
    assert len(roots) == 2
    assert roots[0] == pytest.approx(-roots[1], abs=1e-10)


def test_find_bifurcation_diagnostic():
    res = D.find_bifurcation_lambda(VorticityModel.affine(math.pi ** 2 + 20), 0.0, 0.1, 1,
                                    details=True)
    assert res.roots == [] and res.diagnostic
    with pytest.raises(ParameterError):
        D.find_bifurcation_lambda(VorticityModel.constant(0.0), 0.0, 1.0, 0)


def test_transversality_examples():
    const = flow(VorticityModel.constant(2.0), 0.3, 0.7)
    lm, rm, ok = D.transversality(const, 1, 1.0)
    assert lm == 0.0 and rm == 0.0 and ok is False
    aff = flow(VorticityModel.affine(-4.0), 0.2, 0.8)
    lm, rm, ok = D.transversality(aff, 1, 1.0)
    assert lm == 0.0 and rm == pytest.approx(4.0 / 0.8) and ok
    ll, rl, ok = D.transversality_lambda(flow(VorticityModel.affine(2.0), 0.5, 2.0), 1, 1.0)
    assert ok is False  # omega0 mu lambda = 2


def test_transversality_integral_identity_trig():
    model = VorticityModel.trig_series([(0.6, 2.0)], offset=0.4)
    p = FlowParameters(0.3, 0.9)
    fl = solve_trivial(model, p)
    h = 1e-5
    z = 1.0
    lp = D.eval_l(solve_trivial(model, p.replace(mu=p.mu + h)), z)
    lm = D.eval_l(solve_trivial(model, p.replace(mu=p.mu - h)), z)
    l_mu, _, _ = D.transversality(fl, 1, 1.0)
    assert l_mu == pytest.approx((lp - lm) / (2 * h), abs=1e-6)
    lp = D.eval_l(solve_trivial(model, p.replace(lam=p.lam + h)), z)
    lm = D.eval_l(solve_trivial(model, p.replace(lam=p.lam - h)), z)
    l_lam, _, _ = D.transversality_lambda(fl, 1, 1.0)
    assert l_lam == pytest.approx((lp - lm) / (2 * h), abs=1e-6)


def test_dispersion_residual_vanishes_at_roots():
    model = VorticityModel.affine(-4.0)
    roots = D.find_bifurcation_lambda(model, 0.2, 1.0, 1)
    g = D.dispersion_residual(model, 0.2, 1.0, 1)
    assert roots and all(abs(g(r)) < 1e-9 for r in roots)


def test_find_bifurcation_both_roots_when_v_negative():
    # v(n^2 kappa^2 - omega0) < 0: r dips below v and climbs back, giving two roots
    omega0 = 9.0
    model = VorticityModel.affine(omega0)
    v_low = v_closed(1.0 - omega0)
    lam_star = 1.0 / math.sqrt(-v_low)
    mu = 1.1 * 2.0 / (omega0 * lam_star)
    roots = D.find_bifurcation_lambda(model, mu, 1.0, 1)
    assert len(roots) == 2
    # r(lambda) = 1/lambda^2 - gamma(mu)/lambda equals l = v_low at each root
    for lam in roots:
        r = 1.0 / lam ** 2 - omega0 * mu / lam
        assert abs(r - v_low) < 1e-9
    assert roots[0] < 2.0 / (omega0 * mu) < roots[1]
