import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from hypest.asymptotics import (AsymptoticInputs, ScenarioParams, asymptotic_se, averaged_covariance,
                                avar_pre, avar_prepost, kappa, normal_cdf, normal_quantile,
                                parametric_inputs, power_prepost)
from hypest.errors import SingularConditionalCovarianceError
from hypest.simulator import generate_dataset


def joint_pmf(pi0, pi1):
    # P(A=a, R=r) with P(A=1) = 1/2 and P(R=0 | A=a) = pi_a
    pi = {0: pi0, 1: pi1}
    return {(a, r): Fraction(1, 2) * (pi[a] if r == 0 else 1 - pi[a]) for a in (0, 1) for r in (0, 1)}


def var_a_given_r(pi0, pi1, r):
    pmf = joint_pmf(Fraction(pi0), Fraction(pi1))
    pr = pmf[(0, r)] + pmf[(1, r)]
    p1 = pmf[(1, r)] / pr
    return p1 * (1 - p1)


def test_var_a_given_r_equal_pi():
    assert parametric_inputs(ScenarioParams(pi0=0.5, pi1=0.5)).var_A_given_R[0] == pytest.approx(0.25)


def test_var_a_given_r_by_enumeration():
    inp = parametric_inputs(ScenarioParams(pi0=0.4, pi1=0.5))
    assert var_a_given_r("0.4", "0.5", 0) == Fraction(20, 81)
    assert inp.var_A_given_R[0] == pytest.approx(0.24691, abs=1e-5)
    for pi0, pi1 in [("0.4", "0.5"), ("0.8", "0.9"), ("0.2", "0.7")]:
        inp = parametric_inputs(ScenarioParams(pi0=float(pi0), pi1=float(pi1)))
        for r in (0, 1):
            assert inp.var_A_given_R[r] == pytest.approx(float(var_a_given_r(pi0, pi1, r)), abs=1e-14)


def test_tau_difference_by_total_expectation():
    # E(L1 | A=a) = sum_r P(R=r | A=a) (lambda0 + lambda_a a + lambda_r r)
    lam0, lam_a, lam_r, pi0, pi1 = 0.0, 1.0, 1.0, 0.4, 0.5
    tau = [sum(p * (lam0 + lam_a * a + lam_r * r) for r, p in ((0, pi), (1, 1 - pi)))
           for a, pi in ((0, pi0), (1, pi1))]
    inp = parametric_inputs(ScenarioParams(pi0=pi0, pi1=pi1))
    assert tau[1] - tau[0] == pytest.approx(0.9)
    assert inp.tau_diff == pytest.approx(tau[1] - tau[0], abs=1e-14)


TABLE_ROWS = [(0.4, 0.5, 0.167, 0.134), (0.5, 0.6, 0.157, 0.134), (0.6, 0.7, 0.149, 0.134),
              (0.7, 0.8, 0.142, 0.133), (0.8, 0.9, 0.136, 0.131)]


@pytest.mark.parametrize("pi0,pi1,se_pre,se_prepost", TABLE_ROWS)
def test_table_asymptotic_se(pi0, pi1, se_pre, se_prepost):
    inp = parametric_inputs(ScenarioParams(pi0=pi0, pi1=pi1, n=500))
    assert round(asymptotic_se(avar_pre(inp), 500), 3) == se_pre
    assert round(asymptotic_se(avar_prepost(inp), 500), 3) == se_prepost


def _equal_inputs(sigma2=1.3, beta=0.0, p_r0=0.6, va=0.25, vl=1.4, c=0.2, t=0.7):
    return AsymptoticInputs(sigma2=sigma2, beta_L1=beta, var_A_given_R=(va, va),
                            var_L1_given_R=(vl, vl), cov_A_L1_given_R=(c, c), p_R0=p_r0,
                            tau_diff=t, var_L1_given_A=(1.1, 0.9))


def test_ratio_beta_zero_equal_covariances():
    inp = _equal_inputs()
    assert avar_pre(inp) == pytest.approx(avar_prepost(inp) / inp.p_R0, rel=1e-14)


def test_no_ice_estimators_coincide():
    inp = _equal_inputs(beta=0.8, p_r0=1.0)
    assert avar_pre(inp) == pytest.approx(avar_prepost(inp), rel=1e-14)


def test_kappa_form_under_equal_covariances():
    inp = _equal_inputs(beta=0.5)
    mediated = 2 * 0.25 * (1.1 + 0.9)
    assert avar_prepost(inp) == pytest.approx(inp.sigma2 * kappa(inp) + mediated, abs=1e-12)
    assert averaged_covariance(inp) == pytest.approx((0.25, 1.4, 0.2))


def test_sigma_term_matches_delta_method():
    # Var(beta_A + t beta_L1) with Var(beta) = sigma2 V^{-1}
    inp = _equal_inputs(beta=0.0, p_r0=1.0)
    v = np.array([[0.25, 0.2], [0.2, 1.4]])
    g = np.array([1.0, inp.tau_diff])
    assert avar_prepost(inp) == pytest.approx(inp.sigma2 * g @ np.linalg.solve(v, g), rel=1e-13)


@st.composite
def equal_cov_inputs(draw):
    va = draw(st.floats(0.01, 1.0))
    vl = draw(st.floats(0.01, 5.0))
    rho = draw(st.floats(-0.95, 0.95))
    return AsymptoticInputs(
        sigma2=draw(st.floats(0.01, 10.0)), beta_L1=draw(st.floats(-3, 3)),
        var_A_given_R=(va, va), var_L1_given_R=(vl, vl),
        cov_A_L1_given_R=(rho * math.sqrt(va * vl),) * 2,
        p_R0=draw(st.floats(0.05, 0.99)), tau_diff=draw(st.floats(-3, 3)),
        var_L1_given_A=(draw(st.floats(0, 5)), draw(st.floats(0, 5))))


@settings(max_examples=200, deadline=None)
@given(equal_cov_inputs())
def test_dominance(inp):
    assert avar_prepost(inp) < avar_pre(inp)


@settings(max_examples=200, deadline=None)
@given(equal_cov_inputs())
def test_ratio_law(inp):
    inp = replace(inp, beta_L1=0.0)
    assert avar_prepost(inp) / avar_pre(inp) == pytest.approx(inp.p_R0, rel=1e-12)


def test_singular_covariance():
    inp = _equal_inputs(va=0.25, vl=1.0, c=0.5)
    with pytest.raises(SingularConditionalCovarianceError):
        avar_pre(inp)
    with pytest.raises(SingularConditionalCovarianceError):
        avar_prepost(inp)


def test_input_validation():
    with pytest.raises(ValueError):
        _equal_inputs(c=5.0)
    with pytest.raises(ValueError):
        _equal_inputs(p_r0=0.0)
    with pytest.raises(ValueError):
        _equal_inputs(sigma2=-1.0)
    with pytest.raises(ValueError):
        ScenarioParams(pi0=1.0)
    with pytest.raises(ValueError):
        ScenarioParams(sigma2_y=0.0)


# -- normal distribution and power -------------------------------------------

def test_normal_cdf_against_quadrature():
    assert normal_cdf(0.0) == 0.5
    for x in np.linspace(-8, 8, 81):
        assert abs(normal_cdf(x) - oracles.normal_cdf_quadrature(x)) <= 1e-9


def test_normal_reference_values():
    assert oracles.normal_cdf_quadrature(1.959964) == pytest.approx(0.975, abs=1e-6)
    assert normal_cdf(1.959964) == pytest.approx(oracles.normal_cdf_quadrature(1.959964), abs=1e-10)
    z = oracles.normal_quantile_bisection(0.8)
    assert z == pytest.approx(0.841621, abs=1e-6)
    assert normal_quantile(0.8) == pytest.approx(z, abs=1e-9)


def test_quantile_inverts_cdf():
    for x in np.linspace(-6, 6, 121):
        assert normal_quantile(normal_cdf(x)) == pytest.approx(x, abs=1e-7)
    with pytest.raises(ValueError):
        normal_quantile(1.0)


def test_power_reference_values():
    assert round(power_prepost(0.8, 0.7), 3) == 0.918
    assert round(power_prepost(0.8, 0.85), 3) == 0.860


@pytest.mark.parametrize("p", [0.05, 0.3, 0.8, 0.99])
def test_power_identity_without_ice(p):
    assert power_prepost(p, 1.0) == pytest.approx(p, abs=1e-12)


def test_power_monotone():
    # below ~0.2 the power rounds to 1.0 in double precision
    grid = np.linspace(0.3, 1.0, 40)
    vals = [power_prepost(0.8, q) for q in grid]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    vals = [power_prepost(p, 0.7) for p in np.linspace(0.05, 0.95, 40)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_power_alpha_generalises():
    assert power_prepost(0.8, 0.7, alpha=0.05) == power_prepost(0.8, 0.7)
    z = normal_quantile(1 - 0.01 / 2)
    expected = normal_cdf(-z + (z + normal_quantile(0.8)) / math.sqrt(0.7))
    assert power_prepost(0.8, 0.7, alpha=0.01) == pytest.approx(expected)
    with pytest.raises(ValueError):
        power_prepost(1.0, 0.5)


# -- closed-form moments vs the data-generating process ---------------------------

def _mean_se(v):
    return v.mean(), v.std(ddof=1) / math.sqrt(v.size)


def _var_se(v):
    d = (v - v.mean()) ** 2
    return v.var(ddof=1), d.std(ddof=1) / math.sqrt(v.size)


def _cov_se(u, v):
    d = (u - u.mean()) * (v - v.mean())
    return d.mean(), d.std(ddof=1) / math.sqrt(v.size)


@pytest.mark.parametrize("pi0,pi1", [(0.4, 0.5), (0.8, 0.9)])
def test_parametric_inputs_match_monte_carlo(pi0, pi1):
    params = ScenarioParams(pi0=pi0, pi1=pi1, n=1_000_000, seed=99)
    ds = generate_dataset(params, 0)
    inp = parametric_inputs(params)
    a, r, l1 = ds.a, ds.r, ds.l1[:, 0]
    checks = []
    checks.append((_mean_se(1.0 - r), inp.p_R0))
    for k in (0, 1):
        s = r == k
        checks.append((_var_se(a[s]), inp.var_A_given_R[k]))
        checks.append((_var_se(l1[s]), inp.var_L1_given_R[k]))
        checks.append((_cov_se(a[s], l1[s]), inp.cov_A_L1_given_R[k]))
        checks.append((_var_se(l1[a == k]), inp.var_L1_given_A[k]))
    m1, s1 = _mean_se(l1[a == 1])
    m0, s0 = _mean_se(l1[a == 0])
    checks.append(((m1 - m0, math.hypot(s1, s0)), inp.tau_diff))
    for (est, se), truth in checks:
        assert abs(est - truth) <= 3 * se, (est, truth, se)
