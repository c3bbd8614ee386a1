import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minwage import model as M
from minwage.errors import ConfigError, DomainError

SK = M.SkillParams(alpha=0.68, lam=15.62, delta0=0.85, delta1=0.51, kappa0=0.727, kappa1=0.987)
SEC = M.SectorParams(psi=31.46, beta_n=0.65, beta_k=0.14, K=0.038, foreign_return=0.032)


def test_matching_rates_multiply_to_finding_rate_off_the_caps():
    theta = np.array([0.9, 1.1, 1.3])
    assert np.allclose(M.job_finding(theta, SK), theta * M.job_filling(theta, SK), rtol=1e-14)


def test_matching_rates_cap_at_one():
    assert M.job_finding(1e6, SK) == 1.0
    assert M.job_filling(1e-6, SK) == 1.0


@given(st.floats(0.01, 0.99))
def test_tightness_inverts_conserving_finding_rate(p):
    theta = M.tightness_for_finding(p, SK)
    assert math.isclose(M.finding_conserving(theta, SK), p, rel_tol=1e-12)


@given(st.floats(0.05, 50.0), st.floats(0.05, 50.0))
def test_finding_increases_and_filling_decreases_in_tightness(a, b):
    lo, hi = sorted((a, b))
    assert M.job_finding(lo, SK) <= M.job_finding(hi, SK)
    assert M.job_filling(lo, SK) >= M.job_filling(hi, SK)


def test_nonpositive_tightness_rejected():
    with pytest.raises(DomainError):
        M.job_finding(0.0, SK)


@pytest.mark.parametrize("k,n", [(3.0, 9.8), (0.5, 1.0), (40.0, 25.0)])
def test_marginal_products_match_central_differences(k, n):
    phi_n, phi_k = M.marginal_products(k, n, SEC)
    h = 1e-6
    fd_n = (M.revenue(k, n * (1 + h), SEC) - M.revenue(k, n * (1 - h), SEC)) / (2 * n * h)
    fd_k = (M.revenue(k * (1 + h), n, SEC) - M.revenue(k * (1 - h), n, SEC)) / (2 * k * h)
    assert phi_n == pytest.approx(fd_n, rel=1e-8)
    assert phi_k == pytest.approx(fd_k, rel=1e-8)


@pytest.mark.parametrize("t", [0.0, 0.2, 0.45])
def test_capital_demand_satisfies_capital_condition(t):
    n = 9.8
    k = M.capital_demand(n, t, SEC)
    _, phi_k = M.marginal_products(k, n, SEC)
    assert (1 - t) * phi_k == pytest.approx(SEC.foreign_return, rel=1e-12)


def test_capital_demand_maximizes_after_tax_return():
    from scipy.optimize import minimize_scalar
    n, t = 9.8, 0.2
    obj = lambda lk: -((1 - t) * M.revenue(math.exp(lk), n, SEC) - SEC.foreign_return * math.exp(lk))
    best = minimize_scalar(obj, bounds=(-5, 10), method="bounded", options={"xatol": 1e-12})
    assert math.exp(best.x) == pytest.approx(M.capital_demand(n, t, SEC), rel=1e-6)


def test_capital_falls_with_corporate_tax():
    ks = [M.capital_demand(9.8, t, SEC) for t in (0.0, 0.2, 0.4)]
    assert ks[0] > ks[1] > ks[2]


def test_vacancy_cost_derivative():
    v, h = 13.0, 1e-6
    eta, eta_v = M.vacancy_cost(v, SK)
    fd = (M.vacancy_cost(v + h, SK)[0] - M.vacancy_cost(v - h, SK)[0]) / (2 * h)
    assert eta_v == pytest.approx(fd, rel=1e-8)


def test_after_tax_income():
    assert M.after_tax_income(10.0, 0.25, 2.0) == pytest.approx(9.5)
    assert M.employment_surplus(10.0, -0.5) == pytest.approx(15.0)


def test_flat_round_trip(params):
    flat = M.params_to_flat(params)
    assert M.params_from_flat(flat) == params
    assert M.with_flat(params, psi_S=40.0).services.psi == 40.0


def test_flat_rejects_unknown_and_missing_keys(params):
    flat = M.params_to_flat(params)
    with pytest.raises(ConfigError, match="unknown"):
        M.params_from_flat({**flat, "gamma_l": 1.0})
    flat.pop("psi_S")
    with pytest.raises(ConfigError, match="missing"):
        M.params_from_flat(flat)


@pytest.mark.parametrize("kw", [dict(delta1=1.0), dict(alpha=0.0), dict(lam=-1.0), dict(kappa1=0.0)])
def test_skill_validation(kw):
    base = dict(alpha=0.5, lam=10.0, delta0=0.8, delta1=0.5, kappa0=0.5, kappa1=1.0)
    with pytest.raises(ConfigError):
        M.SkillParams(**{**base, **kw})


def test_sector_and_policy_validation():
    with pytest.raises(ConfigError):
        M.SectorParams(psi=1.0, beta_n=0.7, beta_k=0.3, K=0.1, foreign_return=0.05)
    with pytest.raises(ConfigError):
        M.Policy(t=1.0)
    with pytest.raises(ConfigError):
        M.Policy(mw_hourly=0.0)


def test_hour_conversions_are_inverse(params):
    assert params.annual_to_hourly(params.hourly_to_annual(12.0)) == pytest.approx(12.0, rel=1e-15)
    assert params.hourly_to_annual(1000.0 / params.hours_annualization) == pytest.approx(1.0)


@settings(max_examples=50)
@given(st.floats(0.05, 60.0), st.floats(0.0, 0.6))
def test_revenue_is_homogeneous_of_degree_beta_sum(n, t):
    k = M.capital_demand(n, t, SEC)
    r1 = M.revenue(k, n, SEC)
    r2 = M.revenue(2 * k, 2 * n, SEC)
    assert r2 == pytest.approx(r1 * 2 ** (SEC.beta_n + SEC.beta_k), rel=1e-12)
