"""Two-sector decentralized equilibrium, budget closure and social welfare.

Each sector is solved as a one-dimensional root in log employment per
firm.  Given ``n``, the capital FOC pins ``k``, the wage FOC pins ``w``
(or ``w`` equals a binding minimum wage), market clearing together with
worker indifference and participation pins the job-finding rate, and the
remaining vacancy FOC is the scalar residual.  Sector allocations depend
on the lump sum only through ``U - y0``, so the budget closes in one step.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import model as M
from .errors import DomainError, InfeasiblePolicy, SolverError


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and welfare-accounting toggles.

    Attributes
    ----------
    foc_tol : float
        Maximum relative FOC, indifference and consistency residual.
    budget_tol : float
        Maximum budget residual relative to total tax revenue.
    bind_tol : float
        A minimum wage binds iff the market wage is below it by more than this.
    zeta : float
        Curvature of the social welfare function (1 is logarithmic).
    capitalists_receive_y0 : bool
        Whether capitalists also receive the universal lump sum.
    include_foreign_income : bool
        Whether capitalists' foreign income ``r*(kbar - k)`` enters welfare.
        Requires ``capital_endowment`` on both sectors.
    quad_nodes : int
        Gauss-Legendre nodes for the worker integral when ``zeta != 1``.
    """

    foc_tol: float = 1e-8
    budget_tol: float = 1e-6
    bind_tol: float = 1e-12
    zeta: float = 1.0
    capitalists_receive_y0: bool = True
    include_foreign_income: bool = False
    quad_nodes: int = 64
    log_n_bracket: tuple = (-25.0, 15.0)


@dataclass(frozen=True)
class FirmSolution:
    """Optimal firm choices in one sub-market at a given worker surplus."""

    wage: float
    vacancies: float
    capital: float
    n: float
    theta: float
    p: float
    q: float
    phi_n: float
    phi_k: float
    binding: bool
    capped: bool
    residuals: dict


@dataclass(frozen=True)
class SectorEquilibrium:
    """Market outcome of one sector (per establishment unless noted)."""

    label: str
    wage: float
    vacancies_per_firm: float
    capital_per_firm: float
    n: float
    theta: float
    p: float
    q: float
    employment: float
    revenue: float
    profit_pre_tax: float
    phi_n: float
    phi_k: float
    markdown: float
    mw_binding: bool
    capped: bool
    residuals: dict = field(default_factory=dict)


@dataclass(frozen=True)
class WorkerAggregates:
    """Worker-side outcome for one skill."""

    U: float
    surplus: float
    L_A: float
    participation_rate: float
    unemployment_rate: float
    expected_wage_active: float
    tau: float


@dataclass(frozen=True)
class Equilibrium:
    """Full equilibrium at a policy, with the budget closed."""

    services: SectorEquilibrium
    manufacturing: SectorEquilibrium
    low: WorkerAggregates
    high: WorkerAggregates
    policy: M.Policy
    y0_solved: float
    tax_revenue: float
    budget_residual: float
    social_welfare: float | None
    feasible: bool
    reason: str = ""

    def sector(self, label):
        return self.services if label == "S" else self.manufacturing

    def workers(self, label):
        return self.low if label == "S" else self.high


# ---------------------------------------------------------------------------
# firm problem at a fixed worker surplus

def _tilde_q(w, S, a, sp):
    """Job-filling rate a firm posting ``w`` faces when workers demand surplus ``S``."""
    p = S / (a * w)
    if p >= 1.0:
        return None
    theta = M.tightness_for_finding(p, sp)
    return p, theta, M.job_filling(theta, sp)


def _firm_residuals(w, v, k, n, q, phi_n, phi_k, sp, sec, t, binding):
    eta_v = sp.kappa0 * v ** sp.kappa1
    res = {"foc_v": ((phi_n - w) * q - eta_v) / eta_v}
    res["foc_k"] = ((1.0 - t) * phi_k - sec.foreign_return) / sec.foreign_return if sec.beta_k > 0 else 0.0
    if binding:
        res["foc_w"] = 0.0
    else:
        # (phi_n - w) * q_w = q with q_w = q * delta1 / ((1 - delta1) * w)
        q_w = q * sp.delta1 / ((1.0 - sp.delta1) * w)
        res["foc_w"] = ((phi_n - w) * q_w - q) / q
    return res


def solve_firm(sector: M.SectorParams, skill: M.SkillParams, surplus: float,
               tau: float, t: float, mw_annual: float | None = None,
               options: SolverOptions = SolverOptions()) -> FirmSolution:
    """Solve the firm's wage, vacancy and capital choice given ``U - y0``.

    The firm internalizes ``q(theta(w, U))`` with ``theta`` inverting worker
    indifference ``U - y0 = p(theta) (1 - tau) w``.  If the unconstrained
    wage falls short of ``mw_annual`` the wage is fixed at the minimum and
    only the vacancy and capital FOCs are imposed.

    Parameters
    ----------
    surplus : float
        ``U - y0``, strictly positive.
    mw_annual : float or None
        Minimum wage in thousands per year.

    Raises
    ------
    SolverError
        If no interior root exists in the employment bracket.
    """
    if not surplus > 0.0:
        raise DomainError("worker surplus U - y0 must be positive")
    a = 1.0 - tau

    def state(ln_n, wage_fixed):
        n = math.exp(ln_n)
        k = M.capital_demand(n, t, sector)
        phi_n = sector.beta_n * sector.psi * k ** sector.beta_k * n ** (sector.beta_n - 1.0)
        w = skill.delta1 * phi_n if wage_fixed is None else wage_fixed
        return n, k, phi_n, w

    def resid(ln_n, wage_fixed):
        n, k, phi_n, w = state(ln_n, wage_fixed)
        tq = _tilde_q(w, surplus, a, skill)
        if tq is None or phi_n <= w:
            # no applicants at this wage, or labor loses money: shrink
            return -1e3 - ln_n
        q = tq[2]
        return math.log((phi_n - w) * q) - math.log(skill.kappa0 * (n / q) ** skill.kappa1)

    def run(wage_fixed):
        lo, hi = options.log_n_bracket
        try:
            ln_n = brentq(resid, lo, hi, args=(wage_fixed,), xtol=1e-15, rtol=1e-15, maxiter=500)
        except ValueError as exc:
            raise SolverError("firm problem has no interior solution in bracket",
                              {"surplus": surplus, "tau": tau, "t": t, "mw": wage_fixed,
                               "res_lo": resid(lo, wage_fixed), "res_hi": resid(hi, wage_fixed)}) from exc
        n, k, phi_n, w = state(ln_n, wage_fixed)
        p, theta, q = _tilde_q(w, surplus, a, skill)
        v = n / q
        phi_k = sector.beta_k * sector.psi * k ** (sector.beta_k - 1.0) * n ** sector.beta_n if sector.beta_k > 0 else 0.0
        binding = wage_fixed is not None
        res = _firm_residuals(w, v, k, n, q, phi_n, phi_k, skill, sector, t, binding)
        return FirmSolution(w, v, k, n, theta, p, q, phi_n, phi_k, binding,
                            M.finding_capped(theta, skill), res)

    sol = run(None)
    if mw_annual is not None and sol.wage < mw_annual - options.bind_tol:
        sol = run(mw_annual)
    return sol


# ---------------------------------------------------------------------------
# sector equilibrium

def _sector_state(ln_n, sector, skill, tau, t, wage_fixed):
    n = math.exp(ln_n)
    a = 1.0 - tau
    k = M.capital_demand(n, t, sector)
    R = sector.psi * k ** sector.beta_k * n ** sector.beta_n
    phi_n = sector.beta_n * R / n
    w = skill.delta1 * phi_n if wage_fixed is None else wage_fixed
    # market clearing n K = p L_A with L_A = alpha * min(p a w / lam, 1)
    p = math.sqrt(n * skill.lam * sector.K / (a * w * skill.alpha))
    clamped = p * a * w / skill.lam > 1.0
    if clamped:
        p = n * sector.K / skill.alpha
    return n, k, R, phi_n, w, p, clamped


def _sector_resid(ln_n, sector, skill, tau, t, wage_fixed):
    n, k, R, phi_n, w, p, _ = _sector_state(ln_n, sector, skill, tau, t, wage_fixed)
    if phi_n <= w or p >= 1.0:
        return -1e3 - ln_n
    theta = M.tightness_for_finding(p, skill)
    q = min(skill.delta0 * theta ** (-skill.delta1), 1.0)
    return math.log((phi_n - w) * q) - math.log(skill.kappa0 * (n / q) ** skill.kappa1)


def _market(label, sector, skill, tau, t, wage_fixed, options):
    lo, hi = options.log_n_bracket
    args = (sector, skill, tau, t, wage_fixed)
    try:
        ln_n = brentq(_sector_resid, lo, hi, args=args, xtol=1e-15, rtol=1e-15, maxiter=500)
    except ValueError as exc:
        raise SolverError(f"sector {label}: no equilibrium in employment bracket",
                          {"tau": tau, "t": t, "mw": wage_fixed,
                           "res_lo": _sector_resid(lo, *args), "res_hi": _sector_resid(hi, *args)}) from exc
    n, k, R, phi_n, w, p, clamped = _sector_state(ln_n, *args)
    if p >= 1.0:
        raise SolverError(f"sector {label}: job-finding rate at cap", {"p": p})
    a = 1.0 - tau
    theta = M.tightness_for_finding(p, skill)
    q = M.job_filling(theta, skill)
    v = n / q
    surplus = p * a * w
    L_A = skill.alpha * min(surplus / skill.lam, 1.0)
    phi_k = sector.beta_k * R / k if sector.beta_k > 0 else 0.0
    eta, _ = M.vacancy_cost(v, skill)
    res = _firm_residuals(w, v, k, n, q, phi_n, phi_k, skill, sector, t, wage_fixed is not None)
    res["indifference"] = (surplus - M.finding_conserving(theta, skill) * a * w) / surplus
    res["consistency"] = (theta - sector.K * v / L_A) / theta
    worst = max(abs(x) for x in res.values())
    if not worst <= options.foc_tol:
        if _sector_resid(ln_n + 1e-9, *args) < -100.0:
            # the bracket closed on the edge of the valid region, not on a root
            raise SolverError(f"sector {label}: no interior equilibrium; the root sits where "
                              f"p reaches 1 or labor stops paying (p={p:.6f})", {**res, "p": p})
        raise SolverError(f"sector {label}: residual {worst:.3e} above tolerance", res)
    sec = SectorEquilibrium(
        label=label, wage=w, vacancies_per_firm=v, capital_per_firm=k, n=n,
        theta=theta, p=p, q=q, employment=n * sector.K, revenue=R,
        profit_pre_tax=R - w * n - eta, phi_n=phi_n, phi_k=phi_k,
        markdown=w / phi_n, mw_binding=wage_fixed is not None,
        capped=M.finding_capped(theta, skill), residuals=res)
    return sec, surplus, L_A


def _workers(skill, surplus, L_A, p, w, tau, y0):
    return WorkerAggregates(U=surplus + y0, surplus=surplus, L_A=L_A,
                            participation_rate=L_A / skill.alpha,
                            unemployment_rate=1.0 - p,
                            expected_wage_active=p * w, tau=tau)


def solve_market(label, sector, skill, tau, t, mw_annual=None,
                 options: SolverOptions = SolverOptions()):
    """Sector equilibrium that does not depend on the lump sum.

    Returns ``(SectorEquilibrium, surplus, L_A)`` where ``surplus = U - y0``.
    The unconstrained market is always solved first and the minimum wage
    binds iff the market wage is below it by more than ``bind_tol``.
    """
    out = _market(label, sector, skill, tau, t, None, options)
    if mw_annual is not None and out[0].wage < mw_annual - options.bind_tol:
        out = _market(label, sector, skill, tau, t, float(mw_annual), options)
    return out


def solve_sector(sector: M.SectorParams, skill: M.SkillParams, policy: M.Policy,
                 y0: float, params: M.ModelParams | None = None, label: str = "S",
                 options: SolverOptions = SolverOptions()):
    """Solve one sector's equilibrium at a given lump sum.

    Returns
    -------
    (SectorEquilibrium, WorkerAggregates)
    """
    if y0 < 0:
        raise DomainError("y0 must be nonnegative")
    hours = params.hours_annualization if params is not None else M.DEFAULT_HOURS
    mw = None
    if label == "S" and policy.mw_hourly is not None:
        mw = policy.mw_hourly * hours / 1000.0
    tau = policy.tau(label)
    sec, surplus, L_A = solve_market(label, sector, skill, tau, policy.t, mw, options)
    return sec, _workers(skill, surplus, L_A, sec.p, sec.wage, tau, y0)


# ---------------------------------------------------------------------------
# budget, welfare

def tax_revenue(params: M.ModelParams, policy: M.Policy, services: SectorEquilibrium,
                manufacturing: SectorEquilibrium) -> float:
    """Labor plus corporate tax revenue at fixed allocations."""
    return (policy.tau_l * services.wage * services.employment
            + policy.tau_h * manufacturing.wage * manufacturing.employment
            + policy.t * (params.services.K * services.profit_pre_tax
                          + params.manufacturing.K * manufacturing.profit_pre_tax))


def lump_sum_recipients(params: M.ModelParams, options: SolverOptions) -> float:
    """Mass receiving ``y0``: all workers, plus capitalists if toggled on."""
    mass = params.low.alpha + params.high.alpha
    if options.capitalists_receive_y0:
        mass += params.services.K + params.manufacturing.K
    return mass


def _G(V, zeta):
    if zeta == 1.0:
        return np.log(V)
    return V ** (1.0 - zeta) / (1.0 - zeta)


def worker_integral(U, x, zeta, nodes=64):
    """``integral_0^x G(U - c) dc``; closed form for ``zeta == 1``."""
    if x <= 0.0:
        return 0.0
    if zeta == 1.0:
        low = U - x
        tail = low * math.log(low) if low > 0.0 else 0.0
        return U * math.log(U) - tail - x
    z, wts = np.polynomial.legendre.leggauss(nodes)
    c = 0.5 * x * (z + 1.0)
    return float(0.5 * x * np.sum(wts * _G(U - c, zeta)))


def capitalist_consumption(params, policy, sec: SectorEquilibrium, y0, options):
    label = sec.label
    sp = params.services if label == "S" else params.manufacturing
    cons = (1.0 - policy.t) * sec.profit_pre_tax
    if options.capitalists_receive_y0:
        cons += y0
    if options.include_foreign_income:
        if sp.capital_endowment is None:
            raise DomainError(f"capital endowment for sector {label} required for foreign income")
        cons += sp.foreign_return * (sp.capital_endowment - sec.capital_per_firm)
    return cons


def social_welfare(eq: Equilibrium, params: M.ModelParams, zeta: float | None = None,
                   options: SolverOptions = SolverOptions()) -> float:
    """Social welfare with ``G(V) = V**(1-zeta)/(1-zeta)`` (log when ``zeta == 1``).

    Inactive workers consume ``y0``; active workers of skill ``s`` contribute
    ``alpha_s / lam_s * integral_0^x G(U_s - c) dc`` with ``x = min(U_s - y0, lam_s)``;
    capitalists consume after-tax profit plus the toggled extras.

    Raises
    ------
    DomainError
        If some group's consumption is non-positive while ``zeta >= 1``.
    """
    zeta = options.zeta if zeta is None else zeta
    y0 = eq.y0_solved
    groups = {}
    L_I = params.low.alpha + params.high.alpha - eq.low.L_A - eq.high.L_A
    groups["inactive workers"] = (L_I, y0)
    for label, sec in (("S", eq.services), ("M", eq.manufacturing)):
        sp = params.services if label == "S" else params.manufacturing
        groups[f"capitalists {label}"] = (sp.K, capitalist_consumption(params, eq.policy, sec, y0, options))
    if zeta >= 1.0:
        for name, (mass, cons) in groups.items():
            if mass > 0 and not cons > 0.0:
                raise DomainError(f"non-positive consumption for {name}: {cons}")
        for name, sk, wa in (("low-skill workers", params.low, eq.low),
                             ("high-skill workers", params.high, eq.high)):
            if wa.L_A > 0 and not wa.U - min(wa.surplus, sk.lam) > 0.0:
                raise DomainError(f"non-positive consumption for {name}")
    sw = 0.0
    for mass, cons in groups.values():
        if mass > 0:
            sw += mass * float(_G(cons, zeta))
    for sk, wa in ((params.low, eq.low), (params.high, eq.high)):
        x = min(wa.surplus, sk.lam)
        sw += sk.alpha / sk.lam * worker_integral(wa.U, x, zeta, options.quad_nodes)
    return sw


def close_budget(params: M.ModelParams, policy: M.Policy,
                 options: SolverOptions = SolverOptions(), welfare: bool = True,
                 markets=None) -> Equilibrium:
    """Solve both sectors and set ``y0`` so the government budget balances.

    ``y0 * recipients = tau_l w^l E^l + tau_h w^h E^h + t (K_S Pi^S + K_M Pi^M)``.
    Allocations depend on ``y0`` only through ``U - y0``, so no iteration is
    needed; the residual is recomputed from the assembled equilibrium.

    Parameters
    ----------
    markets : tuple, optional
        Precomputed ``solve_market`` outputs for ``(S, M)``; used by sweeps.

    Raises
    ------
    InfeasiblePolicy
        If revenue cannot fund a nonnegative lump sum.
    """
    if markets is None:
        mw = params.hourly_to_annual(policy.mw_hourly) if policy.mw_hourly is not None else None
        markets = (solve_market("S", params.services, params.low, policy.tau_l, policy.t, mw, options),
                   solve_market("M", params.manufacturing, params.high, policy.tau_h, policy.t, None, options))
    (sS, surS, LS), (sM, surM, LM) = markets
    rev = tax_revenue(params, policy, sS, sM)
    y0 = rev / lump_sum_recipients(params, options)
    if y0 < 0.0:
        raise InfeasiblePolicy(f"revenue {rev:.6g} cannot fund a nonnegative lump sum", "budget")
    resid = (y0 * lump_sum_recipients(params, options) - tax_revenue(params, policy, sS, sM))
    scale = abs(rev) if rev != 0.0 else 1.0
    low = _workers(params.low, surS, LS, sS.p, sS.wage, policy.tau_l, y0)
    high = _workers(params.high, surM, LM, sM.p, sM.wage, policy.tau_h, y0)
    eq = Equilibrium(sS, sM, low, high, policy.with_(y0=y0), y0, rev, resid / scale,
                     None, True)
    if not welfare:
        return eq
    try:
        sw = social_welfare(eq, params, options=options)
    except DomainError as exc:
        return Equilibrium(sS, sM, low, high, eq.policy, y0, rev, resid / scale,
                           None, False, str(exc))
    return Equilibrium(sS, sM, low, high, eq.policy, y0, rev, resid / scale, sw, True)


# ---------------------------------------------------------------------------
# diagnostics

@dataclass(frozen=True)
class EfficiencyCheck:
    """Planner-FOC residuals at a decentralized allocation.

    ``vacancy`` is ``(q phi_n - mu / theta - eta_v) / eta_v`` where ``mu`` is
    the planner's shadow value of an applicant, ``-theta**2 q_theta phi_n``.
    ``entry`` is ``(c* - mu) / c*`` with ``c* = U - y0`` the entry threshold.
    """

    vacancy: dict
    entry: dict

    @property
    def residual(self):
        vals = list(self.vacancy.values()) + list(self.entry.values())
        return max(vals, key=abs)


def check_efficiency(eq: Equilibrium, params: M.ModelParams) -> EfficiencyCheck:
    """Evaluate the efficiency planner's FOCs at ``eq``.

    Meaningful at zero taxes; a binding minimum wage produces a positive
    vacancy residual because the wage exceeds the applicant shadow value.
    """
    vac, ent = {}, {}
    for label, sk in (("S", params.low), ("M", params.high)):
        sec, wa = eq.sector(label), eq.workers(label)
        q_theta = -sk.delta1 * sec.q / sec.theta
        mu = -sec.theta ** 2 * q_theta * sec.phi_n
        eta_v = sk.kappa0 * sec.vacancies_per_firm ** sk.kappa1
        vac[label] = (sec.q * sec.phi_n - mu / sec.theta - eta_v) / eta_v
        ent[label] = (wa.surplus - mu) / wa.surplus
    return EfficiencyCheck(vac, ent)


def constrained_profit_derivative(eq: Equilibrium, params: M.ModelParams,
                                  include_capital: bool = True) -> float:
    """Analytic ``dPi/dw_bar`` for services firms at a binding minimum wage.

    The envelope term is ``q_theta * dtheta/dw_bar * v * (phi_n - w_bar) - v * q``
    where ``dtheta/dw_bar`` is the total equilibrium response of tightness,
    obtained by implicit differentiation of the sector's employment root.
    Alone, it is the derivative of profit net of the capital opportunity
    cost, ``Pi - r* k / (1 - t)``.  Pre-tax profit also moves with capital,
    which the capital FOC does not zero out; ``include_capital`` adds
    ``phi_k * dk/dw_bar``.
    """
    sec = eq.services
    if not sec.mw_binding:
        raise SolverError("profit derivative requires a binding minimum wage")
    sk, sp = params.low, params.services
    w, phi_n, q, v, theta = sec.wage, sec.phi_n, sec.q, sec.vacancies_per_firm, sec.theta
    capped = q >= 1.0
    # d ln theta / d ln p: 1 where every vacancy fills, else 1 / (1 - delta1)
    c = 1.0 if capped else 1.0 / (1.0 - sk.delta1)
    if eq.low.surplus / sk.lam > 1.0:
        dlth_dlnn, dlth_dlnw = c, 0.0
    else:
        dlth_dlnn, dlth_dlnw = 0.5 * c, -0.5 * c
    dlq_dlth = 0.0 if capped else -sk.delta1
    g = (sp.beta_n + sp.beta_k - 1.0) / (1.0 - sp.beta_k)
    F_lnn = g * phi_n / (phi_n - w) + (1.0 + sk.kappa1) * dlq_dlth * dlth_dlnn - sk.kappa1
    F_w = -1.0 / (phi_n - w) + (1.0 + sk.kappa1) * dlq_dlth * dlth_dlnw / w
    dlnn_dw = -F_w / F_lnn
    dtheta_dw = theta * (dlth_dlnn * dlnn_dw + dlth_dlnw / w)
    q_theta = dlq_dlth * q / theta
    envelope = q_theta * dtheta_dw * v * (phi_n - w) - v * q
    if not include_capital or sp.beta_k == 0:
        return envelope
    dk_dw = sec.capital_per_firm * sp.beta_n / (1.0 - sp.beta_k) * dlnn_dw
    return envelope + sec.phi_k * dk_dw


# ---------------------------------------------------------------------------
# serialization

def to_record(eq: Equilibrium, params: M.ModelParams | None = None) -> dict:
    """Flatten an equilibrium into a key-value record for CSV/JSON output."""
    rec = {"tau_l": eq.policy.tau_l, "tau_h": eq.policy.tau_h, "t": eq.policy.t,
           "mw_hourly": eq.policy.mw_hourly if eq.policy.mw_hourly is not None else "none",
           "y0": eq.y0_solved, "tax_revenue": eq.tax_revenue,
           "budget_residual": eq.budget_residual,
           "social_welfare": eq.social_welfare if eq.social_welfare is not None else "",
           "feasible": eq.feasible, "reason": eq.reason}
    for lab, sec in (("S", eq.services), ("M", eq.manufacturing)):
        for key in ("wage", "vacancies_per_firm", "capital_per_firm", "n", "theta", "p", "q",
                    "employment", "revenue", "profit_pre_tax", "phi_n", "markdown",
                    "mw_binding", "capped"):
            rec[f"{key}_{lab}"] = getattr(sec, key)
        rec[f"max_residual_{lab}"] = max(abs(x) for x in sec.residuals.values())
    for lab, wa in (("l", eq.low), ("h", eq.high)):
        for key, val in asdict(wa).items():
            rec[f"{key}_{lab}"] = val
    if params is not None:
        rec["wage_hourly_S"] = params.annual_to_hourly(eq.services.wage)
        rec["wage_hourly_M"] = params.annual_to_hourly(eq.manufacturing.wage)
    return rec
