"""Sufficient-statistics welfare conditions and critical welfare weights."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigError, DomainError, SolverError


@dataclass(frozen=True)
class ElasticityInputs:
    """Reduced-form effects and aggregates of a minimum wage event.

    Attributes
    ----------
    eps_U_pretax : float
        Effect on the low-skill pre-tax sufficient statistic (log points).
    eps_IT : float
        Effect on income-maintenance transfers (log points, signed).
    eps_profit : float
        Effect on exposed-services profits (log points, signed).
    PTW, IT, PTP : float
        Aggregate pre-tax low-skill wages, transfers and exposed profits (dollars).
    t : float
        Corporate tax rate.
    zeta : float
        Curvature of the social welfare function.
    it_to_ptw_ratio : float
        Scales the pre-tax per-capita statistic into a post-tax one.
    U_pretax_per_capita : float or None
        Annual pre-tax sufficient statistic per active low-skill worker.
    profit_per_capitalist : float or None
        Annual pre-tax profit per exposed-services capitalist.
    """

    eps_U_pretax: float
    eps_IT: float
    eps_profit: float
    PTW: float
    IT: float
    PTP: float
    t: float
    zeta: float = 1.0
    it_to_ptw_ratio: float = 0.14
    U_pretax_per_capita: float | None = None
    profit_per_capitalist: float | None = None

    def __post_init__(self):
        if not (self.PTW > 0 and self.IT > 0 and self.PTP > 0):
            raise ConfigError("PTW, IT and PTP must be positive")
        if not 0.0 <= self.t < 1.0:
            raise ConfigError(f"t must lie in [0,1), got {self.t}")
        if self.it_to_ptw_ratio < 0:
            raise ConfigError("it_to_ptw_ratio must be nonnegative")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class WelfareWeights:
    g1_l: float = 1.0
    g1_h: float = 1.0
    g0: float = 1.0
    gK: float = 1.0

    def __post_init__(self):
        if min(self.g1_l, self.g1_h, self.g0, self.gK) < 0:
            raise ConfigError("welfare weights must be nonnegative")


@dataclass(frozen=True)
class Decomposition:
    """Addends of the empirical welfare condition."""

    worker: float
    capitalist: float
    transfer_fiscal: float
    corporate_fiscal: float

    @property
    def total(self):
        return self.worker + self.capitalist + self.transfer_fiscal + self.corporate_fiscal


def prop1_margin(dU_l, dU_h, L_A_l, L_A_h, weights: WelfareWeights, profit_term) -> float:
    """Welfare effect of a small minimum wage increase with fixed taxes absent.

    ``dU_l * L_A_l * g1_l + dU_h * L_A_h * g1_h + profit_term``, where
    ``profit_term`` is the aggregate weighted change in profits.
    """
    if L_A_l <= 0 or L_A_h <= 0:
        raise DomainError("active masses must be positive")
    return dU_l * L_A_l * weights.g1_l + dU_h * L_A_h * weights.g1_h + profit_term


def prop2_decomposition(x: ElasticityInputs, g1_l: float, gK: float) -> Decomposition:
    """The four addends of the empirical condition at weights ``(g1_l, gK)``."""
    return Decomposition(
        worker=(x.eps_U_pretax * x.PTW + x.eps_IT * x.IT) * g1_l,
        capitalist=x.eps_profit * x.PTP * (1.0 - x.t) * gK,
        transfer_fiscal=-x.eps_IT * x.IT,
        corporate_fiscal=x.eps_profit * x.t * x.PTP,
    )


def prop2_empirical(x: ElasticityInputs, weights: WelfareWeights) -> float:
    """Left side of the empirical welfare condition; positive means welfare improving.

    ``(eps_U PTW + eps_IT IT) g1 + eps_Pi PTP (1-t) gK - eps_IT IT + eps_Pi t PTP``.
    """
    return prop2_decomposition(x, weights.g1_l, weights.gK).total


def omega(x: ElasticityInputs, zeta: float | None = None) -> float:
    """Relative weight ``g1_l / gK = (U_post / ((1-t) Pi))**(-zeta)``.

    ``U_post`` is the per-capita pre-tax statistic scaled by ``1 + it_to_ptw_ratio``.
    """
    zeta = x.zeta if zeta is None else zeta
    if x.U_pretax_per_capita is None or x.profit_per_capitalist is None:
        raise ConfigError("endogenous weights need per-capita U and profit")
    u_post = x.U_pretax_per_capita * (1.0 + x.it_to_ptw_ratio)
    return (u_post / ((1.0 - x.t) * x.profit_per_capitalist)) ** (-zeta)


@dataclass(frozen=True)
class CriticalWeight:
    value: float
    raw: float
    clamped: bool
    gK: float


def critical_g1(x: ElasticityInputs, mode: str = "gK_equals_1", zeta: float | None = None) -> CriticalWeight:
    """Smallest low-skill welfare weight making the reform welfare neutral.

    Parameters
    ----------
    mode : {"gK_equals_1", "endogenous"}
        ``gK_equals_1`` fixes ``gK = 1``; ``endogenous`` sets ``gK = g1 / omega(zeta)``.

    Returns
    -------
    CriticalWeight
        ``value`` is clamped at 0 (with ``clamped=True``) when the
        unconstrained solution ``raw`` is negative.

    Raises
    ------
    SolverError
        If the denominator is zero.
    """
    worker = x.eps_U_pretax * x.PTW + x.eps_IT * x.IT
    fiscal = -x.eps_IT * x.IT + x.eps_profit * x.t * x.PTP
    cap = x.eps_profit * x.PTP * (1.0 - x.t)
    if mode == "gK_equals_1":
        num, den = -(cap + fiscal), worker
    elif mode == "endogenous":
        om = omega(x, zeta)
        num, den = -fiscal, worker + cap / om
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    if den == 0:
        raise SolverError("critical weight is singular: zero denominator")
    raw = num / den
    val = max(raw, 0.0)
    gK = 1.0 if mode == "gK_equals_1" else val / omega(x, zeta)
    return CriticalWeight(val, raw, raw < 0, gK)


def prop4_tax_threshold(B: float, C: float, eps: float, t: float, gK: float) -> float:
    """Weight above which the optimal marginal tax on employed low-skill workers is negative.

    ``(1 - C eps ((1-t) gK + t)) / (1 - B eps)``.
    """
    if B * eps >= 1.0:
        raise SolverError("B * eps must be below 1")
    return (1.0 - C * eps * ((1.0 - t) * gK + t)) / (1.0 - B * eps)


@dataclass(frozen=True)
class SufficientStatistic:
    pretax: float
    posttax: float | None = None


def compute_sufficient_statistic(employment_rate: float, mean_wage_employed: float,
                                 avg_net_tax: float | None = None,
                                 unemployment_transfer: float = 0.0) -> SufficientStatistic:
    """Average wage of active workers including the unemployed.

    The pre-tax value is ``employment_rate * mean_wage_employed``.  The
    post-tax value subtracts the average net tax liability of actives and
    adds back the transfer received while unemployed, weighted by the
    unemployment rate.
    """
    if not 0.0 <= employment_rate <= 1.0:
        raise DomainError("employment_rate must lie in [0,1]")
    pre = employment_rate * mean_wage_employed
    post = None
    if avg_net_tax is not None:
        post = pre - avg_net_tax + (1.0 - employment_rate) * unemployment_transfer
    return SufficientStatistic(pre, post)


def annual_statistic(hourly_wage: float, weekly_hours: float, employment_rate: float,
                     weeks: float = 52.0) -> float:
    """Hourly wage x weekly hours x employment rate x weeks."""
    return hourly_wage * weekly_hours * employment_rate * weeks


# ---------------------------------------------------------------------------
# table of critical weights

COLUMNS = (("gK_equals_1", None), ("endogenous", 1.0), ("endogenous", 1.5), ("endogenous", 2.0))


def table5(cfg: dict) -> list:
    """Critical weights for every period, profit elasticity, tax row and column.

    ``cfg`` has ``eps_U_pretax``, ``eps_IT``, ``eps_profit`` (mapping label to
    value), ``it_to_ptw_ratio``, ``U_pretax_per_capita`` and a ``periods``
    table whose entries carry ``PTW``, ``IT``, ``PTP``,
    ``profit_per_capitalist``, ``t_statutory`` and ``t_effective``.
    """
    rows = []
    for panel, eps_pi in cfg["eps_profit"].items():
        for period, agg in cfg["periods"].items():
            for trow in ("statutory", "effective"):
                base = ElasticityInputs(
                    eps_U_pretax=cfg["eps_U_pretax"], eps_IT=cfg["eps_IT"], eps_profit=eps_pi,
                    PTW=agg["PTW"], IT=agg["IT"], PTP=agg["PTP"], t=agg[f"t_{trow}"],
                    it_to_ptw_ratio=cfg["it_to_ptw_ratio"],
                    U_pretax_per_capita=agg.get("U_pretax_per_capita", cfg.get("U_pretax_per_capita")),
                    profit_per_capitalist=agg["profit_per_capitalist"])
                for mode, zeta in COLUMNS:
                    cw = critical_g1(base, mode, zeta)
                    rows.append({"panel": panel, "eps_profit": eps_pi, "period": period,
                                 "t_row": trow, "t": base.t,
                                 "column": "gK=1" if mode == "gK_equals_1" else f"zeta={zeta:g}",
                                 "g1_star": round(cw.value, 12), "raw": cw.raw,
                                 "clamped": cw.clamped,
                                 "provenance": cfg.get("provenance", "user-supplied aggregates")})
    return rows


def backsolve_aggregates(targets: dict, eps_U: float, eps_IT: float, eps_profit: dict,
                         it_ratio: float = 0.14, PTW: float = 1.0) -> dict:
    """Recover PTP/PTW consistent with published ``gK = 1`` critical weights.

    Under ``gK = 1`` the tax rate cancels, so
    ``g* = (-eps_Pi PTP + eps_IT IT) / (eps_U PTW + eps_IT IT)``
    and each published value, known to two decimals, bounds ``PTP``.
    Returns the midpoint of the intersection of those intervals.

    Parameters
    ----------
    targets : dict
        ``panel label -> published g*`` for one period.
    """
    IT = it_ratio * PTW
    worker = eps_U * PTW + eps_IT * IT
    lo, hi = -math.inf, math.inf
    for panel, g in targets.items():
        e = eps_profit[panel]
        # PTP(g) = (g * worker - eps_IT IT) / (-eps_Pi), increasing in g
        a = ((g - 0.005) * worker - eps_IT * IT) / (-e)
        b = ((g + 0.005) * worker - eps_IT * IT) / (-e)
        lo, hi = max(lo, min(a, b)), min(hi, max(a, b))
    if lo > hi:
        raise SolverError("published weights admit no common profit aggregate")
    return {"PTW": PTW, "IT": IT, "PTP": 0.5 * (lo + hi), "PTP_range": (lo, hi)}


def omega_range(targets: dict, x: ElasticityInputs, zeta_values=(1.0, 1.5, 2.0)) -> tuple:
    """Range of ``U_post / ((1-t) Pi)`` reproducing published endogenous weights to two decimals."""
    worker = x.eps_U_pretax * x.PTW + x.eps_IT * x.IT
    num = -(-x.eps_IT * x.IT + x.eps_profit * x.t * x.PTP)
    cap = x.eps_profit * x.PTP * (1.0 - x.t)
    lo, hi = 0.0, math.inf
    for zeta in zeta_values:
        g = targets[zeta]
        # g* = num / (worker + cap r**zeta) rises with r because cap < 0
        for gg, upper in ((g - 0.005, False), (g + 0.005, True)):
            base = (num / gg - worker) / cap
            if base <= 0:
                continue
            r = base ** (1.0 / zeta)
            if upper:
                hi = min(hi, r)
            else:
                lo = max(lo, r)
    return lo, hi
