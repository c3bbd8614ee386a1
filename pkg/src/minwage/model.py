"""Structural primitives of the two-sector directed-search model.

Low-skill workers are hired only by services (``S``) and high-skill workers
only by manufacturing (``M``).  Monetary quantities are in thousands of 2019
dollars per year unless a name says ``hourly``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DomainError

#: 52 weeks times the mean weekly hours of low-skill workers.
DEFAULT_HOURS = 52 * 34.83


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


@dataclass(frozen=True)
class SkillParams:
    """Population, participation-cost and search primitives for one skill.

    Attributes
    ----------
    alpha : float
        Population share.
    lam : float
        Upper bound of the uniform participation-cost distribution.
    delta0, delta1 : float
        Matching efficiency and matching elasticity on applicants.
    kappa0, kappa1 : float
        Vacancy cost scale and convexity.
    """

    alpha: float
    lam: float
    delta0: float
    delta1: float
    kappa0: float
    kappa1: float

    def __post_init__(self):
        _require(0.0 < self.alpha < 1.0, f"alpha must lie in (0,1), got {self.alpha}")
        _require(self.lam > 0.0, f"lambda must be positive, got {self.lam}")
        _require(self.delta0 > 0.0, f"delta0 must be positive, got {self.delta0}")
        _require(0.0 < self.delta1 < 1.0, f"delta1 must lie in (0,1), got {self.delta1}")
        _require(self.kappa0 > 0.0, f"kappa0 must be positive, got {self.kappa0}")
        _require(self.kappa1 > 0.0, f"kappa1 must be positive, got {self.kappa1}")


@dataclass(frozen=True)
class SectorParams:
    """Technology and capitalist primitives for one sector.

    Attributes
    ----------
    psi : float
        Total factor productivity.
    beta_n, beta_k : float
        Labor and capital exponents, with ``beta_n + beta_k < 1``.
    K : float
        Mass of capitalists (one establishment each).
    foreign_return : float
        After-tax foreign return per unit of capital.
    capital_endowment : float or None
        Capital owned per capitalist.  Only used when foreign income
        enters welfare; ``None`` leaves foreign income out.
    """

    psi: float
    beta_n: float
    beta_k: float
    K: float
    foreign_return: float
    capital_endowment: float | None = None

    def __post_init__(self):
        _require(self.psi > 0.0, f"psi must be positive, got {self.psi}")
        _require(self.beta_n > 0.0, f"beta_n must be positive, got {self.beta_n}")
        _require(self.beta_k >= 0.0, f"beta_k must be nonnegative, got {self.beta_k}")
        _require(self.beta_n + self.beta_k < 1.0, "beta_n + beta_k must be below 1")
        _require(self.K > 0.0, f"K must be positive, got {self.K}")
        _require(self.foreign_return > 0.0, "foreign_return must be positive")
        _require(self.capital_endowment is None or self.capital_endowment >= 0.0,
                 "capital_endowment must be nonnegative")


@dataclass(frozen=True)
class ModelParams:
    """Full parameter set: two skills matched one-to-one with two sectors."""

    low: SkillParams
    high: SkillParams
    services: SectorParams
    manufacturing: SectorParams
    hours_annualization: float = DEFAULT_HOURS

    def __post_init__(self):
        _require(abs(self.low.alpha + self.high.alpha - 1.0) < 1e-9,
                 "skill shares must sum to 1")
        _require(self.hours_annualization > 0.0, "hours_annualization must be positive")

    def pairs(self):
        """Yield ``(label, skill, sector)`` for the two matched markets."""
        yield "S", self.low, self.services
        yield "M", self.high, self.manufacturing

    def hourly_to_annual(self, hourly):
        """Convert dollars per hour into thousands of dollars per year."""
        return hourly * self.hours_annualization / 1000.0

    def annual_to_hourly(self, annual):
        return annual * 1000.0 / self.hours_annualization


@dataclass(frozen=True)
class Policy:
    """Policy instruments.  ``y0`` is filled in by the budget closure.

    ``mw_hourly=None`` means no minimum wage.
    """

    tau_l: float = 0.0
    tau_h: float = 0.0
    t: float = 0.0
    mw_hourly: float | None = None
    y0: float | None = None

    def __post_init__(self):
        _require(0.0 <= self.t < 1.0, f"t must lie in [0,1), got {self.t}")
        _require(self.tau_l < 1.0, f"tau_l must be below 1, got {self.tau_l}")
        _require(self.tau_h < 1.0, f"tau_h must be below 1, got {self.tau_h}")
        _require(self.mw_hourly is None or self.mw_hourly > 0.0,
                 "mw_hourly must be positive or None")

    def tau(self, label):
        return self.tau_l if label == "S" else self.tau_h

    def with_(self, **kw):
        return replace(self, **kw)


# ---------------------------------------------------------------------------
# functional forms

def _positive(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0.0)):
        raise DomainError(f"{name} must be strictly positive")
    return x


def _nonneg(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0.0)):
        raise DomainError(f"{name} must be nonnegative")
    return x


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def job_finding(theta, sp: SkillParams):
    """Job-finding rate ``min(delta0 * theta**(1-delta1), 1)``."""
    theta = _positive(theta, "theta")
    return _out(np.minimum(sp.delta0 * theta ** (1.0 - sp.delta1), 1.0))


def job_filling(theta, sp: SkillParams):
    """Job-filling rate ``min(delta0 * theta**(-delta1), 1)``."""
    theta = _positive(theta, "theta")
    return _out(np.minimum(sp.delta0 * theta ** (-sp.delta1), 1.0))


def tightness_for_finding(p, sp: SkillParams):
    """Tightness at which a market offers job-finding rate ``p``.

    Uses the match-conserving rate ``theta * q(theta)``: below the point
    where ``q`` reaches its cap every vacancy fills, so ``p = theta``.
    """
    p = _positive(p, "p")
    theta_cap = sp.delta0 ** (1.0 / sp.delta1)
    theta = np.where(p <= theta_cap, p, (p / sp.delta0) ** (1.0 / (1.0 - sp.delta1)))
    return _out(theta)


def finding_conserving(theta, sp: SkillParams):
    """Job-finding rate ``theta * q(theta)`` capped at 1, so matches add up."""
    theta = _positive(theta, "theta")
    return _out(np.minimum(theta * np.minimum(sp.delta0 * theta ** (-sp.delta1), 1.0), 1.0))


def finding_capped(theta, sp: SkillParams):
    """True where either matching probability sits on its cap."""
    theta = np.asarray(theta, dtype=float)
    return bool(np.any(sp.delta0 * theta ** (1.0 - sp.delta1) >= 1.0)
                or np.any(sp.delta0 * theta ** (-sp.delta1) >= 1.0))


def revenue(k, n, sector: SectorParams):
    """Revenue ``psi * k**beta_k * n**beta_n``."""
    k = _nonneg(k, "k")
    n = _nonneg(n, "n")
    return _out(sector.psi * k ** sector.beta_k * n ** sector.beta_n)


def marginal_products(k, n, sector: SectorParams):
    """Analytic marginal products ``(phi_n, phi_k)`` of :func:`revenue`."""
    k = _positive(k, "k") if sector.beta_k > 0 else _nonneg(k, "k")
    n = _positive(n, "n")
    R = sector.psi * k ** sector.beta_k * n ** sector.beta_n
    phi_n = sector.beta_n * R / n
    phi_k = sector.beta_k * R / k if sector.beta_k > 0 else np.zeros_like(R)
    return _out(phi_n), _out(phi_k)


def capital_demand(n, t, sector: SectorParams):
    """Domestic capital solving ``(1-t) * phi_k = foreign_return`` at employment ``n``."""
    n = _nonneg(n, "n")
    if sector.beta_k == 0:
        return _out(np.zeros_like(n))
    base = (1.0 - t) * sector.beta_k * sector.psi * n ** sector.beta_n / sector.foreign_return
    return _out(base ** (1.0 / (1.0 - sector.beta_k)))


def vacancy_cost(v, sp: SkillParams):
    """Vacancy cost and marginal cost.

    Returns
    -------
    eta : float or ndarray
        ``kappa0 * v**(1+kappa1) / (1+kappa1)``.
    eta_v : float or ndarray
        ``kappa0 * v**kappa1``.
    """
    v = _nonneg(v, "v")
    eta = sp.kappa0 * v ** (1.0 + sp.kappa1) / (1.0 + sp.kappa1)
    return _out(eta), _out(sp.kappa0 * v ** sp.kappa1)


def employment_surplus(w, tau):
    """After-tax gain from employment, ``(1 - tau) * w``."""
    return (1.0 - tau) * w


def after_tax_income(w, tau, y0):
    """Consumption of an employed worker, ``(1 - tau) * w + y0``."""
    return employment_surplus(w, tau) + y0


# ---------------------------------------------------------------------------
# flat key-value schema

SKILL_KEYS = {"alpha": "alpha", "lam": "lambda", "delta0": "delta0",
              "delta1": "delta1", "kappa0": "kappa0", "kappa1": "kappa1"}
SECTOR_KEYS = {"psi": "psi", "beta_n": "beta_n", "beta_k": "beta_k", "K": "K",
               "foreign_return": "r", "capital_endowment": "kbar"}


def params_to_flat(params: ModelParams) -> dict:
    """Flatten parameters to keys such as ``delta0_l`` or ``beta_n_S``."""
    out = {}
    for suffix, sp in (("l", params.low), ("h", params.high)):
        for attr, key in SKILL_KEYS.items():
            out[f"{key}_{suffix}"] = getattr(sp, attr)
    for suffix, sec in (("S", params.services), ("M", params.manufacturing)):
        for attr, key in SECTOR_KEYS.items():
            val = getattr(sec, attr)
            if val is not None:
                out[f"{key}_{suffix}"] = val
    out["hours_annualization"] = params.hours_annualization
    return out


def params_from_flat(flat: dict) -> ModelParams:
    """Inverse of :func:`params_to_flat`; unknown keys raise :class:`ConfigError`."""
    flat = dict(flat)
    known = set()

    def take(key, default=None, required=True):
        known.add(key)
        if key in flat:
            try:
                return float(flat[key])
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be numeric, got {flat[key]!r}")
        if required:
            raise ConfigError(f"missing parameter {key}")
        return default

    skills = [SkillParams(**{a: take(f"{k}_{s}") for a, k in SKILL_KEYS.items()})
              for s in ("l", "h")]
    sectors = []
    for s in ("S", "M"):
        kw = {a: take(f"{k}_{s}", required=(a != "capital_endowment"))
              for a, k in SECTOR_KEYS.items()}
        sectors.append(SectorParams(**kw))
    hours = take("hours_annualization", DEFAULT_HOURS, required=False)
    extra = sorted(set(flat) - known)
    if extra:
        raise ConfigError(f"unknown model keys: {', '.join(extra)}")
    return ModelParams(skills[0], skills[1], sectors[0], sectors[1], hours)


def with_flat(params: ModelParams, **updates) -> ModelParams:
    """Copy of ``params`` with flat-key overrides applied."""
    flat = params_to_flat(params)
    flat.update(updates)
    return params_from_flat(flat)
