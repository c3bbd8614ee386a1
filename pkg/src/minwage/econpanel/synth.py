"""Synthetic minimum wage panels with planted effects, for validation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

FEDERAL_PATH = {1997: 5.15, 2007: 5.85, 2008: 6.55, 2009: 7.25}


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic panel recipe.

    Parameters
    ----------
    n_states, years
        Panel dimensions; ``years`` is an inclusive ``(first, last)`` pair.
    schedule : tuple of (state index, year) or None
        Event schedule; ``None`` draws ``n_events`` events at random, at most
        one per state.  Events in one state must be at least 8 years apart.
    effect : dict
        Planted log-point effect by relative time; the value at ``tau = 4``
        persists afterwards and times before ``-3`` carry no effect.
    noise : float
        Standard deviation of iid outcome noise.
    small_prob : float
        Per state-year probability of a small (non-event) state increase.
    federal : bool
        Include the federal minimum wage increases of 2007 to 2009.
    inflation : float
        Annual deflator growth; the deflator equals 1 in ``base_year``.
    n_industries : int
        0 for state-level outcomes, else one row per state-industry-year.
    n_regions, region_shock
        Region labels (each split into two divisions) and the standard
        deviation of region-by-year shocks, which only region-by-year or
        division-by-year effects absorb.
    """

    n_states: int = 40
    years: tuple = (1997, 2019)
    n_events: int = 20
    schedule: tuple | None = None
    effect: dict | None = None
    noise: float = 0.0
    seed: int = 0
    real_increase: float = 1.0
    affected_share: float = 0.05
    small_prob: float = 0.05
    federal: bool = True
    inflation: float = 0.02
    base_year: int = 2016
    n_industries: int = 0
    n_regions: int = 4
    region_shock: float = 0.0

    def effect_at(self, tau):
        eff = self.effect if self.effect is not None else {t: 0.0 for t in range(-3, 5)}
        if tau < -3:
            return 0.0
        return float(eff.get(min(tau, 4), 0.0))


def step_effect(size: float) -> dict:
    """``size`` at ``tau >= 0``, zero before."""
    return {t: (size if t >= 0 else 0.0) for t in range(-3, 5)}


def _schedule(cfg, rng):
    y0, y1 = cfg.years
    if cfg.schedule is not None:
        return [(int(s), int(y)) for s, y in cfg.schedule]
    states = rng.choice(cfg.n_states, size=min(cfg.n_events, cfg.n_states), replace=False)
    years = rng.integers(y0 + 3, y1 - 4 + 1, size=len(states))
    return sorted(zip(states.tolist(), years.tolist()))


def synth_panel(cfg: SynthConfig = SynthConfig()):
    """Return ``(mw_panel, deflator, outcomes)`` following the input schemas.

    The outcome is ``a_s + b_t + c_region,t + sum of planted effects + noise``
    (plus an industry level in the industry variant).  Event years receive a
    real increase of ``real_increase`` dollars with ``affected_share``;
    small increases add a few cents with a share below the threshold.
    """
    rng = np.random.default_rng(cfg.seed)
    y0, y1 = cfg.years
    years = np.arange(y0, y1 + 1)
    T = len(years)
    defl = (1.0 + cfg.inflation) ** (years - cfg.base_year)
    fed = np.empty(T)
    level = FEDERAL_PATH[1997] if cfg.federal else 7.25
    for k, y in enumerate(years):
        if cfg.federal and y in FEDERAL_PATH:
            level = FEDERAL_PATH[y]
        fed[k] = level
    sched = _schedule(cfg, rng)
    names = [f"S{s:02d}" for s in range(cfg.n_states)]
    region = [f"R{s % cfg.n_regions}" for s in range(cfg.n_states)]
    division = [f"D{s % (2 * cfg.n_regions)}" for s in range(cfg.n_states)]  # nested in regions
    a_s = rng.normal(0.0, 0.3, cfg.n_states)
    b_t = np.cumsum(rng.normal(0.01, 0.02, T))
    c_rt = rng.normal(0.0, 1.0, (cfg.n_regions, T)) * cfg.region_shock
    pop = rng.uniform(0.5, 5.0, cfg.n_states)
    small_draw = rng.random((cfg.n_states, T))
    rows, outs = [], []
    for s in range(cfg.n_states):
        ev_years = sorted(y for st, y in sched if st == s)
        mw = np.empty(T)
        share = np.full(T, 0.01)
        cur = fed[0]
        for k, y in enumerate(years):
            if k > 0 and y in ev_years:
                cur = max(cur, fed[k]) + cfg.real_increase * defl[k]
                share[k] = cfg.affected_share
            elif k > 0 and small_draw[s, k] < cfg.small_prob and cur > fed[k]:
                cur = cur + 0.05 * defl[k]
            mw[k] = cur
        eff = np.zeros(T)
        for e in ev_years:
            eff += np.array([cfg.effect_at(y - e) for y in years])
        for k, y in enumerate(years):
            rows.append({"state": names[s], "year": int(y), "mw_state": round(float(mw[k]), 6),
                         "mw_federal": float(fed[k]), "affected_share": float(share[k]),
                         "weight": float(pop[s])})
        base = a_s[s] + b_t + c_rt[s % cfg.n_regions] + eff
        if cfg.n_industries:
            for j in range(cfg.n_industries):
                lvl = rng.normal(0.0, 0.2)
                emp = pop[s] * rng.uniform(0.2, 1.0)
                noise = rng.normal(0.0, cfg.noise, T) if cfg.noise else np.zeros(T)
                for k, y in enumerate(years):
                    outs.append({"state": names[s], "year": int(y), "industry": f"I{j}",
                                 "region": region[s], "division": division[s],
                                 "outcome": float(base[k] + lvl + noise[k]),
                                 "weight": float(emp)})
        else:
            noise = rng.normal(0.0, cfg.noise, T) if cfg.noise else np.zeros(T)
            for k, y in enumerate(years):
                outs.append({"state": names[s], "year": int(y), "region": region[s],
                             "division": division[s],
                             "outcome": float(base[k] + noise[k]), "weight": float(pop[s])})
    panel = pd.DataFrame(rows)
    deflator = pd.Series(defl, index=years.astype(int), name="index")
    return panel, deflator, pd.DataFrame(outs)
