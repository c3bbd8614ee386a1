"""Detection of minimum wage events and of control-flag increases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import DataError


@dataclass(frozen=True)
class EventRules:
    """Thresholds of the event definition (real dollars of ``base_year``)."""

    min_real_increase: float = 0.25
    min_affected_share: float = 0.02
    clean_pre_years: int = 3
    window: tuple = (-3, 4)
    base_year: int = 2016


@dataclass
class Detection:
    """Events plus the increases used as control flags.

    ``events``: state, year, real_increase, affected_share, dlog_mw
    (change in the log real effective minimum in the event year).
    ``small``: state-level increases above the federal level that are not events.
    ``federal``: increases in the effective minimum driven by the federal level.
    ``excluded``: qualifying increases dropped by the clean-pre or window rule.
    """

    events: pd.DataFrame
    small: pd.DataFrame
    federal: pd.DataFrame
    excluded: pd.DataFrame


def validate_panel(panel: pd.DataFrame, deflator: pd.Series, base_year: int):
    if panel.duplicated(["state", "year"]).any():
        dup = panel[panel.duplicated(["state", "year"], keep=False)][["state", "year"]]
        raise DataError(f"duplicate state-year rows: {dup.values.tolist()[:5]}")
    for st, g in panel.groupby("state", sort=True):
        yrs = np.sort(g["year"].values)
        if len(yrs) and (yrs[-1] - yrs[0] + 1) != len(yrs):
            raise DataError(f"years not contiguous for state {st}")
    need = set(panel["year"].unique()) | {base_year}
    missing = sorted(need - set(deflator.index))
    if missing:
        raise DataError(f"deflator missing years: {missing}")
    if (deflator <= 0).any():
        raise DataError("deflator must be positive")


def detect_events(panel: pd.DataFrame, deflator: pd.Series, rules: EventRules = EventRules()) -> Detection:
    """Apply, in order: real-increase threshold, binding above federal,
    affected-share threshold, clean pre-period, observable window.

    A state-year is an increase when the effective minimum (max of state and
    federal) rises.  Increases with the state level above the federal level
    are state-level increases; the rest are federal.  State-level increases
    failing the size or share thresholds are "small".  A qualifying increase
    is excluded if another qualifying increase in the same state happened in
    the previous ``clean_pre_years`` years, or if the event window is not
    fully observed.  The output is sorted and does not depend on row order.
    """
    validate_panel(panel, deflator, rules.base_year)
    df = panel.sort_values(["state", "year"]).reset_index(drop=True)
    base = float(deflator.loc[rules.base_year])
    ev, small, fed, excl = [], [], [], []
    lo, hi = rules.window
    for st, g in df.groupby("state", sort=True):
        years = g["year"].to_numpy()
        eff = np.maximum(g["mw_state"].to_numpy(float), g["mw_federal"].to_numpy(float))
        mws = g["mw_state"].to_numpy(float)
        mwf = g["mw_federal"].to_numpy(float)
        share = g["affected_share"].to_numpy(float)
        ystart, yend = years[0], years[-1]
        qualifying = []
        for n in range(1, len(years)):
            y = int(years[n])
            d = eff[n] - eff[n - 1]
            if not d > 0:
                continue
            real = d * base / float(deflator.loc[y])
            prev_real = eff[n - 1] / float(deflator.loc[int(years[n - 1])])
            state_level = mws[n] > mwf[n] and mws[n] > mws[n - 1]
            rec = {"state": st, "year": y, "real_increase": real, "affected_share": share[n],
                   "dlog_mw": float(np.log(eff[n] / float(deflator.loc[y])) - np.log(prev_real))}
            if not state_level:
                fed.append({"state": st, "year": y})
                continue
            if real < rules.min_real_increase or share[n] < rules.min_affected_share:
                small.append({"state": st, "year": y})
                continue
            prior = [q for q in qualifying if y - rules.clean_pre_years <= q < y]
            qualifying.append(y)
            if prior:
                excl.append({**rec, "reason": f"prior event in {prior[-1]}"})
                continue
            if y + lo < ystart or y + hi > yend:
                excl.append({**rec, "reason": "window not observed"})
                continue
            ev.append(rec)
    cols = ["state", "year", "real_increase", "affected_share", "dlog_mw"]
    return Detection(
        events=pd.DataFrame(ev, columns=cols),
        small=pd.DataFrame(small, columns=["state", "year"]),
        federal=pd.DataFrame(fed, columns=["state", "year"]),
        excluded=pd.DataFrame(excl, columns=cols + ["reason"]))
