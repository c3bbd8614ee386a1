"""Event-specific stacking with clean controls."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..errors import DataError
from .events import Detection

FLAG_COLUMNS = [f"{kind}_{phase}" for kind in ("small", "fed") for phase in ("early", "pre", "post")]


@dataclass
class StackedPanel:
    """Appended event-specific datasets.

    ``data`` columns: event, state, year, rel_time, treated, outcome, weight,
    cluster, unit, the six control flags, ``industry`` when present, and any
    further outcome columns (e.g. region keys for fixed effects).

    Flags follow the increase year ``e`` of a small or federal increase in the
    row's state: early for ``year - e`` in {-3, -2}, pre for -1, post for 0..4.
    """

    data: pd.DataFrame
    events: pd.DataFrame
    window: tuple
    diagnostics: list = field(default_factory=list)


def _flag_table(increases: pd.DataFrame, kind: str):
    """Map state -> array of increase years."""
    if increases is None or increases.empty:
        return {}
    return {st: g["year"].to_numpy() for st, g in increases.groupby("state")}


def _flags(states, years, table, kind):
    n = len(states)
    early, pre, post = np.zeros(n, bool), np.zeros(n, bool), np.zeros(n, bool)
    states = np.asarray(states)
    years = np.asarray(years)
    for st, inc in table.items():
        rows = np.flatnonzero(states == st)
        if rows.size == 0:
            continue
        r = years[rows][:, None] - np.asarray(inc)[None, :]
        early[rows] = ((r == -3) | (r == -2)).any(axis=1)
        pre[rows] = (r == -1).any(axis=1)
        post[rows] = ((r >= 0) & (r <= 4)).any(axis=1)
    return {f"{kind}_early": early, f"{kind}_pre": pre, f"{kind}_post": post}


def build_stack(outcomes: pd.DataFrame, detection: Detection, window=(-3, 4),
                weight_col: str | None = "weight") -> StackedPanel:
    """One dataset per event (treated state plus clean controls), appended.

    A control for an event is any other state with no event whose year
    falls inside the event's window.  Controls lacking some window year are
    dropped with a diagnostic; events with no controls are dropped with a
    diagnostic.  Small and federal increases are kept in controls and
    marked with early/pre/post flags relative to the increase year.

    Raises
    ------
    DataError
        If the treated state misses outcome rows inside its window.
    """
    lo, hi = window
    out = outcomes.copy()
    if "weight" not in out.columns or weight_col is None:
        out["weight"] = 1.0
    elif weight_col != "weight":
        out["weight"] = out[weight_col]
    has_ind = "industry" in out.columns
    out["unit"] = out["state"] + ("|" + out["industry"] if has_ind else "")
    ev_years = {st: g["year"].to_numpy() for st, g in detection.events.groupby("state")}
    all_states = sorted(out["state"].unique())
    by_state = {st: g for st, g in out.groupby("state", sort=True)}
    small_tab = _flag_table(detection.small, "small")
    fed_tab = _flag_table(detection.federal, "fed")
    pieces, diags, used = [], [], []
    events = detection.events.sort_values(["year", "state"]).reset_index(drop=True)
    for h, evt in events.iterrows():
        s_h, y_h = evt["state"], int(evt["year"])
        yrs = set(range(y_h + lo, y_h + hi + 1))
        tr = by_state.get(s_h)
        have = set(tr["year"]) if tr is not None else set()
        gaps = sorted(yrs - have)
        if gaps:
            raise DataError(f"treated state {s_h} (event {y_h}) lacks outcomes for {gaps}")
        ctrl = []
        for c in all_states:
            if c == s_h:
                continue
            if any(y_h + lo <= e <= y_h + hi for e in ev_years.get(c, ())):
                continue
            g = by_state[c]
            if not yrs <= set(g["year"]):
                diags.append(f"event {s_h}-{y_h}: control {c} dropped, incomplete window")
                continue
            ctrl.append(c)
        if not ctrl:
            diags.append(f"event {s_h}-{y_h}: no clean controls, event dropped")
            continue
        sub = out[out["state"].isin([s_h] + ctrl) & out["year"].isin(yrs)].copy()
        sub["event"] = f"{s_h}-{y_h}"
        sub["rel_time"] = sub["year"] - y_h
        sub["treated"] = sub["state"] == s_h
        pieces.append(sub)
        used.append(evt)
    if not pieces:
        raise DataError("no event has clean controls")
    data = pd.concat(pieces, ignore_index=True)
    st, yr = data["state"].to_numpy(), data["year"].to_numpy()
    for kind, tab in (("small", small_tab), ("fed", fed_tab)):
        for k, v in _flags(st, yr, tab, kind).items():
            data[k] = v
    data["cluster"] = data["unit"] if has_ind else data["state"]
    cols = ["event", "state", "year", "rel_time", "treated", "outcome", "weight", "cluster", "unit"]
    cols += (["industry"] if has_ind else []) + FLAG_COLUMNS
    cols += [c for c in outcomes.columns if c not in cols]
    data = data[cols].sort_values(["event", "unit", "year"]).reset_index(drop=True)
    return StackedPanel(data, pd.DataFrame(used).reset_index(drop=True), tuple(window), diags)


def preperiod_weights(stack: StackedPanel, employment_col: str = "weight") -> pd.Series:
    """Average pre-period employment of each unit within each event.

    Used as regression weights in the industry variant.
    """
    d = stack.data
    pre = d[d["rel_time"] < 0]
    avg = pre.groupby(["event", "unit"])[employment_col].mean()
    return d.set_index(["event", "unit"]).index.map(avg).to_series(index=d.index)
